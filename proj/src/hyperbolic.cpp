#include "margulis/hyperbolic.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>
#include <numbers>
#include <random>
#include <vector>

#include "margulis/errors.hpp"

namespace margulis {

namespace {

double euclidean_sq(const Point4& p, const Point4& q) {
  const double dx = p.x - q.x, dy = p.y - q.y, dz = p.z - q.z, du = p.u - q.u;
  return dx * dx + dy * dy + dz * dz + du * du;
}

void require_valid(const Point4& p) {
  if (!p.valid()) throw InputError("point must have finite coordinates and u > 0");
}

struct PointPair {
  Point4 p;
  Point4 q;
  double distance = 0.0;
};

// Seeded pairs with uniform horizontal coordinates and log-uniform heights.
std::vector<PointPair> draw_pairs(const SamplerConfig& config,
                                  std::size_t& rejected) {
  if (config.sample_count == 0) throw InputError("sample_count must be >= 1");
  if (!(config.u_min > 0.0) || !(config.u_max >= config.u_min)) {
    throw InputError("sampler needs 0 < u_min <= u_max");
  }
  std::mt19937_64 rng(config.seed);
  std::uniform_real_distribution<double> coord(-config.coord_bound,
                                               config.coord_bound);
  std::uniform_real_distribution<double> log_height(std::log(config.u_min),
                                                    std::log(config.u_max));
  auto draw = [&] {
    Point4 p;
    p.x = coord(rng);
    p.y = coord(rng);
    p.z = coord(rng);
    if (config.slice) p.z = 0.0;
    p.u = std::exp(log_height(rng));
    return p;
  };

  std::vector<PointPair> pairs;
  pairs.reserve(config.sample_count);
  rejected = 0;
  const std::size_t max_attempts = 100 * config.sample_count;
  for (std::size_t attempt = 0;
       pairs.size() < config.sample_count && attempt < max_attempts;
       ++attempt) {
    PointPair pair{draw(), draw()};
    pair.distance = dist(pair.p, pair.q);
    if (pair.distance < config.min_separation) {
      ++rejected;
      continue;
    }
    pairs.push_back(pair);
  }
  if (pairs.size() < config.sample_count) {
    throw InputError("sampler rejected too many nearly coincident pairs");
  }
  return pairs;
}

struct QuotientBounds {
  double A = 0.0;
  double B = 0.0;
  double C = 0.0;
};

// Brackets b/a over the given radii plus {0} and a geometric grid on
// [1e-3, r_max], then widens the bracket.
QuotientBounds quotient_bounds(const RegionParams& params,
                               const SamplerConfig& config,
                               const std::vector<double>& radii) {
  double lo = std::numeric_limits<double>::infinity();
  double hi = 0.0;
  auto visit = [&](double r) {
    const double q = envelope_value(params, r).value / profile_a(r);
    lo = std::min(lo, q);
    hi = std::max(hi, q);
  };
  visit(0.0);
  for (double r : geometric_grid(std::min(1e-3, config.r_max), config.r_max,
                                 config.grid_points)) {
    visit(r);
  }
  for (double r : radii) visit(r);

  QuotientBounds bounds;
  bounds.A = lo * (1.0 - config.widening);
  bounds.B = hi * (1.0 + config.widening);
  bounds.C = std::max(std::abs(std::log(bounds.A)), std::abs(std::log(bounds.B)));
  return bounds;
}

}  // namespace

double Point4::radial() const { return std::hypot(x, y); }

bool Point4::valid() const {
  return std::isfinite(x) && std::isfinite(y) && std::isfinite(z) &&
         std::isfinite(u) && u > 0.0;
}

double dist(const Point4& p, const Point4& q) {
  require_valid(p);
  require_valid(q);
  return 2.0 * std::asinh(std::sqrt(euclidean_sq(p, q)) /
                          (2.0 * std::sqrt(p.u * q.u)));
}

double dist_cosh(const Point4& p, const Point4& q) {
  require_valid(p);
  require_valid(q);
  return std::acosh(1.0 + euclidean_sq(p, q) / (2.0 * p.u * q.u));
}

Point4 screw_apply(const RegionParams& params, std::int64_t k, const Point4& p) {
  require_valid(p);
  if (k == 0) return p;
  const double turn = params.angle().fractional_part(BigInt(k));
  const double phi = 2.0 * std::numbers::pi * turn;
  const double c = std::cos(phi), s = std::sin(phi);
  return {p.x * c - p.y * s, p.x * s + p.y * c,
          p.z + static_cast<double>(k) * std::numbers::sqrt2, p.u};
}

bool in_margulis_region(const RegionParams& params, const Point4& p,
                        std::optional<std::uint64_t> k_max) {
  require_valid(p);
  const double reach = params.sqrt_E() * p.u;
  const auto complete = static_cast<std::uint64_t>(std::ceil(reach));
  if (k_max && *k_max < complete) {
    throw InputError("k_max must be at least ceil(sqrt(E) u) = " +
                     std::to_string(complete));
  }
  // k^2 <= E u^2 is necessary, so nothing past floor(sqrt(E) u) can qualify.
  const std::uint64_t last =
      std::min(k_max.value_or(complete), static_cast<std::uint64_t>(reach));
  const double lhs = params.E() * p.u * p.u;
  const double r = p.radial();
  for (std::uint64_t k = 1; k <= last; ++k) {
    const double kd = static_cast<double>(k);
    if (lhs >= params.curve_coefficient(k) * r * r + kd * kd) return true;
  }
  return false;
}

double profile_a(double r) {
  if (!(r >= 0.0)) throw InputError("profile radius must be nonnegative");
  const double t = std::sqrt(4.0 * r * r + 1.0);
  return std::sqrt(0.5 * (t + 1.0));
}

double profile_s(double r) {
  if (!(r >= 0.0)) throw InputError("profile radius must be nonnegative");
  // (t - 1)/2 = 2 r^2 / (t + 1), free of cancellation for small r.
  const double t = std::sqrt(4.0 * r * r + 1.0);
  return r * std::sqrt(2.0 / (t + 1.0));
}

Point4 map_h(const Point4& p) {
  require_valid(p);
  const double lambda = std::sqrt(p.x * p.x + p.y * p.y + p.u * p.u);
  return {lambda * p.x, lambda * p.y, lambda * p.z, lambda * p.u};
}

Point4 map_f(const RegionParams& params, const Point4& p) {
  require_valid(p);
  const double r = p.radial();
  const double scale = envelope_value(params, r).value / profile_a(r);
  return {p.x, p.y, p.z, p.u * scale};
}

Point4 map_f_inverse(const RegionParams& params, const Point4& q) {
  require_valid(q);
  const double r = q.radial();
  const double scale = profile_a(r) / envelope_value(params, r).value;
  return {q.x, q.y, q.z, q.u * scale};
}

DistortionReport certify_bilipschitz(const SamplerConfig& config) {
  DistortionReport report;
  const auto pairs = draw_pairs(config, report.rejected_pairs);
  report.sample_count = pairs.size();
  report.seed = config.seed;
  report.ratio_lower = config.slice ? 0.5 : 0.25;
  report.ratio_upper = config.slice ? 2.0 : 4.0;
  report.min_ratio = std::numeric_limits<double>::infinity();
  for (const auto& pair : pairs) {
    const double image = dist(map_h(pair.p), map_h(pair.q));
    const double ratio = image / pair.distance;
    report.min_ratio = std::min(report.min_ratio, ratio);
    report.max_ratio = std::max(report.max_ratio, ratio);
    report.max_additive_defect =
        std::max(report.max_additive_defect, std::abs(image - pair.distance));
  }
  report.certified = report.min_ratio >= report.ratio_lower &&
                     report.max_ratio <= report.ratio_upper;
  return report;
}

DistortionReport certify_quasi_isometry(const RegionParams& params,
                                        const SamplerConfig& config) {
  DistortionReport report;
  const auto pairs = draw_pairs(config, report.rejected_pairs);
  report.sample_count = pairs.size();
  report.seed = config.seed;

  std::vector<double> radii;
  radii.reserve(2 * pairs.size());
  for (const auto& pair : pairs) {
    radii.push_back(pair.p.radial());
    radii.push_back(pair.q.radial());
  }
  const QuotientBounds bounds = quotient_bounds(params, config, radii);
  report.bound_A = bounds.A;
  report.bound_B = bounds.B;
  report.constant_C = bounds.C;
  report.defect_bound = 2.0 * bounds.C;

  report.min_ratio = std::numeric_limits<double>::infinity();
  for (const auto& pair : pairs) {
    const Point4 fp = map_f(params, pair.p);
    const Point4 fq = map_f(params, pair.q);
    const double image = dist(fp, fq);
    report.min_ratio = std::min(report.min_ratio, image / pair.distance);
    report.max_ratio = std::max(report.max_ratio, image / pair.distance);
    report.max_additive_defect =
        std::max(report.max_additive_defect, std::abs(image - pair.distance));
    report.max_displacement =
        std::max({report.max_displacement, dist(pair.p, fp), dist(pair.q, fq)});

    // Surjectivity: every target has an explicit preimage.
    const Point4 back = map_f(params, map_f_inverse(params, pair.q));
    report.max_preimage_error =
        std::max(report.max_preimage_error, std::abs(back.u - pair.q.u) / pair.q.u);
  }
  report.certified = report.max_additive_defect <= report.defect_bound &&
                     report.max_displacement <= report.constant_C &&
                     report.max_preimage_error <= 1e-12;
  return report;
}

double horosphere_defect(const RegionParams& params,
                         const PieceDecomposition& pieces,
                         const std::vector<double>& radii) {
  double worst = 0.0;
  for (std::size_t i = 0; i < radii.size(); ++i) {
    const double r = radii[i];
    const double psi = 0.7 * static_cast<double>(i);
    const Point4 p{r * std::cos(psi), r * std::sin(psi),
                   static_cast<double>(i % 17) - 8.0, 1.0};
    const Point4 image = map_f(params, map_h(p));
    worst = std::max(worst, std::abs(image.u - piece_value(params, pieces, image.radial())));
  }
  return worst;
}

DistortionReport certify_composite(const RegionParams& params,
                                   const SamplerConfig& config) {
  DistortionReport report;
  const auto pairs = draw_pairs(config, report.rejected_pairs);
  report.sample_count = pairs.size();
  report.seed = config.seed;
  report.ratio_lower = 0.25;
  report.ratio_upper = 4.0;

  std::vector<PointPair> images;
  images.reserve(pairs.size());
  std::vector<double> radii;
  radii.reserve(2 * pairs.size());
  for (const auto& pair : pairs) {
    PointPair hp{map_h(pair.p), map_h(pair.q)};
    radii.push_back(hp.p.radial());
    radii.push_back(hp.q.radial());
    images.push_back(hp);
  }
  const QuotientBounds bounds = quotient_bounds(params, config, radii);
  report.bound_A = bounds.A;
  report.bound_B = bounds.B;
  report.constant_C = bounds.C;
  report.defect_bound = 2.0 * bounds.C;

  report.min_ratio = std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i < pairs.size(); ++i) {
    const double base = pairs[i].distance;
    const double image = dist(map_f(params, images[i].p), map_f(params, images[i].q));
    report.min_ratio = std::min(report.min_ratio, image / base);
    report.max_ratio = std::max(report.max_ratio, image / base);
    // Excess over the bilipschitz window [base/4, 4 base].
    const double excess = std::max({0.0, image - report.ratio_upper * base,
                                    report.ratio_lower * base - image});
    report.max_additive_defect = std::max(report.max_additive_defect, excess);
  }

  // Height-1 horosphere against the graph of b, radii chosen so the images
  // stay inside [0, r_max].
  double worst = 0.0;
  const auto horo = geometric_grid(1e-3, profile_s(config.r_max), 1000);
  for (std::size_t i = 0; i < horo.size(); ++i) {
    const double psi = 0.7 * static_cast<double>(i);
    const Point4 p{horo[i] * std::cos(psi), horo[i] * std::sin(psi), 0.0, 1.0};
    const Point4 image = map_f(params, map_h(p));
    worst = std::max(worst, std::abs(image.u - envelope_value(params, image.radial()).value));
  }
  report.horosphere_error = worst;
  report.certified = report.max_additive_defect <= report.defect_bound &&
                     report.horosphere_error <= 1e-9;
  return report;
}

}  // namespace margulis
