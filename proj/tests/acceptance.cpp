// Acceptance gate: one line per criterion, nonzero exit if any fails.

#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <random>
#include <set>
#include <string>
#include <vector>

#include "margulis/cf_engine.hpp"
#include "margulis/hyperbolic.hpp"
#include "margulis/region.hpp"
#include "oracles.hpp"

using namespace margulis;

namespace {

struct TestAngle {
  std::string name;
  std::vector<std::uint64_t> coefficients;  // a_1 .. a_100
};

std::vector<TestAngle> test_angles() {
  std::vector<TestAngle> out{{"golden", std::vector<std::uint64_t>(100, 1)}};
  std::mt19937_64 rng(20261019);
  for (int i = 0; i < 10; ++i) {
    out.push_back({"random#" + std::to_string(i), oracle::random_coefficients(rng, 100, 5)});
  }
  return out;
}

CFAngle make_angle(const TestAngle& a, int depth) {
  AngleOptions options;
  options.depth = depth;
  return CFAngle::from_coefficients(a.coefficients, options);
}

struct Outcome {
  bool passed = true;
  std::string detail;
};

int failures = 0;

void criterion(int id, const char* title, double limit_seconds,
               const std::function<Outcome()>& body) {
  const auto start = std::chrono::steady_clock::now();
  Outcome outcome;
  try {
    outcome = body();
  } catch (const std::exception& e) {
    outcome = {false, std::string("exception: ") + e.what()};
  }
  const double seconds =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  const bool in_time = seconds < limit_seconds;
  const bool ok = outcome.passed && in_time;
  if (!ok) ++failures;
  std::printf("[%s] %2d %s: %s (%.3f s, limit %.0f s%s)\n", ok ? "PASS" : "FAIL", id, title,
              outcome.detail.c_str(), seconds, limit_seconds, in_time ? "" : ", too slow");
  std::fflush(stdout);
}

std::string fmt(const char* format, double a, double b = 0.0, double c = 0.0) {
  char buf[256];
  std::snprintf(buf, sizeof buf, format, a, b, c);
  return buf;
}

}  // namespace

int main() {
  const auto angles = test_angles();

  criterion(1, "closest-return identity", 5.0, [&] {
    Outcome out;
    for (const auto& a : angles) {
      const CFAngle angle = make_angle(a, 30);
      std::vector<std::uint64_t> want;
      for (std::uint64_t q : oracle::denominators(a.coefficients, 40)) {
        if (q > 10000) break;
        if (want.empty() || want.back() != q) want.push_back(q);
      }
      if (closest_returns(angle, 10000) != want) {
        out.passed = false;
        out.detail += a.name + " differs; ";
      }
    }
    if (out.passed) out.detail = std::to_string(angles.size()) + " angles, K = 10^4, exact";
    return out;
  });

  criterion(2, "norm bounds and recursion", 1.0, [&] {
    Outcome out;
    double worst_residual = 0.0, worst_oracle = 0.0;
    for (const auto& a : angles) {
      const CFAngle angle = make_angle(a, 27);
      const NormRecursionReport report = verify_norm_recursion(angle, 25);
      worst_residual = std::max(worst_residual, report.max_residual);
      for (const auto& row : report.rows) {
        if (!row.bounded || !(row.residual < 1e-12)) out.passed = false;
      }
      // Norms against the 100-digit value of the first 100 quotients.
      const oracle::Real x = oracle::cf_value(a.coefficients);
      for (const auto& row : report.rows) {
        const auto q = static_cast<std::uint64_t>(angle.denominator(row.n));
        const oracle::Real want = oracle::norm(x, q);
        worst_oracle = std::max(
            worst_oracle, static_cast<double>(abs(oracle::Real(row.norm) - want) / want));
      }
    }
    out.passed = out.passed && worst_oracle < 1e-12;
    out.detail = fmt("depth 25, max recursion residual %.3g, max norm error %.3g",
                     worst_residual, worst_oracle);
    return out;
  });

  criterion(3, "envelope oracle equivalence", 30.0, [&] {
    Outcome out;
    double worst = 0.0;
    std::mt19937_64 rng(3);
    std::uniform_real_distribution<double> log_r(-3.0, 6.0);
    for (const auto& a : angles) {
      const CFAngle angle = make_angle(a, 30);
      const RegionParams params(angle, 0.1);
      const PieceDecomposition pieces = decompose(params, 1e6);
      std::set<std::uint64_t> denominators;
      for (std::uint64_t q : oracle::denominators(a.coefficients, 40)) denominators.insert(q);
      for (int i = 0; i < 1000; ++i) {
        const double r = std::pow(10.0, log_r(rng));
        const EnvelopePoint brute = envelope_value(params, r);
        const double active = piece_value(params, pieces, r);
        worst = std::max(worst, std::abs(active - brute.value) / brute.value);
        if (!denominators.count(brute.argmin) || brute.argmin != pieces.index_at(r)) {
          out.passed = false;
        }
      }
      for (std::uint64_t k : pieces.indices) {
        if (!denominators.count(k)) out.passed = false;
      }
    }
    out.passed = out.passed && worst <= 1e-12;
    out.detail = fmt("r_max 1e6, 1000 radii per angle, max relative gap %.3g", worst);
    return out;
  });

  criterion(4, "epsilon invariance", 60.0, [&] {
    Outcome out;
    double worst = 0.0;
    for (const auto& a : angles) {
      const CFAngle angle = make_angle(a, 30);
      const PieceDecomposition base = decompose(RegionParams(angle, 0.1), 1e6);
      for (double epsilon : {0.05, 0.5}) {
        const PieceDecomposition other = decompose(RegionParams(angle, epsilon), 1e6);
        if (other.indices != base.indices ||
            other.breakpoints.size() != base.breakpoints.size()) {
          out.passed = false;
          continue;
        }
        for (std::size_t i = 1; i < base.breakpoints.size(); ++i) {
          worst = std::max(worst, std::abs(other.breakpoints[i] - base.breakpoints[i]) /
                                      base.breakpoints[i]);
        }
      }
    }
    out.passed = out.passed && worst <= 1e-9;
    out.detail = fmt("epsilon in {0.05, 0.1, 0.5}, max breakpoint drift %.3g", worst);
    return out;
  });

  criterion(5, "comparability with sqrt(r)", 10.0, [&] {
    const RegionParams params(parse_angle("golden"), 0.1);
    const ComparabilityReport report = comparability_report(params, 1e3, 1e8, 1000);
    Outcome out;
    const double spread = report.sup_ratio / report.inf_ratio;
    out.passed = report.inf_ratio > 0.0 && std::isfinite(report.sup_ratio) && spread < 1e3;
    out.detail = fmt("golden on [1e3, 1e8]: inf %.6g, sup %.6g, sup/inf %.6g",
                     report.inf_ratio, report.sup_ratio, spread);
    return out;
  });

  criterion(6, "r_n comparable to q_n^2", 1.0, [&] {
    Outcome out;
    double worst_spread = 0.0;
    for (const auto& a : angles) {
      const RegionParams params(make_angle(a, 30), 0.1);
      double lo = INFINITY, hi = 0.0;
      for (int n = 1; n <= 20; ++n) {
        const double q = static_cast<double>(params.angle().denominator(n));
        const double ratio = successor_intersection(params, n) / (q * q);
        lo = std::min(lo, ratio);
        hi = std::max(hi, ratio);
      }
      if (!(lo > 0.0) || !(hi / lo < 1e3)) out.passed = false;
      worst_spread = std::max(worst_spread, hi / lo);
    }
    out.detail = fmt("n = 1..20, worst c2/c1 %.4g", worst_spread);
    return out;
  });

  criterion(7, "bilipschitz certification of h", 10.0, [&] {
    SamplerConfig config;
    config.sample_count = 10000;
    const DistortionReport full = certify_bilipschitz(config);
    config.slice = true;
    const DistortionReport slice = certify_bilipschitz(config);
    std::mt19937_64 rng(7);
    std::uniform_real_distribution<double> log_u(-3.0, 3.0);
    double axis_error = 0.0;
    for (int i = 0; i < 1000; ++i) {
      const Point4 p{0, 0, 0, std::pow(10.0, log_u(rng))};
      const Point4 q{0, 0, 0, std::pow(10.0, log_u(rng))};
      if (p.u == q.u) continue;
      axis_error = std::max(axis_error, std::abs(dist(map_h(p), map_h(q)) / dist(p, q) - 2.0));
    }
    Outcome out;
    out.passed = full.certified && slice.certified && axis_error <= 1e-12;
    out.detail = fmt("ratios [%.4f, %.4f]", full.min_ratio, full.max_ratio) +
                 fmt(", slice [%.4f, %.4f]", slice.min_ratio, slice.max_ratio) +
                 fmt(", axis error %.3g", axis_error);
    return out;
  });

  criterion(8, "quasi-isometry certification of f", 30.0, [&] {
    const RegionParams params(parse_angle("golden"), 0.1);
    SamplerConfig config;
    config.sample_count = 10000;
    const DistortionReport report = certify_quasi_isometry(params, config);
    Outcome out;
    out.passed = report.max_additive_defect <= 2 * report.constant_C &&
                 report.max_displacement <= report.constant_C && report.certified;
    out.detail = fmt("C = %.6g, max defect %.6g <= 2C, max displacement %.6g <= C",
                     report.constant_C, report.max_additive_defect, report.max_displacement);
    return out;
  });

  criterion(9, "horosphere image is the graph of b", 30.0, [&] {
    const RegionParams params(parse_angle("golden"), 0.1);
    const PieceDecomposition pieces = decompose(params, 1e6);
    const auto radii = geometric_grid(1e-3, profile_s(1e6), 1000);
    const double defect = horosphere_defect(params, pieces, radii);
    Outcome out;
    out.passed = defect <= 1e-9;
    out.detail = fmt("1000 radii, max |u - b(r)| = %.3g", defect);
    return out;
  });

  criterion(10, "rational tail", 1.0, [&] {
    const RegionParams params(parse_angle("rat:1/3"), 0.1);
    // 3 / sqrt(cosh(0.1) - 1) to 40 digits (cosh - 1 in double would cancel).
    const double want = 42.40873435629133562787109430873891634354;
    double worst = 0.0;
    for (double r : {1e3, 1e6}) {
      worst = std::max(worst, std::abs(envelope_value(params, r).value - want) / want);
    }
    Outcome out;
    out.passed = worst <= 1e-12;
    out.detail = fmt("b(r) = 3/sqrt(E) = %.17g at r = 1e3, 1e6, relative error %.3g", want,
                     worst);
    return out;
  });

  criterion(11, "displacement identity", 1.0, [&] {
    const CFAngle angle = parse_angle("golden");
    const RegionParams params(angle, 0.1);
    const oracle::Real x = oracle::golden();
    std::mt19937_64 rng(11);
    std::uniform_real_distribution<double> coord(-100.0, 100.0);
    std::uniform_real_distribution<double> log_u(-1.0, 1.0);
    std::uniform_int_distribution<std::int64_t> pick_k(1, 1000);
    double worst = 0.0;
    for (int i = 0; i < 100; ++i) {
      const Point4 p{coord(rng), coord(rng), coord(rng), std::pow(10.0, log_u(rng))};
      const std::int64_t k = pick_k(rng);
      const double r = p.radial();
      const double kd = static_cast<double>(k);
      const double want =
          1.0 + (oracle::curve_c(x, static_cast<std::uint64_t>(k)) * r * r + kd * kd) /
                    (p.u * p.u);
      const double got = std::cosh(dist(p, screw_apply(params, k, p)));
      worst = std::max(worst, std::abs(got - want) / want);
    }
    Outcome out;
    out.passed = worst <= 1e-10;
    out.detail = fmt("100 pairs (P, k), max relative error %.3g", worst);
    return out;
  });

  std::printf("%s: %d of 11 criteria failed\n", failures ? "FAIL" : "PASS", failures);
  return failures ? 1 : 0;
}
