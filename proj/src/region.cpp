#include "margulis/region.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <sstream>

#include "margulis/errors.hpp"

namespace margulis {

namespace {

using u128 = unsigned __int128;

double ratio_to_double(const BigInt& num, const BigInt& den) {
  if (msb(den) < 1000) {
    return static_cast<double>(num) / static_cast<double>(den);
  }
  return static_cast<double>(HighReal(num) / HighReal(den));
}

double coefficient_from_distance(double distance) {
  const double s = std::sin(std::numbers::pi * distance);
  return 2.0 * s * s;
}

double direct_coefficient(const CFAngle& angle, std::uint64_t k) {
  const BigInt m = angle.circle_distance(BigInt(k));
  const double distance = ratio_to_double(m, angle.surrogate_denominator());
  angle.check_budget(static_cast<double>(k), distance);
  return coefficient_from_distance(distance);
}

std::uint64_t denominator_u64(const CFAngle& angle, int n) {
  const BigInt& q = angle.denominator(n);
  if (msb(q) >= 63) {
    throw PrecisionError("convergent denominator q_" + std::to_string(n) +
                         " does not fit a 64-bit index");
  }
  return static_cast<std::uint64_t>(q);
}

// S_k(r) = c_k r^2 + k^2 = E u_k(r)^2.
double square_height(double c, std::uint64_t k, double r) {
  const double kd = static_cast<double>(k);
  return c * r * r + kd * kd;
}

// Refines a closed-form crossing radius of u_k and u_m (m > k) by bisection on
// S_k - S_m, the same comparison envelope_value makes. The bracket is halved
// until it stops shrinking, which is well inside 1e-9 (1 + r).
double polish_crossing(double ck, std::uint64_t k, double cm, std::uint64_t m,
                       double r0) {
  auto f = [&](double r) { return square_height(ck, k, r) - square_height(cm, m, r); };
  double lo = r0 * (1.0 - 1e-6);
  double hi = r0 * (1.0 + 1e-6);
  if (!(f(lo) < 0.0 && f(hi) > 0.0)) return r0;
  while (true) {
    const double mid = 0.5 * (lo + hi);
    if (mid <= lo || mid >= hi) break;
    if (f(mid) < 0.0) {
      lo = mid;
    } else {
      hi = mid;
    }
  }
  return std::abs(f(lo)) <= std::abs(f(hi)) ? lo : hi;
}

}  // namespace

struct RegionParams::CurveTable {
  std::vector<double> c;  // c[k]; NaN marks an index outside the budget
};

RegionParams::RegionParams(CFAngle angle, double epsilon,
                           std::size_t table_size)
    : angle_(std::move(angle)), epsilon_(epsilon) {
  if (!(epsilon > 0.0) || !std::isfinite(epsilon)) {
    throw InputError("epsilon must be a positive finite number");
  }
  // cosh(e) - 1 without cancellation.
  const double s = std::sinh(0.5 * epsilon);
  E_ = 2.0 * s * s;
  sqrt_E_ = std::sqrt(E_);

  auto table = std::make_shared<CurveTable>();
  table->c.assign(table_size + 1, std::numeric_limits<double>::quiet_NaN());
  const BigInt& p = angle_.surrogate_numerator();
  const BigInt& q = angle_.surrogate_denominator();
  const double err = angle_.surrogate_error();
  auto store = [&](std::size_t k, double distance) {
    if (static_cast<double>(k) * err <= kPrecisionBudget * distance) {
      table->c[k] = coefficient_from_distance(distance);
    }
  };
  if (msb(q) < 126) {
    const u128 pp = static_cast<u128>(p);
    const u128 qq = static_cast<u128>(q);
    const double qd = static_cast<double>(qq);
    u128 residue = 0;
    for (std::size_t k = 1; k <= table_size; ++k) {
      residue += pp;
      if (residue >= qq) residue -= qq;
      const u128 m = std::min(residue, qq - residue);
      store(k, static_cast<double>(m) / qd);
    }
  } else {
    BigInt residue = 0;
    for (std::size_t k = 1; k <= table_size; ++k) {
      residue += p;
      if (residue >= q) residue -= q;
      BigInt other = q - residue;
      store(k, ratio_to_double(residue < other ? residue : other, q));
    }
  }
  table_ = std::move(table);
}

double RegionParams::curve_coefficient(std::uint64_t k) const {
  if (k == 0) throw InputError("curve index must be positive");
  if (k < table_->c.size()) {
    const double c = table_->c[k];
    if (!std::isnan(c)) return c;
  }
  return direct_coefficient(angle_, k);
}

BoundaryCurve boundary_curve(const RegionParams& params, std::uint64_t k) {
  return {k, params.curve_coefficient(k)};
}

double curve_value(const RegionParams& params, std::uint64_t k, double r) {
  if (!(r >= 0.0)) throw InputError("radius must be nonnegative");
  return std::sqrt(square_height(params.curve_coefficient(k), k, r)) /
         params.sqrt_E();
}

EnvelopePoint envelope_value(const RegionParams& params, double r) {
  if (!(r >= 0.0) || !std::isfinite(r)) {
    throw InputError("radius must be a nonnegative finite number");
  }
  double best = square_height(params.curve_coefficient(1), 1, r);
  std::uint64_t argmin = 1;
  for (std::uint64_t k = 2;; ++k) {
    const double kd = static_cast<double>(k);
    if (kd * kd >= best) break;
    const double s = square_height(params.curve_coefficient(k), k, r);
    if (s < best) {
      best = s;
      argmin = k;
    }
  }
  return {std::sqrt(best) / params.sqrt_E(), argmin};
}

std::optional<double> intersection_radius(const RegionParams& params,
                                          std::uint64_t k, std::uint64_t m) {
  if (k == 0) throw InputError("curve index must be positive");
  if (m <= k) throw InputError("intersection_radius needs m > k");
  // cos(m theta) - cos(k theta) = c_k - c_m.
  const double dc = params.curve_coefficient(k) - params.curve_coefficient(m);
  if (!(dc > 0.0)) return std::nullopt;
  const double dk = static_cast<double>(m - k) * static_cast<double>(m + k);
  return std::sqrt(dk / dc);
}

double successor_intersection(const RegionParams& params, int n) {
  const CFAngle& angle = params.angle();
  if (n < 0 || n + 2 > angle.depth()) {
    std::ostringstream msg;
    msg << "successor_intersection(" << n << ") needs n + 2 <= working depth "
        << angle.depth();
    throw InputError(msg.str());
  }
  const auto r = intersection_radius(params, denominator_u64(angle, n),
                                     denominator_u64(angle, n + 2));
  if (!r) {
    throw InconsistencyError("v_" + std::to_string(n) + " and v_" +
                             std::to_string(n + 2) + " do not cross");
  }
  return *r;
}

ConstituentResult is_constituent(const RegionParams& params, int n,
                                 IndexWindow window) {
  const CFAngle& angle = params.angle();
  if (window.lo < 0 || window.hi > angle.depth() || window.lo > n ||
      n > window.hi) {
    std::ostringstream msg;
    msg << "window [" << window.lo << ", " << window.hi << "] around " << n
        << " lies outside working depth " << angle.depth();
    throw InputError(msg.str());
  }
  constexpr double kInf = std::numeric_limits<double>::infinity();
  const std::uint64_t qn = denominator_u64(angle, n);

  // Latest crossing with an earlier curve against the earliest crossing with
  // a later one. A missing crossing with an earlier curve means v_n lies above
  // it everywhere; with a later curve it means v_m never undercuts v_n.
  double latest_left = -kInf, earliest_right = kInf;
  int left = -1, right = -1;
  for (int j = window.lo; j < n; ++j) {
    const std::uint64_t qj = denominator_u64(angle, j);
    if (qj == qn) continue;
    const double r = intersection_radius(params, qj, qn).value_or(kInf);
    if (r > latest_left || left < 0) {
      latest_left = r;
      left = j;
    }
  }
  for (int j = n + 1; j <= window.hi; ++j) {
    const std::uint64_t qj = denominator_u64(angle, j);
    if (qj == qn) continue;
    const double r = intersection_radius(params, qn, qj).value_or(kInf);
    if (r < earliest_right || right < 0) {
      earliest_right = r;
      right = j;
    }
  }

  ConstituentResult result;
  result.window = window;
  if (left >= 0 && right >= 0 && latest_left >= earliest_right) {
    result.constituent = false;
    result.witness = std::make_pair(left, right);
  }
  return result;
}

ConstituentResult is_constituent(const RegionParams& params, int n,
                                 int width) {
  if (width < 1) throw InputError("constituent window width must be >= 1");
  const int depth = params.angle().depth();
  return is_constituent(
      params, n, IndexWindow{std::max(0, n - width), std::min(depth, n + width)});
}

std::size_t PieceDecomposition::piece_at(double r) const {
  if (indices.empty()) throw InputError("empty decomposition");
  // Interior breakpoints are breakpoints[1 .. size-2].
  const auto first = breakpoints.begin() + 1;
  const auto last = breakpoints.end() - 1;
  const auto it = std::upper_bound(first, last, r);
  return static_cast<std::size_t>(it - first);
}

PieceDecomposition decompose(const RegionParams& params, double r_max,
                             const DecomposeOptions& options) {
  const CFAngle& angle = params.angle();
  if (!(r_max > 0.0) || !std::isfinite(r_max)) {
    throw InputError("r_max must be a positive finite number");
  }
  if (angle.is_rational()) {
    throw InputError("decompose needs an irrational rotation");
  }

  // Smallest n whose predecessor crossing r_{n-2} passes r_max, plus two.
  int n_cross = 2;
  while (true) {
    if (n_cross > angle.depth()) {
      std::ostringstream msg;
      msg << "working depth " << angle.depth()
          << " does not reach r_max = " << r_max << "; raise the depth";
      throw PrecisionError(msg.str());
    }
    if (successor_intersection(params, n_cross - 2) > r_max) break;
    ++n_cross;
  }
  const int n_last = n_cross + 2;
  if (n_last > angle.depth()) {
    throw PrecisionError("working depth leaves no guard indices past r_max");
  }

  std::vector<int> survivors;
  for (int n = 0; n <= n_last; ++n) {
    if (n > 0 && angle.denominator(n) == angle.denominator(n - 1)) continue;
    if (is_constituent(params, n, options.window).constituent) {
      survivors.push_back(n);
    }
  }

  PieceDecomposition out;
  out.r_max = r_max;
  out.breakpoints.push_back(0.0);
  for (std::size_t i = 0; i < survivors.size(); ++i) {
    const std::uint64_t k = denominator_u64(angle, survivors[i]);
    if (i + 1 == survivors.size()) {
      out.indices.push_back(k);
      break;
    }
    const std::uint64_t m = denominator_u64(angle, survivors[i + 1]);
    const auto crossing = intersection_radius(params, k, m);
    if (!crossing) {
      throw InconsistencyError("consecutive pieces u_" + std::to_string(k) +
                               " and u_" + std::to_string(m) +
                               " never cross");
    }
    const double r = polish_crossing(params.curve_coefficient(k), k,
                                     params.curve_coefficient(m), m, *crossing);
    if (r <= out.breakpoints.back()) {
      std::ostringstream msg;
      msg.precision(17);
      msg << "breakpoints out of order at u_" << k << " / u_" << m << ": " << r
          << " <= " << out.breakpoints.back();
      throw InconsistencyError(msg.str());
    }
    out.indices.push_back(k);
    if (r >= r_max) break;
    out.breakpoints.push_back(r);
  }
  out.breakpoints.push_back(r_max);

  // Brute-force cross-check.
  const double lo = std::min(1e-3, r_max * 1e-3);
  std::vector<double> radii = geometric_grid(lo, r_max, options.oracle_samples);
  radii.insert(radii.begin(), 0.0);
  for (double r : radii) {
    const EnvelopePoint brute = envelope_value(params, r);
    const double piece = curve_value(params, out.index_at(r), r);
    const double residual = std::abs(piece - brute.value) / brute.value;
    out.validation.max_residual = std::max(out.validation.max_residual, residual);
    ++out.validation.oracle_checks;
    if (residual > options.oracle_tolerance) {
      std::ostringstream msg;
      msg.precision(17);
      msg << "decomposition disagrees with brute-force envelope at r = " << r
          << ": piece u_" << out.index_at(r) << " = " << piece
          << ", minimum u_" << brute.argmin << " = " << brute.value;
      throw InconsistencyError(msg.str());
    }
  }
  return out;
}

double piece_value(const RegionParams& params,
                   const PieceDecomposition& pieces, double r) {
  return curve_value(params, pieces.index_at(r), r);
}

std::string validate_decomposition(const RegionParams& params,
                                   const PieceDecomposition& pieces,
                                   double tolerance) {
  const auto& idx = pieces.indices;
  const auto& bp = pieces.breakpoints;
  if (idx.empty()) return "no pieces";
  if (bp.size() != idx.size() + 1) return "breakpoint count mismatch";
  if (bp.front() != 0.0) return "first breakpoint is not 0";
  if (bp.back() != pieces.r_max) return "last breakpoint is not r_max";
  for (std::size_t i = 1; i < idx.size(); ++i) {
    if (idx[i] <= idx[i - 1]) return "indices not strictly increasing";
  }
  for (std::size_t i = 1; i < bp.size(); ++i) {
    if (bp[i] <= bp[i - 1]) return "breakpoints not strictly increasing";
  }
  const CFAngle& angle = params.angle();
  for (std::uint64_t k : idx) {
    bool found = false;
    for (int n = 0; n <= angle.depth() && !found; ++n) {
      found = angle.denominator(n) == k;
    }
    if (!found) return "index " + std::to_string(k) + " is not a convergent denominator";
  }
  for (std::size_t i = 1; i + 1 < bp.size(); ++i) {
    const double a = curve_value(params, idx[i - 1], bp[i]);
    const double b = curve_value(params, idx[i], bp[i]);
    if (std::abs(a - b) > tolerance * std::max(a, b)) {
      return "heights differ at breakpoint " + std::to_string(i);
    }
  }
  return {};
}

ComparabilityReport comparability_report(const RegionParams& params,
                                         double r_lo, double r_hi,
                                         std::size_t samples) {
  if (!(r_lo >= 1.0)) throw InputError("comparability window needs r_lo >= 1");
  if (!(r_hi > r_lo)) throw InputError("comparability window needs r_hi > r_lo");
  if (samples == 0) throw InputError("comparability needs at least one sample");
  ComparabilityReport report{std::numeric_limits<double>::infinity(), 0.0};
  for (double r : geometric_grid(r_lo, r_hi, samples)) {
    const double ratio = envelope_value(params, r).value / std::sqrt(r);
    report.inf_ratio = std::min(report.inf_ratio, ratio);
    report.sup_ratio = std::max(report.sup_ratio, ratio);
  }
  return report;
}

double rational_tail(const RegionParams& params, std::uint64_t order) {
  const CFAngle& angle = params.angle();
  if (!angle.is_rational()) {
    throw InputError("rational_tail needs a rational rotation");
  }
  if (BigInt(order) != angle.surrogate_denominator()) {
    throw InputError("rotation order is " +
                     angle.surrogate_denominator().str() + ", not " +
                     std::to_string(order));
  }
  return static_cast<double>(order) / params.sqrt_E();
}

std::vector<double> geometric_grid(double lo, double hi, std::size_t n) {
  if (!(lo > 0.0) || !(hi >= lo)) {
    throw InputError("geometric grid needs 0 < lo <= hi");
  }
  if (n == 0) return {};
  if (n == 1) return {lo};
  std::vector<double> grid(n);
  const double log_lo = std::log(lo);
  const double step = (std::log(hi) - log_lo) / static_cast<double>(n - 1);
  for (std::size_t i = 0; i < n; ++i) {
    grid[i] = std::exp(log_lo + step * static_cast<double>(i));
  }
  grid.front() = lo;
  grid.back() = hi;
  return grid;
}

}  // namespace margulis
