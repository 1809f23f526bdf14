#pragma once

// Exact continued-fraction arithmetic for the rotation angle theta = 2*pi*x.
//
// An angle is stored as its partial quotients a_1, a_2, ... (a_0 = 0, so
// 0 < x < 1) together with an exact rational surrogate p_N / q_N taken at a
// guard depth N beyond the working depth. Every fractional part frac(k x) is
// evaluated exactly against the surrogate; the only floating error left is the
// final rounding plus the certified surrogate error k / (q_N q_{N+1}).

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include <boost/multiprecision/cpp_bin_float.hpp>
#include <boost/multiprecision/cpp_int.hpp>

namespace margulis {

using BigInt = boost::multiprecision::cpp_int;
using HighReal = boost::multiprecision::cpp_bin_float_50;

// Largest certified relative error accepted for ||k theta||.
inline constexpr double kPrecisionBudget = 1e-15;
// Minimum distance between the working depth and the guard depth.
inline constexpr int kMinGuardMargin = 10;
// Guard margin used when the caller does not choose one. Forty levels keep
// the golden-type angle (slowest growing q_n) inside the budget for every
// index up to the working depth plus two.
inline constexpr int kDefaultGuardMargin = 40;

struct AngleOptions {
  int depth = 30;
  std::optional<int> guard_depth;
  std::optional<std::uint64_t> bound;
};

class CFAngle {
 public:
  // Explicit partial quotients a_1, a_2, ...; a list shorter than the guard
  // depth is continued cyclically.
  static CFAngle from_coefficients(std::vector<std::uint64_t> coefficients,
                                   const AngleOptions& options = {});
  static CFAngle periodic(std::vector<std::uint64_t> preperiod,
                          std::vector<std::uint64_t> period,
                          const AngleOptions& options = {});
  // Decimal string. The working depth may only use quotients whose
  // denominators stay below the square root of 10^digits; the surrogate
  // comes from the full expansion of the exact rational the string writes.
  static CFAngle from_decimal(std::string_view text,
                              const AngleOptions& options = {});
  // theta = 2*pi*p/q with 0 <= p < q. The surrogate is exact.
  static CFAngle rational(std::uint64_t p, std::uint64_t q);

  // a_1 .. a_depth.
  std::span<const std::uint64_t> coefficients() const {
    return {coefficients_.data(), static_cast<std::size_t>(depth_)};
  }
  // a_n for 1 <= n <= guard_depth + 1, or guard_depth when the surrogate is
  // exact (a_0 = 0).
  std::uint64_t coefficient(int n) const;

  int depth() const { return depth_; }
  int guard_depth() const { return guard_depth_; }
  std::uint64_t bound() const { return bound_; }
  bool is_rational() const { return rational_; }
  const std::string& source() const { return source_; }

  const BigInt& surrogate_numerator() const { return numerators_.back(); }
  const BigInt& surrogate_denominator() const { return denominators_.back(); }
  // Certified bound on |x - p_N/q_N|; zero when the surrogate is exact.
  double surrogate_error() const { return surrogate_error_; }
  double value() const;

  // p_n, q_n for 0 <= n <= guard_depth.
  const BigInt& numerator(int n) const;
  const BigInt& denominator(int n) const;

  // k * p_N mod q_N, i.e. frac(k x) scaled by q_N. k may be negative.
  BigInt residue(const BigInt& k) const;
  // min(frac(k x), 1 - frac(k x)) scaled by q_N.
  BigInt circle_distance(const BigInt& k) const;
  // frac(k x) rounded to double, within the precision budget.
  double fractional_part(const BigInt& k) const;

  // Throws PrecisionError unless k * surrogate_error() stays within
  // kPrecisionBudget of the circle distance `distance` of k.
  void check_budget(double k, double distance) const;

  void set_source(std::string source) { source_ = std::move(source); }

 private:
  CFAngle() = default;
  static CFAngle build(std::vector<std::uint64_t> coefficients, int depth,
                       int guard_depth, std::optional<std::uint64_t> bound);

  std::vector<std::uint64_t> coefficients_;  // a_1 .. a_{N+1}
  std::vector<BigInt> numerators_;           // p_0 .. p_N
  std::vector<BigInt> denominators_;         // q_0 .. q_N
  int depth_ = 0;
  int guard_depth_ = 0;
  std::uint64_t bound_ = 0;
  double surrogate_error_ = 0.0;
  bool rational_ = false;
  std::string source_;
};

// Accepted forms:
//   "2,2,2,2"                    explicit partial quotients
//   "pre:[1,2];per:[1]"          preperiod and period
//   "pre:[];per:none;rat:1/3"    rational rotation (also plain "rat:1/3")
//   "0.6180339887498949"         decimal expansion
//   "golden"                     shorthand for "pre:[];per:[1]"
CFAngle parse_angle(std::string_view spec, const AngleOptions& options = {});

struct Convergent {
  int n = 0;
  BigInt p;
  BigInt q;
  HighReal delta;            // |q_n x - p_n| against the surrogate
  double guard_error = 0.0;  // q_n / (q_N q_{N+1})
};

// Convergents n = 0 .. n_max.
std::vector<Convergent> convergents(const CFAngle& angle, int n_max);
// Single convergent, n >= -2 (the seeds p_{-2}/q_{-2} = 0/1, p_{-1}/q_{-1} = 1/0
// are accepted).
Convergent convergent_at(const CFAngle& angle, int n);

// ||k theta|| = 2 pi min(frac(k x), 1 - frac(k x)), in (0, pi].
HighReal angle_norm(const CFAngle& angle, const BigInt& k);
inline HighReal angle_norm(const CFAngle& angle, std::uint64_t k) {
  return angle_norm(angle, BigInt(k));
}

// Brute-force scan of k = 1..max_k for moments with ||k theta|| below every
// earlier norm.
std::vector<std::uint64_t> closest_returns(const CFAngle& angle,
                                           std::uint64_t max_k);

struct NormRecursionRow {
  int n = 0;
  HighReal norm;          // ||q_n theta||
  double residual = 0.0;  // |N_n - a_{n+2} N_{n+1} - N_{n+2}| / N_n
  bool decreasing = false;
  bool bounded = false;   // pi/q_{n+1} < N_n < 2 pi/q_{n+1}
};

struct NormRecursionReport {
  std::vector<NormRecursionRow> rows;
  double max_residual = 0.0;
  bool passed = true;
};

// Checks the three-term norm identity, monotonicity and the 1/q_{n+1}
// bounds for n = 1..depth.
NormRecursionReport verify_norm_recursion(const CFAngle& angle, int depth,
                                          double tolerance = 1e-12);

}  // namespace margulis
