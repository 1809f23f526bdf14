#pragma once

// The curve family u_k(r) = sqrt((1 - cos k theta) r^2 + k^2) / sqrt(E), its
// lower envelope b(r), and the piece structure of b.
//
// Everything that decides *which* curve is lowest works with the E-free
// squares S_k(r) = c_k r^2 + k^2, so argmins and crossing radii do not depend
// on epsilon at all; only reported heights carry the 1/sqrt(E) factor.

#include <cstdint>
#include <memory>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "margulis/cf_engine.hpp"

namespace margulis {

// Number of c_k values precomputed per RegionParams.
inline constexpr std::size_t kDefaultCurveTableSize = std::size_t{1} << 17;

class RegionParams {
 public:
  RegionParams(CFAngle angle, double epsilon,
               std::size_t table_size = kDefaultCurveTableSize);

  const CFAngle& angle() const { return angle_; }
  double epsilon() const { return epsilon_; }
  // E = cosh(epsilon) - 1.
  double E() const { return E_; }
  double sqrt_E() const { return sqrt_E_; }

  // c_k = 1 - cos(k theta), evaluated as 2 sin^2(pi * dist(k x, Z)) from the
  // exact surrogate. Throws PrecisionError outside the budget.
  double curve_coefficient(std::uint64_t k) const;

 private:
  struct CurveTable;

  CFAngle angle_;
  double epsilon_;
  double E_;
  double sqrt_E_;
  std::shared_ptr<const CurveTable> table_;
};

struct BoundaryCurve {
  std::uint64_t k = 0;
  double c = 0.0;  // 1 - cos(k theta)
};

BoundaryCurve boundary_curve(const RegionParams& params, std::uint64_t k);

// u_k(r).
double curve_value(const RegionParams& params, std::uint64_t k, double r);

struct EnvelopePoint {
  double value = 0.0;
  std::uint64_t argmin = 0;
};

// b(r) by exhaustive search. u_k >= k / sqrt(E), so k can only beat the
// running best while k^2 < E * best^2; the scan stops there. Ties go to the
// smaller index.
EnvelopePoint envelope_value(const RegionParams& params, double r);

// Crossing radius of u_k and u_m for m > k, or nullopt when the graphs never
// meet (cos(m theta) <= cos(k theta)).
std::optional<double> intersection_radius(const RegionParams& params,
                                          std::uint64_t k, std::uint64_t m);

// Crossing radius of v_n = u_{q_n} and v_{n+2} = u_{q_{n+2}}.
double successor_intersection(const RegionParams& params, int n);

// Convergent-index range [lo, hi] searched for a witness.
struct IndexWindow {
  int lo = 0;
  int hi = 0;
};

struct ConstituentResult {
  bool constituent = true;
  std::optional<std::pair<int, int>> witness;  // (k, m) with k < n < m
  IndexWindow window;
};

inline constexpr int kDefaultConstituentWindow = 8;

// v_n is not a piece of b iff some k < n < m has crossing(v_k, v_n) >=
// crossing(v_n, v_m). A `true` answer only covers the window searched.
ConstituentResult is_constituent(const RegionParams& params, int n,
                                 IndexWindow window);
ConstituentResult is_constituent(const RegionParams& params, int n,
                                 int width = kDefaultConstituentWindow);

struct OracleValidation {
  std::size_t oracle_checks = 0;
  double max_residual = 0.0;  // relative gap between piece and brute force
};

// b(r) = u_{indices[m]}(r) on [breakpoints[m], breakpoints[m+1]).
// breakpoints.front() == 0 and breakpoints.back() == r_max.
struct PieceDecomposition {
  std::vector<std::uint64_t> indices;
  std::vector<double> breakpoints;
  double r_max = 0.0;
  OracleValidation validation;

  std::size_t piece_at(double r) const;
  std::uint64_t index_at(double r) const { return indices[piece_at(r)]; }
};

struct DecomposeOptions {
  int window = kDefaultConstituentWindow;
  std::size_t oracle_samples = 1000;
  double oracle_tolerance = 1e-12;
};

// Exact piece structure of b on [0, r_max], cross-checked against
// envelope_value on a geometric grid. Disagreement throws InconsistencyError.
PieceDecomposition decompose(const RegionParams& params, double r_max,
                             const DecomposeOptions& options = {});

// Height of the active piece at r.
double piece_value(const RegionParams& params,
                   const PieceDecomposition& pieces, double r);

// Checks the structural invariants of a decomposition (ordering, endpoints,
// convergent-denominator indices, matching heights at interior breakpoints).
// Returns an empty string when valid, otherwise a description of the defect.
std::string validate_decomposition(const RegionParams& params,
                                   const PieceDecomposition& pieces,
                                   double tolerance = 1e-9);

struct ComparabilityReport {
  double inf_ratio = 0.0;
  double sup_ratio = 0.0;
};

// Extremes of b(r)/sqrt(r) over `samples` geometric radii in [r_lo, r_hi].
ComparabilityReport comparability_report(const RegionParams& params,
                                         double r_lo, double r_hi,
                                         std::size_t samples);

// Height l / sqrt(E) at which b levels off for a rotation of exact order l.
double rational_tail(const RegionParams& params, std::uint64_t order);

// n points from lo to hi (inclusive) with constant ratio.
std::vector<double> geometric_grid(double lo, double hi, std::size_t n);

}  // namespace margulis
