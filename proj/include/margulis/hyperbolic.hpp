#pragma once

// Upper half-space geometry in H^4 = {(x, y, z, u) : u > 0}: the metric, the
// screw parabolic g, membership in the Margulis region, the horoball-to-S_a
// map h, the S_a-to-region map f, and sampled distortion certificates.

#include <cstdint>
#include <optional>

#include "margulis/region.hpp"

namespace margulis {

struct Point4 {
  double x = 0.0;
  double y = 0.0;
  double z = 0.0;
  double u = 1.0;

  // Distance from the rotation axis, sqrt(x^2 + y^2).
  double radial() const;
  bool valid() const;
};

// Hyperbolic distance, 2 asinh(|P - Q| / (2 sqrt(u_P u_Q))).
double dist(const Point4& p, const Point4& q);
// Same distance through acosh(1 + |P - Q|^2 / (2 u_P u_Q)); loses accuracy
// for nearby points and is kept as a cross-check.
double dist_cosh(const Point4& p, const Point4& q);

// g^k: rotation by k theta about the z-axis and translation by k sqrt(2).
Point4 screw_apply(const RegionParams& params, std::int64_t k, const Point4& p);

// True iff E u^2 >= (1 - cos k theta) r^2 + k^2 for some 1 <= k <= k_max.
// k_max defaults to ceil(sqrt(E) u), the smallest complete bound.
bool in_margulis_region(const RegionParams& params, const Point4& p,
                        std::optional<std::uint64_t> k_max = std::nullopt);

// a(r) = sqrt((sqrt(4r^2 + 1) + 1) / 2), the height of h(horosphere) above
// radius r.
double profile_a(double r);
// s_r = sqrt((sqrt(4r^2 + 1) - 1) / 2), inverse of r -> r sqrt(r^2 + 1).
double profile_s(double r);

// h(P) = lambda P with lambda = sqrt(x^2 + y^2 + u^2).
Point4 map_h(const Point4& p);
// f(P) = (x, y, z, u b(r) / a(r)).
Point4 map_f(const RegionParams& params, const Point4& p);
// Exact preimage under f along the vertical ray through q.
Point4 map_f_inverse(const RegionParams& params, const Point4& q);

struct SamplerConfig {
  std::size_t sample_count = 10000;
  std::uint64_t seed = 42;
  double u_min = 1e-3;
  double u_max = 1e3;
  double coord_bound = 1e3;
  bool slice = false;  // force z = 0
  double min_separation = 1e-6;
  // Radial window used for the b/a bounds in quasi-isometry certificates.
  double r_max = 1e6;
  std::size_t grid_points = 10000;
  double widening = 0.01;
};

struct DistortionReport {
  std::size_t sample_count = 0;
  std::uint64_t seed = 0;
  double min_ratio = 0.0;
  double max_ratio = 0.0;
  double max_additive_defect = 0.0;
  double constant_C = 0.0;
  std::size_t rejected_pairs = 0;

  // Bounds the ratios (bilipschitz) or the defect (quasi-isometry) must meet.
  double ratio_lower = 0.0;
  double ratio_upper = 0.0;
  double defect_bound = 0.0;

  // Quasi-isometry extras.
  double bound_A = 0.0;
  double bound_B = 0.0;
  double max_displacement = 0.0;     // max rho(P, f(P))
  double max_preimage_error = 0.0;   // surjectivity witness
  double horosphere_error = 0.0;     // f o h on the height-1 horosphere

  bool certified = false;
};

// Ratios rho(hP, hQ) / rho(P, Q) over seeded random pairs; certified when they
// lie in [1/4, 4], or in [1/2, 2] for the z = 0 slice.
DistortionReport certify_bilipschitz(const SamplerConfig& config);

// Additive defect |rho(fP, fQ) - rho(P, Q)| against 2C where
// C = max(|ln A|, |ln B|) and A, B bracket b/a (widened by config.widening).
DistortionReport certify_quasi_isometry(const RegionParams& params,
                                        const SamplerConfig& config);

// f o h: ratios against [1/4, 4] up to the additive slack 2C, plus the image
// of the height-1 horosphere against the graph of b.
DistortionReport certify_composite(const RegionParams& params,
                                   const SamplerConfig& config);

// Largest |u' - b(r')| over f(h(P)) for P on the height-1 horosphere at the
// given radii, with b taken from `pieces`.
double horosphere_defect(const RegionParams& params,
                         const PieceDecomposition& pieces,
                         const std::vector<double>& radii);

}  // namespace margulis
