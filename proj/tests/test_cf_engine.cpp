#include <random>
#include <set>

#include "doctest.h"
#include "margulis/cf_engine.hpp"
#include "margulis/errors.hpp"
#include "oracles.hpp"

using namespace margulis;

namespace {

double rel(const HighReal& got, const oracle::Real& want) {
  return static_cast<double>(abs(oracle::Real(got) - want) / want);
}

// Certified bound on |angle_norm(angle, k) - ||k theta|||: 2 pi k times the
// surrogate error, plus rounding in 50-digit arithmetic.
bool within_certificate(const CFAngle& angle, std::uint64_t k, const oracle::Real& want) {
  const HighReal got = angle_norm(angle, k);
  const double slack = 2 * 3.1415926535897932 * static_cast<double>(k) *
                           angle.surrogate_error() * 1.0001 +
                       1e-45;
  return static_cast<double>(abs(oracle::Real(got) - want)) <= slack;
}

}  // namespace

TEST_CASE("golden angle convergents are Fibonacci numbers") {
  const CFAngle golden = parse_angle("golden");
  CHECK(golden.depth() == 30);
  CHECK(golden.guard_depth() == 70);
  CHECK(golden.bound() == 1);
  CHECK_FALSE(golden.is_rational());
  std::uint64_t f0 = 1, f1 = 1;  // q_0 = q_1 = 1
  CHECK(golden.denominator(0) == 1);
  for (int n = 1; n <= 30; ++n) {
    CHECK(golden.denominator(n) == f1);
    CHECK(golden.numerator(n) == f0);
    f0 = std::exchange(f1, f0 + f1);
  }
  CHECK(golden.denominator(20) == 10946);
}

TEST_CASE("angle_norm matches a 100-digit evaluation") {
  const oracle::Real x = oracle::golden();
  const CFAngle golden = parse_angle("golden");
  CHECK(static_cast<double>(angle_norm(golden, 1)) ==
        doctest::Approx(2.3999632297286533).epsilon(1e-16));
  for (std::uint64_t k = 1; k <= 2000; k += 7) {
    CHECK(within_certificate(golden, k, oracle::norm(x, k)));
    CHECK(rel(angle_norm(golden, k), oracle::norm(x, k)) < 1e-20);
  }

  const std::vector<std::uint64_t> a{3, 1, 4, 1, 5, 2, 6};
  const CFAngle angle = CFAngle::from_coefficients(a);
  std::vector<std::uint64_t> expanded;
  for (int n = 1; n <= angle.guard_depth() + 1; ++n) expanded.push_back(angle.coefficient(n));
  const oracle::Real y = oracle::cf_value(expanded);
  for (std::uint64_t k : {1ull, 2ull, 17ull, 999ull, 123456ull}) {
    CHECK(within_certificate(angle, k, oracle::norm(y, k)));
  }
}

TEST_CASE("explicit coefficient lists continue cyclically") {
  const CFAngle angle = CFAngle::from_coefficients({1, 2});
  CHECK(angle.coefficient(1) == 1);
  CHECK(angle.coefficient(2) == 2);
  CHECK(angle.coefficient(3) == 1);
  CHECK(angle.coefficient(40) == 2);
  CHECK(angle.bound() == 2);
}

TEST_CASE("periodic form and explicit list agree") {
  const CFAngle a = parse_angle("pre:[1,2];per:[3,1]");
  const CFAngle b = parse_angle("1,2,3,1,3,1,3,1");
  for (int n = 0; n <= 8; ++n) CHECK(a.denominator(n) == b.denominator(n));
  CHECK(a.coefficient(9) == 3);
  CHECK(b.coefficient(9) == 1);
  CHECK(a.bound() == 3);
}

TEST_CASE("convergent determinant identity on random angles") {
  std::mt19937_64 rng(7);
  for (int trial = 0; trial < 20; ++trial) {
    const CFAngle angle = CFAngle::from_coefficients(oracle::random_coefficients(rng, 100, 9));
    for (int n = 1; n <= angle.guard_depth(); ++n) {
      const BigInt det = angle.numerator(n) * angle.denominator(n - 1) -
                         angle.numerator(n - 1) * angle.denominator(n);
      CHECK(det == (n % 2 == 1 ? 1 : -1));
    }
  }
}

TEST_CASE("convergent seeds and deltas") {
  const CFAngle golden = parse_angle("golden");
  CHECK(convergent_at(golden, -2).q == 1);
  CHECK(convergent_at(golden, -1).q == 0);
  CHECK(convergent_at(golden, -1).p == 1);
  const auto list = convergents(golden, 30);
  REQUIRE(list.size() == 31);
  const oracle::Real x = oracle::golden();
  for (int n = 1; n <= 30; ++n) {
    const auto& c = list[n];
    const oracle::Real want = abs(oracle::Real(c.q) * x - oracle::Real(c.p));
    CHECK(static_cast<double>(abs(oracle::Real(c.delta) - want)) <= c.guard_error);
    CHECK(c.guard_error < 1e-22);
    if (n >= 2) CHECK(c.delta < list[n - 1].delta);
  }
  CHECK_THROWS_AS(convergents(golden, 31), InputError);
  CHECK_THROWS_AS(convergent_at(golden, -3), InputError);
}

TEST_CASE("closest returns are the convergent denominators") {
  std::mt19937_64 rng(11);
  for (int trial = 0; trial < 5; ++trial) {
    const auto a = oracle::random_coefficients(rng, 60, 5);
    const CFAngle angle = CFAngle::from_coefficients(a);
    const auto moments = closest_returns(angle, 5000);
    std::vector<std::uint64_t> want;
    for (std::uint64_t q : oracle::denominators(a, 40)) {
      if (q > 5000) break;
      if (want.empty() || want.back() != q) want.push_back(q);
    }
    CHECK(moments == want);
  }
}

TEST_CASE("closest returns by direct 100-digit comparison") {
  const oracle::Real x = oracle::golden();
  std::vector<std::uint64_t> want;
  oracle::Real best = 2;
  for (std::uint64_t k = 1; k <= 3000; ++k) {
    const oracle::Real d = oracle::circle_dist(x, k);
    if (d < best) {
      best = d;
      want.push_back(k);
    }
  }
  CHECK(closest_returns(parse_angle("golden"), 3000) == want);
}

TEST_CASE("norm recursion and bounds hold") {
  std::mt19937_64 rng(3);
  for (int trial = 0; trial < 10; ++trial) {
    AngleOptions options;
    options.depth = 27;
    const CFAngle angle =
        CFAngle::from_coefficients(oracle::random_coefficients(rng, 100, 5), options);
    const auto report = verify_norm_recursion(angle, 25);
    CHECK(report.passed);
    CHECK(report.rows.size() == 25);
    CHECK(report.max_residual < 1e-12);
  }
  CHECK_THROWS_AS(verify_norm_recursion(parse_angle("golden"), 29), InputError);
}

TEST_CASE("rational rotations") {
  const CFAngle third = parse_angle("rat:1/3");
  CHECK(third.is_rational());
  CHECK(third.surrogate_denominator() == 3);
  CHECK(third.fractional_part(BigInt(1)) == doctest::Approx(1.0 / 3));
  CHECK(third.fractional_part(BigInt(3)) == 0.0);
  const CFAngle reduced = CFAngle::rational(4, 6);
  CHECK(reduced.surrogate_denominator() == 3);
  CHECK(reduced.surrogate_numerator() == 2);
  CHECK(parse_angle("pre:[];per:none;rat:2/5").surrogate_denominator() == 5);
  CHECK_THROWS_AS(parse_angle("rat:3/3"), InputError);
  CHECK_THROWS_AS(parse_angle("rat:1/0"), InputError);
}

TEST_CASE("decimal input") {
  AngleOptions ten;
  ten.depth = 10;
  const CFAngle angle = parse_angle("0.6180339887498949", ten);
  CHECK(std::vector<std::uint64_t>(angle.coefficients().begin(), angle.coefficients().end()) ==
        std::vector<std::uint64_t>(10, 1));
  CHECK(angle.guard_depth() == 50);
  CHECK(angle.surrogate_error() > 0.0);

  // 16 digits leave 37 reliable quotients; the exact expansion has 53, so a
  // depth-30 surrogate is the decimal itself.
  const CFAngle full = parse_angle("0.6180339887498949");
  CHECK(full.guard_depth() == 53);
  CHECK(full.surrogate_error() == 0.0);
  CHECK(full.surrogate_numerator() * 10000000000000000 ==
        BigInt(6180339887498949) * full.surrogate_denominator());
  CHECK(full.bound() == 1);
  AngleOptions deep;
  deep.depth = 37;
  CHECK_NOTHROW(parse_angle("0.6180339887498949", deep));
  deep.depth = 38;
  CHECK_THROWS_AS(parse_angle("0.6180339887498949", deep), PrecisionError);
  deep.depth = 30;
  deep.guard_depth = 54;
  CHECK_THROWS_AS(parse_angle("0.6180339887498949", deep), PrecisionError);
  ten.depth = 20;
  CHECK_THROWS_AS(parse_angle("0.618033988749894", ten), PrecisionError);

  // Norms of an exact decimal surrogate equal those of the decimal.
  const oracle::Real y("0.41421356237309504880");
  AngleOptions twenty;
  twenty.depth = 20;
  const CFAngle root2 = parse_angle("0.41421356237309504880", twenty);
  CHECK(root2.surrogate_error() == 0.0);
  for (std::uint64_t k : {1ull, 5ull, 70ull, 13860ull, 9999991ull}) {
    CHECK(rel(angle_norm(root2, k), oracle::norm(y, k)) < 1e-45);
  }

  // 0.1 = [0; 10] is rational and stops after one quotient.
  CHECK_THROWS_AS(CFAngle::from_decimal("0.1"), PrecisionError);
  CHECK_THROWS_AS(parse_angle("0.25.1"), InputError);

  // Leading zeros after the point must not change the expansion.
  AngleOptions options;
  options.depth = 3;
  const CFAngle small = CFAngle::from_decimal("0.0707106781186547524400844362104849", options);
  CHECK(small.coefficient(1) == 14);
  CHECK(small.coefficient(2) == 7);
  CHECK(small.coefficient(3) == 28);
}

TEST_CASE("guard depth and precision budget") {
  AngleOptions options;
  options.depth = 30;
  options.guard_depth = 35;
  CHECK_THROWS_AS(parse_angle("golden", options), PrecisionError);

  // The minimum legal guard only certifies small multiples.
  options.guard_depth = 40;
  const CFAngle tight = parse_angle("golden", options);
  CHECK_NOTHROW(angle_norm(tight, 1));
  CHECK_THROWS_AS(angle_norm(tight, tight.denominator(30)), PrecisionError);

  const CFAngle roomy = parse_angle("golden");
  CHECK_NOTHROW(angle_norm(roomy, roomy.denominator(32)));
  CHECK(roomy.surrogate_error() < 1e-28);
}

TEST_CASE("declared bound is enforced") {
  AngleOptions options;
  options.bound = 3;
  CHECK_NOTHROW(CFAngle::from_coefficients({1, 2, 3}, options));
  CHECK_THROWS_AS(CFAngle::from_coefficients({1, 4}, options), InputError);
}

TEST_CASE("malformed angle specifications") {
  for (const char* bad : {"", "1,,2", "1,0,2", "pre:[1];per:[]", "pre:1;per:[2]",
                          "per:none", "x", "-1,2", "1,2a"}) {
    CAPTURE(bad);
    CHECK_THROWS_AS(parse_angle(bad), InputError);
  }
  CHECK_THROWS_AS(angle_norm(parse_angle("golden"), 0), InputError);
  CHECK_THROWS_AS(closest_returns(parse_angle("golden"), 0), InputError);
}
