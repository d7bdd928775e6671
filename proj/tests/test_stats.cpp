#include <doctest.h>

#include <cmath>
#include <vector>

#include "mound/errors.hpp"
#include "mound/rng.hpp"
#include "mound/stats.hpp"

#include "oracles.hpp"

using namespace mound;

// ===========================================================================
// Incomplete beta
// ===========================================================================

TEST_CASE("incomplete beta: closed forms and boundaries") {
  CHECK(incomplete_beta(1.0, 1.0, 0.0) == 0.0);
  CHECK(incomplete_beta(1.0, 1.0, 1.0) == 1.0);
  // I_x(1,1) is the uniform CDF.
  for (const double x : {0.1, 0.25, 0.5, 0.9})
    CHECK(incomplete_beta(1.0, 1.0, x) == doctest::Approx(x).epsilon(1e-14));
  // I_x(1,b) = 1 - (1-x)^b.
  CHECK(incomplete_beta(1.0, 3.0, 0.3) ==
        doctest::Approx(1.0 - std::pow(0.7, 3.0)).epsilon(1e-13));
  CHECK_THROWS_AS(incomplete_beta(0.0, 1.0, 0.5), ValidationError);
  CHECK_THROWS_AS(incomplete_beta(1.0, 1.0, 1.5), ValidationError);
}

TEST_CASE("incomplete beta respects the reflection symmetry") {
  Rng rng(12);
  for (int i = 0; i < 50; ++i) {
    const double a = rng.uniform_in(0.5, 8.0);
    const double b = rng.uniform_in(0.5, 8.0);
    const double x = rng.uniform();
    CHECK(incomplete_beta(a, b, x) ==
          doctest::Approx(1.0 - incomplete_beta(b, a, 1.0 - x)).epsilon(1e-11));
  }
}

// ===========================================================================
// Student t CDF
// ===========================================================================

TEST_CASE("t CDF: exact special cases") {
  CHECK(student_t_cdf(0.0, 5.0) == 0.5);
  // One degree of freedom is the Cauchy distribution: F(1) = 3/4.
  CHECK(student_t_cdf(1.0, 1.0) == doctest::Approx(0.75).epsilon(1e-13));
  // Two degrees of freedom: F(t) = 1/2 + t / (2*sqrt(2 + t^2)).
  CHECK(student_t_cdf(2.0, 2.0) ==
        doctest::Approx(0.5 + 2.0 / (2.0 * std::sqrt(6.0))).epsilon(1e-13));
  CHECK_THROWS_AS(student_t_cdf(1.0, 0.0), ValidationError);
}

TEST_CASE("t CDF agrees with direct density quadrature") {
  // 50 (t, nu) points spanning both tails and a range of df.
  Rng rng(34);
  for (int i = 0; i < 50; ++i) {
    const double t = rng.uniform_in(-6.0, 6.0);
    const double nu = rng.uniform_in(1.0, 40.0);
    const double expected = oracle::oracle_student_t_cdf(t, nu);
    CHECK(student_t_cdf(t, nu) == doctest::Approx(expected).epsilon(1e-6));
  }
}

TEST_CASE("t CDF symmetry: F(t) + F(-t) = 1") {
  Rng rng(56);
  for (int i = 0; i < 50; ++i) {
    const double t = rng.uniform_in(0.0, 8.0);
    const double nu = rng.uniform_in(1.0, 50.0);
    CHECK(student_t_cdf(t, nu) + student_t_cdf(-t, nu) ==
          doctest::Approx(1.0).epsilon(1e-12));
  }
}

TEST_CASE("t CDF is monotone in t") {
  const double nu = 7.0;
  double prev = 0.0;
  for (double t = -10.0; t <= 10.0; t += 0.25) {
    const double v = student_t_cdf(t, nu);
    CHECK(v >= prev);
    prev = v;
  }
}

// ===========================================================================
// Paired t-test
// ===========================================================================

TEST_CASE("paired t-test on a hand-checked triple") {
  // d = (-1, -2, -3): mean -2, sd 1, t = -2 / (1/sqrt(3)) = -2*sqrt(3).
  const std::vector<double> a{1.0, 2.0, 3.0};
  const std::vector<double> b{2.0, 4.0, 6.0};
  const auto r = paired_t_test(a, b);
  CHECK(r.mean_diff == doctest::Approx(-2.0).epsilon(1e-14));
  CHECK(r.df == 2.0);
  CHECK(r.t == doctest::Approx(-2.0 * std::sqrt(3.0)).epsilon(1e-13));
  CHECK(r.p_one_sided ==
        doctest::Approx(oracle::oracle_student_t_cdf(r.t, 2.0)).epsilon(1e-9));
  CHECK(r.p_two_sided == doctest::Approx(2.0 * r.p_one_sided).epsilon(1e-13));
  CHECK(r.p_one_sided < 0.05);
}

TEST_CASE("two-sided p doubles the smaller tail") {
  // Positive mean difference: the one-sided (left-tail) p exceeds 1/2 and the
  // two-sided p uses the opposite tail.
  const std::vector<double> a{5.0, 6.0, 7.0, 9.0};
  const std::vector<double> b{1.0, 2.0, 3.0, 4.0};
  const auto r = paired_t_test(a, b);
  CHECK(r.t > 0.0);
  CHECK(r.p_one_sided > 0.5);
  CHECK(r.p_two_sided ==
        doctest::Approx(2.0 * student_t_cdf(-r.t, r.df)).epsilon(1e-13));
}

TEST_CASE("paired t-test input contract") {
  const std::vector<double> a{1.0, 2.0};
  const std::vector<double> b{1.0};
  CHECK_THROWS_AS(paired_t_test(a, b), ValidationError); // length mismatch
  const std::vector<double> single{1.0};
  CHECK_THROWS_AS(paired_t_test(single, single), ValidationError); // n < 2
  // Identical differences have zero variance; t is undefined.
  const std::vector<double> c{2.0, 3.0, 4.0};
  const std::vector<double> d{1.0, 2.0, 3.0};
  CHECK_THROWS_AS(paired_t_test(c, d), ValidationError);
}

TEST_CASE("paired t-test is antisymmetric in its arguments") {
  const std::vector<double> a{3.1, 4.5, 2.2, 5.0, 4.1};
  const std::vector<double> b{2.9, 4.9, 2.0, 4.2, 4.6};
  const auto ab = paired_t_test(a, b);
  const auto ba = paired_t_test(b, a);
  CHECK(ab.t == doctest::Approx(-ba.t).epsilon(1e-13));
  CHECK(ab.p_two_sided == doctest::Approx(ba.p_two_sided).epsilon(1e-12));
  CHECK(ab.p_one_sided ==
        doctest::Approx(1.0 - ba.p_one_sided).epsilon(1e-12));
}
