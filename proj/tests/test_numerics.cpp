#include <doctest.h>

#include <cmath>
#include <limits>
#include <vector>

#include "onebit/diag.hpp"
#include "onebit/numerics.hpp"

using namespace onebit;

namespace {

// Long-double reference for exp(t^2) erfc(t): 80-bit range keeps exp(t^2)
// representable up to |t| ~ 106, far past both double-precision branches.
long double erfcx_ref(long double t) { return expl(t * t) * erfcl(t); }

}  // namespace

TEST_CASE("erfcx matches a long-double reference across both branches") {
  for (double t = -26.0; t <= 100.0; t += 0.73) {
    const double ref = static_cast<double>(erfcx_ref(t));
    CHECK(num::erfcx(t) == doctest::Approx(ref).epsilon(1e-12));
  }
  // Branch boundary at t = 20.
  for (double t : {19.9991, 20.0, 20.0001, 20.5}) {
    const double ref = static_cast<double>(erfcx_ref(t));
    CHECK(num::erfcx(t) == doctest::Approx(ref).epsilon(1e-13));
  }
}

TEST_CASE("erfcx far tail sits inside its pinching bounds") {
  // 1/(t sqrt(pi)) (1 - 1/(2t^2)) < erfcx(t) < 1/(t sqrt(pi)) for t > 0.
  // (Beyond t ~ 1e8 the two bounds coincide in double precision.)
  for (double t : {1e3, 1e5}) {
    const double upper = 1.0 / (t * std::sqrt(M_PI));
    const double lower = upper * (1.0 - 0.5 / (t * t));
    CHECK(num::erfcx(t) > lower);
    CHECK(num::erfcx(t) < upper);
  }
}

TEST_CASE("erfcx saturates to infinity where 2 exp(t^2) overflows") {
  CHECK(std::isinf(num::erfcx(-27.0)));
  CHECK(std::isfinite(num::erfcx(-26.0)));
}

TEST_CASE("std_cdf_neg matches the integration oracle") {
  for (double t : {-8.0, -1.3, 0.0, 0.5, 2.0, 6.5, 13.0, 30.0}) {
    const double quad = diag::oracle_std_cdf_neg(t);
    CHECK(num::std_cdf_neg(t) == doctest::Approx(quad).epsilon(1e-10));
  }
}

TEST_CASE("log_std_cdf_neg stays accurate into the far tail") {
  // Moderate range: log of the quadrature oracle (independent integration).
  for (double t : {-6.0, -2.0, 0.0, 3.0, 8.0, 12.0, 20.0, 36.0}) {
    const double ref = std::log(diag::oracle_std_cdf_neg(t));
    CHECK(num::log_std_cdf_neg(t) == doctest::Approx(ref).epsilon(1e-10));
  }
  // Both sides of the t = 8 branch switch against a long-double reference.
  for (double t : {7.9999999, 8.0, 8.0000001}) {
    const double ref = static_cast<double>(logl(0.5L * erfcl(t / sqrtl(2.0L))));
    CHECK(num::log_std_cdf_neg(t) == doctest::Approx(ref).epsilon(1e-12));
  }
  // Far tail: Mills-ratio asymptotic expansion, truncation error ~1e-11
  // relative at t = 50.
  for (double t : {50.0, 100.0, 300.0}) {
    const double t2 = t * t;
    const double series = 1.0 - 1.0 / t2 + 3.0 / (t2 * t2) - 15.0 / (t2 * t2 * t2);
    const double ref = -0.5 * t2 - num::kLogSqrt2Pi - std::log(t) + std::log(series);
    CHECK(num::log_std_cdf_neg(t) == doctest::Approx(ref).epsilon(1e-9));
  }
}

TEST_CASE("inv_mills reference values and bounds") {
  // phi(0)/Phi(0) = sqrt(2/pi).
  CHECK(num::inv_mills(0.0) == doctest::Approx(std::sqrt(2.0 / M_PI)).epsilon(1e-14));
  // Against the quadrature CDF: u(t) = phi(t) / Phi(-t).
  for (double t : {-7.0, -2.5, -0.5, 0.7, 3.0, 8.0}) {
    const double phi = num::kInvSqrt2Pi * std::exp(-0.5 * t * t);
    const double ref = phi / diag::oracle_std_cdf_neg(t);
    CHECK(num::inv_mills(t) == doctest::Approx(ref).epsilon(1e-10));
  }
  // For t > 0 the ratio is pinched between t and t + 1/t. The distance to
  // the upper bound is ~2/t^3, so the strict form is only resolvable in
  // double precision for moderate t.
  for (double t : {1.0, 5.0, 40.0, 500.0}) {
    const double u = num::inv_mills(t);
    CHECK(u > t);
    CHECK(u < t + 1.0 / t);
  }
  CHECK(num::inv_mills(1e6) >= 1e6);
  CHECK(num::inv_mills(1e6) <= 1e6 + 1e-6);
  // Deep negative arguments decay like phi(t).
  CHECK(num::inv_mills(-40.0) ==
        doctest::Approx(num::kInvSqrt2Pi * std::exp(-800.0)).epsilon(1e-12));
}

TEST_CASE("logsumexp basics") {
  std::vector<double> two{0.0, 0.0};
  CHECK(num::logsumexp(two) == doctest::Approx(std::log(2.0)).epsilon(1e-15));

  const double ninf = -std::numeric_limits<double>::infinity();
  std::vector<double> with_ninf{ninf, 3.0};
  CHECK(num::logsumexp(with_ninf) == doctest::Approx(3.0).epsilon(1e-15));

  std::vector<double> all_ninf{ninf, ninf};
  CHECK(num::logsumexp(all_ninf) == ninf);

  // Shift invariance: logsumexp(v + c) = logsumexp(v) + c.
  std::vector<double> v{-1.5, 0.25, 2.0, -700.0};
  std::vector<double> shifted = v;
  for (double& x : shifted) x += 123.0;
  CHECK(num::logsumexp(shifted) == doctest::Approx(num::logsumexp(v) + 123.0).epsilon(1e-13));
}

TEST_CASE("normal pdf helpers") {
  CHECK(num::normal_pdf(0.0, 0.0, 1.0) == doctest::Approx(num::kInvSqrt2Pi).epsilon(1e-15));
  CHECK(num::log_normal_pdf(1.2, 0.5, 2.0) ==
        doctest::Approx(std::log(num::normal_pdf(1.2, 0.5, 2.0))).epsilon(1e-13));
}
