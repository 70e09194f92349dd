#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <cmath>
#include <limits>

#include "oracles.hpp"
#include "pte/dp_accounting.hpp"
#include "pte/error.hpp"

using namespace pte;

// Reference values computed once with 50-digit arbitrary-precision quadrature.
constexpr double kPhi1 = 0.84134474606854294859;
constexpr double kDeltaHalfSigmaZeroEps = 0.68268949213708589717;
constexpr double kDeltaUnit = 0.12693673750664394580;
constexpr double kDeltaSigma10G10 = 1.0981048091928273529e-4;
constexpr double kSigmaEps1Delta1e5 = 3.7306316348159418322;

TEST_CASE("std_normal_cdf matches reference values") {
  CHECK(std_normal_cdf(0.0) == 0.5);
  CHECK(std_normal_cdf(40.0) == 1.0);
  CHECK(std_normal_cdf(-40.0) == 0.0);
  CHECK(std_normal_cdf(1.0) == doctest::Approx(kPhi1).epsilon(1e-15));
  CHECK_THROWS_AS(std_normal_cdf(std::numeric_limits<double>::quiet_NaN()), InputError);
  CHECK_THROWS_AS(std_normal_cdf(INFINITY), InputError);
}

TEST_CASE("std_normal_cdf agrees with quadrature within 1e-14 on [-8, 8]") {
  double prev = 0.0;
  for (double x = -8.0; x <= 8.0; x += 0.25) {
    const double v = std_normal_cdf(x);
    CHECK(std::abs(v - oracle::quadrature_cdf(x)) <= 1e-14);
    CHECK(v >= prev);
    prev = v;
  }
}

TEST_CASE("log_std_normal_cdf is continuous across its branch points") {
  for (double x : {-30.0, 0.0}) {
    const double below = log_std_normal_cdf(std::nextafter(x, -INFINITY));
    const double above = log_std_normal_cdf(x + 1e-12);
    CHECK(below == doctest::Approx(above).epsilon(1e-10));
  }
  CHECK(log_std_normal_cdf(-20.0) == doctest::Approx(std::log(std_normal_cdf(-20.0))).epsilon(1e-13));
  // deep tail where the CDF underflows: -x^2/2 dominates
  CHECK(log_std_normal_cdf(-100.0) == doctest::Approx(-5000.0 - std::log(100.0) - 0.5 * std::log(2 * M_PI) + std::log1p(-1e-4 + 3e-8)).epsilon(1e-12));
}

TEST_CASE("gaussian_delta examples") {
  CHECK(gaussian_delta(100.0, 1.0) < 1e-40);
  CHECK(gaussian_delta(0.5, 0.0) == doctest::Approx(kDeltaHalfSigmaZeroEps).epsilon(1e-13));
  CHECK(gaussian_delta(1.0, 1.0) == doctest::Approx(kDeltaUnit).epsilon(1e-13));
  CHECK_THROWS_AS(gaussian_delta(0.0, 1.0), DomainError);
  CHECK_THROWS_AS(gaussian_delta(-1.0, 1.0), DomainError);
  CHECK_THROWS_AS(gaussian_delta(1.0, -0.5), DomainError);
}

TEST_CASE("gaussian_delta stays finite for very large epsilon") {
  const double d = gaussian_delta(0.05, 800.0);
  CHECK(std::isfinite(d));
  CHECK(d >= 0.0);
  CHECK(d <= 1.0);
}

TEST_CASE("gaussian_delta is strictly decreasing in sigma") {
  for (double eps : {0.1, 1.0, 5.0}) {
    double prev = gaussian_delta(0.05, eps);
    for (double s = 0.1; s <= 5.0; s += 0.1) {
      const double d = gaussian_delta(s, eps);
      if (prev > 1e-300) CHECK(d < prev);
      prev = d;
    }
  }
}

TEST_CASE("composed_delta examples and substitution law") {
  CHECK(composed_delta(1.7, 0.8, 1) == gaussian_delta(1.7, 0.8));
  CHECK(composed_delta(std::sqrt(10.0), 1.0, 10) == doctest::Approx(kDeltaUnit).epsilon(1e-12));
  CHECK(composed_delta(10.0, 1.0, 10) == doctest::Approx(kDeltaSigma10G10).epsilon(1e-11));
  CHECK_THROWS_AS(composed_delta(1.0, 1.0, 0), DomainError);

  for (double s : {0.3, 1.0, 2.5, 7.0})
    for (double eps : {0.0, 0.5, 2.0})
      for (int g : {1, 3, 10, 50})
        CHECK(std::abs(composed_delta(s, eps, g) - gaussian_delta(s / std::sqrt(g), eps)) <= 1e-12);
}

TEST_CASE("composed_delta is increasing in G") {
  for (int g = 1; g < 30; ++g) CHECK(composed_delta(4.0, 1.0, g + 1) > composed_delta(4.0, 1.0, g));
}

TEST_CASE("calibrate_sigma examples") {
  CHECK(calibrate_sigma({1.0, kDeltaUnit}, 1).sigma == doctest::Approx(1.0).epsilon(1e-9));
  const double s1 = calibrate_sigma({1.0, 1e-5}, 1).sigma;
  CHECK(s1 == doctest::Approx(kSigmaEps1Delta1e5).epsilon(1e-12));
  CHECK(calibrate_sigma({1.0, 1e-5}, 100).sigma == doctest::Approx(10.0 * s1).epsilon(1e-12));
}

TEST_CASE("calibrate_sigma round trip and minimality") {
  for (double eps : {0.2, 1.0, 3.0})
    for (double delta : {1e-3, 1e-5, 1e-8})
      for (int g : {1, 4, 25}) {
        const auto s = calibrate_sigma({eps, delta}, g);
        const double d = composed_delta(s.sigma, eps, g);
        CHECK(d <= delta);
        CHECK(d >= delta * (1 - 1e-6));
        CHECK(composed_delta(s.sigma - 1e-9, eps, g) > delta);
        CHECK(s.iterations == g);
      }
}

TEST_CASE("calibrate_sigma errors") {
  CHECK_THROWS_AS(calibrate_sigma({1.0, 1.0}, 1), DomainError);
  CHECK_THROWS_AS(calibrate_sigma({1.0, 0.0}, 1), DomainError);
  CHECK_THROWS_AS(calibrate_sigma({0.0, 1e-5}, 1), DomainError);
  CHECK_THROWS_AS(calibrate_sigma({1.0, 1e-5}, 0), DomainError);
}

TEST_CASE("calibrate_sigma agrees with an independent bisection on quadrature CDFs") {
  const double mine = calibrate_sigma({1.0, 1e-5}, 1).sigma;
  const double ref = oracle::bisect_sigma(1.0, 1e-5, 1);
  CHECK(std::abs(mine - ref) / ref <= 1e-6);
}
