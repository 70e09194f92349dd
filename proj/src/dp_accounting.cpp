#include "pte/dp_accounting.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <string>

#include "pte/error.hpp"

namespace pte {
namespace {

constexpr double kSaturation = 38.0;
constexpr double kSigmaLo = 1e-4;
constexpr double kSigmaHi = 1e6;
constexpr int kMaxBisection = 200;

// Asymptotic lower tail: Phi(x) ~ phi(x)/|x| * (1 - 1/x^2 + 3/x^4 - 15/x^6 ...).
double log_cdf_asymptotic(double x) {
  const double r = 1.0 / (x * x);
  double term = 1.0;
  double series = 1.0;
  for (int k = 1; k <= 6; ++k) {
    term *= -(2.0 * k - 1.0) * r;
    series += term;
  }
  return -0.5 * x * x - std::log(-x) - 0.5 * std::log(2.0 * std::numbers::pi) +
         std::log(series);
}

// Phi(a) - e^eps * Phi(b), with the product taken in log space when the
// direct form would overflow or lose the tail.
double delta_kernel(double a, double b, double epsilon) {
  const double first = std_normal_cdf(a);
  const double phi_b = std_normal_cdf(b);
  double second;
  if (epsilon < 700.0 && phi_b > 1e-290) {
    second = std::exp(epsilon) * phi_b;
  } else {
    second = std::exp(epsilon + log_std_normal_cdf(b));
  }
  return std::clamp(first - second, 0.0, 1.0);
}

}  // namespace

void PrivacyBudget::validate() const {
  if (!(epsilon > 0.0) || !std::isfinite(epsilon))
    throw DomainError("epsilon must be a finite positive number, got " + std::to_string(epsilon));
  if (!(delta > 0.0 && delta < 1.0))
    throw DomainError("delta must lie in (0, 1), got " + std::to_string(delta));
}

double std_normal_cdf(double x) {
  if (!std::isfinite(x)) throw InputError("std_normal_cdf: non-finite argument");
  if (x < -kSaturation) return 0.0;
  if (x > kSaturation) return 1.0;
  return 0.5 * std::erfc(-x / std::numbers::sqrt2);
}

double log_std_normal_cdf(double x) {
  if (!std::isfinite(x)) throw InputError("log_std_normal_cdf: non-finite argument");
  if (x < -30.0) return log_cdf_asymptotic(x);
  if (x > 0.0) return std::log1p(-0.5 * std::erfc(x / std::numbers::sqrt2));
  return std::log(0.5 * std::erfc(-x / std::numbers::sqrt2));
}

double gaussian_delta(double sigma, double epsilon) {
  if (!(sigma > 0.0) || !std::isfinite(sigma))
    throw DomainError("gaussian_delta: sigma must be positive, got " + std::to_string(sigma));
  if (!(epsilon >= 0.0) || !std::isfinite(epsilon))
    throw DomainError("gaussian_delta: epsilon must be non-negative, got " +
                      std::to_string(epsilon));
  const double half_inv = 1.0 / (2.0 * sigma);
  return delta_kernel(half_inv - epsilon * sigma, -half_inv - epsilon * sigma, epsilon);
}

double composed_delta(double sigma, double epsilon, int iterations) {
  if (iterations < 1)
    throw DomainError("composed_delta: iterations must be >= 1, got " +
                      std::to_string(iterations));
  if (!(sigma > 0.0) || !std::isfinite(sigma))
    throw DomainError("composed_delta: sigma must be positive, got " + std::to_string(sigma));
  if (!(epsilon >= 0.0) || !std::isfinite(epsilon))
    throw DomainError("composed_delta: epsilon must be non-negative, got " +
                      std::to_string(epsilon));
  const double root_g = std::sqrt(static_cast<double>(iterations));
  const double shift = root_g / (2.0 * sigma);
  const double scaled_eps = epsilon * sigma / root_g;
  return delta_kernel(shift - scaled_eps, -shift - scaled_eps, epsilon);
}

NoiseSchedule calibrate_sigma(const PrivacyBudget& budget, int iterations) {
  budget.validate();
  if (iterations < 1)
    throw DomainError("calibrate_sigma: iterations must be >= 1, got " +
                      std::to_string(iterations));

  const auto delta_at = [&](double s) { return composed_delta(s, budget.epsilon, iterations); };

  double lo = kSigmaLo;
  double hi = kSigmaHi;
  if (delta_at(hi) > budget.delta)
    throw DomainError("calibrate_sigma: delta " + std::to_string(budget.delta) +
                      " is unattainable with sigma <= 1e6");
  if (delta_at(lo) <= budget.delta) return {lo, iterations};

  // invariant: delta_at(lo) > target >= delta_at(hi)
  for (int step = 0; step < kMaxBisection; ++step) {
    const double mid = lo + 0.5 * (hi - lo);
    if (mid <= lo || mid >= hi) break;
    (delta_at(mid) <= budget.delta ? hi : lo) = mid;
  }
  if (hi - lo > 1e-9)
    throw InternalError("calibrate_sigma: bisection did not converge (bracket width " +
                        std::to_string(hi - lo) + ")");
  return {hi, iterations};
}

}  // namespace pte
