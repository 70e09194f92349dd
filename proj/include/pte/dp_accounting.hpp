#pragma once

namespace pte {

/// (epsilon, delta) target for a whole run.
struct PrivacyBudget {
  double epsilon = 1.0;
  double delta = 1e-5;

  /// Throws DomainError unless epsilon > 0 and 0 < delta < 1.
  void validate() const;
};

/// Per-coordinate noise std-dev and the number of noisy releases it covers.
struct NoiseSchedule {
  double sigma = 0.0;
  int iterations = 1;
};

/// Standard normal CDF. Exact 0 below -38 and exact 1 above 38.
double std_normal_cdf(double x);

/// log of the standard normal CDF, accurate deep into the lower tail where
/// the CDF itself underflows.
double log_std_normal_cdf(double x);

/// Smallest delta for which adding N(0, sigma^2) to a sensitivity-1 query is
/// (epsilon, delta)-DP:
///   Phi(1/(2 sigma) - epsilon sigma) - e^epsilon Phi(-1/(2 sigma) - epsilon sigma).
double gaussian_delta(double sigma, double epsilon);

/// Same bound after `iterations` adaptive compositions of the mechanism:
/// the single-release bound with sqrt(G)/(2 sigma) and epsilon sigma/sqrt(G).
double composed_delta(double sigma, double epsilon, int iterations);

/// Smallest sigma in [1e-4, 1e6] (to within 1e-9) for which
/// composed_delta(sigma, epsilon, G) <= delta. Bracketed bisection, capped at
/// 200 steps; throws InternalError rather than return an unconverged value.
NoiseSchedule calibrate_sigma(const PrivacyBudget& budget, int iterations);

}  // namespace pte
