#pragma once

// Independent reference computations used only by the tests. Nothing here
// calls into the library's numerical code.

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <numeric>
#include <vector>

namespace oracle {

inline double normal_density(double t) { return std::exp(-0.5 * t * t) / std::sqrt(2.0 * M_PI); }

/// Phi(x) by composite Simpson quadrature of the density over [x - 40, x].
inline double quadrature_cdf(double x, int panels = 40000) {
  if (x > 0) return 1.0 - quadrature_cdf(-x, panels);
  const double a = x - 40.0;
  const double h = (x - a) / panels;
  double s = normal_density(a) + normal_density(x);
  for (int i = 1; i < panels; ++i) s += (i % 2 ? 4.0 : 2.0) * normal_density(a + i * h);
  return s * h / 3.0;
}

/// Composed Gaussian-mechanism delta written straight from the bound, with
/// the quadrature CDF.
inline double composed_delta(double sigma, double eps, int g) {
  const double rg = std::sqrt(static_cast<double>(g));
  return quadrature_cdf(rg / (2 * sigma) - eps * sigma / rg) -
         std::exp(eps) * quadrature_cdf(-rg / (2 * sigma) - eps * sigma / rg);
}

/// Plain bisection for the smallest sigma meeting delta.
inline double bisect_sigma(double eps, double delta, int g) {
  double lo = 1e-3, hi = 1e3;
  for (int i = 0; i < 100; ++i) {
    const double mid = 0.5 * (lo + hi);
    if (composed_delta(mid, eps, g) <= delta) hi = mid; else lo = mid;
  }
  return hi;
}

/// Votes by a double loop over explicit coordinates.
inline std::vector<double> brute_histogram(const Eigen::MatrixXd& priv, const Eigen::MatrixXd& cand,
                                           bool cosine) {
  auto prep = [&](const Eigen::MatrixXd& m) {
    Eigen::MatrixXd out = m;
    if (!cosine) return out;
    for (int i = 0; i < out.rows(); ++i) {
      double n = 0;
      for (int k = 0; k < out.cols(); ++k) n += out(i, k) * out(i, k);
      n = std::sqrt(n);
      if (n > 0) for (int k = 0; k < out.cols(); ++k) out(i, k) /= n;
    }
    return out;
  };
  const Eigen::MatrixXd p = prep(priv), c = prep(cand);
  std::vector<double> h(c.rows(), 0.0);
  for (int i = 0; i < p.rows(); ++i) {
    int best = -1;
    double best_d = 0;
    for (int j = 0; j < c.rows(); ++j) {
      double d = 0;
      for (int k = 0; k < p.cols(); ++k) d += (p(i, k) - c(j, k)) * (p(i, k) - c(j, k));
      if (best < 0 || d < best_d) { best = j; best_d = d; }
    }
    h[best] += 1;
  }
  return h;
}

/// min over all permutations of the mean matched Euclidean distance.
inline double brute_w1(const Eigen::MatrixXd& a, const Eigen::MatrixXd& b) {
  const int n = static_cast<int>(a.rows());
  Eigen::MatrixXd cost(n, n);
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j) cost(i, j) = (a.row(i) - b.row(j)).norm();
  std::vector<int> perm(n);
  std::iota(perm.begin(), perm.end(), 0);
  double best = INFINITY;
  do {
    double s = 0;
    for (int i = 0; i < n; ++i) s += cost(i, perm[i]);
    best = std::min(best, s);
  } while (std::next_permutation(perm.begin(), perm.end()));
  return best / n;
}

/// Two-pass covariance with (n-1) denominator.
inline Eigen::MatrixXd naive_covariance(const Eigen::MatrixXd& x, Eigen::VectorXd* mean_out = nullptr) {
  const int n = static_cast<int>(x.rows()), m = static_cast<int>(x.cols());
  Eigen::VectorXd mean = Eigen::VectorXd::Zero(m);
  for (int i = 0; i < n; ++i)
    for (int k = 0; k < m; ++k) mean[k] += x(i, k) / n;
  Eigen::MatrixXd c = Eigen::MatrixXd::Zero(m, m);
  for (int i = 0; i < n; ++i)
    for (int a = 0; a < m; ++a)
      for (int b = 0; b < m; ++b) c(a, b) += (x(i, a) - mean[a]) * (x(i, b) - mean[b]) / (n - 1);
  if (mean_out) *mean_out = mean;
  return c;
}

/// Principal square root of a matrix with positive spectrum, Denman-Beavers.
inline Eigen::MatrixXd denman_beavers_sqrt(const Eigen::MatrixXd& a, int iters = 100) {
  Eigen::MatrixXd y = a;
  Eigen::MatrixXd z = Eigen::MatrixXd::Identity(a.rows(), a.cols());
  for (int k = 0; k < iters; ++k) {
    const Eigen::MatrixXd y_inv = y.fullPivLu().inverse();
    const Eigen::MatrixXd z_inv = z.fullPivLu().inverse();
    const Eigen::MatrixXd y_next = 0.5 * (y + z_inv);
    z = 0.5 * (z + y_inv);
    const double change = (y_next - y).norm();
    y = y_next;
    if (change < 1e-15 * y.norm()) break;
  }
  return y;
}

inline double frechet_oracle(const Eigen::VectorXd& m1, const Eigen::MatrixXd& c1,
                             const Eigen::VectorXd& m2, const Eigen::MatrixXd& c2) {
  return (m1 - m2).squaredNorm() + c1.trace() + c2.trace() -
         2.0 * denman_beavers_sqrt(c1 * c2).trace();
}

}  // namespace oracle
