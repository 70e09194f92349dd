#pragma once

#include <Eigen/Dense>
#include <cmath>
#include <optional>
#include <sstream>
#include <string>
#include <utility>

#include "pte/embedding.hpp"
#include "pte/error.hpp"
#include "pte/hungarian.hpp"

namespace pte {

template <typename Scalar>
struct GaussianStats {
  Eigen::Matrix<Scalar, Eigen::Dynamic, 1> mean;
  Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic> covariance;
};

struct DistanceReport {
  double fid_core = 0.0;
  std::optional<double> wasserstein1;
  std::pair<long, long> sample_counts{0, 0};
};

/// Sample mean and (n-1)-denominator covariance, symmetrized.
template <typename Derived>
GaussianStats<typename Derived::Scalar> gaussian_stats(const Eigen::MatrixBase<Derived>& rows) {
  using Scalar = typename Derived::Scalar;
  const Eigen::Index n = rows.rows();
  if (n < 2) throw InputError("gaussian_stats: need at least 2 rows, got " + std::to_string(n));
  GaussianStats<Scalar> s;
  s.mean = rows.colwise().mean().transpose();
  const auto centered = (rows.rowwise() - s.mean.transpose()).eval();
  s.covariance = (centered.transpose() * centered) / static_cast<Scalar>(n - 1);
  s.covariance = (0.5 * (s.covariance + s.covariance.transpose())).eval();
  return s;
}

template <typename Scalar>
GaussianStats<Scalar> gaussian_stats(const BasicEmbeddingSet<Scalar>& set) {
  return gaussian_stats(set.rows());
}

namespace detail {

/// Eigen-decomposition of a symmetric matrix that must be PSD up to
/// `tolerance`; small negative eigenvalues are clipped to zero.
template <typename Scalar>
Eigen::SelfAdjointEigenSolver<Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>>
psd_eigen(const Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>& m, const char* what,
          Scalar tolerance) {
  using Mat = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>;
  Eigen::SelfAdjointEigenSolver<Mat> es(Mat(0.5 * (m + m.transpose())));
  if (es.info() != Eigen::Success) throw InputError(std::string(what) + ": eigensolver failed");
  const Scalar lowest = es.eigenvalues().minCoeff();
  if (lowest < -tolerance) {
    std::ostringstream os;
    os << what << " is not positive semidefinite (eigenvalue " << lowest << ")";
    throw InputError(os.str());
  }
  return es;
}

}  // namespace detail

/// Symmetric PSD square root via eigendecomposition.
template <typename Scalar>
Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic> psd_sqrt(
    const Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>& m, Scalar tolerance = 1e-8) {
  const auto es = detail::psd_eigen<Scalar>(m, "matrix", tolerance);
  const auto root = es.eigenvalues().cwiseMax(Scalar(0)).cwiseSqrt();
  return es.eigenvectors() * root.asDiagonal() * es.eigenvectors().transpose();
}

/// Frechet distance between two Gaussians:
///   |mu_a - mu_b|^2 + tr(C_a) + tr(C_b) - 2 tr((C_a^{1/2} C_b C_a^{1/2})^{1/2}).
/// Uses the symmetric inner product so only symmetric eigensolves are needed.
template <typename Scalar>
Scalar frechet_distance(const GaussianStats<Scalar>& a, const GaussianStats<Scalar>& b) {
  using Mat = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>;
  const Eigen::Index m = a.mean.size();
  if (b.mean.size() != m || a.covariance.rows() != m || b.covariance.rows() != m ||
      a.covariance.cols() != m || b.covariance.cols() != m)
    throw InputError("frechet_distance: dimension mismatch");
  constexpr Scalar tol = Scalar(1e-8);

  const auto ea = detail::psd_eigen<Scalar>(a.covariance, "first covariance", tol);
  detail::psd_eigen<Scalar>(b.covariance, "second covariance", tol);

  const auto root_vals = ea.eigenvalues().cwiseMax(Scalar(0)).cwiseSqrt();
  const Mat root_a = ea.eigenvectors() * root_vals.asDiagonal() * ea.eigenvectors().transpose();
  const Mat inner = root_a * b.covariance * root_a;
  const auto ei = detail::psd_eigen<Scalar>(inner, "covariance product", tol);
  const Scalar tr_cross = ei.eigenvalues().cwiseMax(Scalar(0)).cwiseSqrt().sum();

  const Scalar d = (a.mean - b.mean).squaredNorm() + a.covariance.trace() +
                   b.covariance.trace() - Scalar(2) * tr_cross;
  return d > Scalar(0) ? d : Scalar(0);
}

/// Pairwise Euclidean distance matrix between the rows of two matrices.
template <typename DA, typename DB>
Eigen::Matrix<typename DA::Scalar, Eigen::Dynamic, Eigen::Dynamic> pairwise_distances(
    const Eigen::MatrixBase<DA>& a, const Eigen::MatrixBase<DB>& b) {
  Eigen::Matrix<typename DA::Scalar, Eigen::Dynamic, Eigen::Dynamic> d(a.rows(), b.rows());
  for (Eigen::Index i = 0; i < a.rows(); ++i)
    for (Eigen::Index j = 0; j < b.rows(); ++j) d(i, j) = (a.row(i) - b.row(j)).norm();
  return d;
}

inline constexpr Eigen::Index kMaxExactW1Size = 512;

/// Exact Wasserstein-1 between two equal-size point clouds with uniform
/// weights: mean cost of the optimal perfect matching under the set metric.
template <typename Scalar>
Scalar exact_wasserstein1(const BasicEmbeddingSet<Scalar>& a, const BasicEmbeddingSet<Scalar>& b) {
  if (a.size() != b.size())
    throw InputError("exact_wasserstein1: sets differ in size (" + std::to_string(a.size()) +
                     " vs " + std::to_string(b.size()) + "); subsample the larger set first");
  if (a.size() > kMaxExactW1Size)
    throw InputError("exact_wasserstein1: size " + std::to_string(a.size()) +
                     " exceeds the exact-solver limit of 512");
  if (a.dim() != b.dim()) throw InputError("exact_wasserstein1: dimension mismatch");
  const auto cost = pairwise_distances(a.metric_rows(), b.with_metric(a.metric()).metric_rows());
  const auto match = solve_assignment(cost);
  Scalar total = 0;
  for (Eigen::Index i = 0; i < cost.rows(); ++i) total += cost(i, match[i]);
  return total / static_cast<Scalar>(cost.rows());
}

}  // namespace pte
