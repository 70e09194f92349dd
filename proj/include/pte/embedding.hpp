#pragma once

#include <Eigen/Dense>
#include <cmath>
#include <filesystem>
#include <string>
#include <string_view>

#include "pte/error.hpp"

namespace pte {

enum class Metric { euclidean, cosine };

inline std::string_view to_string(Metric m) {
  return m == Metric::cosine ? "cosine" : "euclidean";
}

inline Metric parse_metric(std::string_view s) {
  if (s == "euclidean") return Metric::euclidean;
  if (s == "cosine") return Metric::cosine;
  throw InputError("unknown metric '" + std::string(s) + "' (expected euclidean or cosine)");
}

template <typename Scalar>
using RowMatrix = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

/// Rows scaled to unit L2 norm. Zero rows stay zero.
template <typename Derived>
RowMatrix<typename Derived::Scalar> l2_normalized_rows(const Eigen::MatrixBase<Derived>& m) {
  RowMatrix<typename Derived::Scalar> out = m;
  for (Eigen::Index i = 0; i < out.rows(); ++i) {
    const auto n = out.row(i).norm();
    if (n > 0) out.row(i) /= n;
  }
  return out;
}

/// An ordered set of fixed-dimension embeddings with the metric used to
/// compare them. Cosine distance is realized as Euclidean distance between
/// L2-normalized rows.
template <typename Scalar>
class BasicEmbeddingSet {
 public:
  using Matrix = RowMatrix<Scalar>;

  BasicEmbeddingSet() = default;

  explicit BasicEmbeddingSet(Matrix rows, Metric metric = Metric::euclidean)
      : rows_(std::move(rows)), metric_(metric) {
    if (rows_.rows() == 0 || rows_.cols() == 0)
      throw InputError("embedding set must be non-empty");
    if (!rows_.allFinite()) throw InputError("embedding set contains a non-finite value");
  }

  Eigen::Index size() const { return rows_.rows(); }
  Eigen::Index dim() const { return rows_.cols(); }
  bool empty() const { return rows_.rows() == 0; }
  Metric metric() const { return metric_; }
  const Matrix& rows() const { return rows_; }
  auto row(Eigen::Index i) const { return rows_.row(i); }

  /// Rows in the space where plain Euclidean distance realizes metric().
  Matrix metric_rows() const {
    return metric_ == Metric::cosine ? l2_normalized_rows(rows_) : rows_;
  }

  BasicEmbeddingSet with_metric(Metric m) const {
    BasicEmbeddingSet out = *this;
    out.metric_ = m;
    return out;
  }

 private:
  Matrix rows_;
  Metric metric_ = Metric::euclidean;
};

using EmbeddingSet = BasicEmbeddingSet<double>;

// PTEV1 binary dump: magic "PTEV1", u32 rows, u32 dim, rows*dim float32,
// all little-endian.
std::string encode_ptev1(const RowMatrix<double>& rows);
RowMatrix<double> decode_ptev1(std::string_view bytes);
void write_ptev1(const std::filesystem::path& path, const RowMatrix<double>& rows);
RowMatrix<double> read_ptev1(const std::filesystem::path& path);

}  // namespace pte
