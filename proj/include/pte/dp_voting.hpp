#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <memory>
#include <mutex>
#include <span>
#include <string>
#include <vector>

#include "pte/embedding.hpp"
#include "pte/error.hpp"
#include "pte/rng.hpp"

namespace pte {

/// Votes per candidate. Before noising the counts are non-negative integers
/// summing to total_private; after noising they are arbitrary reals.
struct VoteHistogram {
  Eigen::VectorXd counts;
  std::int64_t total_private = 0;
};

/// Probability of selecting each candidate. Non-negative, sums to one.
struct SelectionDistribution {
  Eigen::VectorXd probs;
};

/// Reverse nearest-neighbour vote: every private row votes for its closest
/// candidate row, ties going to the lowest candidate index.
template <typename Scalar>
VoteHistogram nn_histogram(const BasicEmbeddingSet<Scalar>& private_set,
                           const BasicEmbeddingSet<Scalar>& candidates) {
  if (candidates.empty()) throw InputError("nn_histogram: no candidates");
  if (private_set.empty()) throw InputError("nn_histogram: no private embeddings");
  if (private_set.dim() != candidates.dim())
    throw InputError("nn_histogram: dimension mismatch (" + std::to_string(private_set.dim()) +
                     " vs " + std::to_string(candidates.dim()) + ")");
  if (private_set.metric() != candidates.metric())
    throw InputError("nn_histogram: private and candidate sets use different metrics");
  if (!private_set.rows().allFinite() || !candidates.rows().allFinite())
    throw InputError("nn_histogram: non-finite embedding");

  const auto p = private_set.metric_rows();
  const auto c = candidates.metric_rows();

  VoteHistogram h;
  h.counts = Eigen::VectorXd::Zero(c.rows());
  h.total_private = p.rows();
  for (Eigen::Index i = 0; i < p.rows(); ++i) {
    Eigen::Index best = 0;
    Scalar best_d = (c.row(0) - p.row(i)).squaredNorm();
    for (Eigen::Index j = 1; j < c.rows(); ++j) {
      const Scalar d = (c.row(j) - p.row(i)).squaredNorm();
      if (d < best_d) {
        best_d = d;
        best = j;
      }
    }
    h.counts[best] += 1.0;
  }
  return h;
}

/// Records which stage consumed private embeddings. Thread-safe.
class PrivateAccessLog {
 public:
  void record(std::string consumer) {
    std::lock_guard lock(mu_);
    entries_.push_back(std::move(consumer));
  }
  std::vector<std::string> entries() const {
    std::lock_guard lock(mu_);
    return entries_;
  }

 private:
  mutable std::mutex mu_;
  std::vector<std::string> entries_;
};

class PrivateEmbeddings;
VoteHistogram nn_histogram(const PrivateEmbeddings& private_set, const EmbeddingSet& candidates);

/// Sealed holder for private-side embeddings. The rows are reachable only
/// through the vote above; every vote is logged when a log is attached.
class PrivateEmbeddings {
 public:
  explicit PrivateEmbeddings(EmbeddingSet rows, std::shared_ptr<PrivateAccessLog> log = nullptr)
      : rows_(std::move(rows)), log_(std::move(log)) {}

  Eigen::Index size() const { return rows_.size(); }
  Eigen::Index dim() const { return rows_.dim(); }

 private:
  friend VoteHistogram nn_histogram(const PrivateEmbeddings&, const EmbeddingSet&);

  EmbeddingSet rows_;
  std::shared_ptr<PrivateAccessLog> log_;
};

inline VoteHistogram nn_histogram(const PrivateEmbeddings& private_set,
                                  const EmbeddingSet& candidates) {
  if (private_set.log_) private_set.log_->record("nn_histogram");
  return nn_histogram(private_set.rows_.with_metric(candidates.metric()), candidates);
}

/// Adds independent N(0, sigma^2) noise to every coordinate, drawn in index
/// order from `rng`. sigma == 0 returns the input unchanged.
inline VoteHistogram privatize(const VoteHistogram& hist, double sigma, Rng& rng) {
  if (!(sigma >= 0.0) || !std::isfinite(sigma))
    throw DomainError("privatize: sigma must be finite and >= 0");
  VoteHistogram out = hist;
  if (sigma == 0.0) return out;
  for (Eigen::Index i = 0; i < out.counts.size(); ++i) out.counts[i] += rng.normal(0.0, sigma);
  return out;
}

/// Clips negative mass to zero and normalizes. If nothing positive remains
/// the result is uniform.
inline SelectionDistribution normalize(const VoteHistogram& hist) {
  const Eigen::Index n = hist.counts.size();
  if (n == 0) throw InputError("normalize: empty histogram");
  SelectionDistribution d;
  d.probs = hist.counts.cwiseMax(0.0);
  // NaN counts fall through cwiseMax unchanged; treat them as no mass.
  for (Eigen::Index i = 0; i < n; ++i)
    if (!std::isfinite(d.probs[i])) d.probs[i] = 0.0;
  const double total = d.probs.sum();
  if (!(total > 0.0)) {
    d.probs.setConstant(1.0 / static_cast<double>(n));
  } else {
    d.probs /= total;
  }
  return d;
}

/// Row-wise mean of K equally shaped embedding sets, optionally followed by
/// L2 normalization of every averaged row.
template <typename Scalar>
BasicEmbeddingSet<Scalar> lookahead_average(std::span<const BasicEmbeddingSet<Scalar>> sets,
                                            bool normalize_rows = false) {
  if (sets.empty()) throw InputError("lookahead_average: need at least one set");
  const auto rows = sets.front().size();
  const auto dim = sets.front().dim();
  RowMatrix<Scalar> sum = RowMatrix<Scalar>::Zero(rows, dim);
  for (const auto& s : sets) {
    if (s.size() != rows || s.dim() != dim)
      throw InputError("lookahead_average: shape mismatch");
    sum += s.rows();
  }
  sum /= static_cast<Scalar>(sets.size());
  if (normalize_rows) sum = l2_normalized_rows(sum);
  return BasicEmbeddingSet<Scalar>(std::move(sum), sets.front().metric());
}

}  // namespace pte
