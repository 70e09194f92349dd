#include "pte/metrics.hpp"

#include <algorithm>
#include <numeric>
#include <sstream>

#include "pte/run_store.hpp"

namespace pte {

namespace fs = std::filesystem;

RowMatrix<double> subsample_rows(const RowMatrix<double>& rows, Eigen::Index count, Rng& rng) {
  if (count >= rows.rows()) return rows;
  std::vector<Eigen::Index> idx(static_cast<std::size_t>(rows.rows()));
  std::iota(idx.begin(), idx.end(), 0);
  std::vector<Eigen::Index> pick;
  std::sample(idx.begin(), idx.end(), std::back_inserter(pick), count, rng);
  RowMatrix<double> out(count, rows.cols());
  for (Eigen::Index i = 0; i < count; ++i) out.row(i) = rows.row(pick[static_cast<std::size_t>(i)]);
  return out;
}

double subsampled_wasserstein1(const EmbeddingSet& a, const EmbeddingSet& b, std::uint64_t seed,
                               std::uint64_t tag) {
  const Eigen::Index n = std::min({a.size(), b.size(), kMaxExactW1Size});
  Rng ra = Rng::derive(seed, Stream::subsample, {tag, 0});
  Rng rb = Rng::derive(seed, Stream::subsample, {tag, 1});
  return exact_wasserstein1(EmbeddingSet(subsample_rows(a.rows(), n, ra), a.metric()),
                            EmbeddingSet(subsample_rows(b.rows(), n, rb), a.metric()));
}

double mean_nearest_distance(const EmbeddingSet& points, const EmbeddingSet& reference) {
  const auto p = points.metric_rows();
  const auto r = reference.with_metric(points.metric()).metric_rows();
  double total = 0.0;
  for (Eigen::Index i = 0; i < p.rows(); ++i)
    total += std::sqrt((r.rowwise() - p.row(i)).rowwise().squaredNorm().minCoeff());
  return total / static_cast<double>(p.rows());
}

DistanceReport compare(const EmbeddingSet& private_set, const EmbeddingSet& synthetic,
                       bool with_w1, std::uint64_t seed) {
  DistanceReport r;
  r.sample_counts = {static_cast<long>(private_set.size()), static_cast<long>(synthetic.size())};
  r.fid_core = frechet_distance(gaussian_stats(private_set), gaussian_stats(synthetic));
  if (with_w1) r.wasserstein1 = subsampled_wasserstein1(synthetic, private_set, seed, 0);
  return r;
}

namespace {

GenerationMetrics metrics_for(int g, const RowMatrix<double>& voted,
                              const RowMatrix<double>& variants, const EmbeddingSet& priv,
                              std::uint64_t seed) {
  GenerationMetrics m;
  m.generation = g;
  const EmbeddingSet v(voted, priv.metric());
  m.fid_core = frechet_distance(gaussian_stats(v), gaussian_stats(priv));
  m.w1_voted = subsampled_wasserstein1(v, priv, seed, static_cast<std::uint64_t>(2 * g));
  m.nn_voted = mean_nearest_distance(v, priv);
  if (variants.rows() > 0) {
    const EmbeddingSet var(variants, priv.metric());
    m.w1_variants = subsampled_wasserstein1(var, priv, seed, static_cast<std::uint64_t>(2 * g + 1));
    m.nn_variants = mean_nearest_distance(var, priv);
  }
  return m;
}

}  // namespace

std::vector<GenerationMetrics> generation_metrics(const std::vector<GenerationRecord>& trace,
                                                  const EmbeddingSet& private_set,
                                                  std::uint64_t seed) {
  std::vector<GenerationMetrics> out;
  for (const auto& rec : trace)
    out.push_back(
        metrics_for(rec.generation, rec.voted_embeddings, rec.variant_embeddings, private_set, seed));
  return out;
}

std::vector<GenerationMetrics> generation_metrics(const fs::path& run_dir,
                                                  const EmbeddingSet& private_set,
                                                  std::uint64_t seed) {
  std::vector<GenerationMetrics> out;
  for (int g = 0;; ++g) {
    const fs::path dir = generation_dir(run_dir, g);
    if (!fs::exists(dir / "voted_embeddings.bin")) break;
    const auto voted = read_ptev1(dir / "voted_embeddings.bin");
    const RowMatrix<double> variants = fs::exists(dir / "variant_embeddings.bin")
                                           ? read_ptev1(dir / "variant_embeddings.bin")
                                           : RowMatrix<double>();
    out.push_back(metrics_for(g, voted, variants, private_set, seed));
  }
  return out;
}

std::string metrics_csv(const std::vector<GenerationMetrics>& rows) {
  std::ostringstream os;
  os.precision(10);
  os << "generation,fid_core,w1_voted,w1_variants\n";
  for (const auto& r : rows) {
    os << r.generation << ',' << r.fid_core << ',' << r.w1_voted << ',';
    if (r.w1_variants) os << *r.w1_variants;
    os << '\n';
  }
  return os.str();
}

}  // namespace pte
