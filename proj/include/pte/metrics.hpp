#pragma once

#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "pte/embedding.hpp"
#include "pte/evaluation.hpp"
#include "pte/evolution.hpp"

namespace pte {

/// Per-generation alignment of the voted set and the fresh variants with the
/// private embeddings. Offline diagnostics: these read private data directly
/// and are never part of a private run.
struct GenerationMetrics {
  int generation = 0;
  double fid_core = 0.0;     // voted vs private
  double w1_voted = 0.0;
  std::optional<double> w1_variants;
  double nn_voted = 0.0;     // mean distance to nearest private point
  std::optional<double> nn_variants;
};

/// Seeded subsample of `count` rows without replacement (order preserved).
RowMatrix<double> subsample_rows(const RowMatrix<double>& rows, Eigen::Index count, Rng& rng);

/// W1 after subsampling both sides to min(|a|, |b|, 512) rows.
double subsampled_wasserstein1(const EmbeddingSet& a, const EmbeddingSet& b, std::uint64_t seed,
                               std::uint64_t tag);

/// Mean over rows of `points` of the distance to the nearest row of `reference`.
double mean_nearest_distance(const EmbeddingSet& points, const EmbeddingSet& reference);

DistanceReport compare(const EmbeddingSet& private_set, const EmbeddingSet& synthetic,
                       bool with_w1, std::uint64_t seed);

std::vector<GenerationMetrics> generation_metrics(const std::vector<GenerationRecord>& trace,
                                                  const EmbeddingSet& private_set,
                                                  std::uint64_t seed);

/// Same, reading gen_<g>/voted_embeddings.bin and variant_embeddings.bin.
std::vector<GenerationMetrics> generation_metrics(const std::filesystem::path& run_dir,
                                                  const EmbeddingSet& private_set,
                                                  std::uint64_t seed);

/// "generation,fid_core,w1_voted,w1_variants" plus one row per generation.
std::string metrics_csv(const std::vector<GenerationMetrics>& rows);

}  // namespace pte
