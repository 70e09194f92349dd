#pragma once

#include <cstdint>
#include <exception>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "pte/config.hpp"
#include "pte/dp_accounting.hpp"
#include "pte/dp_voting.hpp"
#include "pte/model_api.hpp"

namespace pte {

enum class Origin { random_init, voted, variant };

std::string_view to_string(Origin o);
Origin parse_origin(std::string_view s);

/// One caption with its lineage. A voted record is a fresh entry pointing
/// at the candidate it was selected from, so every ancestry chain ends at a
/// random_init candidate.
struct Candidate {
  std::int64_t id = 0;
  std::string text;
  int generation = 0;
  std::optional<std::int64_t> parent_id;
  Origin origin = Origin::random_init;

  bool operator==(const Candidate&) const = default;
};

struct CandidatePool {
  std::vector<Candidate> candidates;
  int generation = 0;

  std::size_t size() const { return candidates.size(); }
  std::vector<std::string> texts() const;
};

/// Indices of the voted candidates. selection_multiplicity == 1 draws
/// `count` i.i.d. samples from `probs`; otherwise the `count` most probable
/// candidates are taken in rank order, ties going to the lower index.
std::vector<std::size_t> choose_voted(const SelectionDistribution& probs, std::size_t count,
                                      int selection_multiplicity, Rng& rng);

struct Selection {
  std::vector<Candidate> voted;     // C'_g
  std::vector<Candidate> variants;  // fresh variation output
  CandidatePool next;               // C_{g+1}
};

/// Hands out candidate ids in creation order.
class IdSource {
 public:
  std::int64_t next() { return next_++; }

 private:
  std::int64_t next_ = 0;
};

/// Selection and variation for one generation. With multiplicity 1 the next
/// pool is the variants of the voted draws; otherwise it is the voted set
/// followed by K-1 variation batches of it.
Selection select_next(const CandidatePool& pool, const SelectionDistribution& probs,
                      const RunConfig& config, VariationApi& variation, IdSource& ids,
                      Rng& selection_rng, std::uint64_t variation_seed);

struct GenerationRecord {
  int generation = 0;
  double sigma = 0.0;
  CandidatePool pool;
  RowMatrix<double> embeddings;  // rows that were voted on
  VoteHistogram raw;
  VoteHistogram noisy;
  SelectionDistribution probs;
  std::vector<Candidate> voted;
  std::vector<Candidate> variants;
  RowMatrix<double> voted_embeddings;
  RowMatrix<double> variant_embeddings;
  std::vector<std::int64_t> next_pool_ids;
};

struct RunResult {
  CandidatePool final_pool;
  std::vector<GenerationRecord> trace;
  NoiseSchedule noise;
  int privatize_calls = 0;
};

struct SptiResult {
  RunResult evolution;
  std::vector<std::string> private_captions;
  std::vector<Image> synthetic_images;
};

/// Receives progress during a run. Every callback fires on the run thread.
class RunObserver {
 public:
  virtual ~RunObserver() = default;
  virtual void on_start(const RunConfig&, const NoiseSchedule&) {}
  virtual void on_private_captions(std::span<const std::string>) {}
  virtual void on_generation(const GenerationRecord&) {}
  virtual void on_final(const CandidatePool&, std::span<const Image>) {}
  virtual void on_abort(int /*generation*/, const std::exception&) {}
};

/// Noise for a run: calibrated from the budget over `iterations` releases,
/// or zero when the config has no budget or no iterations.
NoiseSchedule resolve_noise(const RunConfig& config);

/// Aug-PE with embedding-space voting. Calibrates sigma before touching
/// private data, embeds the private side (images directly, or through the
/// captions when voting_space is text), then runs G generations.
RunResult run_aug_pe(const PrivateDataset& private_images,
                     std::span<const std::string> private_captions, const RunConfig& config,
                     const BackendSuite& backends, RunObserver* observer = nullptr,
                     std::shared_ptr<PrivateAccessLog> access_log = nullptr);

/// Caption the private images, evolve captions, render the final pool.
SptiResult run_spti(const PrivateDataset& private_images, const RunConfig& config,
                    const BackendSuite& backends, RunObserver* observer = nullptr,
                    std::shared_ptr<PrivateAccessLog> access_log = nullptr);

}  // namespace pte
