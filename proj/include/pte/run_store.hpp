#pragma once

#include <filesystem>
#include <string>

#include "json.hpp"
#include "pte/evolution.hpp"

namespace pte {

inline constexpr const char* kEngineVersion = "0.1.0";

nlohmann::json to_json(const Candidate& c);
Candidate candidate_from_json(const nlohmann::json& j);

/// {generation, sigma, counts_raw, counts_noisy, probs}
nlohmann::json histogram_json(const GenerationRecord& rec);

/// Persists a run:
///   manifest.json                      config snapshot, sigma, seed, version
///   private/captions.jsonl             captions of the private images
///   gen_<g>/candidates.jsonl           pool C_g, one candidate per line
///   gen_<g>/histogram.json             raw and noisy votes, probabilities
///   gen_<g>/embeddings.bin             rows voted on (PTEV1)
///   gen_<g>/selection.json             voted records, variant ids, both snapshots
///   gen_<g>/voted_embeddings.bin       rendered voted set (PTEV1)
///   gen_<g>/variant_embeddings.bin     rendered variants (PTEV1)
///   final/candidates.jsonl, final/images.bin or final/images/*.png
///   aborted.json                       only when a backend failure stopped the run
/// Refuses a directory that already contains a manifest.
class RunDirectoryWriter final : public RunObserver {
 public:
  explicit RunDirectoryWriter(std::filesystem::path run_dir);

  void on_start(const RunConfig& config, const NoiseSchedule& noise) override;
  void on_private_captions(std::span<const std::string> captions) override;
  void on_generation(const GenerationRecord& rec) override;
  void on_final(const CandidatePool& pool, std::span<const Image> images) override;
  void on_abort(int generation, const std::exception& error) override;

  const std::filesystem::path& dir() const { return dir_; }

 private:
  std::filesystem::path dir_;
};

std::filesystem::path generation_dir(const std::filesystem::path& run_dir, int g);

}  // namespace pte
