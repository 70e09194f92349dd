#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <variant>

#include "json.hpp"
#include "pte/dp_accounting.hpp"
#include "pte/embedding.hpp"
#include "pte/http_backend.hpp"
#include "pte/mock_world.hpp"

namespace pte {

enum class VotingSpace { image, text };

std::string_view to_string(VotingSpace v);

/// Private data source: a file/directory path, or a number of samples to
/// draw from the mock world's private mixture.
struct MockSamples {
  std::size_t count = 0;
  bool operator==(const MockSamples&) const = default;
};
using PrivateDataSpec = std::variant<std::string, MockSamples>;

struct BackendConfig {
  enum class Kind { mock, http };
  Kind kind = Kind::mock;
  PrivateDataSpec private_data = MockSamples{};
  MockWorldConfig mock;
  http::HttpBackendConfig http;
};

struct RunConfig {
  int population = 0;  // num_samples_schedule, constant
  int iterations = 0;
  int lookahead_degree = 0;
  int selection_multiplicity = 1;
  int initial_variation_api_fold = 0;
  int next_variation_api_fold = 1;
  /// Empty means a noise-free diagnostic run (sigma = 0, no privacy).
  std::optional<PrivacyBudget> budget;
  Metric metric = Metric::euclidean;
  VotingSpace voting_space = VotingSpace::image;
  bool normalize_lookahead = false;
  std::uint64_t seed = 0;
  BackendConfig backend;

  /// Throws ConfigError listing every violated constraint at once.
  void validate() const;
};

/// Parses and validates a config document. Unknown keys are errors; every
/// problem found is reported in one ConfigError. Relative paths resolve
/// against `base_dir`. `seed_override` replaces (or supplies) the seed.
RunConfig parse_run_config(const nlohmann::json& doc, const std::filesystem::path& base_dir = {},
                           std::optional<std::uint64_t> seed_override = std::nullopt);

RunConfig load_run_config(const std::filesystem::path& path,
                          std::optional<std::uint64_t> seed_override = std::nullopt);

nlohmann::json to_json(const RunConfig& cfg);

}  // namespace pte
