#include "pte/cli.hpp"

#include <spdlog/sinks/stdout_color_sinks.h>
#include <spdlog/spdlog.h>

#include <fstream>
#include <iomanip>
#include <sstream>

#include "CLI11.hpp"
#include "pte/dp_accounting.hpp"
#include "pte/error.hpp"
#include "pte/evolution.hpp"
#include "pte/metrics.hpp"
#include "pte/mock_world.hpp"
#include "pte/run_store.hpp"

namespace pte {

namespace fs = std::filesystem;
using nlohmann::json;

BackendSuite make_backends(const RunConfig& config) {
  if (config.backend.kind == BackendConfig::Kind::mock)
    return MockWorld::suite(std::make_shared<MockWorld>(config.backend.mock));
  return http::make_http_suite(config.backend.http);
}

std::shared_ptr<PrivateDataset> open_private_data(const RunConfig& config) {
  const auto& spec = config.backend.private_data;
  if (const auto* samples = std::get_if<MockSamples>(&spec)) {
    MockWorld world(config.backend.mock);
    Rng rng = Rng::derive(config.seed, Stream::mock_private);
    const auto draw = world.sample_private(samples->count, rng);
    return std::make_shared<InMemoryPrivateDataset>(world.render_latents(draw.latents));
  }
  const fs::path path = std::get<std::string>(spec);
  if (fs::is_directory(path)) return load_image_directory(path);
  return load_ptev1_dataset(path);
}

namespace {

void setup_logging(const std::string& level) {
  auto logger = spdlog::get("pte");
  if (!logger) logger = spdlog::stderr_color_mt("pte");
  spdlog::set_default_logger(logger);
  spdlog::set_level(spdlog::level::from_str(level));
}

std::string format_sigma(double sigma) {
  std::ostringstream os;
  os << std::setprecision(12) << sigma;
  return os.str();
}

int cmd_calibrate(double epsilon, double delta, int iterations, std::ostream& out) {
  const auto schedule = calibrate_sigma({epsilon, delta}, iterations);
  out << format_sigma(schedule.sigma) << '\n';
  return kExitOk;
}

int cmd_run(const std::string& config_path, const std::string& run_dir,
            std::optional<std::uint64_t> seed, std::ostream& out) {
  const RunConfig config = load_run_config(config_path, seed);
  const BackendSuite backends = make_backends(config);
  const auto data = open_private_data(config);
  RunDirectoryWriter writer(run_dir);
  const auto result = run_spti(*data, config, backends, &writer);
  out << json{{"run_dir", run_dir},
              {"sigma", result.evolution.noise.sigma},
              {"generations", result.evolution.trace.size()},
              {"final_texts", result.evolution.final_pool.size()}}
             .dump()
      << '\n';
  return kExitOk;
}

int cmd_evaluate(const std::string& private_path, const std::string& synthetic_path,
                 const std::string& run_dir, const std::string& csv_path, bool with_w1,
                 const std::string& metric, std::uint64_t seed, std::ostream& out) {
  const EmbeddingSet priv(read_ptev1(private_path), parse_metric(metric));
  if (!synthetic_path.empty()) {
    const EmbeddingSet synth(read_ptev1(synthetic_path), parse_metric(metric));
    const auto r = compare(priv, synth, with_w1, seed);
    json j = {{"fid_core", r.fid_core},
              {"wasserstein1", r.wasserstein1 ? json(*r.wasserstein1) : json(nullptr)},
              {"sample_counts", {r.sample_counts.first, r.sample_counts.second}}};
    out << j.dump() << '\n';
  }
  if (!run_dir.empty()) {
    const auto csv = metrics_csv(generation_metrics(run_dir, priv, seed));
    if (csv_path.empty() || csv_path == "-") {
      out << csv;
    } else {
      std::ofstream f(csv_path);
      if (!f) throw InputError("cannot write " + csv_path);
      f << csv;
    }
  }
  return kExitOk;
}

int cmd_mockgen(const std::string& config_path, std::size_t samples, const std::string& out_path,
                std::string captions_path, std::optional<std::uint64_t> seed, std::ostream& out) {
  const RunConfig config = load_run_config(config_path, seed);
  if (config.backend.kind != BackendConfig::Kind::mock)
    throw ConfigError("mockgen needs a config with backend.type \"mock\"");
  MockWorld world(config.backend.mock);
  Rng rng = Rng::derive(config.seed, Stream::mock_private);
  const auto draw = world.sample_private(samples, rng);
  const auto images = world.render_latents(draw.latents);
  write_ptev1(out_path, world.encode(images));
  if (captions_path.empty()) captions_path = out_path + ".captions.txt";
  std::ofstream f(captions_path, std::ios::trunc);
  if (!f) throw InputError("cannot write " + captions_path);
  for (const auto& c : world.caption(images)) f << c << '\n';
  out << json{{"embeddings", out_path}, {"captions", captions_path}, {"rows", samples}}.dump()
      << '\n';
  return kExitOk;
}

}  // namespace

int run_cli(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
  CLI::App app{"Private textual evolution engine"};
  app.require_subcommand(1);
  app.fallthrough();

  std::string run_dir;
  std::optional<std::uint64_t> seed;
  std::string log_level = "info";
  app.add_option("--run-dir", run_dir, "Run directory");
  app.add_option("--seed", seed, "Override the run seed");
  app.add_option("--log-level", log_level, "trace, debug, info, warn, error, off")
      ->check(CLI::IsMember({"trace", "debug", "info", "warn", "error", "critical", "off"}));

  double epsilon = 0.0;
  double delta = 1e-5;
  int iterations = 0;
  auto* calibrate = app.add_subcommand("calibrate", "Noise multiplier for an (epsilon, delta) budget");
  calibrate->add_option("--epsilon", epsilon, "Privacy loss epsilon")->required();
  calibrate->add_option("--delta", delta, "Failure probability delta (default 1e-5)");
  calibrate->add_option("--iterations", iterations, "Number of noisy releases G")->required();

  std::string config_path;
  auto* run = app.add_subcommand("run", "Run the full pipeline from a config file");
  run->add_option("config", config_path, "Run configuration (JSON)")->required();

  std::string private_path, synthetic_path, csv_path, metric = "euclidean";
  bool with_w1 = false;
  auto* evaluate = app.add_subcommand("evaluate", "Compare synthetic and private embeddings");
  evaluate->add_option("--private", private_path, "Private embeddings (PTEV1)")->required();
  auto* synth_opt = evaluate->add_option("--synthetic", synthetic_path, "Synthetic embeddings (PTEV1)");
  evaluate->add_flag("--w1", with_w1, "Also compute exact Wasserstein-1");
  auto* csv_opt = evaluate->add_option("--csv", csv_path, "Per-generation CSV output (with --run-dir)");
  evaluate->add_option("--metric", metric, "euclidean or cosine")
      ->check(CLI::IsMember({"euclidean", "cosine"}));

  std::string mock_config, mock_out, mock_captions;
  std::size_t samples = 0;
  auto* mockgen = app.add_subcommand("mockgen", "Sample a mock private dataset");
  mockgen->add_option("--config", mock_config, "Config with a mock backend section")->required();
  mockgen->add_option("--samples", samples, "Number of rows")->required()->check(CLI::PositiveNumber);
  mockgen->add_option("--out", mock_out, "Output PTEV1 file")->required();
  mockgen->add_option("--captions", mock_captions, "Caption text output (default <out>.captions.txt)");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    out << app.help();
    return kExitOk;
  } catch (const CLI::CallForAllHelp& e) {
    out << app.help("", CLI::AppFormatMode::All);
    return kExitOk;
  } catch (const CLI::ParseError& e) {
    err << "usage error: " << e.what() << '\n';
    return kExitUsage;
  }

  try {
    setup_logging(log_level);
    if (*calibrate) return cmd_calibrate(epsilon, delta, iterations, out);
    if (*run) return cmd_run(config_path, run_dir.empty() ? "run" : run_dir, seed, out);
    if (*evaluate) {
      if (synth_opt->count() == 0 && run_dir.empty()) {
        err << "usage error: evaluate needs --synthetic or --run-dir\n";
        return kExitUsage;
      }
      if (csv_opt->count() > 0 && run_dir.empty()) {
        err << "usage error: --csv needs --run-dir\n";
        return kExitUsage;
      }
      return cmd_evaluate(private_path, synthetic_path, run_dir, csv_path, with_w1, metric,
                          seed.value_or(0), out);
    }
    if (*mockgen) return cmd_mockgen(mock_config, samples, mock_out, mock_captions, seed, out);
  } catch (const ConfigError& e) {
    err << "config error: " << e.what() << '\n';
    return kExitUsage;
  } catch (const DomainError& e) {
    err << "usage error: " << e.what() << '\n';
    return kExitUsage;
  } catch (const InputError& e) {
    err << "input error: " << e.what() << '\n';
    return kExitUsage;
  } catch (const BackendError& e) {
    err << "backend failure: " << e.what() << '\n';
    return kExitBackend;
  } catch (const ParseError& e) {
    err << "backend failure: " << e.what() << '\n';
    return kExitBackend;
  } catch (const std::exception& e) {
    err << "internal error: " << e.what() << '\n';
    return kExitInternal;
  }
  return kExitUsage;
}

}  // namespace pte
