#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <filesystem>
#include <fstream>
#include <iomanip>
#include <sstream>

#include "pte/cli.hpp"
#include "pte/dp_accounting.hpp"
#include "pte/embedding.hpp"

using namespace pte;
namespace fs = std::filesystem;
using nlohmann::json;

namespace {

const fs::path kSource = PTE_SOURCE_DIR;

struct Result {
  int code;
  std::string out, err;
};

Result cli(std::vector<std::string> args) {
  args.insert(args.begin(), "pte");
  args.insert(args.begin() + 1, {"--log-level", "warn"});
  std::vector<const char*> argv;
  for (const auto& a : args) argv.push_back(a.c_str());
  std::ostringstream out, err;
  const int code = run_cli(static_cast<int>(argv.size()), argv.data(), out, err);
  return {code, out.str(), err.str()};
}

std::string slurp(const fs::path& p) {
  std::ifstream f(p, std::ios::binary);
  std::ostringstream ss;
  ss << f.rdbuf();
  return ss.str();
}

fs::path scratch(const std::string& name) {
  const auto p = fs::temp_directory_path() / ("pte_cli_" + name);
  fs::remove_all(p);
  return p;
}

/// A small mock config written next to the scratch files.
fs::path tiny_config(const fs::path& dir, const std::string& budget = R"({"epsilon": 1})") {
  fs::create_directories(dir);
  const auto path = dir / "config.json";
  std::ofstream(path) << R"({
    "num_samples_schedule": 12, "iterations": 2, "lookahead_degree": 2,
    "selection_multiplicity": 2, "budget": )" << budget << R"(, "seed": 5,
    "backend": {"type": "mock", "private_data": {"mock_samples": 40},
      "mock": {"latent_dim": 3, "variation_scale": 0.1,
        "private_mixture": [{"mean": [0.5, 0, 0], "std": 0.1, "weight": 0.5},
                            {"mean": [0, -0.5, 0], "std": 0.1, "weight": 0.5}]}}})";
  return path;
}

}  // namespace

TEST_CASE("calibrate prints the library value to 12 digits") {
  const auto r = cli({"calibrate", "--epsilon", "1", "--delta", "1e-5", "--iterations", "1"});
  CHECK(r.code == 0);
  std::ostringstream expect;
  expect << std::setprecision(12) << calibrate_sigma({1.0, 1e-5}, 1).sigma << '\n';
  CHECK(r.out == expect.str());
  CHECK(r.out == "3.73063163482\n");
  CHECK(cli({"calibrate", "--epsilon", "1", "--iterations", "1"}).out == r.out);
}

TEST_CASE("usage errors exit with 2") {
  CHECK(cli({"calibrate", "--epsilon", "1"}).code == 2);
  CHECK(cli({"calibrate", "--epsilon", "1", "--iterations", "0"}).code == 2);
  CHECK(cli({"calibrate", "--epsilon", "-1", "--iterations", "1"}).code == 2);
  CHECK(cli({"calibrate", "--epsilon", "1", "--delta", "1.5", "--iterations", "1"}).code == 2);
  CHECK(cli({}).code == 2);
  CHECK(cli({"frobnicate"}).code == 2);
  CHECK(cli({"evaluate", "--private", "x.bin"}).code == 2);
  CHECK(cli({"evaluate", "--private", "x.bin", "--synthetic", "y.bin", "--csv", "m.csv"}).code == 2);
  CHECK(cli({"run", "/nonexistent/config.json"}).code == 2);
  CHECK(cli({"--help"}).code == 0);
}

TEST_CASE("config errors exit with 2 and name the field") {
  const auto dir = scratch("bad_config");
  fs::create_directories(dir);
  std::ofstream(dir / "c.json") << R"({"num_samples_schedule": 5, "iterations": 1, "budget": {"delta": 1e-5},
    "seed": 1, "backend": {"type": "mock", "private_data": {"mock_samples": 3},
    "mock": {"latent_dim": 2, "variation_scale": 0.1}}})";
  const auto r = cli({"--run-dir", (dir / "run").string(), "run", (dir / "c.json").string()});
  CHECK(r.code == 2);
  CHECK(r.err.find("budget.epsilon") != std::string::npos);
  CHECK(r.err.find("private_mixture") != std::string::npos);
  CHECK(!fs::exists(dir / "run"));
}

TEST_CASE("run writes the documented layout deterministically") {
  const auto dir = scratch("determinism");
  const auto config = tiny_config(dir);
  const auto a = cli({"--run-dir", (dir / "a").string(), "run", config.string()});
  const auto b = cli({"--run-dir", (dir / "b").string(), "run", config.string()});
  REQUIRE(a.code == 0);
  REQUIRE(b.code == 0);
  CHECK(json::parse(a.out).at("generations") == 2);

  for (const char* f : {"manifest.json", "private/captions.jsonl", "final/candidates.jsonl",
                        "final/images.bin"})
    CHECK(fs::exists(dir / "a" / f));
  for (int g = 0; g < 2; ++g) {
    const std::string gen = "gen_" + std::to_string(g);
    for (const char* f : {"candidates.jsonl", "histogram.json", "embeddings.bin", "selection.json",
                          "variants.jsonl", "voted_embeddings.bin", "variant_embeddings.bin"}) {
      CAPTURE(gen + "/" + f);
      REQUIRE(fs::exists(dir / "a" / gen / f));
      CHECK(slurp(dir / "a" / gen / f) == slurp(dir / "b" / gen / f));
    }
  }
  auto ma = json::parse(slurp(dir / "a" / "manifest.json"));
  auto mb = json::parse(slurp(dir / "b" / "manifest.json"));
  CHECK(ma.at("calibrated_sigma") == calibrate_sigma({1.0, 1e-5}, 2).sigma);
  CHECK(ma.at("seed") == 5);
  ma.erase("timestamps");
  mb.erase("timestamps");
  CHECK(ma == mb);

  // a finished run directory is not overwritten
  CHECK(cli({"--run-dir", (dir / "a").string(), "run", config.string()}).code == 2);

  const auto c = cli({"--run-dir", (dir / "c").string(), "--seed", "6", "run", config.string()});
  REQUIRE(c.code == 0);
  CHECK(slurp(dir / "a" / "gen_1" / "candidates.jsonl") != slurp(dir / "c" / "gen_1" / "candidates.jsonl"));
}

TEST_CASE("mockgen writes the requested rows reproducibly") {
  const auto dir = scratch("mockgen");
  const auto config = tiny_config(dir);
  const auto r1 = cli({"mockgen", "--config", config.string(), "--samples", "1000", "--out",
                       (dir / "one.bin").string()});
  const auto r2 = cli({"mockgen", "--config", config.string(), "--samples", "1000", "--out",
                       (dir / "two.bin").string(), "--captions", (dir / "caps.txt").string()});
  REQUIRE(r1.code == 0);
  REQUIRE(r2.code == 0);
  const auto rows = read_ptev1(dir / "one.bin");
  CHECK(rows.rows() == 1000);
  CHECK(rows.cols() == 3);
  CHECK(slurp(dir / "one.bin") == slurp(dir / "two.bin"));
  const auto caps = slurp(dir / "caps.txt");
  CHECK(caps == slurp(dir / "one.bin.captions.txt"));
  CHECK(std::count(caps.begin(), caps.end(), '\n') == 1000);
}

TEST_CASE("evaluate on a file against itself and over a run") {
  const auto dir = scratch("evaluate");
  const auto config = tiny_config(dir);
  const auto priv = (dir / "priv.bin").string();
  REQUIRE(cli({"mockgen", "--config", config.string(), "--samples", "300", "--out", priv}).code == 0);
  const auto self = cli({"evaluate", "--private", priv, "--synthetic", priv, "--w1"});
  REQUIRE(self.code == 0);
  const auto j = json::parse(self.out);
  CHECK(j.at("fid_core").get<double>() < 1e-6);
  CHECK(j.at("wasserstein1").get<double>() == 0.0);

  REQUIRE(cli({"--run-dir", (dir / "run").string(), "run", config.string()}).code == 0);
  const auto csv = cli({"--run-dir", (dir / "run").string(), "evaluate", "--private", priv});
  REQUIRE(csv.code == 0);
  CHECK(csv.out.rfind("generation,fid_core,w1_voted,w1_variants", 0) == 0);
  CHECK(std::count(csv.out.begin(), csv.out.end(), '\n') == 3);

  CHECK(cli({"evaluate", "--private", (dir / "missing.bin").string(), "--synthetic", priv}).code == 2);
}
