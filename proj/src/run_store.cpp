#include "pte/run_store.hpp"

#include <chrono>
#include <ctime>
#include <fstream>

#include "base64.hpp"
#include "pte/error.hpp"

namespace pte {

using nlohmann::json;
namespace fs = std::filesystem;

namespace {

void write_text(const fs::path& path, const std::string& text) {
  std::ofstream f(path, std::ios::binary | std::ios::trunc);
  if (!f) throw InputError("cannot write " + path.string());
  f << text;
}

void write_jsonl(const fs::path& path, const std::vector<Candidate>& cs) {
  std::string out;
  for (const auto& c : cs) out += to_json(c).dump() + '\n';
  write_text(path, out);
}

std::string utc_now() {
  const std::time_t t = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
  std::tm tm{};
  gmtime_r(&t, &tm);
  char buf[32];
  std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buf;
}

std::vector<double> to_vec(const Eigen::VectorXd& v) { return {v.data(), v.data() + v.size()}; }

std::vector<std::int64_t> ids_of(const std::vector<Candidate>& cs) {
  std::vector<std::int64_t> out;
  for (const auto& c : cs) out.push_back(c.id);
  return out;
}

}  // namespace

json to_json(const Candidate& c) {
  return {{"id", c.id},
          {"text", c.text},
          {"generation", c.generation},
          {"parent_id", c.parent_id ? json(*c.parent_id) : json(nullptr)},
          {"origin", std::string(to_string(c.origin))}};
}

Candidate candidate_from_json(const json& j) {
  Candidate c;
  c.id = j.at("id").get<std::int64_t>();
  c.text = j.at("text").get<std::string>();
  c.generation = j.at("generation").get<int>();
  if (!j.at("parent_id").is_null()) c.parent_id = j.at("parent_id").get<std::int64_t>();
  c.origin = parse_origin(j.at("origin").get<std::string>());
  return c;
}

json histogram_json(const GenerationRecord& rec) {
  return {{"generation", rec.generation},
          {"sigma", rec.sigma},
          {"counts_raw", to_vec(rec.raw.counts)},
          {"counts_noisy", to_vec(rec.noisy.counts)},
          {"probs", to_vec(rec.probs.probs)}};
}

fs::path generation_dir(const fs::path& run_dir, int g) {
  return run_dir / ("gen_" + std::to_string(g));
}

RunDirectoryWriter::RunDirectoryWriter(fs::path run_dir) : dir_(std::move(run_dir)) {
  if (fs::exists(dir_ / "manifest.json"))
    throw ConfigError("run directory " + dir_.string() + " already holds a run; pick a new --run-dir");
  fs::create_directories(dir_);
}

void RunDirectoryWriter::on_start(const RunConfig& config, const NoiseSchedule& noise) {
  const json manifest = {{"engine_version", kEngineVersion},
                         {"seed", config.seed},
                         {"calibrated_sigma", noise.sigma},
                         {"noise_iterations", noise.iterations},
                         {"noise_free", !config.budget.has_value()},
                         {"config", to_json(config)},
                         {"timestamps", {{"created", utc_now()}}}};
  write_text(dir_ / "manifest.json", manifest.dump(2) + '\n');
}

void RunDirectoryWriter::on_private_captions(std::span<const std::string> captions) {
  fs::create_directories(dir_ / "private");
  std::string out;
  for (const auto& c : captions) out += json(c).dump() + '\n';
  write_text(dir_ / "private" / "captions.jsonl", out);
}

void RunDirectoryWriter::on_generation(const GenerationRecord& rec) {
  const fs::path g = generation_dir(dir_, rec.generation);
  fs::create_directories(g);
  write_jsonl(g / "candidates.jsonl", rec.pool.candidates);
  write_text(g / "histogram.json", histogram_json(rec).dump() + '\n');
  write_ptev1(g / "embeddings.bin", rec.embeddings);
  json sel = {{"generation", rec.generation},
              {"voted", json::array()},
              {"variant_ids", ids_of(rec.variants)},
              {"snapshot_voted_ids", ids_of(rec.voted)},
              {"snapshot_pool_ids", rec.next_pool_ids}};
  for (const auto& c : rec.voted) sel["voted"].push_back(to_json(c));
  write_text(g / "selection.json", sel.dump() + '\n');
  write_jsonl(g / "variants.jsonl", rec.variants);
  if (rec.voted_embeddings.rows() > 0) write_ptev1(g / "voted_embeddings.bin", rec.voted_embeddings);
  if (rec.variant_embeddings.rows() > 0)
    write_ptev1(g / "variant_embeddings.bin", rec.variant_embeddings);
}

void RunDirectoryWriter::on_final(const CandidatePool& pool, std::span<const Image> images) {
  const fs::path f = dir_ / "final";
  fs::create_directories(f);
  write_jsonl(f / "candidates.jsonl", pool.candidates);
  if (images.empty()) return;
  if (images.front().pixels.size() > 0) {
    RowMatrix<double> rows(static_cast<Eigen::Index>(images.size()), images.front().pixels.size());
    for (std::size_t i = 0; i < images.size(); ++i)
      rows.row(static_cast<Eigen::Index>(i)) = images[i].pixels.transpose();
    write_ptev1(f / "images.bin", rows);
  } else {
    fs::create_directories(f / "images");
    for (std::size_t i = 0; i < images.size(); ++i) {
      char name[32];
      std::snprintf(name, sizeof name, "%05zu.png", i);
      write_text(f / "images" / name, detail::base64_decode(images[i].encoded));
    }
  }
}

void RunDirectoryWriter::on_abort(int generation, const std::exception& error) {
  write_text(dir_ / "aborted.json",
             json{{"generation", generation}, {"error", error.what()}}.dump(2) + '\n');
}

}  // namespace pte
