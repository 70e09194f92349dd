#include "pte/config.hpp"

#include <fstream>
#include <set>
#include <sstream>

#include "pte/error.hpp"

namespace pte {

using nlohmann::json;

std::string_view to_string(VotingSpace v) { return v == VotingSpace::text ? "text" : "image"; }

namespace {

// Accumulates problems while walking a JSON object; throws once at the end.
class Reader {
 public:
  std::vector<std::string> problems;

  void reject_unknown(const json& obj, const std::string& where,
                      std::initializer_list<const char*> allowed) {
    std::set<std::string> ok(allowed.begin(), allowed.end());
    for (const auto& [k, _] : obj.items())
      if (!ok.count(k)) problems.push_back(path(where, k) + ": unknown key");
  }

  template <typename T>
  std::optional<T> get(const json& obj, const std::string& where, const char* key, bool required) {
    if (!obj.contains(key)) {
      if (required) problems.push_back(path(where, key) + ": required");
      return std::nullopt;
    }
    try {
      const auto& v = obj.at(key);
      if constexpr (std::is_same_v<T, bool>) {
        if (!v.is_boolean()) throw std::runtime_error("expected a boolean");
      } else if constexpr (std::is_integral_v<T>) {
        if (!v.is_number_integer()) throw std::runtime_error("expected an integer");
        if constexpr (std::is_unsigned_v<T>) {
          if (v.is_number_integer() && !v.is_number_unsigned())
            throw std::runtime_error("expected a non-negative integer");
        }
      } else if constexpr (std::is_floating_point_v<T>) {
        if (!v.is_number()) throw std::runtime_error("expected a number");
      } else if constexpr (std::is_same_v<T, std::string>) {
        if (!v.is_string()) throw std::runtime_error("expected a string");
      }
      return v.get<T>();
    } catch (const std::exception& e) {
      problems.push_back(path(where, key) + ": " + e.what());
      return std::nullopt;
    }
  }

  static std::string path(const std::string& where, const std::string& key) {
    return where.empty() ? key : where + "." + key;
  }
};

template <typename T>
void assign(T& dst, const std::optional<T>& v) {
  if (v) dst = *v;
}

void read_mock(Reader& r, const json& m, MockWorldConfig& out) {
  const std::string where = "backend.mock";
  if (!m.is_object()) {
    r.problems.push_back(where + ": expected an object");
    return;
  }
  r.reject_unknown(m, where, {"latent_dim", "variation_scale", "render_matrix_seed", "private_mixture"});
  assign(out.latent_dim, r.get<int>(m, where, "latent_dim", true));
  assign(out.variation_scale, r.get<double>(m, where, "variation_scale", true));
  assign(out.render_matrix_seed, r.get<std::uint64_t>(m, where, "render_matrix_seed", false));
  if (m.contains("private_mixture")) {
    const auto& arr = m.at("private_mixture");
    if (!arr.is_array()) {
      r.problems.push_back(where + ".private_mixture: expected an array");
      return;
    }
    for (std::size_t i = 0; i < arr.size(); ++i) {
      const std::string at = where + ".private_mixture[" + std::to_string(i) + "]";
      const auto& c = arr[i];
      if (!c.is_object()) {
        r.problems.push_back(at + ": expected an object");
        continue;
      }
      r.reject_unknown(c, at, {"mean", "std", "weight"});
      MixtureComponent comp;
      if (auto mean = r.get<std::vector<double>>(c, at, "mean", true))
        comp.mean = Eigen::Map<Eigen::VectorXd>(mean->data(), static_cast<Eigen::Index>(mean->size()));
      assign(comp.stddev, r.get<double>(c, at, "std", true));
      assign(comp.weight, r.get<double>(c, at, "weight", true));
      out.private_mixture.push_back(std::move(comp));
    }
  }
}

void read_http(Reader& r, const json& h, http::HttpBackendConfig& out,
               const std::filesystem::path& base_dir) {
  const std::string where = "backend.http";
  if (!h.is_object()) {
    r.problems.push_back(where + ": expected an object");
    return;
  }
  r.reject_unknown(h, where,
                   {"chat_model", "caption_model", "image_model", "embed_model", "image_size",
                    "temperature", "random_prompt", "variation_prompt", "caption_prompt",
                    "max_inflight", "timeout_seconds", "replay", "record", "retry_attempts",
                    "retry_base_delay_ms"});
  assign(out.chat_model, r.get<std::string>(h, where, "chat_model", false));
  assign(out.caption_model, r.get<std::string>(h, where, "caption_model", false));
  assign(out.image_model, r.get<std::string>(h, where, "image_model", false));
  assign(out.embed_model, r.get<std::string>(h, where, "embed_model", false));
  assign(out.image_size, r.get<std::string>(h, where, "image_size", false));
  assign(out.temperature, r.get<double>(h, where, "temperature", false));
  const auto resolve = [&](std::string& dst, const char* key) {
    if (auto v = r.get<std::string>(h, where, key, false)) {
      dst = (v->empty() || base_dir.empty()) ? *v : (base_dir / *v).lexically_normal().string();
    }
  };
  resolve(out.random_prompt, "random_prompt");
  resolve(out.variation_prompt, "variation_prompt");
  resolve(out.caption_prompt, "caption_prompt");
  resolve(out.replay, "replay");
  resolve(out.record, "record");
  assign(out.max_inflight, r.get<int>(h, where, "max_inflight", false));
  assign(out.timeout_seconds, r.get<double>(h, where, "timeout_seconds", false));
  assign(out.retry_attempts, r.get<int>(h, where, "retry_attempts", false));
  assign(out.retry_base_delay_ms, r.get<int>(h, where, "retry_base_delay_ms", false));
}

void read_backend(Reader& r, const json& b, BackendConfig& out,
                  const std::filesystem::path& base_dir) {
  if (!b.is_object()) {
    r.problems.push_back("backend: expected an object");
    return;
  }
  r.reject_unknown(b, "backend", {"type", "private_data", "mock", "http"});
  if (auto type = r.get<std::string>(b, "backend", "type", true)) {
    if (*type == "mock") {
      out.kind = BackendConfig::Kind::mock;
    } else if (*type == "http") {
      out.kind = BackendConfig::Kind::http;
    } else {
      r.problems.push_back("backend.type: expected \"mock\" or \"http\", got \"" + *type + "\"");
    }
  }
  if (!b.contains("private_data")) {
    r.problems.push_back("backend.private_data: required");
  } else {
    const auto& pd = b.at("private_data");
    if (pd.is_string()) {
      const std::string p = pd.get<std::string>();
      out.private_data = base_dir.empty() ? p : (base_dir / p).lexically_normal().string();
    } else if (pd.is_object()) {
      r.reject_unknown(pd, "backend.private_data", {"mock_samples"});
      if (auto n = r.get<std::size_t>(pd, "backend.private_data", "mock_samples", true))
        out.private_data = MockSamples{*n};
    } else {
      r.problems.push_back("backend.private_data: expected a path or {\"mock_samples\": n}");
    }
  }
  if (b.contains("mock")) read_mock(r, b.at("mock"), out.mock);
  if (b.contains("http")) read_http(r, b.at("http"), out.http, base_dir);
  if (out.kind == BackendConfig::Kind::mock && !b.contains("mock"))
    r.problems.push_back("backend.mock: required when backend.type is \"mock\"");
}

std::vector<std::string> collect_validation(const RunConfig& c) {
  std::vector<std::string> p;
  if (c.population < 1) p.push_back("num_samples_schedule: population must be >= 1");
  if (c.iterations < 0) p.push_back("iterations: must be >= 0");
  if (c.lookahead_degree < 0) p.push_back("lookahead_degree: must be >= 0");
  if (c.selection_multiplicity < 1) p.push_back("selection_multiplicity: must be >= 1");
  if (c.initial_variation_api_fold < 0) p.push_back("initial_variation_api_fold: must be >= 0");
  if (c.next_variation_api_fold < 1) p.push_back("next_variation_api_fold: must be >= 1");
  if (c.selection_multiplicity > 1 && c.lookahead_degree < 2)
    p.push_back("lookahead_degree: must be >= 2 when selection_multiplicity > 1 "
                "(the next pool is the voted set plus K-1 variation batches)");
  if (c.budget) {
    try {
      c.budget->validate();
    } catch (const DomainError& e) {
      p.push_back(std::string("budget: ") + e.what());
    }
  }
  const auto& b = c.backend;
  if (b.kind == BackendConfig::Kind::mock) {
    try {
      b.mock.validate();
    } catch (const ConfigError& e) {
      p.push_back(e.what());
    }
    if (const auto* s = std::get_if<MockSamples>(&b.private_data)) {
      if (s->count < 1) p.push_back("backend.private_data.mock_samples: must be >= 1");
      if (b.mock.private_mixture.empty())
        p.push_back("backend.mock.private_mixture: required when private_data uses mock_samples");
    }
  } else {
    if (std::holds_alternative<MockSamples>(b.private_data))
      p.push_back("backend.private_data: http backends need a directory of private images");
    if (b.http.max_inflight < 1) p.push_back("backend.http.max_inflight: must be >= 1");
    if (b.http.retry_attempts < 1) p.push_back("backend.http.retry_attempts: must be >= 1");
    if (!(b.http.timeout_seconds > 0)) p.push_back("backend.http.timeout_seconds: must be > 0");
  }
  return p;
}

[[noreturn]] void fail(const std::vector<std::string>& problems) {
  std::string msg = "invalid configuration (" + std::to_string(problems.size()) + " problem" +
                    (problems.size() == 1 ? "" : "s") + "):";
  for (const auto& p : problems) msg += "\n  " + p;
  throw ConfigError(msg);
}

}  // namespace

void RunConfig::validate() const {
  const auto problems = collect_validation(*this);
  if (!problems.empty()) fail(problems);
}

RunConfig parse_run_config(const json& doc, const std::filesystem::path& base_dir,
                           std::optional<std::uint64_t> seed_override) {
  if (!doc.is_object()) throw ConfigError("configuration must be a JSON object");
  Reader r;
  RunConfig c;
  r.reject_unknown(doc, "",
                   {"num_samples_schedule", "iterations", "lookahead_degree",
                    "selection_multiplicity", "initial_variation_api_fold",
                    "next_variation_api_fold", "budget", "metric", "voting_space",
                    "normalize_lookahead", "seed", "backend"});

  if (!doc.contains("num_samples_schedule")) {
    r.problems.push_back("num_samples_schedule: required");
  } else {
    const auto& s = doc.at("num_samples_schedule");
    if (s.is_number_integer()) {
      c.population = s.get<int>();
    } else if (s.is_array() && !s.empty() &&
               std::all_of(s.begin(), s.end(), [](const json& x) { return x.is_number_integer(); })) {
      c.population = s.front().get<int>();
      for (const auto& x : s)
        if (x.get<int>() != c.population) {
          r.problems.push_back("num_samples_schedule: non-constant schedules are not supported");
          break;
        }
    } else {
      r.problems.push_back("num_samples_schedule: expected an integer or a non-empty integer list");
    }
  }
  assign(c.iterations, r.get<int>(doc, "", "iterations", true));
  assign(c.lookahead_degree, r.get<int>(doc, "", "lookahead_degree", false));
  assign(c.selection_multiplicity, r.get<int>(doc, "", "selection_multiplicity", false));
  assign(c.initial_variation_api_fold, r.get<int>(doc, "", "initial_variation_api_fold", false));
  assign(c.next_variation_api_fold, r.get<int>(doc, "", "next_variation_api_fold", false));
  assign(c.normalize_lookahead, r.get<bool>(doc, "", "normalize_lookahead", false));

  if (!doc.contains("budget")) {
    r.problems.push_back("budget: required (use null for a noise-free diagnostic run)");
  } else if (const auto& b = doc.at("budget"); b.is_null()) {
    c.budget.reset();
  } else if (b.is_object()) {
    r.reject_unknown(b, "budget", {"epsilon", "delta"});
    PrivacyBudget pb;
    const auto eps = r.get<double>(b, "budget", "epsilon", true);
    assign(pb.epsilon, eps);
    assign(pb.delta, r.get<double>(b, "budget", "delta", false));
    if (eps) c.budget = pb;
  } else {
    r.problems.push_back("budget: expected {\"epsilon\": E, \"delta\": D} or null");
  }

  if (auto m = r.get<std::string>(doc, "", "metric", false)) {
    try {
      c.metric = parse_metric(*m);
    } catch (const InputError& e) {
      r.problems.push_back(std::string("metric: ") + e.what());
    }
  }
  if (auto v = r.get<std::string>(doc, "", "voting_space", false)) {
    if (*v == "image") {
      c.voting_space = VotingSpace::image;
    } else if (*v == "text") {
      c.voting_space = VotingSpace::text;
    } else {
      r.problems.push_back("voting_space: expected \"image\" or \"text\", got \"" + *v + "\"");
    }
  }

  const auto seed = r.get<std::uint64_t>(doc, "", "seed", !seed_override.has_value());
  if (seed_override) {
    c.seed = *seed_override;
  } else if (seed) {
    c.seed = *seed;
  }

  if (!doc.contains("backend")) {
    r.problems.push_back("backend: required");
  } else {
    read_backend(r, doc.at("backend"), c.backend, base_dir);
  }

  // Semantic checks run even when parsing failed, minus fields already flagged.
  auto problems = std::move(r.problems);
  const auto field_of = [](const std::string& p) { return p.substr(0, p.find(':')); };
  for (auto& v : collect_validation(c)) {
    const auto f = field_of(v);
    const bool seen = std::any_of(problems.begin(), problems.end(), [&](const std::string& p) {
      const auto g = field_of(p);
      return g.rfind(f, 0) == 0 || f.rfind(g, 0) == 0;
    });
    if (!seen) problems.push_back(std::move(v));
  }
  if (!problems.empty()) fail(problems);
  return c;
}

RunConfig load_run_config(const std::filesystem::path& path,
                          std::optional<std::uint64_t> seed_override) {
  std::ifstream f(path);
  if (!f) throw ConfigError("cannot open config " + path.string());
  json doc;
  try {
    doc = json::parse(f);
  } catch (const json::exception& e) {
    throw ConfigError("config " + path.string() + " is not valid JSON: " + e.what());
  }
  return parse_run_config(doc, path.parent_path(), seed_override);
}

json to_json(const RunConfig& c) {
  json j;
  j["num_samples_schedule"] = json::array({c.population});
  j["iterations"] = c.iterations;
  j["lookahead_degree"] = c.lookahead_degree;
  j["selection_multiplicity"] = c.selection_multiplicity;
  j["initial_variation_api_fold"] = c.initial_variation_api_fold;
  j["next_variation_api_fold"] = c.next_variation_api_fold;
  j["budget"] = c.budget ? json{{"epsilon", c.budget->epsilon}, {"delta", c.budget->delta}}
                         : json(nullptr);
  j["metric"] = std::string(to_string(c.metric));
  j["voting_space"] = std::string(to_string(c.voting_space));
  j["normalize_lookahead"] = c.normalize_lookahead;
  j["seed"] = c.seed;

  json b;
  const auto& be = c.backend;
  b["type"] = be.kind == BackendConfig::Kind::mock ? "mock" : "http";
  if (const auto* p = std::get_if<std::string>(&be.private_data)) {
    b["private_data"] = *p;
  } else {
    b["private_data"] = {{"mock_samples", std::get<MockSamples>(be.private_data).count}};
  }
  if (be.kind == BackendConfig::Kind::mock) {
    json mix = json::array();
    for (const auto& comp : be.mock.private_mixture)
      mix.push_back({{"mean", std::vector<double>(comp.mean.data(), comp.mean.data() + comp.mean.size())},
                     {"std", comp.stddev},
                     {"weight", comp.weight}});
    b["mock"] = {{"latent_dim", be.mock.latent_dim},
                 {"variation_scale", be.mock.variation_scale},
                 {"render_matrix_seed", be.mock.render_matrix_seed},
                 {"private_mixture", mix}};
  } else {
    const auto& h = be.http;
    b["http"] = {{"chat_model", h.chat_model},       {"caption_model", h.caption_model},
                 {"image_model", h.image_model},     {"embed_model", h.embed_model},
                 {"image_size", h.image_size},       {"temperature", h.temperature},
                 {"random_prompt", h.random_prompt}, {"variation_prompt", h.variation_prompt},
                 {"caption_prompt", h.caption_prompt}, {"max_inflight", h.max_inflight},
                 {"timeout_seconds", h.timeout_seconds}, {"replay", h.replay},
                 {"record", h.record},               {"retry_attempts", h.retry_attempts},
                 {"retry_base_delay_ms", h.retry_base_delay_ms}};
  }
  j["backend"] = b;
  return j;
}

}  // namespace pte
