#include "pte/http_backend.hpp"

#include <spdlog/spdlog.h>

#include <cctype>
#include <cstdlib>
#include <fstream>
#include <sstream>
#include <thread>

#include "base64.hpp"
#include "httplib.h"
#include "pte/parallel.hpp"

namespace pte::http {

using nlohmann::json;

const char* const kDefaultRandomPrompt =
    "Write {n} diverse, detailed captions describing photographs. "
    "Return exactly one caption per line with no numbering.";
const char* const kDefaultVariationPrompt =
    "Here is an image caption:\n{caption}\n"
    "Write {n} variations of this caption that change some details while keeping its style. "
    "Return exactly one caption per line with no numbering.";
const char* const kDefaultCaptionPrompt =
    "Describe this image in one detailed sentence suitable as a text-to-image prompt.";

namespace {

std::string iso_now() {
  const auto now = std::chrono::system_clock::now();
  const std::time_t t = std::chrono::system_clock::to_time_t(now);
  std::tm tm{};
  gmtime_r(&t, &tm);
  char buf[32];
  std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buf;
}

std::string excerpt(std::string_view s) {
  constexpr std::size_t kMax = 200;
  return s.size() <= kMax ? std::string(s) : std::string(s.substr(0, kMax)) + "...";
}

std::string replay_key(const std::string& url, const std::string& body) {
  // Canonicalize so hand-written fixtures match generated requests.
  std::string canon = body;
  try {
    canon = json::parse(body).dump();
  } catch (const json::exception&) {
  }
  return url + '\n' + canon;
}

std::string read_text_file(const std::string& path, const char* fallback) {
  if (path.empty()) return fallback;
  std::ifstream f(path);
  if (!f) throw ConfigError("cannot read prompt template " + path);
  std::ostringstream ss;
  ss << f.rdbuf();
  return ss.str();
}

std::string env_or(const char* name, std::string fallback) {
  const char* v = std::getenv(name);
  return (v && *v) ? std::string(v) : std::move(fallback);
}

std::string join_url(const std::string& base, std::string_view path) {
  if (!base.empty() && base.back() == '/') return base + std::string(path.substr(1));
  return base + std::string(path);
}

std::string chat_content(const json& reply) {
  try {
    const auto& content = reply.at("choices").at(0).at("message").at("content");
    if (!content.is_string()) throw ParseError("chat reply content is not a string");
    return content.get<std::string>();
  } catch (const json::exception& e) {
    throw ParseError(std::string("chat reply missing choices[0].message.content: ") +
                     excerpt(reply.dump()));
  }
}

std::string data_url(const Image& img) {
  if (img.encoded.empty())
    throw InputError("remote backends need encoded images; got a raw vector image");
  return "data:" + img.mime + ";base64," + img.encoded;
}

int seed_from(Rng& rng) { return static_cast<int>(rng() & 0x7fffffffu); }

}  // namespace

Response HttplibTransport::post(const Request& request) {
  const auto scheme_end = request.url.find("://");
  if (scheme_end == std::string::npos) throw TransportError("bad url " + request.url);
  const auto path_start = request.url.find('/', scheme_end + 3);
  const std::string origin = request.url.substr(0, path_start);
  const std::string path = path_start == std::string::npos ? "/" : request.url.substr(path_start);

  httplib::Client cli(origin);
  const auto secs = std::chrono::duration_cast<std::chrono::seconds>(timeout_);
  const auto usecs = std::chrono::duration_cast<std::chrono::microseconds>(timeout_ - secs);
  cli.set_connection_timeout(secs.count(), usecs.count());
  cli.set_read_timeout(secs.count(), usecs.count());
  cli.set_write_timeout(secs.count(), usecs.count());

  httplib::Headers headers;
  for (const auto& [k, v] : request.headers) headers.emplace(k, v);
  auto res = cli.Post(path, headers, request.body, "application/json");
  if (!res) throw TransportError(request.url + ": " + httplib::to_string(res.error()));
  return {res->status, res->body};
}

std::vector<TranscriptEntry> load_transcript(const std::filesystem::path& path) {
  std::ifstream f(path);
  if (!f) throw ConfigError("cannot open replay transcript " + path.string());
  std::vector<TranscriptEntry> out;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(f, line)) {
    ++lineno;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    try {
      const json j = json::parse(line);
      TranscriptEntry e;
      e.url = j.at("request").at("url").get<std::string>();
      const auto& rb = j.at("request").at("body");
      e.request_body = rb.is_string() ? rb.get<std::string>() : rb.dump();
      e.response.status = j.at("response").at("status").get<int>();
      const auto& body = j.at("response").at("body");
      e.response.body = body.is_string() ? body.get<std::string>() : body.dump();
      e.timestamp = j.value("timestamp", "");
      out.push_back(std::move(e));
    } catch (const json::exception& ex) {
      throw ParseError(path.string() + ":" + std::to_string(lineno) + ": " + ex.what());
    }
  }
  return out;
}

std::string transcript_line(const TranscriptEntry& entry) {
  json req_body;
  try {
    req_body = json::parse(entry.request_body);
  } catch (const json::exception&) {
    req_body = entry.request_body;
  }
  json j = {{"request", {{"url", entry.url}, {"body", req_body}}},
            {"response", {{"status", entry.response.status}, {"body", entry.response.body}}},
            {"timestamp", entry.timestamp}};
  return j.dump();
}

ReplayTransport::ReplayTransport(const std::vector<TranscriptEntry>& entries) {
  for (const auto& e : entries) queue_[replay_key(e.url, e.request_body)].push_back(e.response);
}

Response ReplayTransport::post(const Request& request) {
  std::lock_guard lock(mu_);
  auto it = queue_.find(replay_key(request.url, request.body));
  if (it == queue_.end() || it->second.empty())
    throw TransportError("no recorded response for POST " + request.url + " " +
                         excerpt(request.body));
  Response r = std::move(it->second.front());
  it->second.pop_front();
  return r;
}

RecordingTransport::RecordingTransport(std::shared_ptr<Transport> inner, std::filesystem::path path)
    : inner_(std::move(inner)), path_(std::move(path)) {}

Response RecordingTransport::post(const Request& request) {
  Response r = inner_->post(request);
  const std::string line = transcript_line({request.url, request.body, r, iso_now()});
  std::lock_guard lock(mu_);
  std::ofstream f(path_, std::ios::app);
  f << line << '\n';
  return r;
}

Endpoints Endpoints::from_env(bool require_key) {
  Endpoints e;
  e.api_key = env_or("PTE_API_KEY", "");
  if (require_key && e.api_key.empty())
    throw ConfigError("PTE_API_KEY is not set; remote backends need a bearer token");
  e.api_base = env_or("PTE_API_BASE_URL", e.api_base);
  e.image_base = env_or("PTE_IMAGE_BASE_URL", e.api_base);
  e.embed_base = env_or("PTE_EMBED_BASE_URL", e.api_base);
  return e;
}

std::string fill_template(std::string_view tmpl, std::size_t n, std::string_view caption) {
  std::string out;
  out.reserve(tmpl.size() + caption.size());
  for (std::size_t i = 0; i < tmpl.size();) {
    if (tmpl.substr(i, 3) == "{n}") {
      out += std::to_string(n);
      i += 3;
    } else if (tmpl.substr(i, 9) == "{caption}") {
      out += caption;
      i += 9;
    } else {
      out.push_back(tmpl[i++]);
    }
  }
  return out;
}

std::vector<std::string> split_caption_lines(std::string_view content) {
  std::vector<std::string> out;
  std::istringstream ss{std::string(content)};
  std::string line;
  while (std::getline(ss, line)) {
    std::size_t b = 0;
    // list markers: "-", "*", "•", "12.", "3)"
    while (b < line.size() && std::isspace(static_cast<unsigned char>(line[b]))) ++b;
    if (b < line.size() && (line[b] == '-' || line[b] == '*')) {
      ++b;
    } else if (line.compare(b, 3, "\xE2\x80\xA2") == 0) {
      b += 3;
    } else {
      std::size_t d = b;
      while (d < line.size() && std::isdigit(static_cast<unsigned char>(line[d]))) ++d;
      if (d > b && d < line.size() && (line[d] == '.' || line[d] == ')')) b = d + 1;
    }
    while (b < line.size() && std::isspace(static_cast<unsigned char>(line[b]))) ++b;
    std::size_t e = line.size();
    while (e > b && std::isspace(static_cast<unsigned char>(line[e - 1]))) --e;
    if (e > b) out.push_back(line.substr(b, e - b));
  }
  return out;
}

Client::Client(Endpoints endpoints, std::shared_ptr<Transport> transport, RetryPolicy retry)
    : endpoints_(std::move(endpoints)), transport_(std::move(transport)), retry_(retry) {}

json Client::post_json(const std::string& url, const json& body) {
  Request req{url, body.dump(), {}};
  if (!endpoints_.api_key.empty())
    req.headers.emplace_back("Authorization", "Bearer " + endpoints_.api_key);

  int last_status = 0;
  std::string last_error;
  for (int attempt = 0; attempt < retry_.attempts; ++attempt) {
    if (attempt > 0 && retry_.base_delay.count() > 0)
      std::this_thread::sleep_for(retry_.base_delay * (1 << (attempt - 1)));
    const auto start = std::chrono::steady_clock::now();
    try {
      Response res = transport_->post(req);
      const auto ms = std::chrono::duration_cast<std::chrono::milliseconds>(
                          std::chrono::steady_clock::now() - start)
                          .count();
      spdlog::debug("POST {} -> {} in {} ms ({} bytes)", url, res.status, ms, res.body.size());
      last_status = res.status;
      if (res.status >= 200 && res.status < 300) {
        try {
          return json::parse(res.body);
        } catch (const json::exception&) {
          throw ParseError("malformed response from " + url + ": " + excerpt(res.body));
        }
      }
      last_error = "HTTP " + std::to_string(res.status) + ": " + excerpt(res.body);
      const bool retryable = res.status == 408 || res.status == 429 || res.status >= 500;
      if (!retryable) break;
    } catch (const TransportError& e) {
      spdlog::warn("POST {} failed (attempt {}/{}): {}", url, attempt + 1, retry_.attempts,
                   e.what());
      last_status = 0;
      last_error = e.what();
    }
  }
  throw BackendError("request to " + url + " failed: " + last_error, url, last_status);
}

HttpRandomApi::HttpRandomApi(std::shared_ptr<Client> client, HttpBackendConfig cfg,
                             std::string tmpl)
    : client_(std::move(client)), cfg_(std::move(cfg)), template_(std::move(tmpl)) {}

std::vector<std::string> HttpRandomApi::random(std::size_t n, Rng& rng) {
  constexpr int kMaxRounds = 8;
  const std::string url = join_url(client_->endpoints().api_base, "/chat/completions");
  std::vector<std::string> out;
  for (int round = 0; out.size() < n && round < kMaxRounds; ++round) {
    const std::size_t want = n - out.size();
    const json body = {
        {"model", cfg_.chat_model},
        {"temperature", cfg_.temperature},
        {"seed", seed_from(rng)},
        {"messages", json::array({{{"role", "user"}, {"content", fill_template(template_, want)}}})}};
    auto lines = split_caption_lines(chat_content(client_->post_json(url, body)));
    if (lines.size() > want) lines.resize(want);
    out.insert(out.end(), lines.begin(), lines.end());
  }
  if (out.size() < n)
    throw ParseError("random_api returned " + std::to_string(out.size()) + " of " +
                     std::to_string(n) + " captions");
  return out;
}

HttpVariationApi::HttpVariationApi(std::shared_ptr<Client> client, HttpBackendConfig cfg,
                                   std::string tmpl)
    : client_(std::move(client)), cfg_(std::move(cfg)), template_(std::move(tmpl)) {}

std::vector<std::string> HttpVariationApi::vary(std::span<const std::string> parents,
                                                std::size_t per_parent, Rng& rng) {
  constexpr int kMaxRounds = 4;
  const std::string url = join_url(client_->endpoints().api_base, "/chat/completions");
  // Seeds are drawn up front so the stream does not depend on scheduling.
  std::vector<int> seeds(parents.size() * kMaxRounds);
  for (auto& s : seeds) s = seed_from(rng);

  std::vector<std::vector<std::string>> children(parents.size());
  parallel_for(parents.size(), static_cast<std::size_t>(cfg_.max_inflight), [&](std::size_t i) {
    auto& mine = children[i];
    for (int round = 0; mine.size() < per_parent && round < kMaxRounds; ++round) {
      const std::size_t want = per_parent - mine.size();
      const json body = {
          {"model", cfg_.chat_model},
          {"temperature", cfg_.temperature},
          {"seed", seeds[i * kMaxRounds + static_cast<std::size_t>(round)]},
          {"messages", json::array({{{"role", "user"},
                                     {"content", fill_template(template_, want, parents[i])}}})}};
      auto lines = split_caption_lines(chat_content(client_->post_json(url, body)));
      if (lines.size() > want) lines.resize(want);
      mine.insert(mine.end(), lines.begin(), lines.end());
    }
    if (mine.size() < per_parent)
      throw ParseError("variation_api returned " + std::to_string(mine.size()) + " of " +
                       std::to_string(per_parent) + " variants");
  });
  std::vector<std::string> out;
  out.reserve(parents.size() * per_parent);
  for (auto& c : children) out.insert(out.end(), c.begin(), c.end());
  return out;
}

HttpTextToImage::HttpTextToImage(std::shared_ptr<Client> client, HttpBackendConfig cfg)
    : client_(std::move(client)), cfg_(std::move(cfg)) {}

std::vector<Image> HttpTextToImage::render(std::span<const std::string> texts) {
  const std::string url = join_url(client_->endpoints().image_base, "/images/generations");
  std::vector<Image> out(texts.size());
  parallel_for(texts.size(), static_cast<std::size_t>(cfg_.max_inflight), [&](std::size_t i) {
    const json body = {{"model", cfg_.image_model},
                       {"prompt", texts[i]},
                       {"n", 1},
                       {"size", cfg_.image_size},
                       {"response_format", "b64_json"}};
    const json reply = client_->post_json(url, body);
    try {
      out[i].encoded = reply.at("data").at(0).at("b64_json").get<std::string>();
      out[i].mime = "image/png";
    } catch (const json::exception&) {
      throw ParseError("image reply missing data[0].b64_json: " + excerpt(reply.dump()));
    }
  });
  return out;
}

HttpImageEncoder::HttpImageEncoder(std::shared_ptr<Client> client, HttpBackendConfig cfg)
    : client_(std::move(client)), cfg_(std::move(cfg)) {}

RowMatrix<double> HttpImageEncoder::encode(std::span<const Image> images) {
  constexpr std::size_t kBatch = 16;
  const std::string url = join_url(client_->endpoints().embed_base, "/embeddings");
  const std::size_t batches = (images.size() + kBatch - 1) / kBatch;
  std::vector<std::vector<std::vector<double>>> parts(batches);

  parallel_for(batches, static_cast<std::size_t>(cfg_.max_inflight), [&](std::size_t b) {
    const std::size_t lo = b * kBatch;
    const std::size_t hi = std::min(images.size(), lo + kBatch);
    json input = json::array();
    for (std::size_t i = lo; i < hi; ++i) input.push_back(data_url(images[i]));
    const json reply = client_->post_json(url, {{"model", cfg_.embed_model}, {"input", input}});
    auto& rows = parts[b];
    rows.resize(hi - lo);
    try {
      const auto& data = reply.at("data");
      if (data.size() != hi - lo)
        throw ParseError("embedding reply has " + std::to_string(data.size()) + " rows, expected " +
                         std::to_string(hi - lo));
      for (std::size_t k = 0; k < data.size(); ++k) {
        const std::size_t idx = data[k].value("index", k);
        if (idx >= rows.size()) throw ParseError("embedding reply index out of range");
        rows[idx] = data[k].at("embedding").get<std::vector<double>>();
      }
    } catch (const json::exception&) {
      throw ParseError("embedding reply missing data[].embedding: " + excerpt(reply.dump()));
    }
  });

  std::lock_guard lock(mu_);
  RowMatrix<double> out;
  std::size_t row = 0;
  for (const auto& part : parts) {
    for (const auto& v : part) {
      const auto dim = static_cast<Eigen::Index>(v.size());
      if (!dim_) dim_ = dim;
      if (dim != *dim_)
        throw ParseError("embedding dimension changed from " + std::to_string(*dim_) + " to " +
                         std::to_string(dim));
      if (out.rows() == 0) out.resize(static_cast<Eigen::Index>(images.size()), dim);
      out.row(static_cast<Eigen::Index>(row++)) =
          Eigen::Map<const Eigen::RowVectorXd>(v.data(), dim);
    }
  }
  return out;
}

HttpCaptioner::HttpCaptioner(std::shared_ptr<Client> client, HttpBackendConfig cfg,
                             std::string instruction)
    : client_(std::move(client)), cfg_(std::move(cfg)), instruction_(std::move(instruction)) {}

std::vector<std::string> HttpCaptioner::caption(std::span<const Image> images) {
  const std::string url = join_url(client_->endpoints().api_base, "/chat/completions");
  std::vector<std::string> out(images.size());
  parallel_for(images.size(), static_cast<std::size_t>(cfg_.max_inflight), [&](std::size_t i) {
    const json content = json::array(
        {{{"type", "text"}, {"text", instruction_}},
         {{"type", "image_url"}, {"image_url", {{"url", data_url(images[i])}}}}});
    const json body = {{"model", cfg_.caption_model},
                       {"temperature", 0.0},
                       {"messages", json::array({{{"role", "user"}, {"content", content}}})}};
    const auto lines = split_caption_lines(chat_content(client_->post_json(url, body)));
    if (lines.empty()) throw ParseError("caption reply was empty");
    std::string joined = lines.front();
    for (std::size_t k = 1; k < lines.size(); ++k) joined += ' ' + lines[k];
    out[i] = std::move(joined);
  });
  return out;
}

BackendSuite make_http_suite(const HttpBackendConfig& cfg, std::shared_ptr<Transport> transport) {
  const bool replaying = !cfg.replay.empty();
  Endpoints endpoints = Endpoints::from_env(!replaying);

  if (!transport) {
    if (replaying) {
      transport = std::make_shared<ReplayTransport>(std::filesystem::path(cfg.replay));
    } else {
      transport = std::make_shared<HttplibTransport>(
          std::chrono::milliseconds(static_cast<long>(cfg.timeout_seconds * 1000)));
    }
  }
  if (!cfg.record.empty())
    transport = std::make_shared<RecordingTransport>(std::move(transport), cfg.record);

  auto client = std::make_shared<Client>(
      std::move(endpoints), std::move(transport),
      RetryPolicy{cfg.retry_attempts, std::chrono::milliseconds(cfg.retry_base_delay_ms)});
  return BackendSuite{
      std::make_shared<HttpRandomApi>(client, cfg, read_text_file(cfg.random_prompt, kDefaultRandomPrompt)),
      std::make_shared<HttpVariationApi>(client, cfg,
                                         read_text_file(cfg.variation_prompt, kDefaultVariationPrompt)),
      std::make_shared<HttpTextToImage>(client, cfg),
      std::make_shared<HttpImageEncoder>(client, cfg),
      std::make_shared<HttpCaptioner>(client, cfg,
                                      read_text_file(cfg.caption_prompt, kDefaultCaptionPrompt)),
  };
}

}  // namespace pte::http
