#pragma once

#include <chrono>
#include <cstdint>
#include <deque>
#include <filesystem>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "json.hpp"
#include "pte/error.hpp"
#include "pte/model_api.hpp"

namespace pte::http {

struct Request {
  std::string url;
  std::string body;
  std::vector<std::pair<std::string, std::string>> headers;
};

struct Response {
  int status = 0;
  std::string body;
};

/// Connection-level failure: timeout, refused connection, missing replay.
class TransportError : public Error {
 public:
  using Error::Error;
};

class Transport {
 public:
  virtual ~Transport() = default;
  /// POSTs a JSON body. Throws TransportError when no response arrives.
  virtual Response post(const Request& request) = 0;
};

/// Live transport over cpp-httplib (HTTP and HTTPS).
class HttplibTransport final : public Transport {
 public:
  explicit HttplibTransport(std::chrono::milliseconds timeout) : timeout_(timeout) {}
  Response post(const Request& request) override;

 private:
  std::chrono::milliseconds timeout_;
};

/// One recorded exchange. Authorization headers are never stored.
struct TranscriptEntry {
  std::string url;
  std::string request_body;
  Response response;
  std::string timestamp;
};

/// Transcript file: JSONL of {request: {url, body}, response: {status, body}, timestamp}.
std::vector<TranscriptEntry> load_transcript(const std::filesystem::path& path);
std::string transcript_line(const TranscriptEntry& entry);

/// Serves responses from a transcript, matching on (url, body). Repeated
/// identical requests are answered in recorded order.
class ReplayTransport final : public Transport {
 public:
  explicit ReplayTransport(const std::vector<TranscriptEntry>& entries);
  explicit ReplayTransport(const std::filesystem::path& path)
      : ReplayTransport(load_transcript(path)) {}
  Response post(const Request& request) override;

 private:
  std::mutex mu_;
  std::map<std::string, std::deque<Response>> queue_;
};

/// Forwards to `inner` and appends every exchange to a transcript file.
class RecordingTransport final : public Transport {
 public:
  RecordingTransport(std::shared_ptr<Transport> inner, std::filesystem::path path);
  Response post(const Request& request) override;

 private:
  std::shared_ptr<Transport> inner_;
  std::filesystem::path path_;
  std::mutex mu_;
};

struct RetryPolicy {
  int attempts = 3;
  std::chrono::milliseconds base_delay{500};
};

/// Where requests go. Read from PTE_API_KEY, PTE_API_BASE_URL,
/// PTE_IMAGE_BASE_URL and PTE_EMBED_BASE_URL.
struct Endpoints {
  std::string api_key;
  std::string api_base = "https://api.openai.com/v1";
  std::string image_base;
  std::string embed_base;

  /// Throws ConfigError if `require_key` and PTE_API_KEY is unset or empty.
  static Endpoints from_env(bool require_key);
};

struct HttpBackendConfig {
  std::string chat_model = "gpt-4o-mini";
  std::string caption_model = "gpt-4o-mini";
  std::string image_model = "gpt-image-1";
  std::string embed_model = "image-embedding";
  std::string image_size = "1024x1024";
  double temperature = 1.0;
  std::string random_prompt;     // path to template; empty means built-in
  std::string variation_prompt;  // placeholders {caption}, {n}
  std::string caption_prompt;
  int max_inflight = 8;
  double timeout_seconds = 120.0;
  std::string replay;  // transcript to serve from; no network, no key
  std::string record;  // transcript to append to
  int retry_attempts = 3;
  int retry_base_delay_ms = 500;
};

/// Substitutes {n} and {caption}. Unknown braces are left alone.
std::string fill_template(std::string_view tmpl, std::size_t n, std::string_view caption = {});

/// Splits a chat reply into caption lines, dropping list markers and blanks.
std::vector<std::string> split_caption_lines(std::string_view content);

/// Shared request machinery for all five endpoints: bearer auth, retries with
/// exponential backoff on timeouts/408/429/5xx, latency logging.
class Client {
 public:
  Client(Endpoints endpoints, std::shared_ptr<Transport> transport, RetryPolicy retry);

  nlohmann::json post_json(const std::string& url, const nlohmann::json& body);

  const Endpoints& endpoints() const { return endpoints_; }

 private:
  Endpoints endpoints_;
  std::shared_ptr<Transport> transport_;
  RetryPolicy retry_;
};

class HttpRandomApi final : public RandomApi {
 public:
  HttpRandomApi(std::shared_ptr<Client> client, HttpBackendConfig cfg, std::string tmpl);
  std::vector<std::string> random(std::size_t n, Rng& rng) override;

 private:
  std::shared_ptr<Client> client_;
  HttpBackendConfig cfg_;
  std::string template_;
};

class HttpVariationApi final : public VariationApi {
 public:
  HttpVariationApi(std::shared_ptr<Client> client, HttpBackendConfig cfg, std::string tmpl);
  std::vector<std::string> vary(std::span<const std::string> parents, std::size_t per_parent,
                                Rng& rng) override;

 private:
  std::shared_ptr<Client> client_;
  HttpBackendConfig cfg_;
  std::string template_;
};

class HttpTextToImage final : public TextToImage {
 public:
  HttpTextToImage(std::shared_ptr<Client> client, HttpBackendConfig cfg);
  std::vector<Image> render(std::span<const std::string> texts) override;

 private:
  std::shared_ptr<Client> client_;
  HttpBackendConfig cfg_;
};

class HttpImageEncoder final : public ImageEncoder {
 public:
  HttpImageEncoder(std::shared_ptr<Client> client, HttpBackendConfig cfg);
  RowMatrix<double> encode(std::span<const Image> images) override;

 private:
  std::shared_ptr<Client> client_;
  HttpBackendConfig cfg_;
  std::mutex mu_;
  std::optional<Eigen::Index> dim_;
};

class HttpCaptioner final : public Captioner {
 public:
  HttpCaptioner(std::shared_ptr<Client> client, HttpBackendConfig cfg, std::string instruction);
  std::vector<std::string> caption(std::span<const Image> images) override;

 private:
  std::shared_ptr<Client> client_;
  HttpBackendConfig cfg_;
  std::string instruction_;
};

extern const char* const kDefaultRandomPrompt;
extern const char* const kDefaultVariationPrompt;
extern const char* const kDefaultCaptionPrompt;

/// Builds the five HTTP contracts. Without an explicit transport one is
/// chosen from the config: replay file, else live (optionally recorded).
/// Credentials are checked before any transport is created.
BackendSuite make_http_suite(const HttpBackendConfig& cfg,
                             std::shared_ptr<Transport> transport = nullptr);

}  // namespace pte::http
