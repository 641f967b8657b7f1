#pragma once

#include <chrono>
#include <deque>
#include <functional>
#include <memory>
#include <mutex>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

#include "vgs/model/templates.hpp"

namespace vgs::model {

struct DecodeParams {
  double temperature = 0.0;
  int max_output_tokens = 8192;
};

struct ModelRequest {
  std::string instruction_id;
  std::string rendered_text;
  std::vector<std::string> images;  // PNG bytes, in order
  DecodeParams decode_params;
};

struct ModelResponse {
  std::string raw_text;
  std::optional<nlohmann::json> parsed;
  std::optional<std::string> parse_error;
};

// Pulls a JSON value of the wanted shape out of a model reply. Tries the
// whole body, then the first fenced block, then the first balanced
// {...} or [...] run. Each candidate is also retried with `#` line comments
// and trailing commas removed, since the prompt formats show both.
std::optional<nlohmann::json> recover_json(std::string_view raw, Shape shape, std::string* error = nullptr);

// A transient transport failure (timeout, 5xx, 429); the gateway retries.
class TransientFailure : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class Backend {
 public:
  virtual ~Backend() = default;
  // Returns the reply text. Throws TransientFailure for retryable errors
  // and Error{BackendRejected} for auth/quota/bad-request errors.
  virtual std::string complete(const ModelRequest& request) = 0;
  virtual std::string name() const = 0;
};

struct TranscriptEntry {
  std::string instruction_id;
  std::string response_text;
};

// A scripted conversation: either one ordered list, or lists keyed by
// sample id.
class Transcript {
 public:
  static Transcript from_json(const nlohmann::json& j);
  static Transcript load(const std::string& path);

  bool keyed() const noexcept { return keyed_; }
  // The list for `sample_id`; the single list when not keyed. Throws
  // Error{TranscriptExhausted} for an unknown key.
  std::vector<TranscriptEntry> entries_for(const std::string& sample_id) const;
  std::vector<std::string> keys() const;

 private:
  bool keyed_ = false;
  std::vector<TranscriptEntry> single_;
  std::vector<std::pair<std::string, std::vector<TranscriptEntry>>> by_sample_;
};

// Replays a transcript in order. A request whose instruction id differs
// from the next entry raises Error{TranscriptMismatch}; running past the
// end raises Error{TranscriptExhausted}.
class MockBackend final : public Backend {
 public:
  explicit MockBackend(std::vector<TranscriptEntry> entries);
  std::string complete(const ModelRequest& request) override;
  std::string name() const override { return "mock"; }
  std::size_t remaining() const;

 private:
  mutable std::mutex mu_;
  std::deque<TranscriptEntry> entries_;
};

struct ModelConfig {
  std::string backend = "openai";  // "openai" | "mock"
  std::string endpoint = "https://api.openai.com/v1";
  std::string model = "gpt-4o";
  std::string api_key;
  DecodeParams decode;
  int max_attempts = 3;
  std::chrono::milliseconds initial_backoff{1000};
  double requests_per_minute = 0;  // 0 = unlimited
  int timeout_seconds = 120;
  std::string transcript_path;

  // Reads a JSON config file (if non-empty) and then applies
  // VGS_MODEL_ENDPOINT, VGS_MODEL_API_KEY and VGS_MODEL_NAME.
  static ModelConfig load(const std::string& path);
  nlohmann::json to_json(bool include_secrets = false) const;
};

// Chat-completions client for OpenAI-compatible endpoints. Screenshots are
// sent as PNG data URLs.
class OpenAiBackend final : public Backend {
 public:
  explicit OpenAiBackend(ModelConfig config);
  std::string complete(const ModelRequest& request) override;
  std::string name() const override { return "openai:" + config_.model; }

  // Request body as sent on the wire.
  nlohmann::json request_body(const ModelRequest& request) const;

 private:
  ModelConfig config_;
};

struct RetryPolicy {
  int max_attempts = 3;
  std::chrono::milliseconds initial_backoff{1000};
};

struct CallRecord {
  std::string instruction_id;
  std::size_t image_count = 0;
  int attempts = 0;
};

using Sleeper = std::function<void(std::chrono::milliseconds)>;

// Entry point for every model call: validates the request, applies rate
// limiting and retries, and parses the reply. Safe to share across threads.
class Gateway {
 public:
  explicit Gateway(std::shared_ptr<Backend> backend, RetryPolicy retry = {}, double requests_per_minute = 0,
                   Sleeper sleeper = {});

  // Never throws on malformed model output. Throws
  // Error{TransportExhausted} when every attempt failed transiently,
  // Error{BackendRejected} for non-retryable refusals and
  // Error{PreconditionViolation} for an empty prompt, undecodable image or
  // images on a text-only template.
  ModelResponse complete(const ModelRequest& request);

  // Renders `instruction_id` with `bindings`, appends `suffix` and calls.
  ModelResponse call(std::string_view instruction_id, const Bindings& bindings, const std::string& suffix = {},
                     std::vector<std::string> images = {});

  std::vector<CallRecord> calls() const;
  std::size_t call_count(std::string_view instruction_id) const;
  const Backend& backend() const noexcept { return *backend_; }
  DecodeParams decode_params() const noexcept { return decode_; }
  void set_decode_params(DecodeParams d) noexcept { decode_ = d; }

 private:
  void pace();

  std::shared_ptr<Backend> backend_;
  RetryPolicy retry_;
  double rpm_ = 0;
  Sleeper sleeper_;
  DecodeParams decode_;
  mutable std::mutex mu_;
  std::vector<CallRecord> calls_;
  std::chrono::steady_clock::time_point next_slot_{};
};

// Builds the backend named by the config (the mock reads its transcript).
std::shared_ptr<Backend> make_backend(const ModelConfig& config);

}  // namespace vgs::model
