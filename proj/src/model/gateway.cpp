#include "vgs/model/gateway.hpp"

#include <httplib.h>

#include <algorithm>
#include <cstdlib>
#include <thread>

#include "vgs/browser/raster.hpp"
#include "vgs/error.hpp"
#include "vgs/util/text.hpp"
#include "vgs/util/url.hpp"

namespace vgs::model {

using nlohmann::json;

namespace {

bool shape_ok(const json& j, Shape shape) {
  switch (shape) {
    case Shape::Object:
      return j.is_object();
    case Shape::Array:
      return j.is_array();
    case Shape::Any:
      return true;
  }
  return false;
}

// Drops `#` comments and trailing commas outside string literals.
std::string strip_annotations(std::string_view s) {
  std::string out;
  bool in_string = false;
  for (std::size_t i = 0; i < s.size(); ++i) {
    const char c = s[i];
    if (in_string) {
      out.push_back(c);
      if (c == '\\' && i + 1 < s.size()) {
        out.push_back(s[++i]);
      } else if (c == '"') {
        in_string = false;
      }
      continue;
    }
    if (c == '"') {
      in_string = true;
      out.push_back(c);
    } else if (c == '#') {
      while (i + 1 < s.size() && s[i + 1] != '\n') ++i;
    } else {
      out.push_back(c);
    }
  }
  std::string cleaned;
  in_string = false;
  for (std::size_t i = 0; i < out.size(); ++i) {
    const char c = out[i];
    if (in_string) {
      cleaned.push_back(c);
      if (c == '\\' && i + 1 < out.size()) {
        cleaned.push_back(out[++i]);
      } else if (c == '"') {
        in_string = false;
      }
      continue;
    }
    if (c == '"') in_string = true;
    if (c == ',') {
      std::size_t j = i + 1;
      while (j < out.size() && util::is_space(out[j])) ++j;
      if (j < out.size() && (out[j] == '}' || out[j] == ']')) continue;
    }
    cleaned.push_back(c);
  }
  return cleaned;
}

std::optional<json> try_parse(std::string_view text, Shape shape) {
  for (int pass = 0; pass < 2; ++pass) {
    const std::string candidate = pass == 0 ? std::string(text) : strip_annotations(text);
    json j = json::parse(candidate, nullptr, false);
    if (!j.is_discarded() && shape_ok(j, shape)) return j;
  }
  return std::nullopt;
}

std::optional<std::string_view> first_fence(std::string_view raw) {
  const auto open = raw.find("```");
  if (open == std::string_view::npos) return std::nullopt;
  auto body = raw.find('\n', open + 3);
  if (body == std::string_view::npos) return std::nullopt;
  ++body;
  const auto close = raw.find("```", body);
  if (close == std::string_view::npos) return std::nullopt;
  return raw.substr(body, close - body);
}

// First balanced run opened by one of `openers`, skipping string contents.
std::optional<std::string_view> first_balanced(std::string_view raw, std::string_view openers) {
  const auto start = raw.find_first_of(openers);
  if (start == std::string_view::npos) return std::nullopt;
  std::vector<char> stack;
  bool in_string = false;
  for (std::size_t i = start; i < raw.size(); ++i) {
    const char c = raw[i];
    if (in_string) {
      if (c == '\\') {
        ++i;
      } else if (c == '"') {
        in_string = false;
      }
      continue;
    }
    if (c == '"') {
      in_string = true;
    } else if (c == '{' || c == '[') {
      stack.push_back(c == '{' ? '}' : ']');
    } else if (c == '}' || c == ']') {
      if (stack.empty() || stack.back() != c) return std::nullopt;
      stack.pop_back();
      if (stack.empty()) return raw.substr(start, i - start + 1);
    }
  }
  return std::nullopt;
}

std::vector<TranscriptEntry> entries_from(const json& list) {
  if (!list.is_array()) throw Error(ErrorCode::TranscriptMismatch, "transcript must be a list of entries");
  std::vector<TranscriptEntry> out;
  for (const auto& e : list) {
    if (!e.is_object() || !e.contains("instruction_id") || !e.contains("response_text")) {
      throw Error(ErrorCode::TranscriptMismatch, "transcript entry needs instruction_id and response_text");
    }
    out.push_back({e["instruction_id"].get<std::string>(), e["response_text"].get<std::string>()});
  }
  return out;
}

}  // namespace

std::optional<json> recover_json(std::string_view raw, Shape shape, std::string* error) {
  if (auto j = try_parse(util::trim(raw), shape)) return j;
  if (auto fence = first_fence(raw)) {
    if (auto j = try_parse(util::trim(*fence), shape)) return j;
  }
  const std::string_view openers = shape == Shape::Object ? "{" : shape == Shape::Array ? "[" : "{[";
  if (auto run = first_balanced(raw, openers)) {
    if (auto j = try_parse(*run, shape)) return j;
  }
  if (error) {
    const char* want = shape == Shape::Object ? "a JSON object" : shape == Shape::Array ? "a JSON list" : "JSON";
    *error = std::string("no recoverable ") + want + " in model reply";
  }
  return std::nullopt;
}

Transcript Transcript::from_json(const json& j) {
  Transcript t;
  if (j.is_array()) {
    t.single_ = entries_from(j);
  } else if (j.is_object()) {
    t.keyed_ = true;
    for (const auto& [key, list] : j.items()) t.by_sample_.emplace_back(key, entries_from(list));
  } else {
    throw Error(ErrorCode::TranscriptMismatch, "transcript must be a list or an object keyed by sample id");
  }
  return t;
}

Transcript Transcript::load(const std::string& path) {
  std::string text;
  try {
    text = util::read_file(path);
  } catch (const std::exception& e) {
    throw Error(ErrorCode::TranscriptExhausted, "cannot read transcript " + path + ": " + e.what());
  }
  json j = json::parse(text, nullptr, false);
  if (j.is_discarded()) throw Error(ErrorCode::TranscriptMismatch, path + " is not valid JSON");
  return from_json(j);
}

std::vector<TranscriptEntry> Transcript::entries_for(const std::string& sample_id) const {
  if (!keyed_) return single_;
  for (const auto& [key, list] : by_sample_) {
    if (key == sample_id) return list;
  }
  throw Error(ErrorCode::TranscriptExhausted, "transcript has no entries for sample '" + sample_id + "'");
}

std::vector<std::string> Transcript::keys() const {
  std::vector<std::string> out;
  for (const auto& [key, list] : by_sample_) out.push_back(key);
  return out;
}

MockBackend::MockBackend(std::vector<TranscriptEntry> entries) : entries_(entries.begin(), entries.end()) {}

std::string MockBackend::complete(const ModelRequest& request) {
  std::lock_guard lock(mu_);
  if (entries_.empty()) {
    throw Error(ErrorCode::TranscriptExhausted, "no scripted reply left for " + request.instruction_id);
  }
  if (entries_.front().instruction_id != request.instruction_id) {
    throw Error(ErrorCode::TranscriptMismatch, "expected a " + entries_.front().instruction_id +
                                                   " request, got " + request.instruction_id);
  }
  std::string reply = std::move(entries_.front().response_text);
  entries_.pop_front();
  return reply;
}

std::size_t MockBackend::remaining() const {
  std::lock_guard lock(mu_);
  return entries_.size();
}

ModelConfig ModelConfig::load(const std::string& path) {
  ModelConfig c;
  if (!path.empty()) {
    json j = json::parse(util::read_file(path), nullptr, false);
    if (j.is_discarded() || !j.is_object()) throw Error(ErrorCode::Usage, path + " is not a JSON object");
    c.backend = j.value("backend", c.backend);
    c.endpoint = j.value("endpoint", c.endpoint);
    c.model = j.value("model", c.model);
    c.api_key = j.value("api_key", c.api_key);
    c.decode.temperature = j.value("temperature", c.decode.temperature);
    c.decode.max_output_tokens = j.value("max_output_tokens", c.decode.max_output_tokens);
    c.max_attempts = j.value("max_attempts", c.max_attempts);
    c.initial_backoff = std::chrono::milliseconds(j.value("initial_backoff_ms", c.initial_backoff.count()));
    c.requests_per_minute = j.value("requests_per_minute", c.requests_per_minute);
    c.timeout_seconds = j.value("timeout_seconds", c.timeout_seconds);
    c.transcript_path = j.value("transcript", c.transcript_path);
  }
  if (const char* v = std::getenv("VGS_MODEL_ENDPOINT"); v && *v) c.endpoint = v;
  if (const char* v = std::getenv("VGS_MODEL_API_KEY"); v && *v) c.api_key = v;
  if (const char* v = std::getenv("VGS_MODEL_NAME"); v && *v) c.model = v;
  return c;
}

json ModelConfig::to_json(bool include_secrets) const {
  json j = {{"backend", backend},
            {"endpoint", endpoint},
            {"model", model},
            {"temperature", decode.temperature},
            {"max_output_tokens", decode.max_output_tokens},
            {"max_attempts", max_attempts},
            {"initial_backoff_ms", initial_backoff.count()},
            {"requests_per_minute", requests_per_minute},
            {"timeout_seconds", timeout_seconds}};
  if (!transcript_path.empty()) j["transcript"] = transcript_path;
  if (include_secrets) j["api_key"] = api_key;
  return j;
}

OpenAiBackend::OpenAiBackend(ModelConfig config) : config_(std::move(config)) {}

json OpenAiBackend::request_body(const ModelRequest& request) const {
  json content = json::array();
  content.push_back({{"type", "text"}, {"text", request.rendered_text}});
  for (const auto& png : request.images) {
    content.push_back(
        {{"type", "image_url"}, {"image_url", {{"url", "data:image/png;base64," + util::base64_encode(png)}}}});
  }
  return {{"model", config_.model},
          {"temperature", request.decode_params.temperature},
          {"max_tokens", request.decode_params.max_output_tokens},
          {"messages", json::array({{{"role", "user"}, {"content", content}}})}};
}

std::string OpenAiBackend::complete(const ModelRequest& request) {
  const auto parts = util::parse_url(config_.endpoint);
  if (!parts || !parts->authority) {
    throw Error(ErrorCode::BackendRejected, "bad model endpoint '" + config_.endpoint + "'");
  }
  httplib::Client client(parts->scheme + "://" + *parts->authority);
  client.set_read_timeout(config_.timeout_seconds, 0);
  client.set_write_timeout(config_.timeout_seconds, 0);
  client.set_connection_timeout(10, 0);
  httplib::Headers headers;
  if (!config_.api_key.empty()) headers.emplace("Authorization", "Bearer " + config_.api_key);
  std::string path = parts->path;
  while (!path.empty() && path.back() == '/') path.pop_back();
  auto res = client.Post(path + "/chat/completions", headers, request_body(request).dump(), "application/json");
  if (!res) throw TransientFailure("model endpoint: " + httplib::to_string(res.error()));
  const int status = res->status;
  if (status == 429 || status >= 500) {
    if (status == 429 && res->body.find("insufficient_quota") != std::string::npos) {
      throw Error(ErrorCode::BackendRejected, "quota exhausted");
    }
    throw TransientFailure("model endpoint returned HTTP " + std::to_string(status));
  }
  if (status >= 400) {
    throw Error(ErrorCode::BackendRejected, "HTTP " + std::to_string(status) + ": " + res->body.substr(0, 300));
  }
  json reply = json::parse(res->body, nullptr, false);
  if (reply.is_discarded()) throw TransientFailure("model endpoint sent a non-JSON body");
  try {
    const json& content = reply.at("choices").at(0).at("message").at("content");
    return content.is_string() ? content.get<std::string>() : std::string{};
  } catch (const json::exception&) {
    throw TransientFailure("model reply has no choices[0].message.content");
  }
}

Gateway::Gateway(std::shared_ptr<Backend> backend, RetryPolicy retry, double requests_per_minute, Sleeper sleeper)
    : backend_(std::move(backend)), retry_(retry), rpm_(requests_per_minute), sleeper_(std::move(sleeper)) {
  if (!sleeper_) sleeper_ = [](std::chrono::milliseconds d) { std::this_thread::sleep_for(d); };
  if (retry_.max_attempts < 1) retry_.max_attempts = 1;
}

void Gateway::pace() {
  if (rpm_ <= 0) return;
  const auto interval = std::chrono::duration_cast<std::chrono::steady_clock::duration>(
      std::chrono::duration<double>(60.0 / rpm_));
  std::chrono::steady_clock::duration wait{};
  {
    std::lock_guard lock(mu_);
    const auto now = std::chrono::steady_clock::now();
    const auto slot = std::max(now, next_slot_);
    wait = slot - now;
    next_slot_ = slot + interval;
  }
  if (wait.count() > 0) sleeper_(std::chrono::duration_cast<std::chrono::milliseconds>(wait));
}

ModelResponse Gateway::complete(const ModelRequest& request) {
  const TemplateInfo& info = template_info(request.instruction_id);
  if (request.rendered_text.empty()) {
    throw Error(ErrorCode::PreconditionViolation, "empty prompt for " + request.instruction_id);
  }
  if (!request.images.empty() && !info.vision) {
    throw Error(ErrorCode::PreconditionViolation, request.instruction_id + " does not take screenshots");
  }
  for (const auto& png : request.images) {
    try {
      browser::decode_png(png);
    } catch (const Error& e) {
      throw Error(ErrorCode::PreconditionViolation, std::string("undecodable screenshot: ") + e.what());
    }
  }

  std::string raw;
  int attempt = 0;
  std::chrono::milliseconds backoff = retry_.initial_backoff;
  for (;;) {
    ++attempt;
    pace();
    try {
      raw = backend_->complete(request);
      break;
    } catch (const TransientFailure& e) {
      if (attempt >= retry_.max_attempts) {
        throw Error(ErrorCode::TransportExhausted,
                    std::to_string(attempt) + " attempts failed for " + request.instruction_id + ": " + e.what());
      }
      sleeper_(backoff);
      backoff *= 2;
    }
  }
  {
    std::lock_guard lock(mu_);
    calls_.push_back({request.instruction_id, request.images.size(), attempt});
  }

  ModelResponse out;
  out.raw_text = raw;
  std::string error;
  out.parsed = recover_json(raw, info.shape, &error);
  if (!out.parsed) out.parse_error = error;
  return out;
}

ModelResponse Gateway::call(std::string_view instruction_id, const Bindings& bindings, const std::string& suffix,
                            std::vector<std::string> images) {
  ModelRequest req;
  req.instruction_id = std::string(instruction_id);
  req.rendered_text = render_template(instruction_id, bindings) + suffix;
  req.images = std::move(images);
  req.decode_params = decode_;
  return complete(req);
}

std::vector<CallRecord> Gateway::calls() const {
  std::lock_guard lock(mu_);
  return calls_;
}

std::size_t Gateway::call_count(std::string_view instruction_id) const {
  std::lock_guard lock(mu_);
  return static_cast<std::size_t>(std::count_if(calls_.begin(), calls_.end(), [&](const CallRecord& c) {
    return c.instruction_id == instruction_id;
  }));
}

std::shared_ptr<Backend> make_backend(const ModelConfig& config) {
  if (config.backend == "mock") {
    if (config.transcript_path.empty()) throw Error(ErrorCode::Usage, "mock backend needs a transcript");
    return std::make_shared<MockBackend>(Transcript::load(config.transcript_path).entries_for(""));
  }
  if (config.backend == "openai") return std::make_shared<OpenAiBackend>(config);
  throw Error(ErrorCode::Usage, "unknown model backend '" + config.backend + "'");
}

}  // namespace vgs::model
