#include "vgs/pipeline/types.hpp"

#include <array>
#include <ctime>

#include "vgs/error.hpp"
#include "vgs/util/text.hpp"

namespace vgs::pipeline {

using nlohmann::json;

std::string_view to_string(Category c) noexcept {
  switch (c) {
    case Category::Text:
      return "text";
    case Category::Image:
      return "image";
    case Category::Hyperlink:
      return "hyperlink";
  }
  return "text";
}

std::optional<Category> parse_category(std::string_view s) noexcept {
  if (s == "text") return Category::Text;
  if (s == "image") return Category::Image;
  if (s == "hyperlink") return Category::Hyperlink;
  return std::nullopt;
}

Category category_for(std::string_view attribute_name) {
  static constexpr std::array<std::string_view, 4> kLink = {"link", "href", "url", "hyperlink"};
  static constexpr std::array<std::string_view, 14> kImage = {
      "image", "img", "photo", "picture", "logo", "icon", "thumbnail",
      "poster", "cover", "banner", "fanart", "flag", "avatar", "artwork"};
  std::string words = util::to_lower(attribute_name);
  for (char& c : words) {
    if (!((c >= 'a' && c <= 'z') || (c >= '0' && c <= '9'))) c = ' ';
  }
  const auto tokens = util::split_whitespace(words);
  auto any_of = [&](const auto& list) {
    for (const auto& t : tokens) {
      for (const auto& w : list) {
        if (t == w || t == std::string(w) + "s") return true;
      }
    }
    return false;
  };
  if (any_of(kLink)) return Category::Hyperlink;
  if (any_of(kImage)) return Category::Image;
  return Category::Text;
}

json to_json(const Trace& t) {
  json j = {{"stage", t.stage}, {"status", t.status == TraceStatus::Ok ? "ok" : "failed"}, {"detail", t.detail}};
  if (!t.attribute.empty()) j["attribute"] = t.attribute;
  return j;
}

Trace trace_from_json(const json& j) {
  if (!j.is_object() || !j.contains("stage") || !j.contains("status")) {
    throw Error(ErrorCode::SchemaViolation, "trace needs stage and status");
  }
  Trace t;
  t.attribute = j.value("attribute", std::string{});
  t.stage = j["stage"].get<std::string>();
  t.status = j["status"].get<std::string>() == "ok" ? TraceStatus::Ok : TraceStatus::Failed;
  t.detail = j.value("detail", std::string{});
  return t;
}

const std::string* Wrapper::find(std::string_view attribute) const {
  for (const auto& [name, xpath] : entries) {
    if (name == attribute) return &xpath;
  }
  return nullptr;
}

bool Wrapper::has_failure() const {
  for (const auto& t : traces) {
    if (t.status == TraceStatus::Failed) return true;
  }
  return false;
}

nlohmann::ordered_json to_json(const Wrapper& w) {
  nlohmann::ordered_json j;
  j["query_id"] = w.query_id;
  j["source_url"] = w.source_url;
  j["generated_at"] = w.generated_at;
  j["method"] = w.method;
  j["duration_ms"] = w.duration_ms;
  j["entries"] = nlohmann::ordered_json::object();
  for (const auto& [name, xpath] : w.entries) j["entries"][name] = xpath;
  j["traces"] = nlohmann::ordered_json::array();
  for (const auto& t : w.traces) j["traces"].push_back(nlohmann::ordered_json::parse(to_json(t).dump()));
  return j;
}

Wrapper wrapper_from_json(const nlohmann::ordered_json& j) {
  if (!j.is_object() || !j.contains("entries") || !j["entries"].is_object()) {
    throw Error(ErrorCode::SchemaViolation, "wrapper needs an entries object");
  }
  Wrapper w;
  w.query_id = j.value("query_id", std::string{});
  w.source_url = j.value("source_url", std::string{});
  w.generated_at = j.value("generated_at", std::string{});
  w.method = j.value("method", std::string("vgs"));
  w.duration_ms = j.value("duration_ms", 0LL);
  for (const auto& [name, xpath] : j["entries"].items()) {
    if (!xpath.is_string()) throw Error(ErrorCode::SchemaViolation, "entry '" + name + "' is not a string");
    w.entries.emplace_back(name, xpath.get<std::string>());
  }
  if (j.contains("traces")) {
    for (const auto& t : j["traces"]) w.traces.push_back(trace_from_json(t));
  }
  return w;
}

std::string Clock::timestamp() const {
  if (fixed_) return "1970-01-01T00:00:00Z";
  const std::time_t now = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
  std::tm tm{};
  gmtime_r(&now, &tm);
  char buf[32];
  std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buf;
}

long long Clock::elapsed_ms(std::chrono::steady_clock::time_point since) const {
  if (fixed_) return 0;
  return std::chrono::duration_cast<std::chrono::milliseconds>(std::chrono::steady_clock::now() - since).count();
}

}  // namespace vgs::pipeline
