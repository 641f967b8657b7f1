#pragma once

#include <chrono>
#include <optional>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include <json.hpp>

namespace vgs::pipeline {

enum class Category { Text, Image, Hyperlink };
enum class Cardinality { Single, List };

std::string_view to_string(Category c) noexcept;
std::optional<Category> parse_category(std::string_view s) noexcept;

// Modality from the attribute name, following the element-scanning
// prompt: link words give Hyperlink, picture words give Image, anything
// else is Text.
Category category_for(std::string_view attribute_name);

struct AttributeSpec {
  std::string name;
  Category category = Category::Text;
  std::optional<Cardinality> cardinality;
};

struct ExtractionQuery {
  std::string id;
  std::string text;
};

namespace stages {
inline constexpr std::string_view kAttributeIdentification = "attribute-identification";
inline constexpr std::string_view kGrounding = "grounding";
inline constexpr std::string_view kPinpointing = "pinpointing";
inline constexpr std::string_view kXPathSynthesis = "xpath-synthesis";
}  // namespace stages

enum class TraceStatus { Ok, Failed };

struct Trace {
  std::string attribute;  // empty for query-level stages
  std::string stage;
  TraceStatus status = TraceStatus::Ok;
  std::string detail;
};

nlohmann::json to_json(const Trace& t);
Trace trace_from_json(const nlohmann::json& j);

// Attribute -> XPath map plus provenance. Entries keep attribute order.
struct Wrapper {
  std::string query_id;
  std::string source_url;
  std::string generated_at;
  std::string method = "vgs";
  std::vector<std::pair<std::string, std::string>> entries;
  std::vector<Trace> traces;
  long long duration_ms = 0;

  const std::string* find(std::string_view attribute) const;
  bool has_failure() const;
};

nlohmann::ordered_json to_json(const Wrapper& w);
// Throws Error{SchemaViolation}.
Wrapper wrapper_from_json(const nlohmann::ordered_json& j);

// Timestamps and durations for run artifacts. A fixed clock reports the
// epoch and zero durations so outputs are byte-stable.
class Clock {
 public:
  Clock() = default;
  explicit Clock(bool fixed) : fixed_(fixed) {}
  bool fixed() const noexcept { return fixed_; }
  std::string timestamp() const;
  std::chrono::steady_clock::time_point start() const { return std::chrono::steady_clock::now(); }
  long long elapsed_ms(std::chrono::steady_clock::time_point since) const;

 private:
  bool fixed_ = false;
};

}  // namespace vgs::pipeline
