#pragma once

#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

#include "vgs/pipeline/types.hpp"

namespace vgs::eval {

// Attribute count x value cardinality: I single/single, II multi/single,
// III single/list, IV multi/list.
enum class TaskType { I, II, III, IV };

std::string_view to_string(TaskType t) noexcept;
std::optional<TaskType> parse_task_type(std::string_view s) noexcept;

struct GoldAttribute {
  std::string name;
  pipeline::Category category = pipeline::Category::Text;
  std::vector<std::vector<std::string>> values_per_url;
};

struct Sample {
  std::string id;
  std::string website;
  std::string page_group;
  TaskType task_type = TaskType::I;
  pipeline::ExtractionQuery query;
  std::vector<std::string> urls;  // first one generates the wrapper
  std::vector<GoldAttribute> gold;

  const GoldAttribute* find_gold(std::string_view name) const;
};

// Parses one dataset line. Relative urls are resolved against `base_url`.
// Throws Error{SchemaViolation} naming the sample and field.
Sample parse_sample(const nlohmann::json& j, const std::string& base_url = {});

// Checks the shape rules for the sample's task type. Throws
// Error{SchemaViolation}.
void validate_sample(const Sample& s);

nlohmann::ordered_json to_json(const Sample& s);

// JSON Lines, one sample per line; blank lines are skipped. Throws
// Error{IoFailure} or Error{SchemaViolation} (with line number).
std::vector<Sample> load_dataset(const std::string& path);
std::vector<Sample> parse_dataset(std::string_view jsonl, const std::string& base_url = {});

}  // namespace vgs::eval
