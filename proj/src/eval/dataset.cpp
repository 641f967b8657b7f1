#include "vgs/eval/dataset.hpp"

#include <filesystem>
#include <set>
#include <sstream>

#include "vgs/error.hpp"
#include "vgs/util/text.hpp"
#include "vgs/util/url.hpp"

namespace vgs::eval {

using nlohmann::json;

namespace {

[[noreturn]] void violation(const std::string& id, const std::string& field, const std::string& what) {
  throw Error(ErrorCode::SchemaViolation, "sample '" + id + "', " + field + ": " + what);
}

std::string required_string(const json& j, const std::string& id, const char* field) {
  if (!j.contains(field) || !j[field].is_string()) violation(id, field, "missing or not a string");
  return j[field].get<std::string>();
}

}  // namespace

std::string_view to_string(TaskType t) noexcept {
  switch (t) {
    case TaskType::I:
      return "I";
    case TaskType::II:
      return "II";
    case TaskType::III:
      return "III";
    case TaskType::IV:
      return "IV";
  }
  return "I";
}

std::optional<TaskType> parse_task_type(std::string_view s) noexcept {
  if (s == "I" || s == "1") return TaskType::I;
  if (s == "II" || s == "2") return TaskType::II;
  if (s == "III" || s == "3") return TaskType::III;
  if (s == "IV" || s == "4") return TaskType::IV;
  return std::nullopt;
}

const GoldAttribute* Sample::find_gold(std::string_view name) const {
  for (const auto& g : gold) {
    if (g.name == name) return &g;
  }
  return nullptr;
}

Sample parse_sample(const json& j, const std::string& base_url) {
  if (!j.is_object()) throw Error(ErrorCode::SchemaViolation, "sample is not a JSON object");
  Sample s;
  s.id = j.contains("id") && j["id"].is_string() ? j["id"].get<std::string>() : std::string("?");
  if (s.id == "?" || s.id.empty()) violation(s.id, "id", "missing or empty");
  s.website = j.value("website", std::string{});
  s.page_group = j.value("page_group", std::string{});
  const json tt = j.value("task_type", json());
  std::optional<TaskType> type;
  if (tt.is_string()) type = parse_task_type(tt.get<std::string>());
  if (tt.is_number_integer()) type = parse_task_type(std::to_string(tt.get<int>()));
  if (!type) violation(s.id, "task_type", "expected one of I, II, III, IV");
  s.task_type = *type;
  s.query.id = s.id;
  s.query.text = required_string(j, s.id, "query");
  if (!j.contains("urls") || !j["urls"].is_array()) violation(s.id, "urls", "missing or not a list");
  for (const auto& u : j["urls"]) {
    if (!u.is_string() || u.get<std::string>().empty()) violation(s.id, "urls", "entries must be non-empty strings");
    const std::string url = u.get<std::string>();
    s.urls.push_back(util::is_absolute_url(url) || base_url.empty() ? url : util::resolve_url(base_url, url));
  }
  if (!j.contains("gold") || !j["gold"].is_object()) violation(s.id, "gold", "missing or not an object");
  for (const auto& [name, g] : j["gold"].items()) {
    const std::string field = "gold." + name;
    if (!g.is_object()) violation(s.id, field, "not an object");
    GoldAttribute a;
    a.name = name;
    const auto cat = pipeline::parse_category(g.value("category", std::string{}));
    if (!cat) violation(s.id, field + ".category", "expected text, image or hyperlink");
    a.category = *cat;
    if (!g.contains("values_per_url") || !g["values_per_url"].is_array()) {
      violation(s.id, field + ".values_per_url", "missing or not a list");
    }
    for (const auto& list : g["values_per_url"]) {
      if (!list.is_array()) violation(s.id, field + ".values_per_url", "each entry must be a list");
      std::vector<std::string> values;
      for (const auto& v : list) {
        if (!v.is_string()) violation(s.id, field + ".values_per_url", "values must be strings");
        values.push_back(util::normalize_whitespace(v.get<std::string>()));
      }
      a.values_per_url.push_back(std::move(values));
    }
    s.gold.push_back(std::move(a));
  }
  validate_sample(s);
  return s;
}

void validate_sample(const Sample& s) {
  if (util::trim(s.query.text).empty()) violation(s.id, "query", "empty");
  if (s.urls.empty()) violation(s.id, "urls", "empty");
  if (s.gold.empty()) violation(s.id, "gold", "no attributes");
  std::set<std::string> names;
  for (const auto& g : s.gold) {
    if (util::trim(g.name).empty()) violation(s.id, "gold", "empty attribute name");
    if (!names.insert(util::to_lower(g.name)).second) violation(s.id, "gold." + g.name, "duplicate attribute");
    if (g.values_per_url.size() != s.urls.size()) {
      violation(s.id, "gold." + g.name + ".values_per_url",
                std::to_string(g.values_per_url.size()) + " lists for " + std::to_string(s.urls.size()) + " urls");
    }
  }
  const bool multi_attribute = s.gold.size() > 1;
  const bool single_value = s.task_type == TaskType::I || s.task_type == TaskType::II;
  const bool want_multi = s.task_type == TaskType::II || s.task_type == TaskType::IV;
  if (multi_attribute != want_multi) {
    violation(s.id, "gold", "type " + std::string(to_string(s.task_type)) + " needs " +
                                (want_multi ? "more than one attribute" : "exactly one attribute") + ", found " +
                                std::to_string(s.gold.size()));
  }
  if (single_value) {
    for (const auto& g : s.gold) {
      for (std::size_t u = 0; u < g.values_per_url.size(); ++u) {
        if (g.values_per_url[u].size() != 1) {
          violation(s.id, "gold." + g.name + ".values_per_url[" + std::to_string(u) + "]",
                    "type " + std::string(to_string(s.task_type)) + " needs exactly one value per url");
        }
      }
    }
  }
}

nlohmann::ordered_json to_json(const Sample& s) {
  nlohmann::ordered_json j;
  j["id"] = s.id;
  j["website"] = s.website;
  j["page_group"] = s.page_group;
  j["task_type"] = to_string(s.task_type);
  j["query"] = s.query.text;
  j["urls"] = s.urls;
  j["gold"] = nlohmann::ordered_json::object();
  for (const auto& g : s.gold) {
    j["gold"][g.name] = {{"category", pipeline::to_string(g.category)}, {"values_per_url", g.values_per_url}};
  }
  return j;
}

std::vector<Sample> parse_dataset(std::string_view jsonl, const std::string& base_url) {
  std::vector<Sample> out;
  std::istringstream in{std::string(jsonl)};
  std::string line;
  std::size_t number = 0;
  std::set<std::string> ids;
  while (std::getline(in, line)) {
    ++number;
    if (util::trim(line).empty()) continue;
    json j = json::parse(line, nullptr, false);
    if (j.is_discarded()) {
      throw Error(ErrorCode::SchemaViolation, "line " + std::to_string(number) + ": not valid JSON");
    }
    try {
      out.push_back(parse_sample(j, base_url));
    } catch (const Error& e) {
      throw Error(ErrorCode::SchemaViolation, "line " + std::to_string(number) + ": " +
                                                  std::string(e.what()).substr(to_string(e.code()).size() + 2));
    }
    if (!ids.insert(out.back().id).second) {
      throw Error(ErrorCode::SchemaViolation, "line " + std::to_string(number) + ": duplicate id '" + out.back().id + "'");
    }
  }
  return out;
}

std::vector<Sample> load_dataset(const std::string& path) {
  const std::string text = util::read_file(path);
  const std::string base = util::path_to_file_url(std::filesystem::absolute(path).lexically_normal().string());
  return parse_dataset(text, base);
}

}  // namespace vgs::eval
