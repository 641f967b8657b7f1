#include "vgs/model/templates.hpp"

#include <algorithm>
#include <utility>

#include "vgs/error.hpp"

namespace vgs::model {

namespace detail {
const std::vector<std::pair<std::string_view, std::string_view>>& embedded_prompts();
}

namespace {

Shape shape_of(std::string_view id) { return id == ids::kElementSelection ? Shape::Array : Shape::Object; }

bool vision_of(std::string_view id) {
  return id == ids::kVisualGrounding || id == ids::kElementScanning || id == ids::kElementSelection ||
         id == ids::kXPathSynthesis;
}

const std::vector<TemplateInfo>& registry() {
  static const std::vector<TemplateInfo> k = [] {
    std::vector<TemplateInfo> out;
    for (const auto& [id, text] : detail::embedded_prompts()) out.push_back({id, text, shape_of(id), vision_of(id)});
    return out;
  }();
  return k;
}

// Length of a `{digits}` placeholder at `i`, or 0.
std::size_t placeholder_at(std::string_view text, std::size_t i) {
  if (text[i] != '{') return 0;
  std::size_t j = i + 1;
  while (j < text.size() && text[j] >= '0' && text[j] <= '9') ++j;
  if (j == i + 1 || j >= text.size() || text[j] != '}') return 0;
  return j - i + 1;
}

}  // namespace

const TemplateInfo& template_info(std::string_view id) {
  for (const auto& t : registry()) {
    if (t.id == id) return t;
  }
  throw Error(ErrorCode::UnknownTemplate, "no template '" + std::string(id) + "'");
}

std::vector<std::string_view> template_ids() {
  std::vector<std::string_view> out;
  for (const auto& t : registry()) out.push_back(t.id);
  return out;
}

std::vector<int> placeholders(std::string_view text) {
  std::vector<int> out;
  for (std::size_t i = 0; i < text.size(); ++i) {
    const std::size_t len = placeholder_at(text, i);
    if (!len) continue;
    const int n = std::stoi(std::string(text.substr(i + 1, len - 2)));
    if (std::find(out.begin(), out.end(), n) == out.end()) out.push_back(n);
    i += len - 1;
  }
  return out;
}

std::string render(std::string_view text, const Bindings& bindings) {
  std::string out;
  out.reserve(text.size());
  for (std::size_t i = 0; i < text.size(); ++i) {
    const std::size_t len = placeholder_at(text, i);
    if (!len) {
      out.push_back(text[i]);
      continue;
    }
    const std::string key(text.substr(i + 1, len - 2));
    const auto it = bindings.find(key);
    if (it == bindings.end()) throw Error(ErrorCode::MissingBinding, "placeholder {" + key + "} has no binding");
    out += it->second;
    i += len - 1;
  }
  return out;
}

std::string render_template(std::string_view id, const Bindings& bindings) {
  return render(template_info(id).text, bindings);
}

}  // namespace vgs::model
