#pragma once

#include <map>
#include <string>
#include <string_view>
#include <vector>

namespace vgs::model {

// Registered prompt identifiers.
namespace ids {
inline constexpr std::string_view kAttributeIdentification = "vgs_attribute_identification";
inline constexpr std::string_view kVisualGrounding = "vgs_visual_grounding";
inline constexpr std::string_view kElementScanning = "vgs_element_scanning";
inline constexpr std::string_view kElementSelection = "vgs_element_selection";
inline constexpr std::string_view kXPathSynthesis = "vgs_xpath_synthesis";
inline constexpr std::string_view kCotTopDown = "cot_top_down";
inline constexpr std::string_view kCotSynthesis = "cot_synthesis";
inline constexpr std::string_view kReflexionTopDown = "reflexion_top_down";
inline constexpr std::string_view kReflexionSelfReflection = "reflexion_self_reflection";
inline constexpr std::string_view kReflexionSynthesis = "reflexion_synthesis";
inline constexpr std::string_view kAutoScraperTopDown = "autoscraper_top_down";
inline constexpr std::string_view kAutoScraperStepBack = "autoscraper_step_back";
inline constexpr std::string_view kAutoScraperSynthesis = "autoscraper_synthesis";
inline constexpr std::string_view kLlmExtractor = "llm_extractor";
inline constexpr std::string_view kAlignmentJudge = "alignment_judge";
}  // namespace ids

// The JSON value a template asks the model for.
enum class Shape { Object, Array, Any };

struct TemplateInfo {
  std::string_view id;
  std::string_view text;  // stored bytes
  Shape shape = Shape::Object;
  bool vision = false;  // requests may carry screenshots
};

using Bindings = std::map<std::string, std::string>;

// Throws Error{UnknownTemplate}.
const TemplateInfo& template_info(std::string_view id);
std::vector<std::string_view> template_ids();

// Indices of `{N}` placeholders in first-appearance order (each once).
std::vector<int> placeholders(std::string_view text);

// Substitutes every `{N}` with bindings["N"] verbatim in one pass; other
// braces are literal. Throws Error{MissingBinding}.
std::string render(std::string_view text, const Bindings& bindings);
std::string render_template(std::string_view id, const Bindings& bindings);

}  // namespace vgs::model
