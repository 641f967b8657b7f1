#pragma once

#include <map>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "vgs/browser/session.hpp"
#include "vgs/eval/dataset.hpp"
#include "vgs/pipeline/types.hpp"

namespace vgs::eval {

// Trim and collapse whitespace runs; case is kept.
std::string normalize_value(std::string_view value);

struct PageExtraction {
  std::string url;
  std::map<std::string, std::vector<std::string>> values;
  std::optional<std::string> error;  // page could not be loaded
};

struct ExtractionResult {
  std::string sample_id;
  std::vector<std::string> attributes;  // wrapper order
  std::vector<PageExtraction> pages;
};

// Runs every wrapper entry on one open page. Values are normalized, and
// those of @href/@src expressions are resolved against the page base.
PageExtraction extract_page(browser::PageSession& session, const pipeline::Wrapper& wrapper);

// Loads each url of the sample and extracts. A page that fails to load is
// recorded with an error and empty values.
ExtractionResult apply_wrapper(const pipeline::Wrapper& wrapper, const Sample& sample, browser::Viewport viewport = {},
                               const browser::SessionOptions& options = {});

nlohmann::ordered_json to_json(const ExtractionResult& r);
ExtractionResult extraction_from_json(const nlohmann::json& j);

}  // namespace vgs::eval
