#pragma once

#include <string>
#include <vector>

#include "vgs/browser/session.hpp"
#include "vgs/html/tools.hpp"
#include "vgs/model/gateway.hpp"
#include "vgs/overlay/marker.hpp"
#include "vgs/pipeline/types.hpp"

namespace vgs::pipeline {

struct VgsConfig {
  browser::Viewport viewport;
  int segment_distance = html::kDefaultSegmentDistance;
  std::size_t candidate_cap = 50;
  int retry_budget = 1;  // synthesis retries after the first attempt
  browser::SessionOptions session;
  Clock clock;
};

struct ScanResult {
  std::vector<std::string> texts;
  std::vector<std::string> tags;
  bool repaired = false;  // the reply mixed modalities and was cut back
};

struct PinpointResult {
  AttributeSpec attribute;
  std::vector<overlay::Candidate> offered;   // labels shown to the selector
  std::vector<overlay::Candidate> selected;  // subset of offered
  overlay::MarkedScreenshot marked_region;   // selection re-marked from 1
  std::vector<std::string> notes;
};

// Prompt text appended after each VGS template.
std::string identification_input(const ExtractionQuery& query);
std::string grounding_input(const AttributeSpec& attribute, const std::vector<browser::Region>& regions);
std::string scanning_input(const AttributeSpec& attribute);
std::string selection_input(const AttributeSpec& attribute, const std::vector<overlay::Candidate>& offered);
std::string synthesis_input(const AttributeSpec& attribute, const std::vector<html::HtmlSegment>& segments);

// Region identifiers as offered to the grounding model.
std::string region_id(int index);
// Accepts "region_N", "N" or a bare integer. Returns -1 when unreadable.
int parse_region_id(const nlohmann::json& value);

// Throws Error{EmptyDecomposition} or Error{ModelParseFailure}.
std::vector<AttributeSpec> identify_attributes(model::Gateway& gateway, const ExtractionQuery& query);

// Throws Error{UnknownRegionId} or Error{ModelParseFailure}.
int ground_attribute(model::Gateway& gateway, const AttributeSpec& attribute,
                     const std::vector<browser::Region>& regions);

// Throws Error{EmptyScan} or Error{ModelParseFailure}.
ScanResult scan_region(model::Gateway& gateway, const AttributeSpec& attribute, const browser::Region& region);

// Scans, enumerates and marks candidates, asks the selector and re-marks
// the selection. Marks are cleared before returning. Throws
// Error{NoCandidates} or Error{EmptySelection}.
PinpointResult pinpoint(model::Gateway& gateway, overlay::Marker& marker, browser::PageSession& session,
                        const AttributeSpec& attribute, const browser::Region& region,
                        std::size_t candidate_cap = 50);

// Adds the source suffix image and hyperlink xpaths need (/@src, /@href).
std::string apply_category_suffix(std::string xpath, Category category);

// Local segments around each selected element, then one synthesis call
// (plus retries with the failure appended). Throws
// Error{SynthesisFailed} or Error{ModelParseFailure}.
std::string synthesize_xpath(model::Gateway& gateway, browser::PageSession& session, const PinpointResult& pin,
                             int d = html::kDefaultSegmentDistance, int retry_budget = 1);

// Whole pipeline over an open session. Per-attribute failures become
// failed traces. Throws Error{AllAttributesFailed} when nothing succeeded
// (the partial wrapper is attached to the exception's traces via
// `failed_wrapper` when non-null).
Wrapper run_vgs(model::Gateway& gateway, overlay::Marker& marker, browser::PageSession& session,
                const ExtractionQuery& query, const VgsConfig& config = {}, Wrapper* failed_wrapper = nullptr);

// Opens `url` and runs the pipeline. Throws Error{NavigationFailed}.
Wrapper run_vgs(model::Gateway& gateway, const ExtractionQuery& query, const std::string& url,
                const VgsConfig& config = {}, Wrapper* failed_wrapper = nullptr);

}  // namespace vgs::pipeline
