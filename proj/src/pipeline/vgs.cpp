#include "vgs/pipeline/vgs.hpp"

#include <algorithm>
#include <set>

#include "vgs/error.hpp"
#include "vgs/html/xpath.hpp"
#include "vgs/util/text.hpp"

namespace vgs::pipeline {

using nlohmann::json;
namespace ids = model::ids;

namespace {

const json& parsed_or_throw(const model::ModelResponse& r, std::string_view what) {
  if (!r.parsed) {
    throw Error(ErrorCode::ModelParseFailure, std::string(what) + ": " + r.parse_error.value_or("no JSON"));
  }
  return *r.parsed;
}

std::vector<std::string> string_list(const json& j) {
  std::vector<std::string> out;
  if (!j.is_array()) return out;
  for (const auto& v : j) {
    if (v.is_string()) {
      out.push_back(v.get<std::string>());
    } else if (!v.is_null()) {
      out.push_back(v.dump());
    }
  }
  return out;
}

std::vector<std::string> screenshot_png(const browser::Raster& r) { return {browser::encode_png(r)}; }

std::vector<overlay::Candidate> relabel(std::vector<overlay::Candidate> cands) {
  int next = 1;
  for (auto& c : cands) c.label = next++;
  return cands;
}

void fail(Wrapper& w, const std::string& attribute, std::string_view stage, const std::exception& e) {
  w.traces.push_back({attribute, std::string(stage), TraceStatus::Failed, e.what()});
}

void ok(Wrapper& w, const std::string& attribute, std::string_view stage, std::string detail) {
  w.traces.push_back({attribute, std::string(stage), TraceStatus::Ok, std::move(detail)});
}

}  // namespace

std::string identification_input(const ExtractionQuery& query) { return "\n\nUser request: " + query.text; }

std::string grounding_input(const AttributeSpec& attribute, const std::vector<browser::Region>& regions) {
  std::string out = "\n\nTarget attribute: " + attribute.name + "\nRegions (one screenshot each, in order):";
  for (const auto& r : regions) {
    out += "\n- " + region_id(r.index) + ": page rows " + std::to_string(r.y_offset) + " to " +
           std::to_string(r.y_offset + r.height);
  }
  return out;
}

std::string scanning_input(const AttributeSpec& attribute) { return "\n\nAttribute: " + attribute.name; }

std::string selection_input(const AttributeSpec& attribute, const std::vector<overlay::Candidate>& offered) {
  std::string out = "\n\nTarget attribute: " + attribute.name + "\nLabels in the screenshot:";
  for (const auto& c : offered) out += " " + std::to_string(c.label);
  return out;
}

std::string synthesis_input(const AttributeSpec& attribute, const std::vector<html::HtmlSegment>& segments) {
  std::string out = "\n\nTarget attribute: " + attribute.name + "\n\nHTML segments:";
  for (std::size_t i = 0; i < segments.size(); ++i) {
    out += "\n[" + std::to_string(i + 1) + "] " + segments[i].anchor_xpath + "\n" + segments[i].content;
  }
  return out;
}

std::string region_id(int index) { return "region_" + std::to_string(index); }

int parse_region_id(const json& value) {
  if (value.is_number_integer()) return value.get<int>();
  if (!value.is_string()) return -1;
  std::string s = util::trim(value.get<std::string>());
  if (util::starts_with(util::to_lower(s), "region_")) s = s.substr(7);
  if (s.empty() || s.size() > 9 || !std::all_of(s.begin(), s.end(), [](char c) { return c >= '0' && c <= '9'; })) {
    return -1;
  }
  return std::stoi(s);
}

std::vector<AttributeSpec> identify_attributes(model::Gateway& gateway, const ExtractionQuery& query) {
  if (util::trim(query.text).empty()) throw Error(ErrorCode::EmptyDecomposition, "empty query");
  const auto r = gateway.call(ids::kAttributeIdentification, {}, identification_input(query));
  const json& j = parsed_or_throw(r, "attribute identification");
  std::vector<AttributeSpec> out;
  std::set<std::string> seen;
  for (const auto& name : string_list(j.value("attributes", json::array()))) {
    const std::string n = util::normalize_whitespace(name);
    if (n.empty() || !seen.insert(n).second) continue;
    out.push_back({n, category_for(n), std::nullopt});
  }
  if (out.empty()) throw Error(ErrorCode::EmptyDecomposition, "model returned no attributes");
  return out;
}

int ground_attribute(model::Gateway& gateway, const AttributeSpec& attribute,
                     const std::vector<browser::Region>& regions) {
  if (regions.empty()) throw Error(ErrorCode::PreconditionViolation, "no regions to ground in");
  std::vector<std::string> images;
  for (const auto& r : regions) {
    if (!r.screenshot) throw Error(ErrorCode::PreconditionViolation, region_id(r.index) + " has no screenshot");
    images.push_back(browser::encode_png(*r.screenshot));
  }
  const auto resp = gateway.call(ids::kVisualGrounding, {}, grounding_input(attribute, regions), std::move(images));
  const json& j = parsed_or_throw(resp, "grounding");
  const json value = j.contains("matching_region") ? j["matching_region"] : json();
  const int index = parse_region_id(value);
  for (const auto& r : regions) {
    if (r.index == index) return index;
  }
  throw Error(ErrorCode::UnknownRegionId, "model chose " + value.dump() + ", offered " + region_id(regions.front().index) +
                                              ".." + region_id(regions.back().index));
}

ScanResult scan_region(model::Gateway& gateway, const AttributeSpec& attribute, const browser::Region& region) {
  if (!region.screenshot) throw Error(ErrorCode::PreconditionViolation, region_id(region.index) + " has no screenshot");
  const auto resp =
      gateway.call(ids::kElementScanning, {}, scanning_input(attribute), screenshot_png(*region.screenshot));
  const json& j = parsed_or_throw(resp, "element scanning");
  ScanResult out;
  for (auto& t : string_list(j.value("texts", json::array()))) {
    t = util::normalize_whitespace(t);
    if (!t.empty() && std::find(out.texts.begin(), out.texts.end(), t) == out.texts.end()) out.texts.push_back(t);
  }
  for (auto& t : string_list(j.value("tags", json::array()))) {
    t = util::to_lower(util::trim(t));
    if (!t.empty() && std::find(out.tags.begin(), out.tags.end(), t) == out.tags.end()) out.tags.push_back(t);
  }
  if (attribute.category == Category::Text && !out.tags.empty()) {
    out.tags.clear();
    out.repaired = true;
  } else if (attribute.category != Category::Text && !out.texts.empty()) {
    out.texts.clear();
    out.repaired = true;
  }
  if (out.texts.empty() && out.tags.empty()) {
    throw Error(ErrorCode::EmptyScan, "nothing usable for '" + attribute.name + "' in " + region_id(region.index));
  }
  return out;
}

PinpointResult pinpoint(model::Gateway& gateway, overlay::Marker& marker, browser::PageSession& session,
                        const AttributeSpec& attribute, const browser::Region& region, std::size_t candidate_cap) {
  PinpointResult out;
  out.attribute = attribute;
  const ScanResult scan = scan_region(gateway, attribute, region);
  if (scan.repaired) out.notes.push_back("scan reply mixed modalities; kept the " +
                                         std::string(attribute.category == Category::Text ? "texts" : "tags"));
  std::vector<overlay::Candidate> found = attribute.category == Category::Text
                                              ? marker.enumerate_by_text(session, region, scan.texts)
                                              : marker.enumerate_by_tag(session, region, scan.tags);
  if (found.empty()) throw Error(ErrorCode::NoCandidates, "no candidates for '" + attribute.name + "'");
  if (candidate_cap > 0 && found.size() > candidate_cap) {
    out.notes.push_back("candidate cap: kept " + std::to_string(candidate_cap) + " of " +
                        std::to_string(found.size()));
    found.resize(candidate_cap);
  }
  out.offered = relabel(std::move(found));

  overlay::MarkedScreenshot marked;
  model::ModelResponse resp;
  try {
    marked = marker.apply_marks(session, region, out.offered);
    resp = gateway.call(ids::kElementSelection, {}, selection_input(attribute, out.offered),
                        screenshot_png(marked.raster));
  } catch (...) {
    marker.clear_marks(session);
    throw;
  }
  marker.clear_marks(session);

  const json& j = parsed_or_throw(resp, "element selection");
  std::set<int> chosen;
  for (const auto& v : j) {
    int label = -1;
    if (v.is_number_integer()) label = v.get<int>();
    if (v.is_string()) label = parse_region_id(v);
    chosen.insert(label);
  }
  for (const auto& c : out.offered) {
    if (chosen.count(c.label)) out.selected.push_back(c);
  }
  if (out.selected.empty()) {
    throw Error(ErrorCode::EmptySelection, "selector returned " + j.dump() + ", offered 1.." +
                                               std::to_string(out.offered.size()));
  }

  try {
    out.marked_region = marker.apply_marks(session, region, relabel(out.selected));
  } catch (...) {
    marker.clear_marks(session);
    throw;
  }
  marker.clear_marks(session);
  return out;
}

std::string apply_category_suffix(std::string xpath, Category category) {
  xpath = util::trim(xpath);
  if (category == Category::Text) return xpath;
  const std::string want = category == Category::Image ? "/@src" : "/@href";
  if (util::ends_with(xpath, want)) return xpath;
  if (util::ends_with(xpath, "/text()")) xpath.resize(xpath.size() - 7);
  const auto at = xpath.rfind("/@");
  if (at != std::string::npos && xpath.find_first_of("[]()|/", at + 2) == std::string::npos) xpath.resize(at);
  return xpath + want;
}

std::string synthesize_xpath(model::Gateway& gateway, browser::PageSession& session, const PinpointResult& pin,
                             int d, int retry_budget) {
  if (pin.selected.empty()) throw Error(ErrorCode::PreconditionViolation, "nothing selected");
  if (d < 0) throw Error(ErrorCode::NegativeDistance, "segment distance " + std::to_string(d));
  const html::Document doc = html::Document::parse(session.dom_snapshot());
  std::vector<html::HtmlSegment> segments;
  std::set<std::string> anchors;
  for (const auto& c : pin.selected) {
    const browser::ElementRef e = session.element_at(c.rect.center());
    if (!anchors.insert(e.absolute_xpath).second) continue;
    segments.push_back(html::local_segment(doc, e.absolute_xpath, d));
  }
  const std::string prompt = synthesis_input(pin.attribute, segments);
  const std::string image = browser::encode_png(pin.marked_region.raster);

  std::string feedback;
  std::string last_error;
  bool parsed_any = false;
  for (int attempt = 0; attempt <= retry_budget; ++attempt) {
    const auto resp = gateway.call(model::ids::kXPathSynthesis, {}, prompt + feedback, {image});
    std::string xpath;
    if (resp.parsed && resp.parsed->contains("xpath") && (*resp.parsed)["xpath"].is_string()) {
      parsed_any = true;
      xpath = apply_category_suffix((*resp.parsed)["xpath"].get<std::string>(), pin.attribute.category);
      if (!html::is_valid_xpath(xpath)) {
        last_error = "`" + xpath + "` is not a valid XPath";
      } else if (session.evaluate_xpath(xpath).empty()) {
        last_error = "`" + xpath + "` matches nothing on the page";
      } else {
        return xpath;
      }
    } else {
      last_error = resp.parse_error.value_or("reply has no \"xpath\" string");
    }
    feedback = "\n\nYour previous answer failed: " + last_error + ". Output a corrected XPath.";
  }
  if (!parsed_any) throw Error(ErrorCode::ModelParseFailure, "xpath synthesis: " + last_error);
  throw Error(ErrorCode::SynthesisFailed, last_error);
}

Wrapper run_vgs(model::Gateway& gateway, overlay::Marker& marker, browser::PageSession& session,
                const ExtractionQuery& query, const VgsConfig& config, Wrapper* failed_wrapper) {
  const auto started = config.clock.start();
  Wrapper w;
  w.query_id = query.id;
  w.source_url = session.url();
  w.generated_at = config.clock.timestamp();
  w.method = "vgs";

  std::vector<AttributeSpec> attributes;
  try {
    attributes = identify_attributes(gateway, query);
  } catch (const Error& e) {
    fail(w, "", stages::kAttributeIdentification, e);
    w.duration_ms = config.clock.elapsed_ms(started);
    if (failed_wrapper) *failed_wrapper = w;
    throw Error(ErrorCode::AllAttributesFailed, std::string("attribute identification failed: ") + e.what());
  }
  std::string names;
  for (const auto& a : attributes) names += (names.empty() ? "" : ", ") + a.name + " (" + std::string(to_string(a.category)) + ")";
  ok(w, "", stages::kAttributeIdentification, names);

  std::vector<browser::Region> regions = browser::tile_regions(session);

  for (const auto& attr : attributes) {
    std::string_view stage = stages::kGrounding;
    try {
      const int index = ground_attribute(gateway, attr, regions);
      ok(w, attr.name, stage, region_id(index));
      stage = stages::kPinpointing;
      const PinpointResult pin = pinpoint(gateway, marker, session, attr, regions.at(static_cast<std::size_t>(index)),
                                          config.candidate_cap);
      std::string detail = std::to_string(pin.selected.size()) + " of " + std::to_string(pin.offered.size()) +
                           " candidates selected";
      for (const auto& n : pin.notes) detail += "; " + n;
      ok(w, attr.name, stage, detail);
      stage = stages::kXPathSynthesis;
      const std::string xpath = synthesize_xpath(gateway, session, pin, config.segment_distance, config.retry_budget);
      ok(w, attr.name, stage, xpath);
      w.entries.emplace_back(attr.name, xpath);
    } catch (const Error& e) {
      if (e.code() == ErrorCode::TransportExhausted || e.code() == ErrorCode::BackendRejected ||
          e.code() == ErrorCode::SessionClosed) {
        throw;
      }
      fail(w, attr.name, stage, e);
    }
  }
  w.duration_ms = config.clock.elapsed_ms(started);
  if (w.entries.empty()) {
    if (failed_wrapper) *failed_wrapper = w;
    throw Error(ErrorCode::AllAttributesFailed, "no attribute produced an xpath");
  }
  return w;
}

Wrapper run_vgs(model::Gateway& gateway, const ExtractionQuery& query, const std::string& url, const VgsConfig& config,
                Wrapper* failed_wrapper) {
  auto session = browser::load_page(url, config.viewport, config.session);
  overlay::StubMarker marker;
  return run_vgs(gateway, marker, *session, query, config, failed_wrapper);
}

}  // namespace vgs::pipeline
