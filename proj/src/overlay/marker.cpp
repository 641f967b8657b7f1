#include "vgs/overlay/marker.hpp"

#include <algorithm>
#include <array>
#include <set>
#include <unordered_set>

#include "vgs/error.hpp"
#include "vgs/html/serialize.hpp"
#include "vgs/html/tools.hpp"
#include "vgs/util/text.hpp"

namespace vgs::overlay {

using browser::PageSession;
using browser::Rect;
using browser::Region;
using nlohmann::json;

std::string_view to_string(CandidateKind kind) noexcept {
  return kind == CandidateKind::TextMatch ? "text-match" : "tag-match";
}

browser::Rgb palette_color(int label) noexcept {
  static constexpr std::array<browser::Rgb, 8> kPalette = {{
      {230, 25, 75},
      {60, 150, 75},
      {0, 110, 200},
      {235, 110, 20},
      {145, 30, 180},
      {0, 128, 128},
      {200, 40, 190},
      {128, 64, 0},
  }};
  const int i = ((label - 1) % 8 + 8) % 8;
  return kPalette[static_cast<std::size_t>(i)];
}

json to_json(const MarkPayload& p) {
  return {{"label", p.label},
          {"xpath", p.xpath},
          {"rect", {{"x", p.rect.x}, {"y", p.rect.y}, {"w", p.rect.w}, {"h", p.rect.h}}},
          {"tag", p.tag}};
}

MarkPayload payload_from_json(const json& j) {
  try {
    MarkPayload p;
    p.label = j.at("label").get<int>();
    p.xpath = j.at("xpath").get<std::string>();
    const json& r = j.at("rect");
    p.rect = {r.at("x").get<double>(), r.at("y").get<double>(), r.at("w").get<double>(), r.at("h").get<double>()};
    p.tag = j.at("tag").get<std::string>();
    if (p.label < 1) throw Error(ErrorCode::InjectionFailed, "label must be positive");
    return p;
  } catch (const json::exception& e) {
    throw Error(ErrorCode::InjectionFailed, std::string("malformed mark payload: ") + e.what());
  }
}

MarkPayload to_payload(const Candidate& c) { return {c.label, c.element.absolute_xpath, c.rect, c.element.tag}; }

void check_markable(const Region& region, const std::vector<Candidate>& candidates) {
  if (candidates.empty()) throw Error(ErrorCode::PreconditionViolation, "no candidates to mark");
  std::set<int> labels;
  for (const auto& c : candidates) {
    if (!labels.insert(c.label).second) {
      throw Error(ErrorCode::PreconditionViolation, "label " + std::to_string(c.label) + " used twice");
    }
    if (!c.rect.intersects(region.rect())) {
      throw Error(ErrorCode::PreconditionViolation,
                  "candidate " + std::to_string(c.label) + " lies outside region " + std::to_string(region.index));
    }
  }
}

namespace {

struct Walk {
  const html::Document* doc = nullptr;
  std::unique_ptr<html::Document> owned;
};

// The static renderer already holds the parsed page; other backends are
// walked over a parsed snapshot.
Walk open_dom(PageSession& session) {
  Walk w;
  if (auto* s = dynamic_cast<browser::StaticPageSession*>(&session)) {
    if (s->closed()) throw Error(ErrorCode::SessionClosed, "session is closed");
    w.doc = &s->document();
  } else {
    w.owned = std::make_unique<html::Document>(html::Document::parse(session.dom_snapshot()));
    w.doc = w.owned.get();
  }
  return w;
}

std::vector<Candidate> finish(PageSession& session, const Region& region, const std::vector<const html::Node*>& nodes,
                              CandidateKind kind) {
  std::vector<std::string> xpaths;
  xpaths.reserve(nodes.size());
  for (const auto* n : nodes) xpaths.push_back(html::absolute_xpath(*n));
  const auto rects = session.client_rects(xpaths);
  std::vector<Candidate> out;
  for (std::size_t i = 0; i < nodes.size(); ++i) {
    if (!rects[i] || rects[i]->empty() || !rects[i]->intersects(region.rect())) continue;
    Candidate c;
    c.label = static_cast<int>(out.size()) + 1;
    c.element = {xpaths[i], nodes[i]->name, *rects[i]};
    c.rect = *rects[i];
    c.kind = kind;
    out.push_back(std::move(c));
  }
  return out;
}

}  // namespace

std::vector<Candidate> StubMarker::enumerate_by_tag(PageSession& session, const Region& region,
                                                    const std::vector<std::string>& tags) {
  if (tags.empty()) throw Error(ErrorCode::PreconditionViolation, "no tags given");
  std::unordered_set<std::string> wanted;
  for (const auto& t : tags) wanted.insert(util::to_lower(util::trim(t)));
  const Walk w = open_dom(session);
  std::vector<const html::Node*> nodes;
  html::for_each_node(w.doc->root(), [&](const html::Node& n) {
    if (n.is_element() && wanted.count(n.name)) nodes.push_back(&n);
  });
  return finish(session, region, nodes, CandidateKind::TagMatch);
}

std::vector<Candidate> StubMarker::enumerate_by_text(PageSession& session, const Region& region,
                                                     const std::vector<std::string>& texts) {
  if (texts.empty()) throw Error(ErrorCode::PreconditionViolation, "no texts given");
  std::vector<std::string> needles;
  for (const auto& t : texts) {
    std::string n = util::normalize_whitespace(t);
    if (!n.empty()) needles.push_back(std::move(n));
  }
  const Walk w = open_dom(session);
  std::vector<const html::Node*> elements;
  std::vector<std::string> text;
  html::for_each_node(w.doc->root(), [&](const html::Node& n) {
    if (!n.is_element()) return;
    elements.push_back(&n);
    text.push_back(html::visible_text(n));
  });
  std::unordered_set<const html::Node*> picked;
  for (const auto& needle : needles) {
    std::unordered_set<const html::Node*> matching;
    for (std::size_t i = 0; i < elements.size(); ++i) {
      if (text[i].find(needle) != std::string::npos) matching.insert(elements[i]);
    }
    for (const auto* e : matching) {
      // Deepest: no element child also matches.
      bool child_matches = false;
      for (const auto& c : e->children) child_matches = child_matches || matching.count(c.get());
      if (!child_matches) picked.insert(e);
    }
  }
  std::vector<const html::Node*> nodes;
  for (const auto* e : elements) {
    if (picked.count(e)) nodes.push_back(e);
  }
  return finish(session, region, nodes, CandidateKind::TextMatch);
}

MarkedScreenshot StubMarker::apply_marks(PageSession& session, const Region& region,
                                         const std::vector<Candidate>& candidates) {
  check_markable(region, candidates);
  std::vector<browser::OverlayMark> marks;
  marks.reserve(candidates.size());
  for (const auto& c : candidates) marks.push_back({c.label, c.rect, palette_color(c.label)});
  session.set_overlay(std::move(marks));
  MarkedScreenshot out;
  out.region_index = region.index;
  out.candidates = candidates;
  try {
    out.raster = session.capture(region.y_offset, region.height);
  } catch (const Error& e) {
    if (e.code() == ErrorCode::SessionClosed) throw;
    throw Error(ErrorCode::CaptureFailed, e.what());
  }
  return out;
}

void StubMarker::clear_marks(PageSession& session) { session.clear_overlay(); }

json ScriptMarker::call(PageSession& session, const json& command) {
  try {
    return session.execute_script(script_ + "\nreturn vgsOverlay(arguments[0]);", json::array({command}));
  } catch (const Error& e) {
    if (e.code() == ErrorCode::SessionClosed || e.code() == ErrorCode::InjectionFailed) throw;
    throw Error(ErrorCode::InjectionFailed, e.what());
  }
}

std::vector<Candidate> ScriptMarker::read_candidates(const json& reply, CandidateKind kind) {
  if (!reply.is_array()) throw Error(ErrorCode::InjectionFailed, "overlay script did not return a list");
  std::vector<Candidate> out;
  for (const auto& item : reply) {
    const MarkPayload p = payload_from_json(item);
    if (p.label != static_cast<int>(out.size()) + 1) {
      throw Error(ErrorCode::InjectionFailed, "overlay labels are not consecutive from 1");
    }
    Candidate c;
    c.label = p.label;
    c.element = {p.xpath, p.tag, p.rect};
    c.rect = p.rect;
    c.kind = kind;
    out.push_back(std::move(c));
  }
  return out;
}

std::vector<Candidate> ScriptMarker::enumerate_by_tag(PageSession& session, const Region& region,
                                                      const std::vector<std::string>& tags) {
  if (tags.empty()) throw Error(ErrorCode::PreconditionViolation, "no tags given");
  const json cmd = {{"op", "enumerate_by_tag"}, {"tags", tags}, {"region", {{"y", region.y_offset}, {"h", region.height}}}};
  return read_candidates(call(session, cmd), CandidateKind::TagMatch);
}

std::vector<Candidate> ScriptMarker::enumerate_by_text(PageSession& session, const Region& region,
                                                       const std::vector<std::string>& texts) {
  if (texts.empty()) throw Error(ErrorCode::PreconditionViolation, "no texts given");
  const json cmd = {
      {"op", "enumerate_by_text"}, {"texts", texts}, {"region", {{"y", region.y_offset}, {"h", region.height}}}};
  return read_candidates(call(session, cmd), CandidateKind::TextMatch);
}

MarkedScreenshot ScriptMarker::apply_marks(PageSession& session, const Region& region,
                                           const std::vector<Candidate>& candidates) {
  check_markable(region, candidates);
  json marks = json::array();
  for (const auto& c : candidates) marks.push_back(to_json(to_payload(c)));
  call(session, {{"op", "apply"}, {"marks", marks}});
  MarkedScreenshot out;
  out.region_index = region.index;
  out.candidates = candidates;
  out.raster = session.capture(region.y_offset, region.height);
  return out;
}

void ScriptMarker::clear_marks(PageSession& session) { call(session, {{"op", "clear"}}); }

}  // namespace vgs::overlay
