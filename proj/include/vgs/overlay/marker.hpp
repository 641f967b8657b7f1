#pragma once

#include <string>
#include <vector>

#include <json.hpp>

#include "vgs/browser/session.hpp"

namespace vgs::overlay {

enum class CandidateKind { TextMatch, TagMatch };

std::string_view to_string(CandidateKind kind) noexcept;

struct Candidate {
  int label = 0;  // 1-based, consecutive within one marking pass
  browser::ElementRef element;
  browser::Rect rect;
  CandidateKind kind = CandidateKind::TagMatch;
};

struct MarkedScreenshot {
  int region_index = 0;
  browser::Raster raster;
  std::vector<Candidate> candidates;
};

// Wire format shared with the in-page script:
// {"label": n, "xpath": "...", "rect": {"x","y","w","h"}, "tag": "..."}.
struct MarkPayload {
  int label = 0;
  std::string xpath;
  browser::Rect rect;
  std::string tag;
};

nlohmann::json to_json(const MarkPayload& p);
// Throws Error{InjectionFailed} when a field is missing or mistyped.
MarkPayload payload_from_json(const nlohmann::json& j);
MarkPayload to_payload(const Candidate& c);

// Mark colour for a label: a fixed 8-colour cycle.
browser::Rgb palette_color(int label) noexcept;

// Finds candidate elements in a region and draws Set-of-Mark boxes for them.
class Marker {
 public:
  virtual ~Marker() = default;

  // Visible elements with one of `tags` whose box meets the region, in
  // document order, labelled 1..n.
  virtual std::vector<Candidate> enumerate_by_tag(browser::PageSession& session, const browser::Region& region,
                                                  const std::vector<std::string>& tags) = 0;
  // Deepest visible elements whose normalized text contains one of `texts`
  // (case-sensitive), merged and in document order, labelled 1..n.
  virtual std::vector<Candidate> enumerate_by_text(browser::PageSession& session, const browser::Region& region,
                                                   const std::vector<std::string>& texts) = 0;

  // Draws one box per candidate and captures the region with marks
  // visible. Marks stay until clear_marks. Throws
  // Error{PreconditionViolation} for an empty list, duplicate labels or a
  // candidate outside the region.
  virtual MarkedScreenshot apply_marks(browser::PageSession& session, const browser::Region& region,
                                       const std::vector<Candidate>& candidates) = 0;
  virtual void clear_marks(browser::PageSession& session) = 0;
};

// Host-side marker: walks the session's DOM snapshot, asks the session for
// element geometry and composites marks onto captures. Works with any
// backend and never touches the page.
class StubMarker final : public Marker {
 public:
  std::vector<Candidate> enumerate_by_tag(browser::PageSession& session, const browser::Region& region,
                                          const std::vector<std::string>& tags) override;
  std::vector<Candidate> enumerate_by_text(browser::PageSession& session, const browser::Region& region,
                                           const std::vector<std::string>& texts) override;
  MarkedScreenshot apply_marks(browser::PageSession& session, const browser::Region& region,
                               const std::vector<Candidate>& candidates) override;
  void clear_marks(browser::PageSession& session) override;
};

// Drives the in-page overlay script. Each call runs `script` followed by
// `return vgsOverlay(arguments[0]);` with a command object such as
// {"op":"enumerate_by_tag","tags":[...],"region":{"y":..,"h":..}} and reads
// back an array of payloads.
class ScriptMarker final : public Marker {
 public:
  explicit ScriptMarker(std::string script) : script_(std::move(script)) {}

  std::vector<Candidate> enumerate_by_tag(browser::PageSession& session, const browser::Region& region,
                                          const std::vector<std::string>& tags) override;
  std::vector<Candidate> enumerate_by_text(browser::PageSession& session, const browser::Region& region,
                                           const std::vector<std::string>& texts) override;
  MarkedScreenshot apply_marks(browser::PageSession& session, const browser::Region& region,
                               const std::vector<Candidate>& candidates) override;
  void clear_marks(browser::PageSession& session) override;

 private:
  nlohmann::json call(browser::PageSession& session, const nlohmann::json& command);
  std::vector<Candidate> read_candidates(const nlohmann::json& reply, CandidateKind kind);

  std::string script_;
};

// Validates apply_marks preconditions; shared by both markers.
void check_markable(const browser::Region& region, const std::vector<Candidate>& candidates);

}  // namespace vgs::overlay
