#include <cmath>

#include "vgs/browser/session.hpp"
#include "vgs/error.hpp"
#include "vgs/html/serialize.hpp"
#include "vgs/html/tools.hpp"
#include "vgs/html/xpath.hpp"
#include "vgs/util/url.hpp"

namespace vgs::browser {

StaticPageSession::StaticPageSession(std::string url, std::string markup, Viewport viewport)
    : url_(std::move(url)), viewport_(viewport), doc_(html::Document::parse(markup)) {
  layout_ = Layout::compute(doc_, viewport_.width);
}

int StaticPageSession::page_height() {
  ensure_open();
  return layout_.page_height();
}

std::string StaticPageSession::base_url() {
  ensure_open();
  std::string base = url_;
  html::for_each_node(doc_.root(), [&](const html::Node& n) {
    if (base != url_ || !n.is_element("base")) return;
    if (const std::string* href = n.attribute("href")) base = util::resolve_url(url_, *href);
  });
  return base;
}

std::string StaticPageSession::dom_snapshot() {
  ensure_open();
  return html::serialize(doc_);
}

std::vector<std::string> StaticPageSession::evaluate_xpath(std::string_view xpath) {
  ensure_open();
  return html::evaluate_xpath_strings(doc_, xpath);
}

ElementRef StaticPageSession::element_at(Point p) {
  ensure_open();
  if (!(p.x >= 0 && p.y >= 0 && p.x < viewport_.width && p.y < layout_.page_height())) {
    throw Error(ErrorCode::OutOfBounds,
                "point (" + std::to_string(p.x) + ", " + std::to_string(p.y) + ") is outside the page");
  }
  const html::Node* hit = layout_.hit_test(p);
  if (!hit) throw Error(ErrorCode::NoElement, "no element under the point");
  return {html::absolute_xpath(*hit), hit->name, *layout_.rect_of(hit)};
}

std::vector<std::optional<Rect>> StaticPageSession::client_rects(const std::vector<std::string>& xpaths) {
  ensure_open();
  std::vector<std::optional<Rect>> out;
  out.reserve(xpaths.size());
  for (const auto& xp : xpaths) {
    const auto v = html::XPath::compile(xp).evaluate(doc_.root());
    const auto* set = std::get_if<html::NodeSet>(&v);
    if (!set || set->empty() || set->front().is_attribute()) {
      out.emplace_back();
      continue;
    }
    out.push_back(layout_.rect_of(set->front().node));
  }
  return out;
}

nlohmann::json StaticPageSession::execute_script(std::string_view, const nlohmann::json&) {
  ensure_open();
  throw Error(ErrorCode::InjectionFailed, "the static renderer does not execute scripts");
}

Raster StaticPageSession::capture_page(int y, int height) {
  if (height <= 0 || y < 0) throw Error(ErrorCode::CaptureFailed, "empty capture window");
  return layout_.paint(y, height);
}

}  // namespace vgs::browser
