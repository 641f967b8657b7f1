#include "vgs/browser/session.hpp"

#include <httplib.h>

#include <algorithm>
#include <cmath>
#include <cstdlib>

#include "vgs/error.hpp"
#include "vgs/util/text.hpp"
#include "vgs/util/url.hpp"

namespace vgs::browser {

namespace {

int label_width(int label) {
  const int digits = static_cast<int>(std::to_string(label).size());
  return digits * (kGlyphWidth + 1) * kChipScale + 4;
}

constexpr int kChipHeight = kGlyphHeight * kChipScale + 4;

}  // namespace

std::vector<Rect> overlay_chip_rects(const std::vector<OverlayMark>& marks) {
  std::vector<Rect> chips;
  chips.reserve(marks.size());
  for (const auto& m : marks) {
    const double w = label_width(m.label);
    Rect chip{std::round(m.rect.right()) - w, std::round(m.rect.y), w, static_cast<double>(kChipHeight)};
    chip.x = std::max(0.0, chip.x);
    for (bool moved = true; moved;) {
      moved = false;
      for (const auto& other : chips) {
        if (chip.intersects(other)) {
          chip.y = other.bottom();
          moved = true;
        }
      }
    }
    chips.push_back(chip);
  }
  return chips;
}

void draw_overlay(Raster& raster, const std::vector<OverlayMark>& marks, int y_offset) {
  auto ix = [](double v) { return static_cast<int>(std::lround(v)); };
  for (const auto& m : marks) {
    raster.stroke_rect(ix(m.rect.x), ix(m.rect.y) - y_offset, ix(m.rect.w), ix(m.rect.h), kMarkBorder, m.color);
  }
  const auto chips = overlay_chip_rects(marks);
  for (std::size_t i = 0; i < marks.size(); ++i) {
    const Rect& c = chips[i];
    const int cy = ix(c.y) - y_offset;
    raster.fill_rect(ix(c.x), cy, ix(c.w), ix(c.h), marks[i].color);
    raster.draw_text(ix(c.x) + 2, cy + 2, std::to_string(marks[i].label), {255, 255, 255}, kChipScale);
  }
}

Raster PageSession::capture(int y, int height) {
  ensure_open();
  Raster r = capture_page(y, height);
  if (!overlay_.empty()) draw_overlay(r, overlay_, y);
  return r;
}

void PageSession::set_overlay(std::vector<OverlayMark> marks) {
  ensure_open();
  overlay_ = std::move(marks);
}

void PageSession::ensure_open() const {
  if (closed()) throw Error(ErrorCode::SessionClosed, "session for " + url() + " is closed");
}

SessionOptions session_options_from_env() {
  SessionOptions o;
  if (const char* b = std::getenv("VGS_BROWSER"); b && std::string_view(b) == "webdriver") {
    o.backend = Backend::WebDriver;
  }
  if (const char* u = std::getenv("VGS_WEBDRIVER_URL")) o.webdriver_endpoint = u;
  if (const char* n = std::getenv("VGS_BROWSER_NAME")) o.browser_name = n;
  return o;
}

std::string fetch_document(const std::string& url, int timeout_ms) {
  const auto parts = util::parse_url(url);
  if (!parts) throw Error(ErrorCode::NavigationFailed, "malformed URL '" + url + "'");
  if (parts->scheme == "file") {
    const auto path = util::file_url_to_path(url);
    if (!path) throw Error(ErrorCode::NavigationFailed, "malformed file URL '" + url + "'");
    try {
      return util::read_file(*path);
    } catch (const Error& e) {
      throw Error(ErrorCode::NavigationFailed, "cannot open " + url + ": " + e.what());
    }
  }
  if (parts->scheme != "http" && parts->scheme != "https") {
    throw Error(ErrorCode::NavigationFailed, "unsupported URL scheme in '" + url + "'");
  }
  std::string current = url;
  for (int hop = 0; hop < 10; ++hop) {
    const auto p = util::parse_url(current);
    if (!p || !p->authority || p->authority->empty()) {
      throw Error(ErrorCode::NavigationFailed, "malformed URL '" + current + "'");
    }
    httplib::Client client(p->scheme + "://" + *p->authority);
    const auto secs = timeout_ms / 1000;
    const auto usecs = (timeout_ms % 1000) * 1000;
    client.set_connection_timeout(secs, usecs);
    client.set_read_timeout(secs, usecs);
    std::string target = p->path.empty() ? "/" : p->path;
    if (p->query) target += "?" + *p->query;
    auto res = client.Get(target);
    if (!res) {
      throw Error(ErrorCode::NavigationFailed, url + ": " + httplib::to_string(res.error()));
    }
    if (res->status >= 300 && res->status < 400 && res->has_header("Location")) {
      current = util::resolve_url(current, res->get_header_value("Location"));
      continue;
    }
    if (res->status >= 400) {
      throw Error(ErrorCode::NavigationFailed, url + ": HTTP " + std::to_string(res->status));
    }
    return res->body;
  }
  throw Error(ErrorCode::NavigationFailed, url + ": too many redirects");
}

std::unique_ptr<PageSession> load_page(const std::string& url, Viewport viewport, const SessionOptions& options) {
  if (viewport.width <= 0 || viewport.height <= 0) {
    throw Error(ErrorCode::NavigationFailed, "viewport must be positive");
  }
  if (!util::is_absolute_url(url)) throw Error(ErrorCode::NavigationFailed, "not an absolute URL: '" + url + "'");
  if (options.backend == Backend::WebDriver) {
    return std::make_unique<WebDriverPageSession>(url, viewport, options);
  }
  return std::make_unique<StaticPageSession>(url, fetch_document(url, options.load_timeout_ms), viewport);
}

std::vector<Region> plan_regions(int page_height, Viewport viewport) {
  std::vector<Region> out;
  if (page_height <= 0 || viewport.height <= 0) return out;
  const int n = (page_height + viewport.height - 1) / viewport.height;
  out.reserve(static_cast<std::size_t>(n));
  for (int i = 0; i < n; ++i) {
    Region r;
    r.index = i;
    r.y_offset = i * viewport.height;
    r.height = std::min(viewport.height, page_height - r.y_offset);
    r.width = viewport.width;
    out.push_back(std::move(r));
  }
  return out;
}

std::vector<Region> tile_regions(PageSession& session, bool capture) {
  const int measured = session.page_height();
  auto regions = plan_regions(measured, session.viewport());
  if (!capture) return regions;
  auto shoot = [&](std::vector<Region>& rs) {
    for (auto& r : rs) {
      try {
        r.screenshot = session.capture(r.y_offset, r.height);
      } catch (const Error& e) {
        if (e.code() == ErrorCode::SessionClosed) throw;
        throw Error(ErrorCode::CaptureFailed, "region " + std::to_string(r.index) + ": " + e.what());
      }
    }
  };
  shoot(regions);
  // Lazy content may have grown the page while scrolling.
  const int again = session.page_height();
  if (again != measured) {
    regions = plan_regions(again, session.viewport());
    shoot(regions);
  }
  return regions;
}

}  // namespace vgs::browser
