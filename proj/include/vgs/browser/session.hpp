#pragma once

#include <memory>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

#include "vgs/browser/geometry.hpp"
#include "vgs/browser/layout.hpp"
#include "vgs/browser/raster.hpp"
#include "vgs/html/dom.hpp"

namespace vgs::browser {

struct ElementRef {
  std::string absolute_xpath;
  std::string tag;
  Rect client_rect;
};

// One numbered box of the Set-of-Mark overlay. The overlay is composited
// onto captures by the host and never enters the page DOM.
struct OverlayMark {
  int label = 0;
  Rect rect;
  Rgb color;
};

inline constexpr int kMarkBorder = 2;
inline constexpr int kChipScale = 2;

// Draws marks over a capture whose first row is page row `y_offset`: a
// border inside each box plus a label chip at its top-right corner, white
// digits on the border colour. Chips that would overlap an earlier chip are
// pushed down.
void draw_overlay(Raster& raster, const std::vector<OverlayMark>& marks, int y_offset);
// Chip rectangles in page coordinates, as drawn by draw_overlay.
std::vector<Rect> overlay_chip_rects(const std::vector<OverlayMark>& marks);

// A rendered page. Sessions are single-threaded; callers serialize access.
class PageSession {
 public:
  virtual ~PageSession() = default;

  virtual const std::string& url() const noexcept = 0;
  virtual Viewport viewport() const noexcept = 0;
  // Full scroll height in CSS pixels.
  virtual int page_height() = 0;
  // Base URL for resolving relative links (document.baseURI).
  virtual std::string base_url() = 0;

  // Screenshot of page rows [y, y + height) at viewport width, with the
  // overlay composited on top.
  Raster capture(int y, int height);

  // Serialized document as rendered, never including overlay marks.
  virtual std::string dom_snapshot() = 0;

  // Results in document order: elements give normalized visible text,
  // attributes their value, text nodes their content.
  virtual std::vector<std::string> evaluate_xpath(std::string_view xpath) = 0;

  // Deepest rendered element whose box contains the page point.
  virtual ElementRef element_at(Point p) = 0;

  // Page-coordinate box of the element each absolute xpath selects; absent
  // when it selects nothing or the element is not rendered.
  virtual std::vector<std::optional<Rect>> client_rects(const std::vector<std::string>& xpaths) = 0;

  // Runs a script in the page and returns its JSON result.
  // Throws Error{InjectionFailed} when the backend cannot run scripts.
  virtual nlohmann::json execute_script(std::string_view script, const nlohmann::json& args) = 0;

  void set_overlay(std::vector<OverlayMark> marks);
  void clear_overlay() noexcept { overlay_.clear(); }
  const std::vector<OverlayMark>& overlay() const noexcept { return overlay_; }

  virtual void close() = 0;
  virtual bool closed() const noexcept = 0;

 protected:
  virtual Raster capture_page(int y, int height) = 0;
  void ensure_open() const;

 private:
  std::vector<OverlayMark> overlay_;
};

enum class Backend { Static, WebDriver };

struct SessionOptions {
  Backend backend = Backend::Static;
  std::string webdriver_endpoint;  // e.g. http://127.0.0.1:9515
  std::string browser_name = "chrome";
  int load_timeout_ms = 30000;
};

// Options from the environment: VGS_BROWSER=webdriver selects the driver at
// VGS_WEBDRIVER_URL.
SessionOptions session_options_from_env();

// Built-in renderer: parses the page with the host HTML parser and lays it
// out with the block/inline engine. Scripts are not executed.
class StaticPageSession final : public PageSession {
 public:
  StaticPageSession(std::string url, std::string markup, Viewport viewport);

  const std::string& url() const noexcept override { return url_; }
  Viewport viewport() const noexcept override { return viewport_; }
  int page_height() override;
  std::string base_url() override;
  std::string dom_snapshot() override;
  std::vector<std::string> evaluate_xpath(std::string_view xpath) override;
  ElementRef element_at(Point p) override;
  std::vector<std::optional<Rect>> client_rects(const std::vector<std::string>& xpaths) override;
  nlohmann::json execute_script(std::string_view script, const nlohmann::json& args) override;
  void close() override { closed_ = true; }
  bool closed() const noexcept override { return closed_; }

  const html::Document& document() const noexcept { return doc_; }
  const Layout& layout() const noexcept { return layout_; }

 protected:
  Raster capture_page(int y, int height) override;

 private:
  std::string url_;
  Viewport viewport_;
  html::Document doc_;
  Layout layout_;
  bool closed_ = false;
};

// Drives a browser through the W3C WebDriver HTTP protocol.
class WebDriverPageSession final : public PageSession {
 public:
  WebDriverPageSession(const std::string& url, Viewport viewport, const SessionOptions& options);
  ~WebDriverPageSession() override;

  const std::string& url() const noexcept override { return url_; }
  Viewport viewport() const noexcept override { return viewport_; }
  int page_height() override;
  std::string base_url() override;
  std::string dom_snapshot() override;
  std::vector<std::string> evaluate_xpath(std::string_view xpath) override;
  ElementRef element_at(Point p) override;
  std::vector<std::optional<Rect>> client_rects(const std::vector<std::string>& xpaths) override;
  nlohmann::json execute_script(std::string_view script, const nlohmann::json& args) override;
  void close() override;
  bool closed() const noexcept override { return session_id_.empty(); }

 protected:
  Raster capture_page(int y, int height) override;

 private:
  nlohmann::json command(const std::string& method, const std::string& path, const nlohmann::json& body);

  std::string url_;
  Viewport viewport_;
  SessionOptions options_;
  std::string session_id_;
};

// Opens `url` (file://, http://, https://). Throws Error{NavigationFailed}
// for unreachable targets and HTTP status >= 400.
std::unique_ptr<PageSession> load_page(const std::string& url, Viewport viewport = {},
                                       const SessionOptions& options = {});

// Fetches a document without rendering it.
std::string fetch_document(const std::string& url, int timeout_ms = 30000);

struct Region {
  int index = 0;
  int y_offset = 0;
  int height = 0;
  int width = 0;
  std::optional<Raster> screenshot;

  Rect rect() const noexcept {
    return {0, static_cast<double>(y_offset), static_cast<double>(width), static_cast<double>(height)};
  }
};

// Disjoint viewport-height tiles covering [0, page_height).
std::vector<Region> plan_regions(int page_height, Viewport viewport);

// Tiles the page and captures each region. The height is measured again
// after the first pass and the tiling redone once if it changed.
std::vector<Region> tile_regions(PageSession& session, bool capture = true);

}  // namespace vgs::browser
