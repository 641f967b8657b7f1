#include <httplib.h>

#include <cmath>

#include "vgs/browser/session.hpp"
#include "vgs/error.hpp"
#include "vgs/html/xpath.hpp"
#include "vgs/util/text.hpp"
#include "vgs/util/url.hpp"

namespace vgs::browser {

using nlohmann::json;

namespace {

// Mirrors html::absolute_xpath so both backends name elements the same way.
constexpr const char* kXPathOfJs = R"JS(
function vgsXPathOf(el) {
  const steps = [];
  for (let n = el; n && n.nodeType === 1; n = n.parentNode) {
    const tag = n.localName.toLowerCase();
    let index = 0, total = 0;
    if (n.parentNode) {
      for (const c of n.parentNode.children) {
        if (c.localName.toLowerCase() === tag) { total++; if (c === n) index = total; }
      }
    }
    steps.unshift(total > 1 ? tag + '[' + index + ']' : tag);
  }
  return '/' + steps.join('/');
}
)JS";

constexpr const char* kEvaluateJs = R"JS(
const r = document.evaluate(arguments[0], document, null, XPathResult.ANY_TYPE, null);
if (r.resultType === XPathResult.NUMBER_TYPE) return [String(r.numberValue)];
if (r.resultType === XPathResult.STRING_TYPE) return [r.stringValue];
if (r.resultType === XPathResult.BOOLEAN_TYPE) return [String(r.booleanValue)];
const out = [];
for (let n = r.iterateNext(); n; n = r.iterateNext()) {
  if (n.nodeType === 1) out.push((n.innerText || n.textContent || '').replace(/\s+/g, ' ').trim());
  else if (n.nodeType === 2) out.push(n.value);
  else out.push(n.textContent);
}
return out;
)JS";

constexpr const char* kElementAtJs = R"JS(
const x = arguments[0], y = arguments[1];
window.scrollTo(0, Math.max(0, y - window.innerHeight / 2));
const el = document.elementFromPoint(x, y - window.scrollY);
if (!el) return null;
const b = el.getBoundingClientRect();
return {xpath: vgsXPathOf(el), tag: el.localName.toLowerCase(),
        rect: {x: b.left + window.scrollX, y: b.top + window.scrollY, w: b.width, h: b.height}};
)JS";

constexpr const char* kRectsJs = R"JS(
return arguments[0].map(function (xp) {
  const el = document.evaluate(xp, document, null, XPathResult.FIRST_ORDERED_NODE_TYPE, null).singleNodeValue;
  if (!el || el.nodeType !== 1) return null;
  const b = el.getBoundingClientRect();
  if (b.width === 0 && b.height === 0) return null;
  return {x: b.left + window.scrollX, y: b.top + window.scrollY, w: b.width, h: b.height};
});
)JS";

Rect rect_from(const json& j) {
  return {j.at("x").get<double>(), j.at("y").get<double>(), j.at("w").get<double>(), j.at("h").get<double>()};
}

}  // namespace

WebDriverPageSession::WebDriverPageSession(const std::string& url, Viewport viewport, const SessionOptions& options)
    : url_(url), viewport_(viewport), options_(options) {
  if (options_.webdriver_endpoint.empty()) {
    throw Error(ErrorCode::NavigationFailed, "no WebDriver endpoint configured");
  }
  json caps = {{"browserName", options_.browser_name}};
  const std::string size = std::to_string(viewport.width) + "," + std::to_string(viewport.height);
  caps["goog:chromeOptions"] = {{"args", {"--headless=new", "--hide-scrollbars", "--window-size=" + size}}};
  caps["moz:firefoxOptions"] = {{"args", {"-headless"}}};
  json created;
  try {
    created = command("POST", "/session", {{"capabilities", {{"alwaysMatch", caps}}}});
  } catch (const Error& e) {
    throw Error(ErrorCode::NavigationFailed, std::string("cannot start a browser session: ") + e.what());
  }
  session_id_ = created.value("sessionId", std::string{});
  if (session_id_.empty()) throw Error(ErrorCode::NavigationFailed, "driver returned no session id");
  try {
    command("POST", "/session/" + session_id_ + "/timeouts",
            {{"pageLoad", options_.load_timeout_ms}, {"script", options_.load_timeout_ms}});
    command("POST", "/session/" + session_id_ + "/window/rect",
            {{"width", viewport.width}, {"height", viewport.height}});
    command("POST", "/session/" + session_id_ + "/url", {{"url", url}});
    // Window chrome eats into the window rect; grow it until the inner
    // viewport has the requested size.
    const json inner = execute_script("return [window.innerWidth, window.innerHeight];", json::array());
    const int dw = viewport.width - inner.at(0).get<int>();
    const int dh = viewport.height - inner.at(1).get<int>();
    if (dw != 0 || dh != 0) {
      command("POST", "/session/" + session_id_ + "/window/rect",
              {{"width", viewport.width + dw}, {"height", viewport.height + dh}});
    }
  } catch (const Error& e) {
    close();
    if (e.code() == ErrorCode::RenderTimeout) throw;
    throw Error(ErrorCode::NavigationFailed, url + ": " + e.what());
  }
}

WebDriverPageSession::~WebDriverPageSession() {
  try {
    close();
  } catch (...) {
  }
}

json WebDriverPageSession::command(const std::string& method, const std::string& path, const json& body) {
  const auto parts = util::parse_url(options_.webdriver_endpoint);
  if (!parts || !parts->authority) {
    throw Error(ErrorCode::NavigationFailed, "bad WebDriver endpoint '" + options_.webdriver_endpoint + "'");
  }
  httplib::Client client(parts->scheme + "://" + *parts->authority);
  const int secs = options_.load_timeout_ms / 1000 + 5;
  client.set_read_timeout(secs, 0);
  client.set_write_timeout(secs, 0);
  std::string prefix = parts->path;
  while (!prefix.empty() && prefix.back() == '/') prefix.pop_back();
  const std::string target = prefix + path;
  httplib::Result res;
  if (method == "GET") {
    res = client.Get(target);
  } else if (method == "DELETE") {
    res = client.Delete(target);
  } else {
    res = client.Post(target, body.dump(), "application/json");
  }
  if (!res) throw Error(ErrorCode::NavigationFailed, "WebDriver: " + httplib::to_string(res.error()));
  json reply = json::parse(res->body, nullptr, false);
  if (reply.is_discarded()) throw Error(ErrorCode::NavigationFailed, "WebDriver sent a non-JSON reply");
  json value = reply.contains("value") ? reply["value"] : json();
  if (res->status >= 400 || (value.is_object() && value.contains("error"))) {
    const std::string err = value.is_object() ? value.value("error", std::string("unknown error")) : "unknown error";
    const std::string msg = value.is_object() ? value.value("message", std::string{}) : std::string{};
    ErrorCode code = ErrorCode::NavigationFailed;
    if (err == "timeout") code = ErrorCode::RenderTimeout;
    if (err == "javascript error" || err == "script timeout") code = ErrorCode::InjectionFailed;
    if (err == "invalid selector") code = ErrorCode::XPathSyntax;
    if (err == "invalid session id") code = ErrorCode::SessionClosed;
    throw Error(code, "WebDriver " + err + (msg.empty() ? "" : ": " + msg));
  }
  return value;
}

int WebDriverPageSession::page_height() {
  ensure_open();
  const json h = execute_script(
      "return Math.max(document.documentElement.scrollHeight, document.body ? document.body.scrollHeight : 0);",
      json::array());
  return std::max(1, h.get<int>());
}

std::string WebDriverPageSession::base_url() {
  ensure_open();
  return execute_script("return document.baseURI;", json::array()).get<std::string>();
}

std::string WebDriverPageSession::dom_snapshot() {
  ensure_open();
  return execute_script("return document.documentElement.outerHTML;", json::array()).get<std::string>();
}

std::vector<std::string> WebDriverPageSession::evaluate_xpath(std::string_view xpath) {
  ensure_open();
  // The host parser rejects bad syntax the same way for both backends.
  html::XPath::compile(xpath);
  const json r = execute_script(kEvaluateJs, json::array({std::string(xpath)}));
  return r.get<std::vector<std::string>>();
}

ElementRef WebDriverPageSession::element_at(Point p) {
  ensure_open();
  if (!(p.x >= 0 && p.y >= 0 && p.x < viewport_.width && p.y < page_height())) {
    throw Error(ErrorCode::OutOfBounds,
                "point (" + std::to_string(p.x) + ", " + std::to_string(p.y) + ") is outside the page");
  }
  const json r = execute_script(std::string(kXPathOfJs) + kElementAtJs, json::array({p.x, p.y}));
  if (r.is_null()) throw Error(ErrorCode::NoElement, "no element under the point");
  return {r.at("xpath").get<std::string>(), r.at("tag").get<std::string>(), rect_from(r.at("rect"))};
}

std::vector<std::optional<Rect>> WebDriverPageSession::client_rects(const std::vector<std::string>& xpaths) {
  ensure_open();
  const json r = execute_script(kRectsJs, json::array({xpaths}));
  std::vector<std::optional<Rect>> out;
  for (const auto& item : r) {
    if (item.is_null()) {
      out.emplace_back();
    } else {
      out.push_back(rect_from(item));
    }
  }
  return out;
}

json WebDriverPageSession::execute_script(std::string_view script, const json& args) {
  ensure_open();
  return command("POST", "/session/" + session_id_ + "/execute/sync", {{"script", std::string(script)}, {"args", args}});
}

Raster WebDriverPageSession::capture_page(int y, int height) {
  if (height <= 0 || y < 0) throw Error(ErrorCode::CaptureFailed, "empty capture window");
  const json scrolled = execute_script("window.scrollTo(0, arguments[0]); return window.scrollY;", json::array({y}));
  const int actual = static_cast<int>(std::lround(scrolled.get<double>()));
  const json shot = command("GET", "/session/" + session_id_ + "/screenshot", json());
  const auto png = util::base64_decode(shot.get<std::string>());
  if (!png) throw Error(ErrorCode::CaptureFailed, "screenshot is not base64");
  const Raster full = decode_png(*png);
  // Near the bottom the browser cannot scroll all the way to `y`.
  return full.crop(0, y - actual, viewport_.width, height);
}

void WebDriverPageSession::close() {
  if (session_id_.empty()) return;
  const std::string id = session_id_;
  session_id_.clear();
  try {
    command("DELETE", "/session/" + id, json());
  } catch (const Error&) {
  }
}

}  // namespace vgs::browser
