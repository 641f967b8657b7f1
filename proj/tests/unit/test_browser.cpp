#include <doctest.h>
#include <httplib.h>

#include <cmath>
#include <thread>

#include "support.hpp"
#include "vgs/browser/session.hpp"
#include "vgs/error.hpp"
#include "vgs/html/dom.hpp"
#include "vgs/html/xpath.hpp"

using namespace vgs;
using namespace vgs::browser;

namespace {

ErrorCode code_of(const std::function<void()>& fn) {
  try {
    fn();
  } catch (const Error& e) {
    return e.code();
  }
  FAIL("no error raised");
  return ErrorCode::Usage;
}

std::unique_ptr<PageSession> open(std::string_view fixture) { return load_page(test::fixture_url(fixture)); }

}  // namespace

TEST_CASE("default viewport") {
  const Viewport v;
  CHECK(v.width == 1280);
  CHECK(v.height == 1100);
}

TEST_CASE("page heights are measured after layout") {
  CHECK(open("pages/height-1100.html")->page_height() == 1100);
  CHECK(open("pages/height-2500.html")->page_height() == 2500);
  CHECK(open("books/book-1.html")->page_height() == 2634);
}

TEST_CASE("unreachable targets fail navigation") {
  CHECK(code_of([] { load_page("file:///nonexistent/page.html"); }) == ErrorCode::NavigationFailed);
  CHECK(code_of([] { load_page("http://127.0.0.1:1/"); }) == ErrorCode::NavigationFailed);
  CHECK(code_of([] { load_page("not a url"); }) == ErrorCode::NavigationFailed);
}

TEST_CASE("http pages load and error statuses fail") {
  httplib::Server server;
  server.Get("/page.html", [](const httplib::Request&, httplib::Response& res) {
    res.set_content("<html><body><a href='next.html'>next</a></body></html>", "text/html");
  });
  server.Get("/missing.html", [](const httplib::Request&, httplib::Response& res) { res.status = 404; });
  const int port = server.bind_to_any_port("127.0.0.1");
  std::thread t([&] { server.listen_after_bind(); });
  server.wait_until_ready();
  const std::string base = "http://127.0.0.1:" + std::to_string(port);
  {
    auto s = load_page(base + "/page.html");
    CHECK(s->evaluate_xpath("//a/@href") == std::vector<std::string>{"next.html"});
    CHECK(s->base_url() == base + "/page.html");
  }
  CHECK(code_of([&] { load_page(base + "/missing.html"); }) == ErrorCode::NavigationFailed);
  server.stop();
  t.join();
}

TEST_CASE("region planning") {
  const Viewport v;
  auto r = plan_regions(1100, v);
  REQUIRE(r.size() == 1);
  CHECK(r[0].y_offset == 0);
  CHECK(r[0].height == 1100);
  r = plan_regions(3300, v);
  REQUIRE(r.size() == 3);
  CHECK(r[1].y_offset == 1100);
  CHECK(r[2].y_offset == 2200);
  CHECK(r[2].height == 1100);
  r = plan_regions(2500, v);
  REQUIRE(r.size() == 3);
  CHECK(r[2].height == 300);
  for (const auto& reg : r) CHECK(reg.width == 1280);
  CHECK(plan_regions(1, v).size() == 1);
}

TEST_CASE("tiling captures one screenshot per region") {
  auto s = open("pages/height-2500.html");
  const auto regions = tile_regions(*s);
  REQUIRE(regions.size() == 3);
  for (const auto& r : regions) {
    REQUIRE(r.screenshot);
    CHECK(r.screenshot->width() == 1280);
    CHECK(r.screenshot->height() == r.height);
    CHECK(r.y_offset == r.index * 1100);
  }
  CHECK(regions[2].height == 300);
  const auto plain = tile_regions(*s, false);
  CHECK_FALSE(plain[0].screenshot);
}

TEST_CASE("snapshots are stable and closing invalidates the session") {
  auto s = open("books/book-1.html");
  const std::string a = s->dom_snapshot();
  CHECK(a == s->dom_snapshot());
  CHECK(a.find("<article") != std::string::npos);
  s->close();
  CHECK(s->closed());
  CHECK(code_of([&] { s->dom_snapshot(); }) == ErrorCode::SessionClosed);
  CHECK(code_of([&] { s->evaluate_xpath("//p"); }) == ErrorCode::SessionClosed);
  CHECK(code_of([&] { s->element_at({1, 1}); }) == ErrorCode::SessionClosed);
  CHECK(code_of([&] { s->capture(0, 10); }) == ErrorCode::SessionClosed);
}

TEST_CASE("xpath evaluation through a session") {
  StaticPageSession s("file:///x.html", "<ul><li>a</li><li>b</li></ul>", {});
  CHECK(s.evaluate_xpath("//li/text()") == std::vector<std::string>{"a", "b"});
  CHECK(code_of([&] { s.evaluate_xpath("//li["); }) == ErrorCode::XPathSyntax);
  auto imgs = open("pages/two-images.html");
  CHECK(imgs->evaluate_xpath("//img/@src") == std::vector<std::string>{"first.png", "/second.png"});
  CHECK(imgs->base_url() == "https://img.example/gallery/");
}

TEST_CASE("hit testing picks the deepest element") {
  StaticPageSession s("file:///x.html",
                      "<ul><li><a href='#'>link</a> trailing text here</li>"
                      "<li><a href='#'><span>inner span</span> tail</a></li></ul>",
                      {});
  const auto rects = s.client_rects({"/html/body/ul/li[1]/a", "/html/body/ul/li[2]/a/span"});
  REQUIRE(rects[0]);
  REQUIRE(rects[1]);
  const auto a = s.element_at(rects[0]->center());
  CHECK(a.tag == "a");
  CHECK(a.absolute_xpath == "/html/body/ul/li[1]/a");
  const auto span = s.element_at(rects[1]->center());
  CHECK(span.tag == "span");
  CHECK(span.absolute_xpath == "/html/body/ul/li[2]/a/span");
  CHECK(span.client_rect == *rects[1]);
  CHECK(code_of([&] { s.element_at({-1, 0}); }) == ErrorCode::OutOfBounds);
  CHECK(code_of([&] { s.element_at({5, 1e6}); }) == ErrorCode::OutOfBounds);
  CHECK(code_of([&] { s.element_at({1280, 5}); }) == ErrorCode::OutOfBounds);
}

TEST_CASE("hit test round trips through absolute xpaths") {
  auto s = open("pages/hit-test.html");
  const html::Document doc = html::Document::parse(s->dom_snapshot());
  const auto marked = html::evaluate_xpath(doc, "//*[@data-mark]");
  REQUIRE(marked.size() >= 12);
  for (const auto& m : marked) {
    const std::string mark = *m.node->attribute("data-mark");
    CAPTURE(mark);
    const auto rect = s->client_rects({"//*[@data-mark='" + mark + "']"}).front();
    REQUIRE(rect);
    const ElementRef hit = s->element_at(rect->center());
    const auto back = html::evaluate_xpath(doc, hit.absolute_xpath);
    REQUIRE(back.size() == 1);
    CHECK(*back.front().node->attribute("data-mark") == mark);
  }
}

TEST_CASE("geometry of hidden and missing elements is absent") {
  StaticPageSession s("file:///x.html", "<p>shown</p><p style='display:none'>gone</p>", {});
  const auto r = s.client_rects({"/html/body/p[1]", "/html/body/p[2]", "//table"});
  CHECK(r[0]);
  CHECK_FALSE(r[1]);
  CHECK_FALSE(r[2]);
}

TEST_CASE("the static renderer cannot run scripts") {
  StaticPageSession s("file:///x.html", "<p>x</p>", {});
  CHECK(code_of([&] { s.execute_script("return 1;", nlohmann::json::array()); }) == ErrorCode::InjectionFailed);
}

TEST_CASE("webdriver sessions need an endpoint") {
  SessionOptions o;
  o.backend = Backend::WebDriver;
  CHECK(code_of([&] { load_page(test::fixture_url("pages/marks.html"), {}, o); }) == ErrorCode::NavigationFailed);
}

TEST_CASE("png round trip") {
  Raster r(37, 21, {10, 20, 30});
  r.fill_rect(3, 4, 10, 5, {200, 0, 0});
  r.draw_text(1, 1, "42", {0, 0, 255});
  const std::string png = encode_png(r);
  CHECK(png.substr(1, 3) == "PNG");
  CHECK(decode_png(png) == r);
  CHECK(code_of([] { decode_png("definitely not a png"); }) == ErrorCode::CaptureFailed);
}

TEST_CASE("raster drawing and cropping") {
  Raster r(20, 20);
  r.stroke_rect(2, 2, 10, 10, 2, {0, 255, 0});
  CHECK(r.pixel(2, 2) == Rgb{0, 255, 0});
  CHECK(r.pixel(3, 6) == Rgb{0, 255, 0});
  CHECK(r.pixel(6, 6) == Rgb{255, 255, 255});
  r.set_pixel(-5, 100, {0, 0, 0});
  const Raster c = r.crop(2, 2, 4, 4);
  CHECK(c.width() == 4);
  CHECK(c.pixel(0, 0) == Rgb{0, 255, 0});
  const Raster past = r.crop(15, 15, 10, 10);
  CHECK(past.width() == 10);
  CHECK(past.pixel(9, 9) == Rgb{255, 255, 255});
}

TEST_CASE("overlay shows in captures and never in the snapshot") {
  auto s = open("pages/marks.html");
  const std::string before = s->dom_snapshot();
  const Raster clean = s->capture(0, 200);
  s->set_overlay({{1, {10, 10, 100, 50}, {255, 0, 0}}});
  const Raster marked = s->capture(0, 200);
  CHECK_FALSE(marked == clean);
  CHECK(marked.pixel(10, 30) == Rgb{255, 0, 0});
  CHECK(s->dom_snapshot() == before);
  const auto hit = s->element_at({15, 12});
  CHECK(hit.tag != "");
  s->clear_overlay();
  CHECK(s->capture(0, 200) == clean);
}

TEST_CASE("chip placement avoids collisions") {
  const std::vector<OverlayMark> marks = {{1, {0, 0, 100, 100}, {}}, {2, {0, 0, 100, 100}, {}}};
  const auto chips = overlay_chip_rects(marks);
  REQUIRE(chips.size() == 2);
  CHECK_FALSE(chips[0].intersects(chips[1]));
  CHECK(chips[0].right() == 100);
  CHECK(chips[0].y == 0);
}
