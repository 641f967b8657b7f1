#include <doctest.h>

#include <algorithm>
#include <random>

#include "support.hpp"
#include "vgs/error.hpp"
#include "vgs/html/dom.hpp"
#include "vgs/html/serialize.hpp"
#include "vgs/html/tools.hpp"
#include "vgs/html/xpath.hpp"
#include "vgs/util/text.hpp"

using namespace vgs;
using namespace vgs::html;

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

std::vector<std::string> sorted(std::vector<std::string> v) {
  std::sort(v.begin(), v.end());
  return v;
}

}  // namespace

TEST_CASE("parser builds the implied skeleton") {
  const Document doc = Document::parse("<p>hi<p>there");
  REQUIRE(doc.document_element());
  REQUIRE(doc.body());
  CHECK(serialize(doc) == "<html><head></head><body><p>hi</p><p>there</p></body></html>");
}

TEST_CASE("parser handles entities, void elements and raw text") {
  const Document doc = Document::parse("<div title=\"a&amp;b\">x &lt; y&nbsp;z<br>w<script>if (a<b) {}</script></div>");
  const Node* div = doc.body()->element_children().front();
  CHECK(*div->attribute("title") == "a&b");
  CHECK(div->children[0]->data == "x < y\xC2\xA0z");
  CHECK(div->children[1]->is_element("br"));
  CHECK(div->children[3]->is_element("script"));
  CHECK(div->children[3]->children[0]->data == "if (a<b) {}");
}

TEST_CASE("simplify drops scripts and non-whitelisted attributes") {
  const auto s = simplify("<div><script>x()</script><p class=\"a\" id=\"b\">t</p></div>");
  CHECK(s.content == "<div><p class=\"a\">t</p></div>");
  CHECK(simplify("<img src=\"u\" alt=\"v\" width=\"5\">").content == "<img src=\"u\" alt=\"v\">");
  CHECK(simplify("<!-- c --><style>p{}</style><a href=\"h\" onclick=\"z\">k</a>").content == "<a href=\"h\">k</a>");
  CHECK(s.simplified_length <= s.source_length);
  CHECK(s.source_length == util::utf8_length("<div><script>x()</script><p class=\"a\" id=\"b\">t</p></div>"));
}

TEST_CASE("simplify keeps a full document's skeleton") {
  const auto s = simplify("<!DOCTYPE html><html lang=en><head><title>T</title></head><body data-x=1><p>a</p></body></html>");
  CHECK(s.content == "<html><head><title>T</title></head><body><p>a</p></body></html>");
}

TEST_CASE("simplify rejects binary garbage") {
  std::string junk;
  for (int i = 0; i < 256; ++i) junk.push_back(static_cast<char>(i % 3 == 0 ? 0 : 0x80 + i % 64));
  CHECK(code_of([&] { simplify(junk); }) == ErrorCode::UnparseableInput);
}

TEST_CASE("simplify contract on the corpus") {
  for (const auto& path : test::corpus_paths()) {
    CAPTURE(path);
    const std::string raw = util::read_file(path);
    const auto s = simplify(raw);
    const Document out = Document::parse(s.content);
    for_each_node(out.root(), [&](const Node& n) {
      if (!n.is_element()) return;
      CHECK_FALSE(n.name == "script");
      CHECK_FALSE(n.name == "style");
      for (const auto& a : n.attributes) CHECK(is_whitelisted_attribute(a.name));
    });
    CHECK(sorted(text_tokens(Document::parse(raw).root())) == sorted(text_tokens(out.root())));
    CHECK(simplify(s.content).content == s.content);
    CHECK(s.simplified_length <= s.source_length);
  }
}

TEST_CASE("segments around a middle list item") {
  const Document doc = Document::parse("<div><ul><li>a</li><li id=m>b</li><li>c</li></ul><p>far</p></div>");
  const auto seg0 = local_segment(doc, "//li[2]", 0);
  CHECK(seg0.content == "<li id=\"m\">b</li>");
  CHECK(seg0.nodes.size() == 1);

  const auto seg = local_segment(doc, "//li[2]", 2);
  std::vector<std::string> names;
  for (const Node* n : seg.nodes) names.push_back(n->name);
  CHECK(names == std::vector<std::string>{"div", "ul", "li", "li", "li", "p"});
  CHECK(seg.content.find("<li>a</li>") != std::string::npos);
  CHECK(seg.content.find("<li>c</li>") != std::string::npos);
  CHECK(seg.content.find("<div>") == 0);
  CHECK(seg.content.find("<p>far</p>") != std::string::npos);
  CHECK(local_segment(doc, "//li[2]", 1).content.find("far") == std::string::npos);
  CHECK(seg.distance == 2);
  CHECK(seg.anchor_xpath == "/html/body/div/ul/li[2]");
  CHECK(local_segment(doc, "//li[2]").distance == kDefaultSegmentDistance);
  CHECK(kDefaultSegmentDistance == 2);
}

TEST_CASE("segment saturates to the whole document") {
  const Document doc = Document::parse("<div><ul><li>a</li><li>b</li></ul><p>far</p></div>");
  const auto seg = local_segment(doc, "//li[1]", 40);
  std::size_t elements = 0;
  for_each_node(doc.root(), [&](const Node& n) { elements += n.is_element() ? 1 : 0; });
  CHECK(seg.nodes.size() == elements);
  CHECK(seg.content == serialize(*doc.document_element()));
}

TEST_CASE("segment errors") {
  const Document doc = Document::parse("<ul><li>a</li><li>b</li></ul>");
  CHECK(code_of([&] { local_segment(doc, "//li", 1); }) == ErrorCode::AnchorNotFound);
  CHECK(code_of([&] { local_segment(doc, "//table", 1); }) == ErrorCode::AnchorNotFound);
  CHECK(code_of([&] { local_segment(doc, "//li[1]", -1); }) == ErrorCode::NegativeDistance);
}

TEST_CASE("segments match breadth-first search on random trees") {
  std::mt19937 rng(7);
  for (int round = 0; round < 40; ++round) {
    const auto tree = test::random_tree(rng, 5 + static_cast<int>(rng() % 30));
    const Document doc = Document::parse(tree.markup);
    std::vector<const Node*> by_id(tree.parent.size(), nullptr);
    for_each_node(doc.root(), [&](const Node& n) {
      if (const auto* id = n.attribute("data-id")) by_id[std::stoul(*id)] = &n;
    });
    for (const Node* n : by_id) REQUIRE(n);
    const int anchor = static_cast<int>(rng() % tree.parent.size());
    std::set<int> previous;
    for (int d = 0; d <= 5; ++d) {
      std::set<int> got;
      for (const Node* n : segment_nodes(*by_id[static_cast<std::size_t>(anchor)], d)) {
        got.insert(std::stoi(*n->attribute("data-id")));
      }
      CHECK(got == test::bfs_within(tree, anchor, d));
      CHECK(std::includes(got.begin(), got.end(), previous.begin(), previous.end()));
      previous = got;
    }
  }
}

TEST_CASE("segment output reparses and contains the anchor markup") {
  std::mt19937 rng(11);
  for (int round = 0; round < 20; ++round) {
    const auto tree = test::random_tree(rng, 20);
    const Document doc = Document::parse(tree.markup);
    const std::string xp = "//*[@data-id='" + std::to_string(3 + rng() % 20) + "']";
    const auto seg = local_segment(doc, xp, 2);
    const Node& anchor = *std::get<NodeSet>(XPath::compile(xp).evaluate(doc.root())).front().node;
    CHECK(seg.content.find(serialize(anchor)) != std::string::npos);
    const Document again = Document::parse(seg.content);
    CHECK(serialize(again.body() ? *again.body() : again.root()).find(serialize(anchor)) != std::string::npos);
  }
}

TEST_CASE("absolute xpath construction") {
  const Document doc = Document::parse("<ul><li>a</li><li>b</li></ul>");
  const Node* li2 = doc.body()->element_children()[0]->element_children()[1];
  CHECK(absolute_xpath(*li2) == "/html/body/ul/li[2]");
  CHECK(absolute_xpath(*doc.document_element()) == "/html");
  auto detached = Node::make_element("div");
  CHECK(code_of([&] { absolute_xpath(*detached); }) == ErrorCode::DetachedNode);
}

TEST_CASE("absolute xpath round trip on fixture nodes") {
  std::mt19937 rng(3);
  std::size_t checked = 0;
  for (const auto& path : test::corpus_paths()) {
    const Document doc = Document::parse(util::read_file(path));
    std::vector<const Node*> elements;
    for_each_node(doc.root(), [&](const Node& n) {
      if (n.is_element()) elements.push_back(&n);
    });
    for (int i = 0; i < 25 && checked < 500; ++i, ++checked) {
      const Node* n = elements[rng() % elements.size()];
      const auto v = XPath::compile(absolute_xpath(*n)).evaluate(doc.root());
      const auto& set = std::get<NodeSet>(v);
      REQUIRE(set.size() == 1);
      CHECK(set.front().node == n);
    }
  }
  CHECK(checked == 500);
}
