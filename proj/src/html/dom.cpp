#include "vgs/html/dom.hpp"

#include <array>
#include <algorithm>

#include "vgs/util/text.hpp"

namespace vgs::html {

std::unique_ptr<Node> Node::make_element(std::string tag) {
  auto n = std::make_unique<Node>(NodeKind::Element);
  n->name = std::move(tag);
  return n;
}

std::unique_ptr<Node> Node::make_text(std::string text) {
  auto n = std::make_unique<Node>(NodeKind::Text);
  n->data = std::move(text);
  return n;
}

std::unique_ptr<Node> Node::make_comment(std::string text) {
  auto n = std::make_unique<Node>(NodeKind::Comment);
  n->data = std::move(text);
  return n;
}

const std::string* Node::attribute(std::string_view attr_name) const {
  for (const auto& a : attributes) {
    if (a.name == attr_name) return &a.value;
  }
  return nullptr;
}

void Node::set_attribute(std::string attr_name, std::string value) {
  for (auto& a : attributes) {
    if (a.name == attr_name) {
      a.value = std::move(value);
      return;
    }
  }
  attributes.push_back({std::move(attr_name), std::move(value)});
}

Node* Node::append_child(std::unique_ptr<Node> child) {
  child->parent = this;
  children.push_back(std::move(child));
  return children.back().get();
}

std::unique_ptr<Node> Node::remove_child(std::size_t index) {
  auto out = std::move(children.at(index));
  children.erase(children.begin() + static_cast<std::ptrdiff_t>(index));
  out->parent = nullptr;
  return out;
}

std::size_t Node::index_in_parent() const {
  if (!parent) return 0;
  for (std::size_t i = 0; i < parent->children.size(); ++i) {
    if (parent->children[i].get() == this) return i;
  }
  return 0;
}

std::vector<const Node*> Node::element_children() const {
  std::vector<const Node*> out;
  for (const auto& c : children) {
    if (c->is_element()) out.push_back(c.get());
  }
  return out;
}

const Node* Node::previous_element_sibling() const {
  if (!parent) return nullptr;
  const Node* prev = nullptr;
  for (const auto& c : parent->children) {
    if (c.get() == this) return prev;
    if (c->is_element()) prev = c.get();
  }
  return nullptr;
}

const Node* Node::next_element_sibling() const {
  if (!parent) return nullptr;
  bool seen = false;
  for (const auto& c : parent->children) {
    if (seen && c->is_element()) return c.get();
    if (c.get() == this) seen = true;
  }
  return nullptr;
}

std::string Node::text_content() const {
  if (kind == NodeKind::Text) return data;
  std::string out;
  for_each_node(*this, [&](const Node& n) {
    if (n.is_text()) out += n.data;
  });
  return out;
}

std::unique_ptr<Node> Node::clone() const {
  auto n = std::make_unique<Node>(kind);
  n->name = name;
  n->data = data;
  n->attributes = attributes;
  n->order = order;
  n->implied = implied;
  for (const auto& c : children) n->append_child(c->clone());
  return n;
}

Document::Document() : root_(std::make_unique<Node>(NodeKind::Document)) {}

const Node* Document::document_element() const {
  for (const auto& c : root_->children) {
    if (c->is_element()) return c.get();
  }
  return nullptr;
}

const Node* Document::body() const {
  const Node* html = document_element();
  if (!html) return nullptr;
  for (const auto& c : html->children) {
    if (c->is_element("body")) return c.get();
  }
  return nullptr;
}

void Document::reindex() {
  std::size_t next = 0;
  for_each_node(*root_, [&](const Node& n) { const_cast<Node&>(n).order = next++; });
}

Document Document::clone() const {
  Document d;
  d.root_ = root_->clone();
  return d;
}

std::size_t Document::node_count() const {
  std::size_t n = 0;
  for_each_node(*root_, [&](const Node&) { ++n; });
  return n - 1;
}

bool is_void_element(std::string_view tag) noexcept {
  static constexpr std::array<std::string_view, 16> kVoid = {
      "area", "base", "br", "col", "embed", "hr", "img", "input",
      "link", "meta", "param", "source", "track", "wbr", "keygen", "basefont"};
  return std::find(kVoid.begin(), kVoid.end(), tag) != kVoid.end();
}

bool is_raw_text_element(std::string_view tag) noexcept {
  static constexpr std::array<std::string_view, 6> kRaw = {
      "script", "style", "xmp", "iframe", "noembed", "noframes"};
  return std::find(kRaw.begin(), kRaw.end(), tag) != kRaw.end();
}

bool is_block_element(std::string_view tag) noexcept {
  static constexpr std::array<std::string_view, 42> kBlock = {
      "html", "body", "div", "p", "ul", "ol", "li", "h1", "h2", "h3", "h4", "h5", "h6",
      "header", "footer", "main", "section", "article", "aside", "nav", "table", "tbody",
      "thead", "tfoot", "tr", "form", "blockquote", "pre", "figure", "figcaption", "dl", "dt",
      "dd", "hr", "address", "fieldset", "details", "summary", "center", "caption", "menu",
      "hgroup"};
  return std::find(kBlock.begin(), kBlock.end(), tag) != kBlock.end();
}

bool is_nonrendered_element(std::string_view tag) noexcept {
  static constexpr std::array<std::string_view, 11> kNone = {
      "head", "script", "style", "template", "noscript", "meta", "link", "title", "base",
      "param", "datalist"};
  return std::find(kNone.begin(), kNone.end(), tag) != kNone.end();
}

std::string inline_style(const Node& element, std::string_view property) {
  const std::string* style = element.attribute("style");
  if (!style) return {};
  std::string_view rest = *style;
  while (!rest.empty()) {
    const auto semi = rest.find(';');
    const std::string_view decl = rest.substr(0, semi);
    rest = semi == std::string_view::npos ? std::string_view{} : rest.substr(semi + 1);
    const auto colon = decl.find(':');
    if (colon == std::string_view::npos) continue;
    if (util::to_lower(util::trim(decl.substr(0, colon))) == property) {
      return util::to_lower(util::trim(decl.substr(colon + 1)));
    }
  }
  return {};
}

bool hidden_by_markup(const Node& element) {
  if (!element.is_element()) return false;
  if (element.attribute("hidden")) return true;
  if (element.is_element("input")) {
    const std::string* type = element.attribute("type");
    if (type && util::to_lower(*type) == "hidden") return true;
  }
  return inline_style(element, "display") == "none";
}

}  // namespace vgs::html
