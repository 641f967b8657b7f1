#pragma once

#include <cstddef>
#include <memory>
#include <string>
#include <string_view>
#include <vector>

namespace vgs::html {

enum class NodeKind { Document, Doctype, Element, Text, Comment };

struct Attribute {
  std::string name;
  std::string value;
};

// A DOM node. Elements carry a lowercase tag name; text, comment and doctype
// nodes carry their payload in `data`. Children are owned; `parent` is a
// back-pointer that stays valid while the owning tree lives.
struct Node {
  explicit Node(NodeKind k) : kind(k) {}

  NodeKind kind;
  std::string name;
  std::string data;
  std::vector<Attribute> attributes;
  std::vector<std::unique_ptr<Node>> children;
  Node* parent = nullptr;
  // Position in a pre-order walk; refreshed by Document::reindex().
  std::size_t order = 0;
  // Created by the parser rather than present in the source markup.
  bool implied = false;

  static std::unique_ptr<Node> make_element(std::string tag);
  static std::unique_ptr<Node> make_text(std::string text);
  static std::unique_ptr<Node> make_comment(std::string text);

  bool is_element() const noexcept { return kind == NodeKind::Element; }
  bool is_element(std::string_view tag) const noexcept { return is_element() && name == tag; }
  bool is_text() const noexcept { return kind == NodeKind::Text; }

  const std::string* attribute(std::string_view attr_name) const;
  void set_attribute(std::string attr_name, std::string value);

  Node* append_child(std::unique_ptr<Node> child);
  std::unique_ptr<Node> remove_child(std::size_t index);
  std::size_t index_in_parent() const;

  std::vector<const Node*> element_children() const;
  const Node* previous_element_sibling() const;
  const Node* next_element_sibling() const;

  // Raw concatenation of every descendant text node (XPath string-value).
  std::string text_content() const;

  std::unique_ptr<Node> clone() const;
};

// Owns a parsed tree. The root is a Document-kind node.
class Document {
 public:
  Document();
  Document(Document&&) noexcept = default;
  Document& operator=(Document&&) noexcept = default;

  static Document parse(std::string_view markup);

  Node& root() noexcept { return *root_; }
  const Node& root() const noexcept { return *root_; }

  // The <html> element, or null for an empty document.
  const Node* document_element() const;
  const Node* body() const;

  // Reassigns `order` on every node; call after structural edits.
  void reindex();

  Document clone() const;

  // Count of every node beneath the document node.
  std::size_t node_count() const;

 private:
  std::unique_ptr<Node> root_;
};

// Elements that never have children or an end tag.
bool is_void_element(std::string_view tag) noexcept;
// Elements whose text content is not markup (script, style, ...).
bool is_raw_text_element(std::string_view tag) noexcept;
// Elements laid out as blocks by default.
bool is_block_element(std::string_view tag) noexcept;
// Elements never rendered (head, script, style, ...).
bool is_nonrendered_element(std::string_view tag) noexcept;
// Hidden by its own markup: `hidden` attribute or inline `display:none`.
bool hidden_by_markup(const Node& element);

// Value of one property from an inline `style` attribute, lowercased and
// trimmed; empty when absent.
std::string inline_style(const Node& element, std::string_view property);

// Pre-order traversal helpers.
template <typename Fn>
void for_each_node(const Node& node, Fn&& fn) {
  fn(node);
  for (const auto& c : node.children) for_each_node(*c, fn);
}

}  // namespace vgs::html
