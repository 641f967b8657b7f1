#pragma once

#include <memory>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

#include "vgs/html/dom.hpp"

namespace vgs::html {

// A node in the XPath data model: a DOM node, or one attribute of an element
// when `attr` is non-negative.
struct XNode {
  const Node* node = nullptr;
  int attr = -1;

  bool is_attribute() const noexcept { return attr >= 0; }
  const Attribute& attribute() const { return node->attributes.at(static_cast<std::size_t>(attr)); }
  friend bool operator==(const XNode&, const XNode&) = default;
};

using NodeSet = std::vector<XNode>;
using XValue = std::variant<NodeSet, double, std::string, bool>;

// XPath string-value of a node.
std::string string_value(const XNode& n);

// A compiled XPath 1.0 expression. Element and attribute name tests match
// case-insensitively against the lowercase HTML DOM. Variables and namespace
// axes are not supported and are reported as syntax errors.
class XPath {
 public:
  struct Expr;

  // Throws Error{XPathSyntax} on malformed input or unknown functions.
  static XPath compile(std::string_view expression);

  // Evaluates with `context` as the context node; the tree must have been
  // indexed (Document::reindex) for document ordering.
  XValue evaluate(const Node& context) const;

  const std::string& source() const noexcept { return source_; }

 private:
  std::shared_ptr<const Expr> root_;
  std::string source_;
};

enum class MatchKind { Element, Attribute, Text, Comment, Document, Scalar };

struct XPathMatch {
  MatchKind kind = MatchKind::Scalar;
  const Node* node = nullptr;  // null for scalars
  std::string attribute_name;  // set for MatchKind::Attribute
  std::string value;
};

// Evaluates `expression` against the document and converts the result the
// way extraction consumes it: elements yield their normalized visible text,
// attribute nodes their value, text nodes their content, and scalar results
// a single string.
std::vector<XPathMatch> evaluate_xpath(const Document& doc, std::string_view expression);
std::vector<std::string> evaluate_xpath_strings(const Document& doc, std::string_view expression);

// True when `expression` compiles.
bool is_valid_xpath(std::string_view expression) noexcept;

}  // namespace vgs::html
