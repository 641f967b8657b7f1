#pragma once

#include <cstddef>
#include <string>
#include <string_view>
#include <vector>

#include "vgs/html/dom.hpp"

namespace vgs::html {

inline constexpr int kDefaultSegmentDistance = 2;

struct SimplifiedHtml {
  std::string content;
  std::size_t source_length = 0;      // code points
  std::size_t simplified_length = 0;  // code points
};

// Attributes that survive simplification.
bool is_whitelisted_attribute(std::string_view name) noexcept;

// Drops script/style subtrees, comments, doctype and every attribute outside
// {class, href, src, alt}. Throws Error{UnparseableInput} on binary garbage.
SimplifiedHtml simplify(std::string_view html);
void simplify_in_place(Document& doc);

struct HtmlSegment {
  std::string anchor_xpath;
  int distance = 0;
  std::string content;
  // Elements within `distance` edges of the anchor, in document order.
  std::vector<const Node*> nodes;
};

// Elements within graph distance `d` of `anchor`, where edges join an
// element to its parent, its element children and its adjacent element
// siblings. Document order.
std::vector<const Node*> segment_nodes(const Node& anchor, int d);

// Serializes the neighbourhood: the anchor with its whole subtree, and every
// other element of the set as an enclosing shell carrying its own text with
// out-of-set element children elided.
HtmlSegment local_segment(const Document& doc, const Node& anchor, int d = kDefaultSegmentDistance);
// Resolves the anchor by XPath; Error{AnchorNotFound} unless it selects
// exactly one element.
HtmlSegment local_segment(const Document& doc, std::string_view anchor_xpath,
                          int d = kDefaultSegmentDistance);

// Positional path such as /html/body/div[2]/ul/li[3]; an index appears only
// when same-named siblings exist. Error{DetachedNode} when `element` is not
// attached to a document.
std::string absolute_xpath(const Node& element);

}  // namespace vgs::html
