#pragma once

#include <string>

#include "vgs/html/dom.hpp"

namespace vgs::html {

// HTML serialization of a node and its subtree (outerHTML semantics; a
// Document node serializes all of its children).
std::string serialize(const Node& node);
std::string serialize(const Document& doc);

// Serializes only the start tag of an element, e.g. `<a href="x">`.
std::string start_tag(const Node& element);
std::string end_tag(const Node& element);
std::string escape_text(std::string_view text);

// Rendered-text approximation: descendant text excluding script, style,
// template and hidden subtrees, whitespace-normalized.
std::string visible_text(const Node& node);

// Whitespace-separated text tokens of the document where element boundaries
// separate tokens and script/style subtrees are skipped entirely.
std::vector<std::string> text_tokens(const Node& root);

}  // namespace vgs::html
