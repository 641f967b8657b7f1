#include "vgs/html/serialize.hpp"

#include "vgs/util/text.hpp"

namespace vgs::html {
namespace {

void escape_into(std::string& out, std::string_view s, bool attribute) {
  for (std::size_t i = 0; i < s.size(); ++i) {
    const char c = s[i];
    if (c == '&') {
      out += "&amp;";
    } else if (c == '<' && !attribute) {
      out += "&lt;";
    } else if (c == '>' && !attribute) {
      out += "&gt;";
    } else if (c == '"' && attribute) {
      out += "&quot;";
    } else if (static_cast<unsigned char>(c) == 0xC2 && i + 1 < s.size() &&
               static_cast<unsigned char>(s[i + 1]) == 0xA0) {
      out += "&nbsp;";
      ++i;
    } else {
      out.push_back(c);
    }
  }
}

void serialize_into(std::string& out, const Node& n) {
  switch (n.kind) {
    case NodeKind::Document:
      for (const auto& c : n.children) serialize_into(out, *c);
      return;
    case NodeKind::Doctype:
      out += "<!DOCTYPE " + n.data + ">";
      return;
    case NodeKind::Comment:
      out += "<!--" + n.data + "-->";
      return;
    case NodeKind::Text:
      if (n.parent && n.parent->is_element() && is_raw_text_element(n.parent->name)) {
        out += n.data;
      } else {
        escape_into(out, n.data, false);
      }
      return;
    case NodeKind::Element:
      out += start_tag(n);
      if (is_void_element(n.name)) return;
      for (const auto& c : n.children) serialize_into(out, *c);
      out += end_tag(n);
      return;
  }
}

bool hidden_subtree(const Node& n) {
  if (!n.is_element()) return false;
  return is_nonrendered_element(n.name) || hidden_by_markup(n);
}

void visible_text_into(std::string& out, const Node& n) {
  if (n.is_text()) {
    out += n.data;
    return;
  }
  if (hidden_subtree(n)) return;
  const bool block = n.is_element() && (is_block_element(n.name) || n.name == "td" ||
                                        n.name == "th" || n.name == "br");
  // Block boundaries and cells separate words in rendered text.
  if (block) out += ' ';
  for (const auto& c : n.children) visible_text_into(out, *c);
  if (block) out += ' ';
}

void tokens_into(std::string& buf, const Node& n) {
  if (n.is_text()) {
    buf += n.data;
    return;
  }
  if (n.is_element("script") || n.is_element("style")) return;
  if (n.is_element()) buf += ' ';
  for (const auto& c : n.children) tokens_into(buf, *c);
  if (n.is_element()) buf += ' ';
}

}  // namespace

std::string escape_text(std::string_view text) {
  std::string out;
  escape_into(out, text, false);
  return out;
}

std::string start_tag(const Node& element) {
  std::string out = "<" + element.name;
  for (const auto& a : element.attributes) {
    out += " " + a.name + "=\"";
    escape_into(out, a.value, true);
    out += "\"";
  }
  out += ">";
  return out;
}

std::string end_tag(const Node& element) { return "</" + element.name + ">"; }

std::string serialize(const Node& node) {
  std::string out;
  serialize_into(out, node);
  return out;
}

std::string serialize(const Document& doc) { return serialize(doc.root()); }

std::string visible_text(const Node& node) {
  if (node.is_text()) return util::normalize_whitespace(node.data);
  std::string out;
  for (const auto& c : node.children) visible_text_into(out, *c);
  if (node.is_element() && is_nonrendered_element(node.name) && node.name != "head") {
    // Asking for a non-rendered element's text directly (e.g. <title>)
    // still returns it.
    out = node.text_content();
  }
  return util::normalize_whitespace(out);
}

std::vector<std::string> text_tokens(const Node& root) {
  std::string buf;
  tokens_into(buf, root);
  return util::split_whitespace(buf);
}

}  // namespace vgs::html
