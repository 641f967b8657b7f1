// Error-tolerant HTML tree construction. Implements the subset of the HTML
// parsing algorithm that affects tree shape on ordinary pages: implied
// html/head/body, void and raw-text elements, implied end tags for p, li,
// dd/dt, headings, table rows/cells/sections, option, and nested anchors.

#include <algorithm>
#include <array>
#include <cctype>
#include <string>
#include <unordered_map>

#include "vgs/error.hpp"
#include "vgs/html/dom.hpp"
#include "vgs/util/text.hpp"

namespace vgs::html {
namespace {

const std::unordered_map<std::string_view, std::uint32_t>& named_entities() {
  static const std::unordered_map<std::string_view, std::uint32_t> kTable = {
      {"amp", '&'},      {"lt", '<'},       {"gt", '>'},       {"quot", '"'},
      {"apos", '\''},    {"nbsp", 0xA0},    {"copy", 0xA9},    {"reg", 0xAE},
      {"trade", 0x2122}, {"pound", 0xA3},   {"euro", 0x20AC},  {"yen", 0xA5},
      {"cent", 0xA2},    {"sect", 0xA7},    {"deg", 0xB0},     {"middot", 0xB7},
      {"bull", 0x2022},  {"hellip", 0x2026}, {"mdash", 0x2014}, {"ndash", 0x2013},
      {"laquo", 0xAB},   {"raquo", 0xBB},   {"lsquo", 0x2018}, {"rsquo", 0x2019},
      {"ldquo", 0x201C}, {"rdquo", 0x201D}, {"times", 0xD7},   {"divide", 0xF7},
      {"plusmn", 0xB1},  {"frac12", 0xBD},  {"star", 0x2606},  {"starf", 0x2605},
      {"rarr", 0x2192},  {"larr", 0x2190},  {"eacute", 0xE9},  {"egrave", 0xE8},
      {"aacute", 0xE1},  {"uuml", 0xFC},    {"ouml", 0xF6},    {"auml", 0xE4},
      {"szlig", 0xDF},   {"ccedil", 0xE7},  {"ntilde", 0xF1},  {"iexcl", 0xA1},
      {"iquest", 0xBF},  {"shy", 0xAD},     {"zwnj", 0x200C},  {"zwj", 0x200D},
  };
  return kTable;
}

// Decodes character references in text or attribute values. Unknown or
// malformed references are kept literally.
std::string decode_entities(std::string_view s) {
  std::string out;
  out.reserve(s.size());
  for (std::size_t i = 0; i < s.size(); ++i) {
    if (s[i] != '&') {
      out.push_back(s[i]);
      continue;
    }
    std::size_t j = i + 1;
    if (j < s.size() && s[j] == '#') {
      ++j;
      bool hex = false;
      if (j < s.size() && (s[j] == 'x' || s[j] == 'X')) {
        hex = true;
        ++j;
      }
      const std::size_t digits_begin = j;
      std::uint32_t cp = 0;
      while (j < s.size() && (hex ? std::isxdigit(static_cast<unsigned char>(s[j]))
                                  : std::isdigit(static_cast<unsigned char>(s[j])))) {
        const char c = s[j];
        const std::uint32_t v = std::isdigit(static_cast<unsigned char>(c))
                                    ? static_cast<std::uint32_t>(c - '0')
                                    : static_cast<std::uint32_t>(std::tolower(c) - 'a' + 10);
        cp = std::min<std::uint32_t>(cp * (hex ? 16 : 10) + v, 0x110000);
        ++j;
      }
      if (j == digits_begin) {
        out.push_back('&');
        continue;
      }
      if (j < s.size() && s[j] == ';') ++j;
      if (cp == 0) cp = 0xFFFD;
      util::append_utf8(out, cp);
      i = j - 1;
      continue;
    }
    std::size_t k = j;
    while (k < s.size() && k - j < 10 && std::isalnum(static_cast<unsigned char>(s[k]))) ++k;
    const auto name = s.substr(j, k - j);
    const auto& table = named_entities();
    const auto it = table.find(name);
    if (it != table.end() && k < s.size() && s[k] == ';') {
      util::append_utf8(out, it->second);
      i = k;
    } else if (it != table.end() && (name == "amp" || name == "lt" || name == "gt" ||
                                     name == "quot" || name == "nbsp")) {
      // Legacy references without a semicolon.
      util::append_utf8(out, it->second);
      i = k - 1;
    } else {
      out.push_back('&');
    }
  }
  return out;
}

bool in_list(std::string_view tag, std::initializer_list<std::string_view> list) {
  return std::find(list.begin(), list.end(), tag) != list.end();
}

bool closes_paragraph(std::string_view tag) {
  return in_list(tag, {"address", "article", "aside", "blockquote", "center", "details", "dialog",
                       "dir", "div", "dl", "fieldset", "figcaption", "figure", "footer", "form",
                       "h1", "h2", "h3", "h4", "h5", "h6", "header", "hgroup", "hr", "main",
                       "menu", "nav", "ol", "p", "pre", "section", "summary", "table", "ul",
                       "li", "dd", "dt", "listing"});
}

bool is_heading(std::string_view tag) {
  return tag.size() == 2 && tag[0] == 'h' && tag[1] >= '1' && tag[1] <= '6';
}

// "Special" elements stop the implied-end-tag search for li/dd/dt.
bool is_special(std::string_view tag) {
  return in_list(tag, {"address", "applet", "area", "article", "aside", "base", "blockquote",
                       "body", "br", "button", "caption", "center", "col", "colgroup", "dd",
                       "details", "dir", "div", "dl", "dt", "embed", "fieldset", "figcaption",
                       "figure", "footer", "form", "h1", "h2", "h3", "h4", "h5", "h6", "head",
                       "header", "hr", "html", "iframe", "img", "input", "li", "link", "main",
                       "menu", "meta", "nav", "ol", "p", "pre", "section", "select", "summary",
                       "table", "tbody", "td", "textarea", "tfoot", "th", "thead", "tr", "ul"});
}

bool is_head_content(std::string_view tag) {
  return in_list(tag, {"title", "meta", "link", "base", "style", "script", "noscript"});
}

bool is_rcdata(std::string_view tag) { return tag == "textarea" || tag == "title"; }

class TreeBuilder {
 public:
  explicit TreeBuilder(std::string_view src) : src_(src) {}

  Document build() {
    while (pos_ < src_.size()) step();
    flush_text();
    doc_.reindex();
    return std::move(doc_);
  }

 private:
  // ---- tokenizer -------------------------------------------------------

  void step() {
    const char c = src_[pos_];
    if (c != '<') {
      const auto next = src_.find('<', pos_);
      const auto end = next == std::string_view::npos ? src_.size() : next;
      text_buf_ += src_.substr(pos_, end - pos_);
      pos_ = end;
      return;
    }
    if (src_.compare(pos_, 4, "<!--") == 0) {
      flush_text();
      const auto end = src_.find("-->", pos_ + 4);
      const auto stop = end == std::string_view::npos ? src_.size() : end;
      on_comment(std::string(src_.substr(pos_ + 4, stop - pos_ - 4)));
      pos_ = end == std::string_view::npos ? src_.size() : end + 3;
      return;
    }
    if (pos_ + 1 < src_.size() && (src_[pos_ + 1] == '!' || src_[pos_ + 1] == '?')) {
      flush_text();
      const auto end = src_.find('>', pos_);
      const auto body = src_.substr(pos_ + 2, (end == std::string_view::npos ? src_.size() : end) - pos_ - 2);
      if (util::to_lower(body.substr(0, 7)) == "doctype") {
        on_doctype(util::trim(body.substr(7)));
      }
      pos_ = end == std::string_view::npos ? src_.size() : end + 1;
      return;
    }
    if (pos_ + 1 < src_.size() && src_[pos_ + 1] == '/') {
      std::size_t p = pos_ + 2;
      if (p < src_.size() && std::isalpha(static_cast<unsigned char>(src_[p]))) {
        flush_text();
        const std::string name = read_name(p);
        const auto end = src_.find('>', p);
        pos_ = end == std::string_view::npos ? src_.size() : end + 1;
        on_end_tag(name);
        return;
      }
      if (p < src_.size() && src_[p] == '>') {  // "</>" is dropped
        pos_ = p + 1;
        return;
      }
      // Bogus end tag: treat as comment.
      flush_text();
      const auto end = src_.find('>', pos_);
      pos_ = end == std::string_view::npos ? src_.size() : end + 1;
      return;
    }
    if (pos_ + 1 < src_.size() && std::isalpha(static_cast<unsigned char>(src_[pos_ + 1]))) {
      flush_text();
      std::size_t p = pos_ + 1;
      const std::string name = read_name(p);
      std::vector<Attribute> attrs;
      bool self_closing = false;
      read_attributes(p, attrs, self_closing);
      pos_ = p;
      on_start_tag(name, std::move(attrs), self_closing);
      return;
    }
    text_buf_.push_back('<');
    ++pos_;
  }

  std::string read_name(std::size_t& p) {
    const std::size_t b = p;
    while (p < src_.size() && !util::is_space(src_[p]) && src_[p] != '/' && src_[p] != '>') ++p;
    return util::to_lower(src_.substr(b, p - b));
  }

  void read_attributes(std::size_t& p, std::vector<Attribute>& attrs, bool& self_closing) {
    while (p < src_.size()) {
      while (p < src_.size() && util::is_space(src_[p])) ++p;
      if (p >= src_.size()) return;
      if (src_[p] == '>') {
        ++p;
        return;
      }
      if (src_[p] == '/') {
        ++p;
        if (p < src_.size() && src_[p] == '>') {
          self_closing = true;
          ++p;
          return;
        }
        continue;
      }
      const std::size_t nb = p;
      ++p;  // a leading '=' is kept as part of the name
      while (p < src_.size() && !util::is_space(src_[p]) && src_[p] != '/' && src_[p] != '>' &&
             src_[p] != '=') {
        ++p;
      }
      std::string name = util::to_lower(src_.substr(nb, p - nb));
      while (p < src_.size() && util::is_space(src_[p])) ++p;
      std::string value;
      if (p < src_.size() && src_[p] == '=') {
        ++p;
        while (p < src_.size() && util::is_space(src_[p])) ++p;
        if (p < src_.size() && (src_[p] == '"' || src_[p] == '\'')) {
          const char q = src_[p++];
          const auto end = src_.find(q, p);
          const auto stop = end == std::string_view::npos ? src_.size() : end;
          value = decode_entities(src_.substr(p, stop - p));
          p = end == std::string_view::npos ? src_.size() : end + 1;
        } else {
          const std::size_t vb = p;
          while (p < src_.size() && !util::is_space(src_[p]) && src_[p] != '>') ++p;
          value = decode_entities(src_.substr(vb, p - vb));
        }
      }
      const bool dup = std::any_of(attrs.begin(), attrs.end(),
                                   [&](const Attribute& a) { return a.name == name; });
      if (!dup) attrs.push_back({std::move(name), std::move(value)});
    }
  }

  // Reads raw or RCDATA content up to the matching end tag.
  void consume_raw_text(const std::string& tag, Node* element) {
    std::size_t p = pos_;
    std::size_t end = src_.size();
    while (p < src_.size()) {
      const auto lt = src_.find("</", p);
      if (lt == std::string_view::npos) break;
      const auto candidate = util::to_lower(src_.substr(lt + 2, tag.size()));
      const std::size_t after = lt + 2 + tag.size();
      if (candidate == tag && (after >= src_.size() || util::is_space(src_[after]) ||
                               src_[after] == '>' || src_[after] == '/')) {
        end = lt;
        break;
      }
      p = lt + 2;
    }
    std::string content(src_.substr(pos_, end - pos_));
    if (is_rcdata(tag)) content = decode_entities(content);
    if (!content.empty()) element->append_child(Node::make_text(std::move(content)));
    if (end < src_.size()) {
      const auto gt = src_.find('>', end);
      pos_ = gt == std::string_view::npos ? src_.size() : gt + 1;
    } else {
      pos_ = src_.size();
    }
  }

  // ---- tree construction ----------------------------------------------

  Node* current() { return stack_.back(); }

  void ensure_html() {
    if (html_) return;
    auto el = Node::make_element("html");
    el->implied = true;
    html_ = doc_.root().append_child(std::move(el));
    stack_ = {html_};
  }

  void ensure_head() {
    ensure_html();
    if (head_) return;
    auto el = Node::make_element("head");
    el->implied = true;
    head_ = html_->append_child(std::move(el));
    stack_.push_back(head_);
  }

  void pop_head() {
    const auto it = std::find(stack_.begin(), stack_.end(), head_);
    if (head_ && it != stack_.end()) stack_.erase(it, stack_.end());
  }

  void ensure_body() {
    if (body_) return;
    ensure_head();
    pop_head();
    auto el = Node::make_element("body");
    el->implied = true;
    body_ = html_->append_child(std::move(el));
    stack_.push_back(body_);
  }

  // Pops every element above and including the topmost `target`.
  void pop_through(Node* target) {
    while (!stack_.empty()) {
      Node* n = stack_.back();
      stack_.pop_back();
      if (n == target) break;
    }
    if (stack_.empty()) stack_.push_back(html_);
  }

  Node* find_open(std::string_view tag, std::initializer_list<std::string_view> boundaries) {
    for (auto it = stack_.rbegin(); it != stack_.rend(); ++it) {
      if ((*it)->name == tag) return *it;
      if (in_list((*it)->name, boundaries)) return nullptr;
    }
    return nullptr;
  }

  void close_paragraph_if_open() {
    if (Node* p = find_open("p", {"html", "body", "table", "td", "th", "button", "caption",
                                  "marquee", "object", "applet", "template"})) {
      pop_through(p);
    }
  }

  void close_list_item(std::initializer_list<std::string_view> items) {
    for (auto it = stack_.rbegin(); it != stack_.rend(); ++it) {
      const std::string& name = (*it)->name;
      if (in_list(name, items)) {
        pop_through(*it);
        return;
      }
      if (is_special(name) && name != "address" && name != "div" && name != "p") return;
    }
  }

  Node* push_implied(const std::string& tag) {
    auto el = Node::make_element(tag);
    el->implied = true;
    Node* n = current()->append_child(std::move(el));
    stack_.push_back(n);
    return n;
  }

  void prepare_table_context(const std::string& tag) {
    static const std::initializer_list<std::string_view> kTableScope = {"table", "html", "template"};
    if (tag == "tr") {
      for (auto it = stack_.rbegin(); it != stack_.rend(); ++it) {
        const std::string& n = (*it)->name;
        if (n == "tr") {
          pop_through(*it);
          break;
        }
        if (n == "tbody" || n == "thead" || n == "tfoot" || in_list(n, kTableScope)) break;
      }
      if (current()->name == "table") push_implied("tbody");
    } else if (tag == "td" || tag == "th") {
      for (auto it = stack_.rbegin(); it != stack_.rend(); ++it) {
        const std::string& n = (*it)->name;
        if (n == "td" || n == "th") {
          pop_through(*it);
          break;
        }
        if (n == "tr" || in_list(n, kTableScope)) break;
      }
      if (current()->name == "table") push_implied("tbody");
      const std::string& cur = current()->name;
      if (cur == "tbody" || cur == "thead" || cur == "tfoot") push_implied("tr");
    } else if (tag == "tbody" || tag == "thead" || tag == "tfoot") {
      for (auto it = stack_.rbegin(); it != stack_.rend(); ++it) {
        const std::string& n = (*it)->name;
        if (n == "tbody" || n == "thead" || n == "tfoot") {
          pop_through(*it);
          break;
        }
        if (in_list(n, kTableScope)) break;
      }
    }
  }

  void on_doctype(std::string body) {
    if (html_) return;
    auto n = std::make_unique<Node>(NodeKind::Doctype);
    n->data = body.empty() ? "html" : std::move(body);
    doc_.root().append_child(std::move(n));
  }

  void on_comment(std::string text) {
    Node* parent = stack_.empty() ? &doc_.root() : current();
    parent->append_child(Node::make_comment(std::move(text)));
  }

  void on_start_tag(const std::string& tag, std::vector<Attribute> attrs, bool self_closing) {
    if (tag == "html") {
      if (!html_) {
        auto el = Node::make_element("html");
        el->attributes = std::move(attrs);
        html_ = doc_.root().append_child(std::move(el));
        stack_ = {html_};
      }
      return;
    }
    if (tag == "head") {
      ensure_html();
      if (!head_ && !body_) {
        auto el = Node::make_element("head");
        el->attributes = std::move(attrs);
        head_ = html_->append_child(std::move(el));
        stack_.push_back(head_);
      }
      return;
    }
    if (tag == "body") {
      if (!body_) {
        ensure_head();
        pop_head();
        auto el = Node::make_element("body");
        el->attributes = std::move(attrs);
        body_ = html_->append_child(std::move(el));
        stack_.push_back(body_);
      }
      return;
    }

    if (!body_ && is_head_content(tag)) {
      ensure_head();
      const auto it = std::find(stack_.begin(), stack_.end(), head_);
      if (it == stack_.end()) {
        ensure_body();  // head already closed: content goes to body
      } else {
        stack_.erase(it + 1, stack_.end());
      }
    } else {
      ensure_body();
      if (closes_paragraph(tag)) close_paragraph_if_open();
      if (is_heading(tag) && is_heading(current()->name)) pop_through(current());
      if (tag == "li") close_list_item({"li"});
      if (tag == "dd" || tag == "dt") close_list_item({"dd", "dt"});
      if (tag == "tr" || tag == "td" || tag == "th" || tag == "tbody" || tag == "thead" ||
          tag == "tfoot") {
        prepare_table_context(tag);
      }
      if (tag == "option" && current()->name == "option") pop_through(current());
      if (tag == "optgroup") {
        if (current()->name == "option") pop_through(current());
        if (current()->name == "optgroup") pop_through(current());
      }
      if (tag == "a") {
        if (Node* open_a = find_open("a", {"html", "table", "td", "th"})) pop_through(open_a);
      }
    }

    auto el = Node::make_element(tag);
    el->attributes = std::move(attrs);
    Node* node = current()->append_child(std::move(el));
    if (is_void_element(tag) || self_closing) return;
    if (is_raw_text_element(tag) || is_rcdata(tag)) {
      consume_raw_text(tag, node);
      return;
    }
    stack_.push_back(node);
  }

  void on_end_tag(const std::string& tag) {
    if (tag == "html" || tag == "body") return;
    if (tag == "head") {
      pop_head();
      return;
    }
    if (tag == "br") {
      on_start_tag("br", {}, false);
      return;
    }
    for (auto it = stack_.rbegin(); it != stack_.rend(); ++it) {
      Node* n = *it;
      if (n == html_ || n == body_) return;
      if (n->name == tag) {
        pop_through(n);
        return;
      }
      // An end tag never reaches past a table boundary it does not close.
      if ((n->name == "table" || n->name == "td" || n->name == "th") && tag != n->name) return;
    }
  }

  void flush_text() {
    if (text_buf_.empty()) return;
    std::string text = decode_entities(text_buf_);
    text_buf_.clear();
    const bool blank = std::all_of(text.begin(), text.end(), [](char c) { return util::is_space(c); });
    if (!body_) {
      if (blank) return;
      ensure_body();
    }
    Node* parent = current();
    if (!parent->children.empty() && parent->children.back()->is_text()) {
      parent->children.back()->data += text;
    } else {
      parent->append_child(Node::make_text(std::move(text)));
    }
  }

  std::string_view src_;
  std::size_t pos_ = 0;
  std::string text_buf_;
  Document doc_;
  Node* html_ = nullptr;
  Node* head_ = nullptr;
  Node* body_ = nullptr;
  std::vector<Node*> stack_;
};

}  // namespace

Document Document::parse(std::string_view markup) {
  // Only a NUL-riddled or non-text payload is rejected; everything else is
  // recovered the way browsers do.
  std::size_t nul = 0;
  for (char c : markup) {
    if (c == '\0') ++nul;
  }
  if (!markup.empty() && nul * 4 > markup.size()) {
    throw Error(ErrorCode::UnparseableInput, "input looks binary (" + std::to_string(nul) + " NUL bytes)");
  }
  return TreeBuilder(markup).build();
}

}  // namespace vgs::html
