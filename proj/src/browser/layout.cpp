#include "vgs/browser/layout.hpp"

#include <algorithm>
#include <cmath>
#include <cstdlib>
#include <unordered_set>

#include "vgs/html/serialize.hpp"
#include "vgs/util/text.hpp"

namespace vgs::browser {

using html::Node;

namespace {

struct Edges {
  double top = 0;
  double right = 0;
  double bottom = 0;
  double left = 0;
};

// "12px", "12", "50%" (of `basis`); anything else is absent.
std::optional<double> parse_length(std::string_view v, double basis) {
  const std::string s = util::trim(v);
  if (s.empty() || s == "auto") return std::nullopt;
  char* end = nullptr;
  const double n = std::strtod(s.c_str(), &end);
  if (end == s.c_str()) return std::nullopt;
  const std::string unit = util::trim(std::string_view(end));
  if (unit.empty() || unit == "px") return n;
  if (unit == "%") return basis * n / 100.0;
  if (unit == "em" || unit == "rem") return n * 16;
  return std::nullopt;
}

Edges default_margin(const Node& n) {
  const std::string& t = n.name;
  if (t == "body") return {8, 8, 8, 8};
  if (t == "p" || t == "ul" || t == "ol" || t == "dl" || t == "blockquote" || t == "figure" ||
      t == "h3" || t == "h4" || t == "h5" || t == "h6" || t == "table" || t == "form") {
    return {0, 0, 10, 0};
  }
  if (t == "h1" || t == "h2") return {0, 0, 16, 0};
  return {};
}

Edges default_padding(const Node& n) {
  if (n.name == "ul" || n.name == "ol") return {0, 0, 0, 40};
  if (n.name == "td" || n.name == "th") return {2, 2, 2, 2};
  return {};
}

Edges parse_edges(const Node& n, std::string_view prop, Edges fallback, double basis) {
  Edges e = fallback;
  const std::string shorthand = html::inline_style(n, prop);
  if (!shorthand.empty()) {
    std::vector<double> vals;
    for (const auto& part : util::split_whitespace(shorthand)) vals.push_back(parse_length(part, basis).value_or(0));
    switch (vals.size()) {
      case 1: e = {vals[0], vals[0], vals[0], vals[0]}; break;
      case 2: e = {vals[0], vals[1], vals[0], vals[1]}; break;
      case 3: e = {vals[0], vals[1], vals[2], vals[1]}; break;
      case 4: e = {vals[0], vals[1], vals[2], vals[3]}; break;
      default: break;
    }
  }
  const std::string p(prop);
  if (auto v = parse_length(html::inline_style(n, p + "-top"), basis)) e.top = *v;
  if (auto v = parse_length(html::inline_style(n, p + "-right"), basis)) e.right = *v;
  if (auto v = parse_length(html::inline_style(n, p + "-bottom"), basis)) e.bottom = *v;
  if (auto v = parse_length(html::inline_style(n, p + "-left"), basis)) e.left = *v;
  return e;
}

std::optional<Rgb> parse_color(std::string_view v) {
  std::string s = util::trim(v);
  if (s.empty()) return std::nullopt;
  // "background: #fff url(x) no-repeat" style shorthands: take the first token.
  s = util::split_whitespace(s).front();
  auto hex = [](char c) -> int {
    if (c >= '0' && c <= '9') return c - '0';
    if (c >= 'a' && c <= 'f') return c - 'a' + 10;
    return -1;
  };
  if (s[0] == '#') {
    if (s.size() == 4) {
      const int r = hex(s[1]), g = hex(s[2]), b = hex(s[3]);
      if (r < 0 || g < 0 || b < 0) return std::nullopt;
      return Rgb{static_cast<std::uint8_t>(r * 17), static_cast<std::uint8_t>(g * 17),
                 static_cast<std::uint8_t>(b * 17)};
    }
    if (s.size() == 7) {
      int c[6];
      for (int i = 0; i < 6; ++i) {
        c[i] = hex(s[1 + i]);
        if (c[i] < 0) return std::nullopt;
      }
      return Rgb{static_cast<std::uint8_t>(c[0] * 16 + c[1]), static_cast<std::uint8_t>(c[2] * 16 + c[3]),
                 static_cast<std::uint8_t>(c[4] * 16 + c[5])};
    }
    return std::nullopt;
  }
  if (util::starts_with(s, "rgb(")) {
    int r = 0, g = 0, b = 0;
    if (std::sscanf(s.c_str(), "rgb(%d,%d,%d)", &r, &g, &b) == 3) {
      auto clamp = [](int x) { return static_cast<std::uint8_t>(std::clamp(x, 0, 255)); };
      return Rgb{clamp(r), clamp(g), clamp(b)};
    }
    return std::nullopt;
  }
  static const std::vector<std::pair<std::string_view, Rgb>> kNamed = {
      {"white", {255, 255, 255}},     {"black", {0, 0, 0}},        {"red", {255, 0, 0}},
      {"green", {0, 128, 0}},         {"blue", {0, 0, 255}},       {"gray", {128, 128, 128}},
      {"grey", {128, 128, 128}},      {"lightgray", {211, 211, 211}}, {"lightgrey", {211, 211, 211}},
      {"silver", {192, 192, 192}},    {"yellow", {255, 255, 0}},   {"orange", {255, 165, 0}},
      {"navy", {0, 0, 128}},          {"teal", {0, 128, 128}},     {"purple", {128, 0, 128}},
      {"maroon", {128, 0, 0}},        {"olive", {128, 128, 0}},    {"beige", {245, 245, 220}},
      {"whitesmoke", {245, 245, 245}}, {"lightblue", {173, 216, 230}}, {"lightyellow", {255, 255, 224}},
      {"ivory", {255, 255, 240}},     {"linen", {250, 240, 230}},  {"lavender", {230, 230, 250}},
  };
  for (const auto& [name, rgb] : kNamed) {
    if (s == name) return rgb;
  }
  return std::nullopt;
}

bool is_skipped(const Node& n) {
  if (!n.is_element()) return n.kind != html::NodeKind::Text;
  return html::is_nonrendered_element(n.name) || html::hidden_by_markup(n);
}

bool is_replaced(const Node& n) {
  return n.is_element("img") || n.is_element("input") || n.is_element("button") || n.is_element("select") ||
         n.is_element("textarea") || n.is_element("video") || n.is_element("canvas") || n.is_element("svg") ||
         n.is_element("iframe");
}

enum class Display { Block, Inline, InlineBlock, Row, None };

Display display_of(const Node& n) {
  if (is_skipped(n)) return Display::None;
  const std::string d = html::inline_style(n, "display");
  if (d == "block" || d == "list-item" || d == "flex" || d == "grid" || d == "table") return Display::Block;
  if (d == "inline") return is_replaced(n) ? Display::InlineBlock : Display::Inline;
  if (d == "inline-block" || d == "inline-flex") return Display::InlineBlock;
  if (n.name == "tr" || d == "table-row") return Display::Row;
  if (is_replaced(n)) return Display::InlineBlock;
  if (html::is_block_element(n.name) || n.name == "td" || n.name == "th" || n.name == "li") return Display::Block;
  return Display::Inline;
}

int text_scale(const Node* owner) {
  for (const Node* p = owner; p; p = p->parent) {
    if (p->is_element("h1") || p->is_element("h2")) return 2;
  }
  return 1;
}

bool inside(const Node* owner, std::string_view tag) {
  for (const Node* p = owner; p; p = p->parent) {
    if (p->is_element(tag)) return true;
  }
  return false;
}

bool is_bold(const Node* owner) {
  for (const Node* p = owner; p; p = p->parent) {
    if (!p->is_element()) continue;
    const std::string& t = p->name;
    if (t == "b" || t == "strong" || t == "th" || (t.size() == 2 && t[0] == 'h' && t[1] >= '1' && t[1] <= '6')) {
      return true;
    }
  }
  return false;
}

int depth_of(const Node& n) {
  int d = 0;
  for (const Node* p = n.parent; p; p = p->parent) ++d;
  return d;
}

Rgb image_fill(const Node& img) {
  const std::string* src = img.attribute("src");
  const std::string h = util::fnv1a_hex(src ? *src : std::string("img"));
  const auto byte = [&](int i) { return static_cast<std::uint8_t>(std::stoi(h.substr(i * 2, 2), nullptr, 16)); };
  // Pastel tone keeps the alt text readable.
  return {static_cast<std::uint8_t>(150 + byte(0) % 100), static_cast<std::uint8_t>(150 + byte(1) % 100),
          static_cast<std::uint8_t>(150 + byte(2) % 100)};
}

}  // namespace

class LayoutBuilder {
 public:
  explicit LayoutBuilder(Layout& out) : out_(out) {}

  void run(const html::Document& doc) {
    const Node* html_el = doc.document_element();
    double bottom = 0;
    if (html_el && display_of(*html_el) != Display::None) {
      bottom = layout_block(*html_el, 0, 0, out_.page_width_);
    }
    for (auto& b : out_.boxes_) {
      if (b.inline_level) {
        Rect r;
        for (const auto& f : b.fragments) r = r.united(f);
        b.rect = r;
      }
      if (!b.rect.empty()) bottom = std::max(bottom, b.rect.bottom());
    }
    out_.page_height_ = std::max(1, static_cast<int>(std::ceil(bottom)));
  }

 private:
  struct Item {
    enum Kind { Word, Atomic, Break } kind = Word;
    std::string text;
    double width = 0;
    double height = kLineHeight;
    bool space_before = false;
    bool own_line = false;  // a block nested in inline content
    int scale = 1;
    bool link = false;
    bool bold = false;
    std::vector<std::size_t> chain;  // inline ancestor boxes
    std::size_t atomic_box = 0;
    std::size_t box_begin = 0;  // boxes/text laid out at the origin, shifted on placement
    std::size_t box_end = 0;
    std::size_t text_begin = 0;
    std::size_t text_end = 0;
  };

  std::size_t new_box(const Node& n, bool inline_level) {
    LayoutBox b;
    b.node = &n;
    b.inline_level = inline_level;
    b.depth = depth_of(n);
    b.background = parse_color(html::inline_style(n, "background-color"));
    if (!b.background) b.background = parse_color(html::inline_style(n, "background"));
    out_.boxes_.push_back(std::move(b));
    out_.index_[&n] = out_.boxes_.size() - 1;
    return out_.boxes_.size() - 1;
  }

  void shift(std::size_t b0, std::size_t b1, std::size_t t0, std::size_t t1, double dx, double dy) {
    for (std::size_t i = b0; i < b1; ++i) {
      auto& b = out_.boxes_[i];
      b.rect.x += dx;
      b.rect.y += dy;
      for (auto& f : b.fragments) {
        f.x += dx;
        f.y += dy;
      }
    }
    for (std::size_t i = t0; i < t1; ++i) {
      out_.text_[i].rect.x += dx;
      out_.text_[i].rect.y += dy;
    }
  }

  // Lays out a block-level element at (x, y) inside `avail` width and
  // returns its margin-box height.
  double layout_block(const Node& el, double x, double y, double avail) {
    const std::size_t id = new_box(el, false);
    const Edges m = parse_edges(el, "margin", default_margin(el), avail);
    const Edges p = parse_edges(el, "padding", default_padding(el), avail);
    double cw = avail - m.left - m.right - p.left - p.right;
    if (auto w = parse_length(html::inline_style(el, "width"), avail)) cw = *w;
    cw = std::max(0.0, cw);
    const double cx = x + m.left + p.left;
    const double cy = y + m.top + p.top;
    double end = cy;
    if (display_of(el) == Display::Row) {
      end = layout_row(el, cx, cy, cw);
    } else {
      end = layout_children(el, cx, cy, cw);
    }
    double ch = end - cy;
    if (auto h = parse_length(html::inline_style(el, "height"), 0)) ch = *h;
    auto& box = out_.boxes_[id];
    box.rect = {x + m.left, y + m.top, cw + p.left + p.right, ch + p.top + p.bottom};
    return m.top + box.rect.h + m.bottom;
  }

  double layout_row(const Node& tr, double cx, double cy, double cw) {
    std::vector<const Node*> cells;
    for (const auto& c : tr.children) {
      if (c->is_element() && display_of(*c) != Display::None) cells.push_back(c.get());
    }
    if (cells.empty()) return cy;
    const double each = std::floor(cw / static_cast<double>(cells.size()));
    double row_h = 0;
    std::vector<std::size_t> ids;
    for (std::size_t i = 0; i < cells.size(); ++i) {
      const double w = i + 1 == cells.size() ? cw - each * static_cast<double>(i) : each;
      ids.push_back(out_.boxes_.size());
      row_h = std::max(row_h, layout_block(*cells[i], cx + each * static_cast<double>(i), cy, w));
    }
    for (std::size_t id : ids) {
      auto& r = out_.boxes_[id].rect;
      r.h = std::max(r.h, row_h);
    }
    return cy + row_h;
  }

  double layout_children(const Node& container, double cx, double cy, double cw) {
    std::vector<Item> items;
    bool pending_space = false;
    for (const auto& c : container.children) {
      if (c->is_element()) {
        const Display d = display_of(*c);
        if (d == Display::None) continue;
        if (d == Display::Block || d == Display::Row) {
          cy = flush(items, cx, cy, cw);
          pending_space = false;
          cy += layout_block(*c, cx, cy, cw);
          continue;
        }
      }
      collect(*c, items, {}, pending_space, cw);
    }
    return flush(items, cx, cy, cw);
  }

  void collect(const Node& n, std::vector<Item>& items, const std::vector<std::size_t>& chain,
               bool& pending_space, double avail) {
    if (n.is_text()) {
      const Node* owner = n.parent;
      const int scale = text_scale(owner);
      const bool link = inside(owner, "a");
      const bool bold = is_bold(owner);
      const bool pre = inside(owner, "pre");
      std::string word;
      auto emit = [&] {
        if (word.empty()) return;
        Item it;
        it.kind = Item::Word;
        it.width = static_cast<double>(util::utf8_length(word) * kCharAdvance * scale);
        it.height = kLineHeight * scale;
        it.text = std::move(word);
        it.space_before = pending_space;
        it.scale = scale;
        it.link = link;
        it.bold = bold;
        it.chain = chain;
        items.push_back(std::move(it));
        word.clear();
        pending_space = false;
      };
      const std::string& s = n.data;
      for (std::size_t i = 0; i < s.size(); ++i) {
        const char ch = s[i];
        const bool nbsp = static_cast<unsigned char>(ch) == 0xC2 && i + 1 < s.size() &&
                          static_cast<unsigned char>(s[i + 1]) == 0xA0;
        if (pre && ch == '\n') {
          emit();
          Item br;
          br.kind = Item::Break;
          items.push_back(std::move(br));
          continue;
        }
        if (util::is_space(ch) || nbsp) {
          emit();
          pending_space = true;
          if (nbsp) ++i;
          continue;
        }
        word.push_back(ch);
      }
      emit();
      return;
    }
    if (!n.is_element()) return;
    const Display d = display_of(n);
    if (d == Display::None) return;
    if (n.is_element("br")) {
      Item br;
      br.kind = Item::Break;
      br.chain = chain;
      items.push_back(std::move(br));
      pending_space = false;
      return;
    }
    if (d == Display::Inline) {
      std::vector<std::size_t> inner = chain;
      inner.push_back(new_box(n, true));
      for (const auto& c : n.children) collect(*c, items, inner, pending_space, avail);
      return;
    }
    items.push_back(atomic(n, d, chain, pending_space, avail));
    pending_space = false;
  }

  Item atomic(const Node& el, Display d, const std::vector<std::size_t>& chain, bool pending_space, double avail) {
    Item it;
    it.kind = Item::Atomic;
    it.chain = chain;
    it.space_before = pending_space;
    it.box_begin = out_.boxes_.size();
    it.text_begin = out_.text_.size();
    if (d == Display::Block || d == Display::Row) {
      // Block nested inside inline content: give it a line of its own.
      it.own_line = true;
      it.atomic_box = out_.boxes_.size();
      it.height = layout_block(el, 0, 0, avail);
      it.width = avail;
    } else if (is_replaced(el)) {
      it.atomic_box = new_box(el, false);
      double w = kDefaultImageSize;
      double h = kDefaultImageSize;
      if (el.is_element("input") || el.is_element("select")) {
        w = 160;
        h = kLineHeight;
      } else if (el.is_element("button")) {
        w = static_cast<double>(util::utf8_length(html::visible_text(el)) * kCharAdvance + 16);
        h = kLineHeight + 4;
      } else if (el.is_element("textarea")) {
        w = 200;
        h = 2 * kLineHeight;
      }
      auto attr_len = [&](const char* name) -> std::optional<double> {
        const std::string* v = el.attribute(name);
        return v ? parse_length(*v, avail) : std::nullopt;
      };
      if (auto v = attr_len("width")) w = *v;
      if (auto v = attr_len("height")) h = *v;
      if (auto v = parse_length(html::inline_style(el, "width"), avail)) w = *v;
      if (auto v = parse_length(html::inline_style(el, "height"), 0)) h = *v;
      it.width = std::max(0.0, w);
      it.height = std::max(0.0, h);
      out_.boxes_[it.atomic_box].rect = {0, 0, it.width, it.height};
    } else {
      it.atomic_box = out_.boxes_.size();
      double w = preferred_width(el);
      if (auto v = parse_length(html::inline_style(el, "width"), avail)) w = *v;
      w = std::min(w, avail);
      const Edges m = parse_edges(el, "margin", {}, avail);
      const Edges p = parse_edges(el, "padding", {}, avail);
      const double content = std::max(0.0, w - m.left - m.right - p.left - p.right);
      // layout_block honours an explicit width; otherwise it fills `w`.
      it.height = layout_block(el, 0, 0, w);
      it.width = content + m.left + m.right + p.left + p.right;
    }
    it.box_end = out_.boxes_.size();
    it.text_end = out_.text_.size();
    return it;
  }

  // Width of the content laid out on a single line.
  double preferred_width(const Node& el) {
    double total = 0;
    bool space = false;
    bool first = true;
    for_each_text(el, [&](std::string_view s, int scale) {
      for (std::size_t i = 0; i < s.size(); ++i) {
        if (util::is_space(s[i])) {
          space = true;
          continue;
        }
        if ((static_cast<unsigned char>(s[i]) & 0xC0) == 0x80) continue;
        if (space && !first) total += kCharAdvance * scale;
        total += kCharAdvance * scale;
        space = false;
        first = false;
      }
    });
    const Edges p = parse_edges(el, "padding", {}, 0);
    return total + p.left + p.right;
  }

  template <typename Fn>
  void for_each_text(const Node& n, Fn&& fn) {
    for (const auto& c : n.children) {
      if (c->is_text()) {
        fn(c->data, text_scale(c->parent));
      } else if (c->is_element() && display_of(*c) != Display::None) {
        for_each_text(*c, fn);
      }
    }
  }

  double flush(std::vector<Item>& items, double cx, double cy, double cw) {
    if (items.empty()) return cy;
    std::vector<Item*> line;
    std::unordered_set<std::size_t> on_line;
    double line_w = 0;
    auto finish_line = [&] {
      if (line.empty()) return;
      double lh = 0;
      for (Item* it : line) lh = std::max(lh, it->height);
      double pen = cx;
      bool first = true;
      for (Item* it : line) {
        if (it->kind == Item::Break) continue;
        if (it->space_before && !first) pen += kCharAdvance * it->scale;
        first = false;
        const double top = cy + lh - it->height;
        const Rect r{pen, top, it->width, it->height};
        if (it->kind == Item::Word) {
          out_.text_.push_back({r, it->text, it->scale, it->link, it->bold});
        } else {
          shift(it->box_begin, it->box_end, it->text_begin, it->text_end, pen, top);
        }
        // One fragment per box per line, so inter-word gaps belong to it.
        for (std::size_t b : it->chain) {
          auto& frags = out_.boxes_[b].fragments;
          if (on_line.insert(b).second) {
            frags.push_back(r);
          } else {
            frags.back() = frags.back().united(r);
          }
        }
        pen += it->width;
      }
      on_line.clear();
      cy += lh;
      line.clear();
      line_w = 0;
    };
    for (auto& it : items) {
      if (it.kind == Item::Break) {
        if (line.empty()) {
          // An empty line still takes up a line's height.
          cy += kLineHeight;
        } else {
          finish_line();
        }
        continue;
      }
      if (it.own_line) {
        finish_line();
        it.space_before = false;
        line.push_back(&it);
        finish_line();
        continue;
      }
      const double space = (it.space_before && !line.empty()) ? kCharAdvance * it.scale : 0;
      if (!line.empty() && line_w + space + it.width > cw) {
        finish_line();
      }
      line_w += (line.empty() ? 0 : space) + it.width;
      line.push_back(&it);
    }
    finish_line();
    items.clear();
    return cy;
  }

  Layout& out_;
};

Layout Layout::compute(const html::Document& doc, int page_width) {
  Layout out;
  out.page_width_ = page_width;
  LayoutBuilder(out).run(doc);
  return out;
}

const LayoutBox* Layout::box(const html::Node* element) const {
  const auto it = index_.find(element);
  return it == index_.end() ? nullptr : &boxes_[it->second];
}

std::optional<Rect> Layout::rect_of(const html::Node* element) const {
  const LayoutBox* b = box(element);
  if (!b) return std::nullopt;
  return b->rect;
}

const html::Node* Layout::hit_test(Point p) const {
  const LayoutBox* best = nullptr;
  for (const auto& b : boxes_) {
    bool hit = false;
    if (b.inline_level) {
      for (const auto& f : b.fragments) hit = hit || f.contains(p);
    } else {
      hit = b.rect.contains(p);
    }
    if (hit && (!best || b.depth >= best->depth)) best = &b;
  }
  return best ? best->node : nullptr;
}

Raster Layout::paint(int y, int height) const {
  Raster r(page_width_, height);
  const Rect view{0, static_cast<double>(y), static_cast<double>(page_width_), static_cast<double>(height)};
  auto ix = [](double v) { return static_cast<int>(std::lround(v)); };
  for (const auto& b : boxes_) {
    if (!b.background) continue;
    if (b.inline_level) {
      for (const auto& f : b.fragments) {
        if (f.intersects(view)) r.fill_rect(ix(f.x), ix(f.y) - y, ix(f.w), ix(f.h), *b.background);
      }
    } else if (b.rect.intersects(view)) {
      r.fill_rect(ix(b.rect.x), ix(b.rect.y) - y, ix(b.rect.w), ix(b.rect.h), *b.background);
    }
  }
  for (const auto& b : boxes_) {
    if (!b.rect.intersects(view) || b.inline_level) continue;
    const Node& n = *b.node;
    const int bx = ix(b.rect.x);
    const int by = ix(b.rect.y) - y;
    const int bw = ix(b.rect.w);
    const int bh = ix(b.rect.h);
    if (n.is_element("img")) {
      r.fill_rect(bx, by, bw, bh, image_fill(n));
      r.stroke_rect(bx, by, bw, bh, 1, {90, 90, 90});
      const std::string* alt = n.attribute("alt");
      const std::string label = alt && !alt->empty() ? *alt : "image";
      const int fits = std::max(0, (bw - 8) / (kGlyphWidth + 1));
      if (fits > 0 && bh >= kGlyphHeight + 4) {
        const std::string shown = label.size() > static_cast<std::size_t>(fits) ? label.substr(0, fits) : label;
        r.draw_text(bx + 4, by + bh / 2 - kGlyphHeight / 2, shown, {40, 40, 40});
      }
    } else if (n.is_element("input") || n.is_element("select") || n.is_element("textarea") ||
               n.is_element("button")) {
      if (n.is_element("button")) r.fill_rect(bx, by, bw, bh, {225, 225, 225});
      r.stroke_rect(bx, by, bw, bh, 1, {118, 118, 118});
    } else if (n.is_element("hr")) {
      r.fill_rect(bx, by, bw, 1, {160, 160, 160});
    }
  }
  for (const auto& t : text_) {
    if (!t.rect.intersects(view)) continue;
    const Rgb color = t.link ? Rgb{0, 0, 238} : Rgb{0, 0, 0};
    const int s = t.scale;
    const int tx = ix(t.rect.x);
    const int ty = ix(t.rect.y) - y;
    int pen = tx;
    for (std::size_t i = 0; i < t.text.size(); ++i) {
      if ((static_cast<unsigned char>(t.text[i]) & 0xC0) == 0x80) continue;
      std::size_t len = 1;
      while (i + len < t.text.size() && (static_cast<unsigned char>(t.text[i + len]) & 0xC0) == 0x80) ++len;
      const std::string_view ch(t.text.data() + i, len);
      r.draw_text(pen + s, ty + 6 * s, ch, color, s);
      if (t.bold) r.draw_text(pen + s + 1, ty + 6 * s, ch, color, s);
      pen += kCharAdvance * s;
    }
    if (t.link) r.fill_rect(tx, ty + 15 * s, ix(t.rect.w), 1, color);
  }
  return r;
}

}  // namespace vgs::browser
