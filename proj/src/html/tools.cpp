#include "vgs/html/tools.hpp"

#include <algorithm>
#include <deque>
#include <unordered_map>
#include <unordered_set>

#include "vgs/error.hpp"
#include "vgs/html/serialize.hpp"
#include "vgs/html/xpath.hpp"
#include "vgs/util/text.hpp"

namespace vgs::html {

bool is_whitelisted_attribute(std::string_view name) noexcept {
  return name == "class" || name == "href" || name == "src" || name == "alt";
}

namespace {

void strip(Node& n) {
  auto& kids = n.children;
  kids.erase(std::remove_if(kids.begin(), kids.end(),
                            [](const std::unique_ptr<Node>& c) {
                              return c->kind == NodeKind::Comment || c->kind == NodeKind::Doctype ||
                                     c->is_element("script") || c->is_element("style");
                            }),
             kids.end());
  auto& attrs = n.attributes;
  attrs.erase(std::remove_if(attrs.begin(), attrs.end(),
                             [](const Attribute& a) { return !is_whitelisted_attribute(a.name); }),
              attrs.end());
  // Removing a node can leave two text runs side by side; merge them so the
  // tree matches what a reparse of the output produces.
  for (std::size_t i = 1; i < kids.size();) {
    if (kids[i]->is_text() && kids[i - 1]->is_text()) {
      kids[i - 1]->data += kids[i]->data;
      kids.erase(kids.begin() + static_cast<std::ptrdiff_t>(i));
    } else {
      ++i;
    }
  }
  for (auto& c : kids) strip(*c);
}

// Skeleton elements the parser supplied are left out so a fragment stays a
// fragment; reparsing restores them.
void serialize_explicit(std::string& out, const Node& n) {
  const bool skeleton = n.is_element() && n.implied && (n.name == "html" || n.name == "head" || n.name == "body");
  if (n.kind != NodeKind::Document && !skeleton) {
    out += serialize(n);
    return;
  }
  for (const auto& c : n.children) serialize_explicit(out, *c);
}

}  // namespace

void simplify_in_place(Document& doc) {
  strip(doc.root());
  doc.reindex();
}

SimplifiedHtml simplify(std::string_view html) {
  Document doc = Document::parse(html);
  simplify_in_place(doc);
  SimplifiedHtml out;
  serialize_explicit(out.content, doc.root());
  out.source_length = util::utf8_length(html);
  out.simplified_length = util::utf8_length(out.content);
  return out;
}

namespace {

void for_each_neighbour(const Node& n, const auto& fn) {
  if (n.parent && n.parent->is_element()) fn(*n.parent);
  for (const auto& c : n.children) {
    if (c->is_element()) fn(*c);
  }
  if (const Node* p = n.previous_element_sibling()) fn(*p);
  if (const Node* s = n.next_element_sibling()) fn(*s);
}

bool in_subtree(const Node& n, const Node& root) {
  for (const Node* p = &n; p; p = p->parent) {
    if (p == &root) return true;
  }
  return false;
}

void serialize_segment(std::string& out, const Node& n, const Node& anchor,
                       const std::unordered_set<const Node*>& keep) {
  if (&n == &anchor) {
    out += serialize(n);
    return;
  }
  out += start_tag(n);
  if (is_void_element(n.name)) return;
  for (const auto& c : n.children) {
    if (c->is_element()) {
      if (keep.count(c.get())) serialize_segment(out, *c, anchor, keep);
    } else if (c->kind == NodeKind::Text || c->kind == NodeKind::Comment) {
      out += serialize(*c);
    }
  }
  out += end_tag(n);
}

}  // namespace

std::vector<const Node*> segment_nodes(const Node& anchor, int d) {
  if (d < 0) throw Error(ErrorCode::NegativeDistance, "segment distance " + std::to_string(d));
  if (!anchor.is_element()) throw Error(ErrorCode::AnchorNotFound, "anchor is not an element");
  std::unordered_map<const Node*, int> dist{{&anchor, 0}};
  std::deque<const Node*> queue{&anchor};
  while (!queue.empty()) {
    const Node* cur = queue.front();
    queue.pop_front();
    const int next = dist[cur] + 1;
    if (next > d) continue;
    for_each_neighbour(*cur, [&](const Node& nb) {
      if (dist.emplace(&nb, next).second) queue.push_back(&nb);
    });
  }
  std::vector<const Node*> out;
  out.reserve(dist.size());
  for (const auto& [node, _] : dist) out.push_back(node);
  std::sort(out.begin(), out.end(), [](const Node* a, const Node* b) { return a->order < b->order; });
  return out;
}

HtmlSegment local_segment(const Document& doc, const Node& anchor, int d) {
  HtmlSegment seg;
  seg.distance = d;
  seg.nodes = segment_nodes(anchor, d);
  seg.anchor_xpath = absolute_xpath(anchor);
  (void)doc;

  std::unordered_set<const Node*> keep(seg.nodes.begin(), seg.nodes.end());
  // Every kept element lies below the parent of the shallowest kept
  // elements, which are therefore siblings; they are the segment's roots.
  for (const Node* n : seg.nodes) {
    const Node* p = n->parent;
    if (p && keep.count(p)) continue;
    if (in_subtree(*n, anchor) && n != &anchor) continue;
    serialize_segment(seg.content, *n, anchor, keep);
  }
  return seg;
}

HtmlSegment local_segment(const Document& doc, std::string_view anchor_xpath, int d) {
  if (d < 0) throw Error(ErrorCode::NegativeDistance, "segment distance " + std::to_string(d));
  XValue v;
  try {
    v = XPath::compile(anchor_xpath).evaluate(doc.root());
  } catch (const Error&) {
    throw Error(ErrorCode::AnchorNotFound, "anchor xpath '" + std::string(anchor_xpath) + "' is invalid");
  }
  const auto* set = std::get_if<NodeSet>(&v);
  if (!set || set->size() != 1 || set->front().is_attribute() || !set->front().node->is_element()) {
    throw Error(ErrorCode::AnchorNotFound,
                "anchor xpath '" + std::string(anchor_xpath) + "' does not select exactly one element");
  }
  return local_segment(doc, *set->front().node, d);
}

std::string absolute_xpath(const Node& element) {
  if (!element.is_element()) throw Error(ErrorCode::DetachedNode, "not an element");
  std::vector<std::string> steps;
  const Node* n = &element;
  for (; n && n->is_element(); n = n->parent) {
    std::string step = n->name;
    if (n->parent) {
      std::size_t index = 0;
      std::size_t total = 0;
      for (const auto& c : n->parent->children) {
        if (c->is_element(n->name)) {
          ++total;
          if (c.get() == n) index = total;
        }
      }
      if (total > 1) step += "[" + std::to_string(index) + "]";
    }
    steps.push_back(std::move(step));
  }
  if (!n || n->kind != NodeKind::Document) {
    throw Error(ErrorCode::DetachedNode, "<" + element.name + "> is not attached to a document");
  }
  std::string out;
  for (auto it = steps.rbegin(); it != steps.rend(); ++it) out += "/" + *it;
  return out;
}

}  // namespace vgs::html
