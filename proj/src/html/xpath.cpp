#include "vgs/html/xpath.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <limits>
#include <optional>
#include <unordered_map>
#include <unordered_set>

#include "vgs/error.hpp"
#include "vgs/html/serialize.hpp"
#include "vgs/util/text.hpp"

namespace vgs::html {

// ---------------------------------------------------------------------------
// Data model helpers

std::string string_value(const XNode& n) {
  if (n.is_attribute()) return n.attribute().value;
  switch (n.node->kind) {
    case NodeKind::Text:
    case NodeKind::Comment:
      return n.node->data;
    case NodeKind::Doctype:
      return {};
    default:
      return n.node->text_content();
  }
}

namespace {

bool doc_order_less(const XNode& a, const XNode& b) {
  if (a.node->order != b.node->order) return a.node->order < b.node->order;
  return a.attr < b.attr;
}

void sort_unique(NodeSet& set) {
  std::sort(set.begin(), set.end(), doc_order_less);
  set.erase(std::unique(set.begin(), set.end()), set.end());
}

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

double string_to_number(std::string_view s) {
  const std::string t = util::trim(s);
  if (t.empty()) return kNaN;
  // XPath Number: '-'? (Digits ('.' Digits?)? | '.' Digits)
  std::size_t i = 0;
  if (t[0] == '-') i = 1;
  bool digits = false;
  bool dot = false;
  for (std::size_t k = i; k < t.size(); ++k) {
    if (t[k] >= '0' && t[k] <= '9') {
      digits = true;
    } else if (t[k] == '.' && !dot) {
      dot = true;
    } else {
      return kNaN;
    }
  }
  if (!digits) return kNaN;
  return std::strtod(t.c_str(), nullptr);
}

std::string number_to_string(double d) {
  if (std::isnan(d)) return "NaN";
  if (std::isinf(d)) return d > 0 ? "Infinity" : "-Infinity";
  if (d == 0) return "0";
  if (d == std::floor(d) && std::fabs(d) < 1e15) {
    return std::to_string(static_cast<long long>(d));
  }
  char buf[64];
  auto res = std::to_chars(buf, buf + sizeof buf, d, std::chars_format::fixed);
  std::string s(buf, res.ptr);
  if (s.find('.') != std::string::npos) {
    while (!s.empty() && s.back() == '0') s.pop_back();
    if (!s.empty() && s.back() == '.') s.pop_back();
  }
  return s;
}

std::string to_string_value(const XValue& v) {
  if (const auto* ns = std::get_if<NodeSet>(&v)) {
    return ns->empty() ? std::string{} : string_value(ns->front());
  }
  if (const auto* d = std::get_if<double>(&v)) return number_to_string(*d);
  if (const auto* s = std::get_if<std::string>(&v)) return *s;
  return std::get<bool>(v) ? "true" : "false";
}

double to_number(const XValue& v) {
  if (const auto* d = std::get_if<double>(&v)) return *d;
  if (const auto* b = std::get_if<bool>(&v)) return *b ? 1.0 : 0.0;
  return string_to_number(to_string_value(v));
}

bool to_boolean(const XValue& v) {
  if (const auto* ns = std::get_if<NodeSet>(&v)) return !ns->empty();
  if (const auto* d = std::get_if<double>(&v)) return *d != 0 && !std::isnan(*d);
  if (const auto* s = std::get_if<std::string>(&v)) return !s->empty();
  return std::get<bool>(v);
}

// ---------------------------------------------------------------------------
// Lexer

enum class Tok {
  LParen, RParen, LBracket, RBracket, Dot, DotDot, At, Comma, ColonColon, Slash, DoubleSlash,
  Pipe, Plus, Minus, Eq, Neq, Lt, Le, Gt, Ge, Star, Name, Literal, Number, End
};

struct Token {
  Tok type;
  std::string text;
  double number = 0;
  std::size_t offset = 0;
};

[[noreturn]] void syntax_error(std::string_view expr, std::size_t offset, std::string_view what) {
  throw Error(ErrorCode::XPathSyntax,
              std::string(what) + " at offset " + std::to_string(offset) + " in '" + std::string(expr) + "'");
}

bool name_start(unsigned char c) { return std::isalpha(c) || c == '_' || c >= 0x80; }
bool name_char(unsigned char c) {
  return std::isalnum(c) || c == '_' || c == '-' || c == '.' || c >= 0x80;
}

std::vector<Token> lex(std::string_view s) {
  std::vector<Token> out;
  std::size_t i = 0;
  auto push = [&](Tok t, std::size_t len) {
    out.push_back({t, std::string(s.substr(i, len)), 0, i});
    i += len;
  };
  while (i < s.size()) {
    const char c = s[i];
    if (util::is_space(c)) {
      ++i;
      continue;
    }
    switch (c) {
      case '(': push(Tok::LParen, 1); continue;
      case ')': push(Tok::RParen, 1); continue;
      case '[': push(Tok::LBracket, 1); continue;
      case ']': push(Tok::RBracket, 1); continue;
      case '@': push(Tok::At, 1); continue;
      case ',': push(Tok::Comma, 1); continue;
      case '|': push(Tok::Pipe, 1); continue;
      case '+': push(Tok::Plus, 1); continue;
      case '-': push(Tok::Minus, 1); continue;
      case '=': push(Tok::Eq, 1); continue;
      case '*': push(Tok::Star, 1); continue;
      default: break;
    }
    if (c == '/') {
      if (i + 1 < s.size() && s[i + 1] == '/') {
        push(Tok::DoubleSlash, 2);
      } else {
        push(Tok::Slash, 1);
      }
      continue;
    }
    if (c == '!') {
      if (i + 1 < s.size() && s[i + 1] == '=') {
        push(Tok::Neq, 2);
        continue;
      }
      syntax_error(s, i, "unexpected '!'");
    }
    if (c == '<' || c == '>') {
      const bool eq = i + 1 < s.size() && s[i + 1] == '=';
      push(c == '<' ? (eq ? Tok::Le : Tok::Lt) : (eq ? Tok::Ge : Tok::Gt), eq ? 2 : 1);
      continue;
    }
    if (c == ':') {
      if (i + 1 < s.size() && s[i + 1] == ':') {
        push(Tok::ColonColon, 2);
        continue;
      }
      syntax_error(s, i, "unexpected ':'");
    }
    if (c == '"' || c == '\'') {
      const auto end = s.find(c, i + 1);
      if (end == std::string_view::npos) syntax_error(s, i, "unterminated string literal");
      out.push_back({Tok::Literal, std::string(s.substr(i + 1, end - i - 1)), 0, i});
      i = end + 1;
      continue;
    }
    if (c == '.' || std::isdigit(static_cast<unsigned char>(c))) {
      if (c == '.' && !(i + 1 < s.size() && std::isdigit(static_cast<unsigned char>(s[i + 1])))) {
        if (i + 1 < s.size() && s[i + 1] == '.') {
          push(Tok::DotDot, 2);
        } else {
          push(Tok::Dot, 1);
        }
        continue;
      }
      std::size_t j = i;
      while (j < s.size() && std::isdigit(static_cast<unsigned char>(s[j]))) ++j;
      if (j < s.size() && s[j] == '.') {
        ++j;
        while (j < s.size() && std::isdigit(static_cast<unsigned char>(s[j]))) ++j;
      }
      Token t{Tok::Number, std::string(s.substr(i, j - i)), 0, i};
      t.number = std::strtod(t.text.c_str(), nullptr);
      out.push_back(std::move(t));
      i = j;
      continue;
    }
    if (name_start(static_cast<unsigned char>(c))) {
      std::size_t j = i;
      while (j < s.size() && name_char(static_cast<unsigned char>(s[j]))) ++j;
      // QName prefix (prefix:local), but not an axis separator.
      if (j + 1 < s.size() && s[j] == ':' && s[j + 1] != ':' &&
          (name_start(static_cast<unsigned char>(s[j + 1])) || s[j + 1] == '*')) {
        ++j;
        if (s[j] == '*') {
          ++j;
        } else {
          while (j < s.size() && name_char(static_cast<unsigned char>(s[j]))) ++j;
        }
      }
      push(Tok::Name, j - i);
      continue;
    }
    if (c == '$') syntax_error(s, i, "variable references are not supported");
    syntax_error(s, i, std::string("unexpected character '") + c + "'");
  }
  out.push_back({Tok::End, "", 0, s.size()});
  return out;
}

// ---------------------------------------------------------------------------
// AST

struct Context {
  XNode node;
  std::size_t position = 1;
  std::size_t size = 1;
};

}  // namespace

struct XPath::Expr {
  virtual ~Expr() = default;
  virtual XValue eval(const Context& ctx) const = 0;
};

namespace {

using ExprPtr = std::shared_ptr<const XPath::Expr>;

struct LiteralExpr final : XPath::Expr {
  XValue value;
  explicit LiteralExpr(XValue v) : value(std::move(v)) {}
  XValue eval(const Context&) const override { return value; }
};

struct NegateExpr final : XPath::Expr {
  ExprPtr operand;
  explicit NegateExpr(ExprPtr e) : operand(std::move(e)) {}
  XValue eval(const Context& ctx) const override { return -to_number(operand->eval(ctx)); }
};

enum class BinOp { Or, And, Eq, Neq, Lt, Le, Gt, Ge, Add, Sub, Mul, Div, Mod };

bool compare_atoms(BinOp op, const XValue& a, const XValue& b) {
  if (op == BinOp::Eq || op == BinOp::Neq) {
    bool eq;
    if (std::holds_alternative<bool>(a) || std::holds_alternative<bool>(b)) {
      eq = to_boolean(a) == to_boolean(b);
    } else if (std::holds_alternative<double>(a) || std::holds_alternative<double>(b)) {
      eq = to_number(a) == to_number(b);
    } else {
      eq = to_string_value(a) == to_string_value(b);
    }
    return op == BinOp::Eq ? eq : !eq;
  }
  const double x = to_number(a);
  const double y = to_number(b);
  switch (op) {
    case BinOp::Lt: return x < y;
    case BinOp::Le: return x <= y;
    case BinOp::Gt: return x > y;
    case BinOp::Ge: return x >= y;
    default: return false;
  }
}

bool compare_values(BinOp op, const XValue& a, const XValue& b) {
  const auto* na = std::get_if<NodeSet>(&a);
  const auto* nb = std::get_if<NodeSet>(&b);
  if (na && nb) {
    for (const auto& x : *na) {
      const XValue sx = string_value(x);
      for (const auto& y : *nb) {
        if (compare_atoms(op, sx, XValue(string_value(y)))) return true;
      }
    }
    return false;
  }
  if (na || nb) {
    const NodeSet& set = na ? *na : *nb;
    const XValue& other = na ? b : a;
    if (std::holds_alternative<bool>(other)) {
      return na ? compare_atoms(op, XValue(to_boolean(a)), other)
                : compare_atoms(op, other, XValue(to_boolean(b)));
    }
    for (const auto& n : set) {
      XValue atom = std::holds_alternative<double>(other) ? XValue(string_to_number(string_value(n)))
                                                          : XValue(string_value(n));
      if (na ? compare_atoms(op, atom, other) : compare_atoms(op, other, atom)) return true;
    }
    return false;
  }
  return compare_atoms(op, a, b);
}

struct BinaryExpr final : XPath::Expr {
  BinOp op;
  ExprPtr lhs;
  ExprPtr rhs;
  BinaryExpr(BinOp o, ExprPtr l, ExprPtr r) : op(o), lhs(std::move(l)), rhs(std::move(r)) {}

  XValue eval(const Context& ctx) const override {
    switch (op) {
      case BinOp::Or: return to_boolean(lhs->eval(ctx)) || to_boolean(rhs->eval(ctx));
      case BinOp::And: return to_boolean(lhs->eval(ctx)) && to_boolean(rhs->eval(ctx));
      case BinOp::Add: return to_number(lhs->eval(ctx)) + to_number(rhs->eval(ctx));
      case BinOp::Sub: return to_number(lhs->eval(ctx)) - to_number(rhs->eval(ctx));
      case BinOp::Mul: return to_number(lhs->eval(ctx)) * to_number(rhs->eval(ctx));
      case BinOp::Div: return to_number(lhs->eval(ctx)) / to_number(rhs->eval(ctx));
      case BinOp::Mod: return std::fmod(to_number(lhs->eval(ctx)), to_number(rhs->eval(ctx)));
      default: return compare_values(op, lhs->eval(ctx), rhs->eval(ctx));
    }
  }
};

NodeSet require_nodeset(XValue v, const char* where) {
  if (auto* ns = std::get_if<NodeSet>(&v)) return std::move(*ns);
  throw Error(ErrorCode::XPathSyntax, std::string(where) + " requires a node-set operand");
}

struct UnionExpr final : XPath::Expr {
  ExprPtr lhs;
  ExprPtr rhs;
  UnionExpr(ExprPtr l, ExprPtr r) : lhs(std::move(l)), rhs(std::move(r)) {}
  XValue eval(const Context& ctx) const override {
    NodeSet a = require_nodeset(lhs->eval(ctx), "'|'");
    NodeSet b = require_nodeset(rhs->eval(ctx), "'|'");
    a.insert(a.end(), b.begin(), b.end());
    sort_unique(a);
    return a;
  }
};

enum class Axis {
  Child, Descendant, DescendantOrSelf, Parent, Ancestor, AncestorOrSelf, FollowingSibling,
  PrecedingSibling, Following, Preceding, Attribute, Self
};

bool is_reverse(Axis a) {
  return a == Axis::Ancestor || a == Axis::AncestorOrSelf || a == Axis::PrecedingSibling ||
         a == Axis::Preceding;
}

enum class TestKind { Name, AnyName, Text, Node, Comment, ProcessingInstruction };

struct NodeTest {
  TestKind kind = TestKind::Node;
  std::string name;  // lowercase local name for TestKind::Name
};

bool matches(const NodeTest& t, const XNode& n, Axis axis) {
  if (n.is_attribute()) {
    if (axis != Axis::Attribute && axis != Axis::Self && axis != Axis::AncestorOrSelf &&
        axis != Axis::DescendantOrSelf) {
      return false;
    }
    switch (t.kind) {
      case TestKind::Node: return true;
      case TestKind::AnyName: return true;
      case TestKind::Name: return n.attribute().name == t.name;
      default: return false;
    }
  }
  const Node& node = *n.node;
  switch (t.kind) {
    case TestKind::Node: return true;
    case TestKind::Text: return node.kind == NodeKind::Text;
    case TestKind::Comment: return node.kind == NodeKind::Comment;
    case TestKind::ProcessingInstruction: return false;
    case TestKind::AnyName: return axis != Axis::Attribute && node.is_element();
    case TestKind::Name: return axis != Axis::Attribute && node.is_element() && node.name == t.name;
  }
  return false;
}

void collect_descendants(const Node& n, NodeSet& out) {
  for (const auto& c : n.children) {
    if (c->kind == NodeKind::Doctype) continue;
    out.push_back({c.get(), -1});
    collect_descendants(*c, out);
  }
}

const Node* root_of(const Node* n) {
  while (n->parent) n = n->parent;
  return n;
}

// Nodes on `axis` from `ctx`, in axis order (reverse axes nearest-first).
NodeSet axis_nodes(Axis axis, const XNode& ctx) {
  NodeSet out;
  const Node* n = ctx.node;
  if (ctx.is_attribute()) {
    switch (axis) {
      case Axis::Self:
        out.push_back(ctx);
        return out;
      case Axis::Parent:
        out.push_back({n, -1});
        return out;
      case Axis::Ancestor:
      case Axis::AncestorOrSelf:
        if (axis == Axis::AncestorOrSelf) out.push_back(ctx);
        for (const Node* p = n; p; p = p->parent) out.push_back({p, -1});
        return out;
      case Axis::Following: {
        // Everything after the owner element that is not its attribute.
        NodeSet all;
        collect_descendants(*root_of(n), all);
        for (const auto& x : all) {
          if (x.node->order > n->order) out.push_back(x);
        }
        return out;
      }
      case Axis::Preceding: {
        NodeSet all;
        collect_descendants(*root_of(n), all);
        for (auto it = all.rbegin(); it != all.rend(); ++it) {
          bool ancestor = false;
          for (const Node* p = n; p; p = p->parent) ancestor |= (p == it->node);
          if (it->node->order < n->order && !ancestor) out.push_back(*it);
        }
        return out;
      }
      default:
        return out;
    }
  }
  switch (axis) {
    case Axis::Self:
      out.push_back(ctx);
      break;
    case Axis::Child:
      for (const auto& c : n->children) {
        if (c->kind != NodeKind::Doctype) out.push_back({c.get(), -1});
      }
      break;
    case Axis::Descendant:
      collect_descendants(*n, out);
      break;
    case Axis::DescendantOrSelf:
      out.push_back(ctx);
      collect_descendants(*n, out);
      break;
    case Axis::Parent:
      if (n->parent) out.push_back({n->parent, -1});
      break;
    case Axis::Ancestor:
      for (const Node* p = n->parent; p; p = p->parent) out.push_back({p, -1});
      break;
    case Axis::AncestorOrSelf:
      for (const Node* p = n; p; p = p->parent) out.push_back({p, -1});
      break;
    case Axis::FollowingSibling:
      if (n->parent) {
        bool seen = false;
        for (const auto& c : n->parent->children) {
          if (seen && c->kind != NodeKind::Doctype) out.push_back({c.get(), -1});
          if (c.get() == n) seen = true;
        }
      }
      break;
    case Axis::PrecedingSibling:
      if (n->parent) {
        for (const auto& c : n->parent->children) {
          if (c.get() == n) break;
          if (c->kind != NodeKind::Doctype) out.push_back({c.get(), -1});
        }
        std::reverse(out.begin(), out.end());
      }
      break;
    case Axis::Following: {
      // Following siblings of self and of every ancestor, with descendants.
      for (const Node* cur = n; cur && cur->parent; cur = cur->parent) {
        NodeSet part;
        bool seen = false;
        for (const auto& c : cur->parent->children) {
          if (seen && c->kind != NodeKind::Doctype) {
            part.push_back({c.get(), -1});
            collect_descendants(*c, part);
          }
          if (c.get() == cur) seen = true;
        }
        out.insert(out.end(), part.begin(), part.end());
      }
      sort_unique(out);
      break;
    }
    case Axis::Preceding: {
      NodeSet all;
      collect_descendants(*root_of(n), all);
      for (auto it = all.rbegin(); it != all.rend(); ++it) {
        if (it->node->order >= n->order) continue;
        bool ancestor = false;
        for (const Node* p = n->parent; p; p = p->parent) ancestor |= (p == it->node);
        if (!ancestor) out.push_back(*it);
      }
      break;
    }
    case Axis::Attribute:
      if (n->is_element()) {
        for (std::size_t i = 0; i < n->attributes.size(); ++i) {
          out.push_back({n, static_cast<int>(i)});
        }
      }
      break;
  }
  return out;
}

NodeSet apply_predicates(NodeSet nodes, const std::vector<ExprPtr>& predicates) {
  for (const auto& pred : predicates) {
    NodeSet kept;
    const std::size_t size = nodes.size();
    for (std::size_t i = 0; i < size; ++i) {
      const Context c{nodes[i], i + 1, size};
      const XValue v = pred->eval(c);
      const bool keep = std::holds_alternative<double>(v)
                            ? std::get<double>(v) == static_cast<double>(i + 1)
                            : to_boolean(v);
      if (keep) kept.push_back(nodes[i]);
    }
    nodes = std::move(kept);
  }
  return nodes;
}

struct Step {
  Axis axis = Axis::Child;
  NodeTest test;
  std::vector<ExprPtr> predicates;
};

NodeSet apply_step(const Step& step, const NodeSet& input) {
  NodeSet out;
  for (const auto& ctx : input) {
    NodeSet candidates;
    for (const auto& n : axis_nodes(step.axis, ctx)) {
      if (matches(step.test, n, step.axis)) candidates.push_back(n);
    }
    NodeSet kept = apply_predicates(std::move(candidates), step.predicates);
    out.insert(out.end(), kept.begin(), kept.end());
  }
  if (input.size() > 1 || is_reverse(step.axis)) sort_unique(out);
  return out;
}

struct PathExpr final : XPath::Expr {
  bool absolute = false;
  ExprPtr filter;  // optional primary expression the steps start from
  std::vector<Step> steps;

  XValue eval(const Context& ctx) const override {
    NodeSet current;
    if (filter) {
      current = require_nodeset(filter->eval(ctx), "path step");
    } else if (absolute) {
      current.push_back({root_of(ctx.node.node), -1});
    } else {
      current.push_back(ctx.node);
    }
    for (const auto& step : steps) current = apply_step(step, current);
    return current;
  }
};

struct FilterExpr final : XPath::Expr {
  ExprPtr primary;
  std::vector<ExprPtr> predicates;
  XValue eval(const Context& ctx) const override {
    NodeSet set = require_nodeset(primary->eval(ctx), "predicate");
    sort_unique(set);
    return apply_predicates(std::move(set), predicates);
  }
};

// ---------------------------------------------------------------------------
// Functions

using Args = std::vector<ExprPtr>;

struct FunctionExpr final : XPath::Expr {
  std::string name;
  Args args;

  std::string arg_string(const Context& ctx, std::size_t i) const {
    return to_string_value(args[i]->eval(ctx));
  }
  std::string arg_or_context_string(const Context& ctx) const {
    return args.empty() ? string_value(ctx.node) : arg_string(ctx, 0);
  }

  XValue eval(const Context& ctx) const override {
    if (name == "last") return static_cast<double>(ctx.size);
    if (name == "position") return static_cast<double>(ctx.position);
    if (name == "count") {
      return static_cast<double>(require_nodeset(args[0]->eval(ctx), "count()").size());
    }
    if (name == "local-name" || name == "name") {
      XNode n = ctx.node;
      if (!args.empty()) {
        NodeSet set = require_nodeset(args[0]->eval(ctx), "name()");
        if (set.empty()) return std::string{};
        sort_unique(set);
        n = set.front();
      }
      if (n.is_attribute()) return n.attribute().name;
      return n.node->is_element() ? n.node->name : std::string{};
    }
    if (name == "namespace-uri") return std::string{};
    if (name == "string") return arg_or_context_string(ctx);
    if (name == "concat") {
      std::string out;
      for (std::size_t i = 0; i < args.size(); ++i) out += arg_string(ctx, i);
      return out;
    }
    if (name == "starts-with") return util::starts_with(arg_string(ctx, 0), arg_string(ctx, 1));
    if (name == "contains") return arg_string(ctx, 0).find(arg_string(ctx, 1)) != std::string::npos;
    if (name == "substring-before") {
      const std::string s = arg_string(ctx, 0);
      const auto p = s.find(arg_string(ctx, 1));
      return p == std::string::npos ? std::string{} : s.substr(0, p);
    }
    if (name == "substring-after") {
      const std::string s = arg_string(ctx, 0);
      const std::string t = arg_string(ctx, 1);
      const auto p = s.find(t);
      return p == std::string::npos ? std::string{} : s.substr(p + t.size());
    }
    if (name == "substring") return substring(ctx);
    if (name == "string-length") {
      return static_cast<double>(util::utf8_length(arg_or_context_string(ctx)));
    }
    if (name == "normalize-space") return util::normalize_whitespace(arg_or_context_string(ctx));
    if (name == "translate") return translate(ctx);
    if (name == "boolean") return to_boolean(args[0]->eval(ctx));
    if (name == "not") return !to_boolean(args[0]->eval(ctx));
    if (name == "true") return true;
    if (name == "false") return false;
    if (name == "number") {
      return args.empty() ? string_to_number(string_value(ctx.node)) : to_number(args[0]->eval(ctx));
    }
    if (name == "sum") {
      double total = 0;
      for (const auto& n : require_nodeset(args[0]->eval(ctx), "sum()")) {
        total += string_to_number(string_value(n));
      }
      return total;
    }
    if (name == "floor") return std::floor(to_number(args[0]->eval(ctx)));
    if (name == "ceiling") return std::ceil(to_number(args[0]->eval(ctx)));
    if (name == "round") {
      const double d = to_number(args[0]->eval(ctx));
      if (std::isnan(d) || std::isinf(d)) return d;
      return std::floor(d + 0.5);
    }
    if (name == "id") return id_lookup(ctx);
    return false;
  }

  // Code-point based substring with XPath's rounding rules.
  XValue substring(const Context& ctx) const {
    const std::string s = arg_string(ctx, 0);
    std::vector<std::string> cps;
    for (std::size_t i = 0; i < s.size();) {
      std::size_t len = 1;
      const auto c = static_cast<unsigned char>(s[i]);
      if (c >= 0xF0) len = 4; else if (c >= 0xE0) len = 3; else if (c >= 0xC0) len = 2;
      cps.push_back(s.substr(i, len));
      i += len;
    }
    const double start = std::floor(to_number(args[1]->eval(ctx)) + 0.5);
    const double len = args.size() > 2 ? std::floor(to_number(args[2]->eval(ctx)) + 0.5)
                                       : std::numeric_limits<double>::infinity();
    std::string out;
    for (std::size_t i = 0; i < cps.size(); ++i) {
      const double pos = static_cast<double>(i + 1);
      if (pos >= start && pos < start + len) out += cps[i];
    }
    return out;
  }

  XValue translate(const Context& ctx) const {
    const std::string s = arg_string(ctx, 0);
    const std::string from = arg_string(ctx, 1);
    const std::string to = arg_string(ctx, 2);
    std::string out;
    for (char c : s) {
      const auto p = from.find(c);
      if (p == std::string::npos) {
        out.push_back(c);
      } else if (p < to.size()) {
        out.push_back(to[p]);
      }
    }
    return out;
  }

  XValue id_lookup(const Context& ctx) const {
    const XValue v = args[0]->eval(ctx);
    std::vector<std::string> ids;
    if (const auto* ns = std::get_if<NodeSet>(&v)) {
      for (const auto& n : *ns) {
        for (auto& t : util::split_whitespace(string_value(n))) ids.push_back(t);
      }
    } else {
      ids = util::split_whitespace(to_string_value(v));
    }
    NodeSet out;
    for_each_node(*root_of(ctx.node.node), [&](const Node& n) {
      if (!n.is_element()) return;
      const std::string* id = n.attribute("id");
      if (id && std::find(ids.begin(), ids.end(), *id) != ids.end()) out.push_back({&n, -1});
    });
    return out;
  }
};

struct FunctionSig {
  std::size_t min_args;
  std::size_t max_args;
};

const std::unordered_map<std::string_view, FunctionSig>& function_table() {
  static const std::unordered_map<std::string_view, FunctionSig> kTable = {
      {"last", {0, 0}},          {"position", {0, 0}},        {"count", {1, 1}},
      {"local-name", {0, 1}},    {"name", {0, 1}},            {"namespace-uri", {0, 1}},
      {"string", {0, 1}},        {"concat", {2, 64}},         {"starts-with", {2, 2}},
      {"contains", {2, 2}},      {"substring-before", {2, 2}}, {"substring-after", {2, 2}},
      {"substring", {2, 3}},     {"string-length", {0, 1}},   {"normalize-space", {0, 1}},
      {"translate", {3, 3}},     {"boolean", {1, 1}},         {"not", {1, 1}},
      {"true", {0, 0}},          {"false", {0, 0}},           {"number", {0, 1}},
      {"sum", {1, 1}},           {"floor", {1, 1}},           {"ceiling", {1, 1}},
      {"round", {1, 1}},         {"id", {1, 1}},
  };
  return kTable;
}

// ---------------------------------------------------------------------------
// Parser

class Parser {
 public:
  explicit Parser(std::string_view src) : src_(src), toks_(lex(src)) {}

  ExprPtr parse() {
    ExprPtr e = parse_or();
    if (peek().type != Tok::End) fail("unexpected token '" + peek().text + "'");
    return e;
  }

 private:
  const Token& peek(std::size_t k = 0) const { return toks_[std::min(pos_ + k, toks_.size() - 1)]; }
  Token next() { return toks_[std::min(pos_++, toks_.size() - 1)]; }
  bool accept(Tok t) {
    if (peek().type != t) return false;
    ++pos_;
    return true;
  }
  void expect(Tok t, const char* what) {
    if (!accept(t)) fail(std::string("expected ") + what);
  }
  bool peek_name(std::string_view n) const { return peek().type == Tok::Name && peek().text == n; }
  [[noreturn]] void fail(const std::string& what) const { syntax_error(src_, peek().offset, what); }

  ExprPtr parse_or() {
    ExprPtr l = parse_and();
    while (peek_name("or")) {
      ++pos_;
      l = std::make_shared<BinaryExpr>(BinOp::Or, l, parse_and());
    }
    return l;
  }
  ExprPtr parse_and() {
    ExprPtr l = parse_equality();
    while (peek_name("and")) {
      ++pos_;
      l = std::make_shared<BinaryExpr>(BinOp::And, l, parse_equality());
    }
    return l;
  }
  ExprPtr parse_equality() {
    ExprPtr l = parse_relational();
    while (peek().type == Tok::Eq || peek().type == Tok::Neq) {
      const BinOp op = next().type == Tok::Eq ? BinOp::Eq : BinOp::Neq;
      l = std::make_shared<BinaryExpr>(op, l, parse_relational());
    }
    return l;
  }
  ExprPtr parse_relational() {
    ExprPtr l = parse_additive();
    for (;;) {
      BinOp op;
      switch (peek().type) {
        case Tok::Lt: op = BinOp::Lt; break;
        case Tok::Le: op = BinOp::Le; break;
        case Tok::Gt: op = BinOp::Gt; break;
        case Tok::Ge: op = BinOp::Ge; break;
        default: return l;
      }
      ++pos_;
      l = std::make_shared<BinaryExpr>(op, l, parse_additive());
    }
  }
  ExprPtr parse_additive() {
    ExprPtr l = parse_multiplicative();
    while (peek().type == Tok::Plus || peek().type == Tok::Minus) {
      const BinOp op = next().type == Tok::Plus ? BinOp::Add : BinOp::Sub;
      l = std::make_shared<BinaryExpr>(op, l, parse_multiplicative());
    }
    return l;
  }
  ExprPtr parse_multiplicative() {
    ExprPtr l = parse_unary();
    for (;;) {
      BinOp op;
      if (peek().type == Tok::Star) {
        op = BinOp::Mul;
      } else if (peek_name("div")) {
        op = BinOp::Div;
      } else if (peek_name("mod")) {
        op = BinOp::Mod;
      } else {
        return l;
      }
      ++pos_;
      l = std::make_shared<BinaryExpr>(op, l, parse_unary());
    }
  }
  ExprPtr parse_unary() {
    if (accept(Tok::Minus)) return std::make_shared<NegateExpr>(parse_unary());
    return parse_union();
  }
  ExprPtr parse_union() {
    ExprPtr l = parse_path();
    while (accept(Tok::Pipe)) l = std::make_shared<UnionExpr>(l, parse_path());
    return l;
  }

  static bool is_node_type(std::string_view n) {
    return n == "node" || n == "text" || n == "comment" || n == "processing-instruction";
  }

  bool starts_step() const {
    switch (peek().type) {
      case Tok::Dot:
      case Tok::DotDot:
      case Tok::At:
      case Tok::Star:
      case Tok::Name:
        return true;
      default:
        return false;
    }
  }

  bool starts_filter() const {
    const Tok t = peek().type;
    if (t == Tok::LParen || t == Tok::Literal || t == Tok::Number) return true;
    return t == Tok::Name && peek(1).type == Tok::LParen && !is_node_type(peek().text);
  }

  static Step descendant_or_self_step() {
    Step s;
    s.axis = Axis::DescendantOrSelf;
    s.test.kind = TestKind::Node;
    return s;
  }

  ExprPtr parse_path() {
    auto path = std::make_shared<PathExpr>();
    if (peek().type == Tok::Slash) {
      ++pos_;
      path->absolute = true;
      if (starts_step()) parse_relative(*path);
      return path;
    }
    if (peek().type == Tok::DoubleSlash) {
      ++pos_;
      path->absolute = true;
      path->steps.push_back(descendant_or_self_step());
      if (!starts_step()) fail("expected a location step after '//'");
      parse_relative(*path);
      return path;
    }
    if (starts_filter()) {
      ExprPtr primary = parse_primary();
      if (peek().type == Tok::LBracket) {
        auto filter = std::make_shared<FilterExpr>();
        filter->primary = primary;
        while (accept(Tok::LBracket)) {
          filter->predicates.push_back(parse_or());
          expect(Tok::RBracket, "']'");
        }
        primary = filter;
      }
      if (peek().type != Tok::Slash && peek().type != Tok::DoubleSlash) return primary;
      path->filter = primary;
      if (accept(Tok::DoubleSlash)) {
        path->steps.push_back(descendant_or_self_step());
      } else {
        ++pos_;
      }
      if (!starts_step()) fail("expected a location step");
      parse_relative(*path);
      return path;
    }
    if (!starts_step()) fail("expected an expression");
    parse_relative(*path);
    return path;
  }

  void parse_relative(PathExpr& path) {
    path.steps.push_back(parse_step());
    for (;;) {
      if (accept(Tok::Slash)) {
        path.steps.push_back(parse_step());
      } else if (accept(Tok::DoubleSlash)) {
        path.steps.push_back(descendant_or_self_step());
        path.steps.push_back(parse_step());
      } else {
        return;
      }
    }
  }

  static std::optional<Axis> axis_from_name(std::string_view n) {
    static const std::unordered_map<std::string_view, Axis> kAxes = {
        {"child", Axis::Child},
        {"descendant", Axis::Descendant},
        {"descendant-or-self", Axis::DescendantOrSelf},
        {"parent", Axis::Parent},
        {"ancestor", Axis::Ancestor},
        {"ancestor-or-self", Axis::AncestorOrSelf},
        {"following-sibling", Axis::FollowingSibling},
        {"preceding-sibling", Axis::PrecedingSibling},
        {"following", Axis::Following},
        {"preceding", Axis::Preceding},
        {"attribute", Axis::Attribute},
        {"self", Axis::Self},
    };
    const auto it = kAxes.find(n);
    if (it == kAxes.end()) return std::nullopt;
    return it->second;
  }

  Step parse_step() {
    Step step;
    if (accept(Tok::Dot)) {
      step.axis = Axis::Self;
      return step;
    }
    if (accept(Tok::DotDot)) {
      step.axis = Axis::Parent;
      return step;
    }
    if (accept(Tok::At)) {
      step.axis = Axis::Attribute;
    } else if (peek().type == Tok::Name && peek(1).type == Tok::ColonColon) {
      const auto axis = axis_from_name(peek().text);
      if (!axis) fail("unknown axis '" + peek().text + "'");
      step.axis = *axis;
      pos_ += 2;
    }
    if (accept(Tok::Star)) {
      step.test.kind = TestKind::AnyName;
    } else if (peek().type == Tok::Name) {
      const Token name = next();
      if (peek().type == Tok::LParen && is_node_type(name.text)) {
        ++pos_;
        if (name.text == "processing-instruction") accept(Tok::Literal);
        expect(Tok::RParen, "')'");
        step.test.kind = name.text == "node"      ? TestKind::Node
                         : name.text == "text"    ? TestKind::Text
                         : name.text == "comment" ? TestKind::Comment
                                                  : TestKind::ProcessingInstruction;
      } else if (peek().type == Tok::LParen) {
        syntax_error(src_, name.offset, "function call '" + name.text + "' is not a location step");
      } else {
        std::string local = name.text;
        if (const auto colon = local.find(':'); colon != std::string::npos) {
          if (local.substr(colon + 1) == "*") {
            step.test.kind = TestKind::AnyName;
          }
          local = local.substr(colon + 1);
        }
        if (step.test.kind != TestKind::AnyName) {
          step.test.kind = TestKind::Name;
          step.test.name = util::to_lower(local);
        }
      }
    } else {
      fail("expected a node test");
    }
    while (accept(Tok::LBracket)) {
      step.predicates.push_back(parse_or());
      expect(Tok::RBracket, "']'");
    }
    return step;
  }

  ExprPtr parse_primary() {
    const Token t = next();
    switch (t.type) {
      case Tok::LParen: {
        ExprPtr e = parse_or();
        expect(Tok::RParen, "')'");
        return e;
      }
      case Tok::Literal:
        return std::make_shared<LiteralExpr>(XValue(t.text));
      case Tok::Number:
        return std::make_shared<LiteralExpr>(XValue(t.number));
      case Tok::Name: {
        const auto& table = function_table();
        const auto it = table.find(t.text);
        if (it == table.end()) syntax_error(src_, t.offset, "unknown function '" + t.text + "'");
        expect(Tok::LParen, "'('");
        auto fn = std::make_shared<FunctionExpr>();
        fn->name = t.text;
        if (!accept(Tok::RParen)) {
          do {
            fn->args.push_back(parse_or());
          } while (accept(Tok::Comma));
          expect(Tok::RParen, "')'");
        }
        if (fn->args.size() < it->second.min_args || fn->args.size() > it->second.max_args) {
          syntax_error(src_, t.offset, "wrong number of arguments to '" + t.text + "'");
        }
        return fn;
      }
      default:
        syntax_error(src_, t.offset, "unexpected token '" + t.text + "'");
    }
  }

  std::string_view src_;
  std::vector<Token> toks_;
  std::size_t pos_ = 0;
};

}  // namespace

XPath XPath::compile(std::string_view expression) {
  if (util::trim(expression).empty()) {
    throw Error(ErrorCode::XPathSyntax, "empty expression");
  }
  XPath x;
  x.root_ = Parser(expression).parse();
  x.source_ = std::string(expression);
  return x;
}

XValue XPath::evaluate(const Node& context) const {
  XValue v = root_->eval(Context{{&context, -1}, 1, 1});
  if (auto* ns = std::get_if<NodeSet>(&v)) sort_unique(*ns);
  return v;
}

std::vector<XPathMatch> evaluate_xpath(const Document& doc, std::string_view expression) {
  const XPath xp = XPath::compile(expression);
  const XValue v = xp.evaluate(doc.root());
  std::vector<XPathMatch> out;
  const auto* ns = std::get_if<NodeSet>(&v);
  if (!ns) {
    out.push_back({MatchKind::Scalar, nullptr, {}, to_string_value(v)});
    return out;
  }
  for (const auto& n : *ns) {
    XPathMatch m;
    m.node = n.node;
    if (n.is_attribute()) {
      m.kind = MatchKind::Attribute;
      m.attribute_name = n.attribute().name;
      m.value = n.attribute().value;
    } else {
      switch (n.node->kind) {
        case NodeKind::Element:
          m.kind = MatchKind::Element;
          m.value = visible_text(*n.node);
          break;
        case NodeKind::Text:
          m.kind = MatchKind::Text;
          m.value = n.node->data;
          break;
        case NodeKind::Comment:
          m.kind = MatchKind::Comment;
          m.value = n.node->data;
          break;
        default:
          m.kind = MatchKind::Document;
          m.value = visible_text(*n.node);
          break;
      }
    }
    out.push_back(std::move(m));
  }
  return out;
}

std::vector<std::string> evaluate_xpath_strings(const Document& doc, std::string_view expression) {
  std::vector<std::string> out;
  for (auto& m : evaluate_xpath(doc, expression)) out.push_back(std::move(m.value));
  return out;
}

bool is_valid_xpath(std::string_view expression) noexcept {
  try {
    XPath::compile(expression);
    return true;
  } catch (...) {
    return false;
  }
}

}  // namespace vgs::html
