#include "vgs/util/url.hpp"

#include <cctype>
#include <vector>

#include "vgs/util/text.hpp"

namespace vgs::util {
namespace {

bool valid_scheme(std::string_view s) {
  if (s.empty() || !std::isalpha(static_cast<unsigned char>(s[0]))) return false;
  for (char c : s) {
    if (!std::isalnum(static_cast<unsigned char>(c)) && c != '+' && c != '-' && c != '.') {
      return false;
    }
  }
  return true;
}

std::string remove_dot_segments(std::string_view path) {
  std::vector<std::string> out;
  const bool absolute = !path.empty() && path[0] == '/';
  std::size_t i = absolute ? 1 : 0;
  bool trailing_slash = false;
  while (i <= path.size()) {
    std::size_t j = path.find('/', i);
    if (j == std::string_view::npos) j = path.size();
    const std::string_view seg = path.substr(i, j - i);
    trailing_slash = false;
    if (seg == "..") {
      if (!out.empty()) out.pop_back();
      trailing_slash = true;
    } else if (seg == ".") {
      trailing_slash = true;
    } else {
      out.emplace_back(seg);
    }
    i = j + 1;
  }
  std::string result = absolute ? "/" : "";
  for (std::size_t k = 0; k < out.size(); ++k) {
    if (k) result += '/';
    result += out[k];
  }
  if (trailing_slash && !result.empty() && result.back() != '/') result += '/';
  return result;
}

std::string merge_paths(const UrlParts& base, std::string_view ref_path) {
  if (base.authority && base.path.empty()) return "/" + std::string(ref_path);
  const auto slash = base.path.rfind('/');
  if (slash == std::string::npos) return std::string(ref_path);
  return base.path.substr(0, slash + 1) + std::string(ref_path);
}

int hex_value(char c) {
  if (c >= '0' && c <= '9') return c - '0';
  if (c >= 'a' && c <= 'f') return c - 'a' + 10;
  if (c >= 'A' && c <= 'F') return c - 'A' + 10;
  return -1;
}

}  // namespace

std::optional<UrlParts> parse_url(std::string_view url) {
  UrlParts parts;
  std::string_view rest = url;
  const auto colon = rest.find(':');
  const auto first_delim = rest.find_first_of("/?#");
  if (colon == std::string_view::npos || (first_delim != std::string_view::npos && first_delim < colon)) {
    return std::nullopt;
  }
  const std::string_view scheme = rest.substr(0, colon);
  if (!valid_scheme(scheme)) return std::nullopt;
  parts.scheme = to_lower(scheme);
  rest.remove_prefix(colon + 1);
  if (const auto hash = rest.find('#'); hash != std::string_view::npos) {
    parts.fragment = std::string(rest.substr(hash + 1));
    rest = rest.substr(0, hash);
  }
  if (const auto q = rest.find('?'); q != std::string_view::npos) {
    parts.query = std::string(rest.substr(q + 1));
    rest = rest.substr(0, q);
  }
  if (starts_with(rest, "//")) {
    rest.remove_prefix(2);
    const auto slash = rest.find('/');
    parts.authority = std::string(rest.substr(0, slash));
    rest = slash == std::string_view::npos ? std::string_view{} : rest.substr(slash);
  }
  parts.path = std::string(rest);
  return parts;
}

std::string compose_url(const UrlParts& parts) {
  std::string out = parts.scheme + ":";
  if (parts.authority) out += "//" + *parts.authority;
  out += parts.path;
  if (parts.query) out += "?" + *parts.query;
  if (parts.fragment) out += "#" + *parts.fragment;
  return out;
}

bool is_absolute_url(std::string_view url) { return parse_url(url).has_value(); }

std::string resolve_url(std::string_view base, std::string_view ref_in) {
  const std::string ref_str = trim(ref_in);
  const std::string_view ref = ref_str;
  if (auto abs = parse_url(ref)) {
    abs->path = remove_dot_segments(abs->path);
    return compose_url(*abs);
  }
  const auto b = parse_url(base);
  if (!b) return std::string(ref);

  // Split the relative reference.
  std::string_view rest = ref;
  std::optional<std::string> fragment;
  std::optional<std::string> query;
  if (const auto hash = rest.find('#'); hash != std::string_view::npos) {
    fragment = std::string(rest.substr(hash + 1));
    rest = rest.substr(0, hash);
  }
  if (const auto q = rest.find('?'); q != std::string_view::npos) {
    query = std::string(rest.substr(q + 1));
    rest = rest.substr(0, q);
  }

  UrlParts t;
  t.scheme = b->scheme;
  t.fragment = fragment;
  if (starts_with(rest, "//")) {
    rest.remove_prefix(2);
    const auto slash = rest.find('/');
    t.authority = std::string(rest.substr(0, slash));
    t.path = remove_dot_segments(slash == std::string_view::npos ? "" : rest.substr(slash));
    t.query = query;
    return compose_url(t);
  }
  t.authority = b->authority;
  if (rest.empty()) {
    t.path = b->path;
    t.query = query ? query : b->query;
  } else {
    if (rest[0] == '/') {
      t.path = remove_dot_segments(rest);
    } else {
      t.path = remove_dot_segments(merge_paths(*b, rest));
    }
    t.query = query;
  }
  return compose_url(t);
}

std::optional<std::string> file_url_to_path(std::string_view url) {
  const auto parts = parse_url(url);
  if (!parts || parts->scheme != "file") return std::nullopt;
  std::string decoded;
  const std::string& p = parts->path;
  for (std::size_t i = 0; i < p.size(); ++i) {
    if (p[i] == '%' && i + 2 < p.size() && hex_value(p[i + 1]) >= 0 && hex_value(p[i + 2]) >= 0) {
      decoded.push_back(static_cast<char>(hex_value(p[i + 1]) * 16 + hex_value(p[i + 2])));
      i += 2;
    } else {
      decoded.push_back(p[i]);
    }
  }
  return decoded;
}

std::string path_to_file_url(std::string_view absolute_path) {
  std::string out = "file://";
  for (char c : absolute_path) {
    if (c == ' ') {
      out += "%20";
    } else if (c == '%') {
      out += "%25";
    } else if (c == '#') {
      out += "%23";
    } else if (c == '?') {
      out += "%3F";
    } else {
      out.push_back(c);
    }
  }
  return out;
}

}  // namespace vgs::util
