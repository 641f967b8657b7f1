#pragma once

#include <optional>
#include <string>
#include <string_view>

namespace vgs::util {

struct UrlParts {
  std::string scheme;                    // lowercase, without ':'
  std::optional<std::string> authority;  // present iff "//" follows the scheme
  std::string path;
  std::optional<std::string> query;
  std::optional<std::string> fragment;
};

std::optional<UrlParts> parse_url(std::string_view url);
std::string compose_url(const UrlParts& parts);

// RFC 3986 reference resolution. A reference that is already absolute is
// returned with dot segments removed; an unparseable base yields `ref` as-is.
std::string resolve_url(std::string_view base, std::string_view ref);

bool is_absolute_url(std::string_view url);

// "file:///a/b.html" -> "/a/b.html" (percent escapes decoded).
std::optional<std::string> file_url_to_path(std::string_view url);
std::string path_to_file_url(std::string_view absolute_path);

}  // namespace vgs::util
