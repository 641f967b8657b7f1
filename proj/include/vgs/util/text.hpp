#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace vgs::util {

// ASCII whitespace plus U+00A0 collapse to single spaces; ends trimmed.
std::string normalize_whitespace(std::string_view s);

std::string trim(std::string_view s);
std::string to_lower(std::string_view s);
bool is_space(char c) noexcept;

// Number of code points in a UTF-8 string (invalid bytes count as one).
std::size_t utf8_length(std::string_view s) noexcept;

// Append the UTF-8 encoding of a code point.
void append_utf8(std::string& out, std::uint32_t cp);

std::vector<std::string> split_whitespace(std::string_view s);

bool starts_with(std::string_view s, std::string_view prefix) noexcept;
bool ends_with(std::string_view s, std::string_view suffix) noexcept;

std::string base64_encode(std::string_view bytes);
std::optional<std::string> base64_decode(std::string_view text);

// 64-bit FNV-1a, hex encoded. Used for config fingerprints in run manifests.
std::string fnv1a_hex(std::string_view bytes);

std::string read_file(const std::string& path);
void write_file(const std::string& path, std::string_view contents);

}  // namespace vgs::util
