#include <doctest.h>

#include "vgs/error.hpp"
#include "vgs/util/text.hpp"
#include "vgs/util/url.hpp"

using namespace vgs::util;

TEST_CASE("whitespace normalisation collapses runs and nbsp") {
  CHECK(normalize_whitespace("  a \t\n b  ") == "a b");
  CHECK(normalize_whitespace("x\xC2\xA0y") == "x y");
  CHECK(normalize_whitespace("") == "");
  CHECK(split_whitespace(" a  b\nc ") == std::vector<std::string>{"a", "b", "c"});
}

TEST_CASE("utf8 length counts code points") {
  CHECK(utf8_length("abc") == 3);
  CHECK(utf8_length("\xC2\xA3" "51.77") == 6);
  CHECK(utf8_length("\xE2\x80\x9C") == 1);
  std::string s;
  append_utf8(s, 0x1F600);
  CHECK(s.size() == 4);
  CHECK(utf8_length(s) == 1);
}

TEST_CASE("base64 round trip") {
  const std::string bytes("\x00\x01\xFFhello\x89PNG", 11);
  const auto enc = base64_encode(bytes);
  CHECK(base64_encode("foo") == "Zm9v");
  CHECK(base64_encode("fo") == "Zm8=");
  REQUIRE(base64_decode(enc));
  CHECK(*base64_decode(enc) == bytes);
  CHECK_FALSE(base64_decode("not base64!!"));
}

TEST_CASE("fnv1a is stable") {
  CHECK(fnv1a_hex("") == "cbf29ce484222325");
  CHECK(fnv1a_hex("a") == "af63dc4c8601ec8c");
}

TEST_CASE("url resolution") {
  const std::string base = "https://books.example/catalogue/page-1.html";
  CHECK(resolve_url(base, "media/x.jpg") == "https://books.example/catalogue/media/x.jpg");
  CHECK(resolve_url(base, "../index.html") == "https://books.example/index.html");
  CHECK(resolve_url(base, "/a/b") == "https://books.example/a/b");
  CHECK(resolve_url(base, "//cdn.example/i.png") == "https://cdn.example/i.png");
  CHECK(resolve_url(base, "?q=1") == "https://books.example/catalogue/page-1.html?q=1");
  CHECK(resolve_url(base, "#top") == "https://books.example/catalogue/page-1.html#top");
  CHECK(resolve_url(base, "https://other.example/./a/../b") == "https://other.example/b");
  CHECK(resolve_url("http://a/b/c/d;p?q", "g;x?y#s") == "http://a/b/c/g;x?y#s");
  CHECK(resolve_url("http://a/b/c/d;p?q", "../../../g") == "http://a/g");
  CHECK(is_absolute_url("file:///tmp/x"));
  CHECK_FALSE(is_absolute_url("x.html"));
}

TEST_CASE("file urls") {
  CHECK(path_to_file_url("/tmp/a b.html") == "file:///tmp/a%20b.html");
  REQUIRE(file_url_to_path("file:///tmp/a%20b.html"));
  CHECK(*file_url_to_path("file:///tmp/a%20b.html") == "/tmp/a b.html");
  CHECK_FALSE(file_url_to_path("https://x/"));
}

TEST_CASE("reading a missing file reports IoFailure") {
  try {
    read_file("/nonexistent/definitely/missing.txt");
    FAIL("expected an error");
  } catch (const vgs::Error& e) {
    CHECK(e.code() == vgs::ErrorCode::IoFailure);
  }
}
