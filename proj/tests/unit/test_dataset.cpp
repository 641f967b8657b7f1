#include <doctest.h>

#include "support.hpp"
#include "vgs/error.hpp"
#include "vgs/eval/dataset.hpp"

using namespace vgs;
using namespace vgs::eval;
using nlohmann::json;

namespace {

ErrorCode code_of(const std::function<void()>& fn) {
  try {
    fn();
  } catch (const Error& e) {
    return e.code();
  }
  FAIL("no error raised");
  return ErrorCode::Usage;
}

json base_sample() {
  return json::parse(R"({"id":"s1","website":"w","page_group":"g","task_type":"I","query":"Title?",
    "urls":["a.html","b.html"],
    "gold":{"title":{"category":"text","values_per_url":[["A"],["B"]]}}})");
}

ErrorCode violation(json j) {
  return code_of([&] { parse_sample(j); });
}

}  // namespace

TEST_CASE("the bundled dataset covers every type") {
  const auto samples = load_dataset(test::fixture_path("books/dataset.jsonl"));
  REQUIRE(samples.size() == 12);
  std::map<TaskType, int> counts;
  for (const auto& s : samples) {
    ++counts[s.task_type];
    CHECK(s.urls.size() == 3);
    CHECK(s.urls[0].rfind("file://", 0) == 0);
    CHECK_NOTHROW(validate_sample(s));
  }
  for (auto t : {TaskType::I, TaskType::II, TaskType::III, TaskType::IV}) CHECK(counts[t] == 3);
  const Sample& cover = samples[2];
  REQUIRE(cover.find_gold("cover image"));
  CHECK(cover.find_gold("cover image")->category == pipeline::Category::Image);
  CHECK(cover.find_gold("missing") == nullptr);
}

TEST_CASE("a well-formed sample parses") {
  const Sample s = parse_sample(base_sample(), "https://site.example/dir/index.html");
  CHECK(s.id == "s1");
  CHECK(s.query.id == "s1");
  CHECK(s.query.text == "Title?");
  CHECK(s.urls == std::vector<std::string>{"https://site.example/dir/a.html", "https://site.example/dir/b.html"});
  CHECK(s.gold[0].values_per_url[1] == std::vector<std::string>{"B"});
  const Sample again = parse_sample(json::parse(to_json(s).dump()));
  CHECK(to_json(again) == to_json(s));
}

TEST_CASE("gold values are whitespace-normalized") {
  json j = base_sample();
  j["gold"]["title"]["values_per_url"] = json::parse(R"([["  A \n b "],["B"]])");
  CHECK(parse_sample(j).gold[0].values_per_url[0][0] == "A b");
}

TEST_CASE("shape rules reject malformed samples") {
  json two_attrs = base_sample();
  two_attrs["gold"]["price"] = {{"category", "text"}, {"values_per_url", json::parse(R"([["1"],["2"]])")}};
  CHECK(violation(two_attrs) == ErrorCode::SchemaViolation);
  two_attrs["task_type"] = "II";
  CHECK_NOTHROW(parse_sample(two_attrs));

  json type2_one = base_sample();
  type2_one["task_type"] = "II";
  CHECK(violation(type2_one) == ErrorCode::SchemaViolation);

  json multi_value = two_attrs;
  multi_value["gold"]["price"]["values_per_url"] = json::parse(R"([["1","3"],["2"]])");
  CHECK(violation(multi_value) == ErrorCode::SchemaViolation);
  multi_value["task_type"] = "IV";
  CHECK_NOTHROW(parse_sample(multi_value));

  json type3 = base_sample();
  type3["task_type"] = "III";
  type3["gold"]["title"]["values_per_url"] = json::parse(R"([["A","B"],[]])");
  CHECK_NOTHROW(parse_sample(type3));
  json type1_empty = type3;
  type1_empty["task_type"] = "I";
  CHECK(violation(type1_empty) == ErrorCode::SchemaViolation);

  json empty_urls = base_sample();
  empty_urls["urls"] = json::array();
  empty_urls["gold"]["title"]["values_per_url"] = json::array();
  CHECK(violation(empty_urls) == ErrorCode::SchemaViolation);

  json mismatch = base_sample();
  mismatch["gold"]["title"]["values_per_url"] = json::parse(R"([["A"]])");
  CHECK(violation(mismatch) == ErrorCode::SchemaViolation);

  json bad_category = base_sample();
  bad_category["gold"]["title"]["category"] = "video";
  CHECK(violation(bad_category) == ErrorCode::SchemaViolation);

  json bad_type = base_sample();
  bad_type["task_type"] = "V";
  CHECK(violation(bad_type) == ErrorCode::SchemaViolation);

  json no_query = base_sample();
  no_query["query"] = "   ";
  CHECK(violation(no_query) == ErrorCode::SchemaViolation);

  json no_gold = base_sample();
  no_gold["gold"] = json::object();
  CHECK(violation(no_gold) == ErrorCode::SchemaViolation);

  json numeric_value = base_sample();
  numeric_value["gold"]["title"]["values_per_url"] = json::parse(R"([[1],["B"]])");
  CHECK(violation(numeric_value) == ErrorCode::SchemaViolation);

  CHECK(violation(json::array()) == ErrorCode::SchemaViolation);
}

TEST_CASE("duplicate attribute names are rejected case-insensitively") {
  Sample s = parse_sample(base_sample());
  s.task_type = TaskType::II;
  s.gold.push_back(s.gold[0]);
  s.gold[1].name = "TITLE";
  CHECK(code_of([&] { validate_sample(s); }) == ErrorCode::SchemaViolation);
}

TEST_CASE("dataset files") {
  const std::string line = base_sample().dump();
  json second = base_sample();
  second["id"] = "s2";
  CHECK(parse_dataset(line + "\n\n" + second.dump() + "\n").size() == 2);
  try {
    parse_dataset(line + "\n" + line + "\n");
    FAIL("duplicate ids accepted");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::SchemaViolation);
    CHECK(std::string(e.what()).find("line 2") != std::string::npos);
  }
  CHECK(code_of([&] { parse_dataset("{not json\n"); }) == ErrorCode::SchemaViolation);
  CHECK(code_of([&] { load_dataset("/nonexistent/dataset.jsonl"); }) == ErrorCode::IoFailure);
}

TEST_CASE("task type names") {
  CHECK(parse_task_type("III") == TaskType::III);
  CHECK(parse_task_type("4") == TaskType::IV);
  CHECK_FALSE(parse_task_type("iv"));
  CHECK_FALSE(parse_task_type(""));
  for (auto t : {TaskType::I, TaskType::II, TaskType::III, TaskType::IV}) CHECK(parse_task_type(to_string(t)) == t);
}
