#include <doctest.h>

#include "support.hpp"
#include "vgs/baselines/baselines.hpp"
#include "vgs/error.hpp"
#include "vgs/html/tools.hpp"
#include "vgs/util/text.hpp"

using namespace vgs;
using namespace vgs::baselines;
using model::TranscriptEntry;
using nlohmann::json;
namespace ids = model::ids;

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

std::string shop_page(const std::string& title, const std::string& price) {
  return "<html><head><script>trackVisitor('secret')</script><style>main{}</style></head><body id=\"b\">"
         "<header class=\"top\"><a href=\"/\">Shop</a></header>"
         "<main class=\"content\"><aside class=\"ads\">Buy more</aside>"
         "<div class=\"item\" data-sku=\"1\"><h1 class=\"name\">" + title + "</h1><span class=\"cost\">" + price +
         "</span></div></main><footer>bye</footer></body></html>";
}

std::vector<SimplifiedPage> shop(std::size_t n) {
  static const std::vector<std::pair<std::string, std::string>> items = {
      {"Red Lamp", "$10"}, {"Blue Chair", "$25"}, {"Green Desk", "$99"}, {"Old Clock", "$7"}};
  std::vector<SimplifiedPage> out;
  for (std::size_t i = 0; i < n; ++i) {
    out.emplace_back("https://shop.example/p" + std::to_string(i) + ".html", shop_page(items[i].first, items[i].second));
  }
  return out;
}

std::string sequence(const std::string& title_value, const std::string& xpath) {
  return json({{"thought", "the heading"}, {"value", {{"name", {title_value}}}}, {"xpath", {{"name", {xpath}}}}}).dump();
}

BaselineOptions fixed() {
  BaselineOptions o;
  o.clock = pipeline::Clock(true);
  return o;
}

const pipeline::ExtractionQuery kQuery{"q1", "What is the product name?"};

}  // namespace

TEST_CASE("baselines see only simplified markup") {
  const auto pages = shop(1);
  CHECK(pages[0].html().find("<script") == std::string::npos);
  CHECK(pages[0].html().find("data-sku") == std::string::npos);
  auto s = test::scripted({{"cot_top_down", sequence("Red Lamp", "//h1")}, {"cot_synthesis", R"({"number":"0"})"}});
  cot_wrapper(*s.gateway, kQuery, pages, fixed());
  for (const auto& r : s.backend->requests()) {
    CHECK(r.rendered_text.find("trackVisitor") == std::string::npos);
    CHECK(r.rendered_text.find("<style") == std::string::npos);
    CHECK(r.rendered_text.find("id=\"b\"") == std::string::npos);
  }
  CHECK(test::bound_value(ids::kCotTopDown, 1, s.backend->requests()[0].rendered_text) == pages[0].html());
}

TEST_CASE("cot on one page makes one generation and one synthesis call") {
  auto s = test::scripted({{"cot_top_down", sequence("Red Lamp", "//h1[@class='name']")},
                           {"cot_synthesis", R"({"thought":"only one","number":"0"})"}});
  const auto w = cot_wrapper(*s.gateway, kQuery, shop(1), fixed());
  CHECK(s.gateway->call_count(ids::kCotTopDown) == 1);
  CHECK(s.gateway->call_count(ids::kCotSynthesis) == 1);
  CHECK(w.method == "cot");
  REQUIRE(w.entries.size() == 1);
  CHECK(w.entries[0] == std::pair<std::string, std::string>{"name", "//h1[@class='name']"});
  CHECK(w.traces.back().detail == "chose sequence 0");
}

TEST_CASE("cot picks among sample pages") {
  auto s = test::scripted({{"cot_top_down", sequence("Red Lamp", "//h1")},
                           {"cot_top_down", sequence("Blue Chair", "//main//h1")},
                           {"cot_top_down", sequence("Green Desk", "//div/h1")},
                           {"cot_synthesis", R"({"number": 1})"}});
  const auto w = cot_wrapper(*s.gateway, kQuery, shop(4), fixed());
  CHECK(s.gateway->call_count(ids::kCotTopDown) == 3);
  REQUIRE(w.entries.size() == 1);
  CHECK(w.entries[0].second == "//main//h1");
  const std::string listing = test::bound_value(ids::kCotSynthesis, 1, s.backend->requests().back().rendered_text);
  CHECK(listing.find("Sequence 2:") != std::string::npos);
  CHECK(listing.find("\"Blue Chair\"") != std::string::npos);
  CHECK(listing.find("p3.html") == std::string::npos);
}

TEST_CASE("cot drops fields whose keys disagree") {
  auto s = test::scripted({{"cot_top_down",
                            R"({"thought":"","value":{"name":["Red Lamp"],"price":["$10"]},"xpath":{"name":["//h1"]}})"},
                           {"cot_synthesis", R"({"number":"0"})"}});
  const auto w = cot_wrapper(*s.gateway, kQuery, shop(1), fixed());
  REQUIRE(w.entries.size() == 1);
  CHECK(w.entries[0].first == "name");
  bool traced = false;
  for (const auto& t : w.traces) {
    traced = traced || (t.attribute == "price" && t.status == pipeline::TraceStatus::Failed &&
                        t.detail.find("KeyMismatch") == 0);
  }
  CHECK(traced);
}

TEST_CASE("cot with empty objects gives an empty wrapper") {
  auto s = test::scripted({{"cot_top_down", R"({"thought":"nothing","value":{},"xpath":{}})"}});
  const auto w = cot_wrapper(*s.gateway, kQuery, shop(1), fixed());
  CHECK(w.entries.empty());
  CHECK(s.gateway->call_count(ids::kCotSynthesis) == 0);
  auto prose = test::scripted({{"cot_top_down", "cannot help"}});
  CHECK(code_of([&] { cot_wrapper(*prose.gateway, kQuery, shop(1), fixed()); }) == ErrorCode::ModelParseFailure);
  CHECK(code_of([&] { cot_wrapper(*prose.gateway, kQuery, {}, fixed()); }) == ErrorCode::PreconditionViolation);
}

TEST_CASE("reflexion stops when the reflection is consistent") {
  auto s = test::scripted({{"reflexion_top_down", sequence("Red Lamp", "//h2")},
                           {"reflexion_self_reflection",
                            R"({"thought":"h2 is empty","consistent":"no","value":{"name":["Red Lamp"]},"xpath":{"name":["//h1"]}})"},
                           {"reflexion_self_reflection",
                            R"({"thought":"ok","consistent":"yes","value":{"name":["Red Lamp"]},"xpath":{"name":["//main//h1"]}})"},
                           {"reflexion_synthesis", R"({"number":"0"})"}});
  const auto w = reflexion_wrapper(*s.gateway, kQuery, shop(1), fixed());
  CHECK(s.gateway->call_count(ids::kReflexionSelfReflection) == 2);
  REQUIRE(w.entries.size() == 1);
  CHECK(w.entries[0].second == "//main//h1");
  const auto reflections = s.backend->requests_for(ids::kReflexionSelfReflection);
  const json history = json::parse(test::bound_value(ids::kReflexionSelfReflection, 1, reflections[1].rendered_text));
  REQUIRE(history.size() == 2);
  CHECK(history[0]["result"]["name"] == json::array());
  CHECK(history[1]["result"]["name"] == json::array({"Red Lamp"}));
  CHECK_FALSE(w.has_failure());
}

TEST_CASE("reflexion exits early on a consistent first round") {
  auto s = test::scripted({{"reflexion_top_down", sequence("Red Lamp", "//h1")},
                           {"reflexion_self_reflection", R"({"thought":"fine","consistent":"yes","value":{},"xpath":{}})"},
                           {"reflexion_synthesis", R"({"number":"0"})"}});
  const auto w = reflexion_wrapper(*s.gateway, kQuery, shop(1), fixed());
  CHECK(s.gateway->call_count(ids::kReflexionSelfReflection) == 1);
  REQUIRE(w.entries.size() == 1);
  CHECK(w.entries[0].second == "//h1");
}

TEST_CASE("reflexion reports an exhausted budget") {
  std::vector<TranscriptEntry> t = {{"reflexion_top_down", sequence("x", "//p")}};
  for (int i = 1; i <= 3; ++i) {
    t.push_back({"reflexion_self_reflection",
                 json({{"thought", "still wrong"}, {"consistent", "no"}, {"value", {{"name", {"x"}}}},
                       {"xpath", {{"name", {"//p[" + std::to_string(i) + "]"}}}}})
                     .dump()});
  }
  t.push_back({"reflexion_synthesis", R"({"number":"0"})"});
  auto s = test::scripted(t);
  const auto w = reflexion_wrapper(*s.gateway, kQuery, shop(1), fixed());
  CHECK(s.gateway->call_count(ids::kReflexionTopDown) + s.gateway->call_count(ids::kReflexionSelfReflection) == 4);
  REQUIRE(w.entries.size() == 1);
  CHECK(w.entries[0].second == "//p[3]");
  bool exhausted = false;
  for (const auto& tr : w.traces) exhausted = exhausted || tr.detail.find("BudgetExhausted") == 0;
  CHECK(exhausted);
}

TEST_CASE("autoscraper descends into the first yes") {
  auto s = test::scripted({{"autoscraper_step_back", R"({"thought":"","judgement":"yes"})"},
                           {"autoscraper_step_back", R"({"thought":"","judgement":"no"})"},
                           {"autoscraper_step_back", R"({"thought":"","judgement":"yes"})"},
                           {"autoscraper_step_back", R"({"thought":"","judgement":"no"})"},
                           {"autoscraper_step_back", R"({"thought":"","judgement":"no"})"}});
  const auto pages = shop(1);
  const auto pr = prune(*s.gateway, kQuery, pages[0], {"Red Lamp"});
  CHECK_FALSE(pr.dead_end);
  CHECK(pr.path == std::vector<std::string>{"/html/body", "/html/body/main"});
  CHECK(util::starts_with(pr.context, "<main class=\"content\">"));
  CHECK(pr.judgements == 5);
  const auto judged = s.backend->requests_for(ids::kAutoScraperStepBack);
  CHECK(util::starts_with(test::bound_value(ids::kAutoScraperStepBack, 2, judged[1].rendered_text), "<header"));
  CHECK(util::starts_with(test::bound_value(ids::kAutoScraperStepBack, 2, judged[3].rendered_text), "<aside"));
  CHECK(test::bound_value(ids::kAutoScraperStepBack, 1, judged[0].rendered_text) == "[\"Red Lamp\"]");
}

TEST_CASE("autoscraper regenerates on the pruned subtree") {
  auto s = test::scripted({{"autoscraper_top_down", sequence("Red Lamp", "//h1")},
                           {"autoscraper_step_back", R"({"judgement":"yes"})"},
                           {"autoscraper_step_back", R"({"judgement":"no"})"},
                           {"autoscraper_step_back", R"({"judgement":"yes"})"},
                           {"autoscraper_step_back", R"({"judgement":"no"})"},
                           {"autoscraper_step_back", R"({"judgement":"no"})"},
                           {"autoscraper_top_down", sequence("Red Lamp", "//main/div/h1")},
                           {"autoscraper_synthesis", R"({"number":"0"})"}});
  const auto w = autoscraper_wrapper(*s.gateway, kQuery, shop(1), fixed());
  REQUIRE(w.entries.size() == 1);
  CHECK(w.entries[0].second == "//main/div/h1");
  const auto gen = s.backend->requests_for(ids::kAutoScraperTopDown);
  REQUIRE(gen.size() == 2);
  CHECK(util::starts_with(test::bound_value(ids::kAutoScraperTopDown, 1, gen[1].rendered_text), "<main"));
  CHECK(w.method == "autoscraper");
}

TEST_CASE("autoscraper falls back when the root is judged no") {
  auto s = test::scripted({{"autoscraper_top_down", sequence("Red Lamp", "//h1")},
                           {"autoscraper_step_back", R"({"judgement":"no"})"},
                           {"autoscraper_synthesis", R"({"number":"0"})"}});
  const auto w = autoscraper_wrapper(*s.gateway, kQuery, shop(1), fixed());
  CHECK(s.gateway->call_count(ids::kAutoScraperTopDown) == 1);
  REQUIRE(w.entries.size() == 1);
  CHECK(w.entries[0].second == "//h1");
  bool dead_end = false;
  for (const auto& t : w.traces) dead_end = dead_end || t.detail.find("PruneDeadEnd") == 0;
  CHECK(dead_end);
}

TEST_CASE("step-back prompts carry at most ten values") {
  std::vector<std::string> values;
  for (int i = 1; i <= 15; ++i) values.push_back("v" + std::to_string(i));
  CHECK(json::parse(step_back_values(values)).size() == 10);
  CHECK(json::parse(step_back_values(values, 3)) == json::array({"v1", "v2", "v3"}));
  auto s = test::scripted({{"autoscraper_step_back", R"({"judgement":"no"})"}});
  const auto pages = shop(1);
  prune(*s.gateway, kQuery, pages[0], values);
  const json shown =
      json::parse(test::bound_value(ids::kAutoScraperStepBack, 1, s.backend->requests().front().rendered_text));
  CHECK(shown.size() == 10);
  CHECK(shown.back() == "v10");
}

TEST_CASE("autoscraper skips pruning without expected values") {
  auto s = test::scripted({{"autoscraper_top_down", R"({"thought":"","value":{"name":[]},"xpath":{"name":["//h1"]}})"},
                           {"autoscraper_synthesis", R"({"number":"0"})"}});
  const auto w = autoscraper_wrapper(*s.gateway, kQuery, shop(1), fixed());
  CHECK(s.gateway->call_count(ids::kAutoScraperStepBack) == 0);
  CHECK(w.entries.size() == 1);
}

TEST_CASE("direct extraction") {
  const auto pages = shop(1);
  auto s = test::scripted({{"llm_extractor", R"({"title":["A"]})"}});
  const auto r = direct_extract(*s.gateway, kQuery, pages[0], pipeline::Clock(true));
  CHECK(r.values.size() == 1);
  CHECK(r.values.at("title") == std::vector<std::string>{"A"});
  CHECK(r.latency_ms == 0);
  auto empty = test::scripted({{"llm_extractor", R"({"title":[]})"}});
  CHECK(direct_extract(*empty.gateway, kQuery, pages[0]).values.at("title").empty());
  auto prose = test::scripted({{"llm_extractor", "The title is A."}});
  CHECK(code_of([&] { direct_extract(*prose.gateway, kQuery, pages[0]); }) == ErrorCode::ModelParseFailure);
}

TEST_CASE("helpers") {
  CHECK(chosen_index(json::parse(R"({"number":"2"})"), 3) == 2);
  CHECK(chosen_index(json::parse(R"({"number":2})"), 3) == 2);
  CHECK(chosen_index(json::parse(R"({"number":"5"})"), 3) == 0);
  CHECK(chosen_index(json::parse(R"({"number":"two"})"), 3) == 0);
  CHECK(chosen_index(json::parse(R"({})"), 3) == 0);
  const auto seq = parse_action_sequence(json::parse(R"({"thought":"t","value":{"a":"x","b":["y"]},"xpath":{"a":["//a"],"c":["//c"]}})"));
  CHECK(seq.thought == "t");
  CHECK(seq.xpath.size() == 1);
  CHECK(seq.value.at("a") == std::vector<std::string>{"x"});
  CHECK(seq.dropped == std::vector<std::string>{"b", "c"});
  const auto pages = shop(1);
  const auto got = execute_sequence(pages[0].document(), {{"n", {"//h1", "//span"}}, {"bad", {"//h1["}}});
  CHECK(got.at("n") == std::vector<std::string>{"Red Lamp", "$10"});
  CHECK(got.at("bad").empty());
}

TEST_CASE("default options") {
  const BaselineOptions o;
  CHECK(o.sample_pages == 3);
  CHECK(o.reflexion_budget == 3);
  CHECK(o.max_step_back_values == 10);
}
