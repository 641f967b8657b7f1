#include <doctest.h>
#include <httplib.h>

#include <atomic>
#include <cstdlib>
#include <thread>

#include "support.hpp"
#include "vgs/browser/raster.hpp"
#include "vgs/error.hpp"
#include "vgs/model/gateway.hpp"
#include "vgs/model/templates.hpp"
#include "vgs/util/text.hpp"

using namespace vgs;
using namespace vgs::model;
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

// Throws TransientFailure `failures` times, then answers.
class Flaky final : public Backend {
 public:
  Flaky(int failures, std::string reply) : failures_(failures), reply_(std::move(reply)) {}
  std::string complete(const ModelRequest&) override {
    ++calls;
    if (calls <= failures_) throw TransientFailure("503");
    return reply_;
  }
  std::string name() const override { return "flaky"; }
  int calls = 0;

 private:
  int failures_;
  std::string reply_;
};

class Refusing final : public Backend {
 public:
  std::string complete(const ModelRequest&) override {
    ++calls;
    throw Error(ErrorCode::BackendRejected, "401");
  }
  std::string name() const override { return "refusing"; }
  int calls = 0;
};

ModelRequest text_request(std::string id = "vgs_attribute_identification", std::string text = "hello") {
  ModelRequest r;
  r.instruction_id = std::move(id);
  r.rendered_text = std::move(text);
  return r;
}

std::string tiny_png() { return browser::encode_png(browser::Raster(4, 4)); }

}  // namespace

TEST_CASE("scripted replies parse") {
  auto s = test::scripted({{"vgs_attribute_identification", R"({"attributes":["title"]})"}});
  const auto r = s.gateway->complete(text_request());
  REQUIRE(r.parsed);
  CHECK((*r.parsed)["attributes"] == json::array({"title"}));
  CHECK_FALSE(r.parse_error);
}

TEST_CASE("fenced payloads inside prose are recovered") {
  auto s = test::scripted({{"vgs_attribute_identification",
                            "Sure! Here it is:\n```json\n{\"attributes\": [\"price\"]}\n```\nHope that helps."}});
  const auto r = s.gateway->complete(text_request());
  REQUIRE(r.parsed);
  CHECK((*r.parsed)["attributes"][0] == "price");
}

TEST_CASE("prose without JSON keeps the raw text") {
  auto s = test::scripted({{"vgs_attribute_identification", "I could not find anything."}});
  const auto r = s.gateway->complete(text_request());
  CHECK_FALSE(r.parsed);
  REQUIRE(r.parse_error);
  CHECK(r.raw_text == "I could not find anything.");
}

TEST_CASE("json recovery") {
  std::string err;
  CHECK(recover_json("[1, 2]", Shape::Array) == json::array({1, 2}));
  CHECK(recover_json("The ids are [1, 3].", Shape::Array) == json::array({1, 3}));
  CHECK(recover_json("x {\"a\": \"}{\"} y", Shape::Object) == json({{"a", "}{"}}));
  CHECK(recover_json("{\n  \"judgement\": \"yes\" # whether\n}", Shape::Object) == json({{"judgement", "yes"}}));
  CHECK(recover_json("{\"a\": [1, 2,],}", Shape::Object) == json({{"a", {1, 2}}}));
  CHECK(recover_json("{\"url\": \"http://x/#frag\"}", Shape::Object) == json({{"url", "http://x/#frag"}}));
  CHECK_FALSE(recover_json("[1, 2]", Shape::Object, &err));
  CHECK_FALSE(err.empty());
  CHECK_FALSE(recover_json("{\"a\": ", Shape::Any));
  CHECK(recover_json("\"yes\"", Shape::Any) == json("yes"));
}

TEST_CASE("replay is deterministic") {
  const std::vector<TranscriptEntry> entries = {{"vgs_attribute_identification", "```\n{\"attributes\": [\"a\"]}\n```"},
                                                {"vgs_visual_grounding", "{\"matching_region\": \"region_1\"}"}};
  std::vector<std::string> dumps;
  for (int run = 0; run < 2; ++run) {
    auto s = test::scripted(entries);
    std::string all;
    for (const auto& e : entries) {
      const auto r = s.gateway->complete(text_request(e.instruction_id));
      all += r.raw_text + "|" + (r.parsed ? r.parsed->dump() : "-") + "\n";
    }
    dumps.push_back(all);
  }
  CHECK(dumps[0] == dumps[1]);
}

TEST_CASE("mock transcripts enforce order and length") {
  MockBackend mock(std::vector<TranscriptEntry>{{"a", "1"}});
  CHECK(code_of([&] { mock.complete(text_request("b")); }) == ErrorCode::TranscriptMismatch);
  CHECK(mock.complete(text_request("a")) == "1");
  CHECK(mock.remaining() == 0);
  CHECK(code_of([&] { mock.complete(text_request("a")); }) == ErrorCode::TranscriptExhausted);
}

TEST_CASE("transcripts load as lists or keyed objects") {
  const auto flat = Transcript::from_json(json::parse(R"([{"instruction_id":"a","response_text":"x"}])"));
  CHECK_FALSE(flat.keyed());
  CHECK(flat.entries_for("anything").size() == 1);
  const auto keyed = Transcript::from_json(
      json::parse(R"({"s1":[{"instruction_id":"a","response_text":"x"}],"s2":[]})"));
  CHECK(keyed.keyed());
  CHECK(keyed.keys() == std::vector<std::string>{"s1", "s2"});
  CHECK(keyed.entries_for("s1").front().response_text == "x");
  CHECK(code_of([&] { keyed.entries_for("s3"); }) == ErrorCode::TranscriptExhausted);
  const auto bundled = Transcript::load(test::fixture_path("books/vgs_transcript.json"));
  CHECK(bundled.keys().size() == 12);
}

TEST_CASE("transient failures are retried with backoff") {
  auto flaky = std::make_shared<Flaky>(2, "{\"attributes\":[\"x\"]}");
  std::vector<long long> slept;
  Gateway g(flaky, {}, 0, [&](std::chrono::milliseconds d) { slept.push_back(d.count()); });
  const auto r = g.complete(text_request());
  CHECK(r.parsed);
  CHECK(flaky->calls == 3);
  CHECK(slept == std::vector<long long>{1000, 2000});
  REQUIRE(g.calls().size() == 1);
  CHECK(g.calls()[0].attempts == 3);
}

TEST_CASE("persistent failures exhaust the transport") {
  auto flaky = std::make_shared<Flaky>(10, "{}");
  Gateway g(flaky, {}, 0, [](std::chrono::milliseconds) {});
  CHECK(code_of([&] { g.complete(text_request()); }) == ErrorCode::TransportExhausted);
  CHECK(flaky->calls == 3);
}

TEST_CASE("rejections are not retried") {
  auto refusing = std::make_shared<Refusing>();
  Gateway g(refusing, {}, 0, [](std::chrono::milliseconds) {});
  CHECK(code_of([&] { g.complete(text_request()); }) == ErrorCode::BackendRejected);
  CHECK(refusing->calls == 1);
}

TEST_CASE("request preconditions") {
  auto s = test::scripted({});
  CHECK(code_of([&] { s.gateway->complete(text_request("vgs_attribute_identification", "")); }) ==
        ErrorCode::PreconditionViolation);
  auto bad_image = text_request("vgs_visual_grounding");
  bad_image.images = {"not a png"};
  CHECK(code_of([&] { s.gateway->complete(bad_image); }) == ErrorCode::PreconditionViolation);
  auto text_only = text_request("vgs_attribute_identification");
  text_only.images = {tiny_png()};
  CHECK(code_of([&] { s.gateway->complete(text_only); }) == ErrorCode::PreconditionViolation);
  CHECK(code_of([&] { s.gateway->complete(text_request("no_such_template")); }) == ErrorCode::UnknownTemplate);
  CHECK(s.backend->requests().empty());
}

TEST_CASE("call renders, appends and records") {
  auto s = test::scripted({{"vgs_visual_grounding", "{\"matching_region\":\"region_0\"}"}});
  const auto r = s.gateway->call(ids::kVisualGrounding, {}, "\n\nTarget attribute: price", {tiny_png()});
  CHECK(r.parsed);
  const auto& req = s.backend->requests().front();
  CHECK(util::starts_with(req.rendered_text, "You are a visual grounding assistant"));
  CHECK(util::ends_with(req.rendered_text, "Target attribute: price"));
  CHECK(req.images.size() == 1);
  CHECK(req.decode_params.temperature == 0.0);
  CHECK(req.decode_params.max_output_tokens == 8192);
  CHECK(s.gateway->call_count(ids::kVisualGrounding) == 1);
  CHECK(s.gateway->calls().front().image_count == 1);
}

TEST_CASE("templates open with their role lines") {
  CHECK(util::starts_with(render_template(ids::kAttributeIdentification, {}), "You are an Attribute Extractor"));
  CHECK(util::starts_with(template_info(ids::kVisualGrounding).text, "You are a visual grounding assistant"));
  CHECK(util::starts_with(template_info(ids::kElementScanning).text, "You are a precise visual extractor"));
  CHECK(util::starts_with(template_info(ids::kElementSelection).text, "You are a precise visual element selector"));
  CHECK(util::starts_with(template_info(ids::kXPathSynthesis).text, "You are an expert XPath generator"));
  CHECK(util::starts_with(template_info(ids::kCotSynthesis).text, "You are a perfect discriminator"));
  CHECK(util::starts_with(template_info(ids::kLlmExtractor).text, "You are an AI Extractor"));
  const auto step = render_template(ids::kAutoScraperStepBack, {{"0", "instr"}, {"1", "vals"}, {"2", "<html/>"}});
  CHECK(step.find("contains all the expected values") != std::string::npos);
  CHECK(step.find("at most 10 expected values") != std::string::npos);
  CHECK(step.find("Instruction: instr") != std::string::npos);
  CHECK(code_of([] { render_template(ids::kAutoScraperStepBack, {{"0", "a"}, {"2", "b"}}); }) ==
        ErrorCode::MissingBinding);
  CHECK(code_of([] { template_info("nope"); }) == ErrorCode::UnknownTemplate);
}

TEST_CASE("stored templates match the prompt files byte for byte") {
  for (const auto id : template_ids()) {
    CAPTURE(id);
    const std::string file = util::read_file(std::string(VGS_PROMPT_DIR) + "/" + std::string(id) + ".txt");
    CHECK(template_info(id).text == file);
    if (placeholders(file).empty()) CHECK(render_template(id, {}) == file);
  }
  CHECK(template_ids().size() == 15);
}

TEST_CASE("placeholder rendering is verbatim and single pass") {
  CHECK(placeholders("a {1} b {0} {1} {x} {}") == std::vector<int>{1, 0});
  CHECK(render("{0}-{1}", {{"0", "{1}"}, {"1", "z"}}) == "{1}-z");
  CHECK(render("{ \"k\": {0} }", {{"0", "1"}}) == "{ \"k\": 1 }");
}

TEST_CASE("vision flags") {
  CHECK(template_info(ids::kVisualGrounding).vision);
  CHECK(template_info(ids::kElementScanning).vision);
  CHECK(template_info(ids::kElementSelection).vision);
  CHECK(template_info(ids::kXPathSynthesis).vision);
  CHECK_FALSE(template_info(ids::kAttributeIdentification).vision);
  CHECK_FALSE(template_info(ids::kCotTopDown).vision);
  CHECK(template_info(ids::kElementSelection).shape == Shape::Array);
}

TEST_CASE("openai request body") {
  ModelConfig cfg;
  cfg.model = "some-model";
  OpenAiBackend b(cfg);
  ModelRequest r = text_request("vgs_visual_grounding", "look");
  r.images = {"PNGDATA"};
  const json body = b.request_body(r);
  CHECK(body["model"] == "some-model");
  CHECK(body["temperature"] == 0.0);
  CHECK(body["max_tokens"] == 8192);
  const json& content = body["messages"][0]["content"];
  CHECK(content[0]["text"] == "look");
  CHECK(content[1]["image_url"]["url"] == "data:image/png;base64," + util::base64_encode("PNGDATA"));
}

TEST_CASE("openai backend over http") {
  httplib::Server server;
  std::atomic<int> hits{0};
  server.Post("/v1/chat/completions", [&](const httplib::Request& req, httplib::Response& res) {
    const int n = ++hits;
    if (req.get_header_value("Authorization") != "Bearer k") {
      res.status = 401;
      res.set_content("{\"error\":\"bad key\"}", "application/json");
      return;
    }
    if (n == 1) {
      res.status = 503;
      return;
    }
    res.set_content(R"({"choices":[{"message":{"content":"{\"attributes\":[\"title\"]}"}}]})", "application/json");
  });
  const int port = server.bind_to_any_port("127.0.0.1");
  std::thread t([&] { server.listen_after_bind(); });
  server.wait_until_ready();

  ModelConfig cfg;
  cfg.endpoint = "http://127.0.0.1:" + std::to_string(port) + "/v1";
  cfg.api_key = "k";
  Gateway g(std::make_shared<OpenAiBackend>(cfg), {}, 0, [](std::chrono::milliseconds) {});
  const auto r = g.complete(text_request());
  REQUIRE(r.parsed);
  CHECK((*r.parsed)["attributes"][0] == "title");
  CHECK(hits == 2);

  cfg.api_key = "wrong";
  Gateway rejected(std::make_shared<OpenAiBackend>(cfg), {}, 0, [](std::chrono::milliseconds) {});
  CHECK(code_of([&] { rejected.complete(text_request()); }) == ErrorCode::BackendRejected);
  CHECK(hits == 3);
  server.stop();
  t.join();
}

TEST_CASE("model config from file and environment") {
  test::TempDir dir;
  util::write_file(dir / "m.json", R"({"model":"file-model","temperature":0.5,"requests_per_minute":30})");
  ::setenv("VGS_MODEL_NAME", "env-model", 1);
  ::setenv("VGS_MODEL_API_KEY", "secret", 1);
  const auto cfg = ModelConfig::load(dir / "m.json");
  ::unsetenv("VGS_MODEL_NAME");
  ::unsetenv("VGS_MODEL_API_KEY");
  CHECK(cfg.model == "env-model");
  CHECK(cfg.api_key == "secret");
  CHECK(cfg.decode.temperature == 0.5);
  CHECK(cfg.requests_per_minute == 30);
  CHECK_FALSE(cfg.to_json().contains("api_key"));
  CHECK(cfg.to_json(true)["api_key"] == "secret");
  const auto defaults = ModelConfig::load("");
  CHECK(defaults.decode.temperature == 0.0);
  CHECK(defaults.decode.max_output_tokens == 8192);
  CHECK(defaults.max_attempts == 3);
}

TEST_CASE("rate limiting spaces calls") {
  auto s = std::make_shared<MockBackend>(std::vector<TranscriptEntry>{{"vgs_attribute_identification", "{}"},
                                                                      {"vgs_attribute_identification", "{}"}});
  std::vector<long long> slept;
  Gateway g(s, {}, 60, [&](std::chrono::milliseconds d) { slept.push_back(d.count()); });
  g.complete(text_request());
  g.complete(text_request());
  REQUIRE(slept.size() == 1);
  CHECK(slept[0] > 900);
  CHECK(slept[0] <= 1000);
}

TEST_CASE("backend factory") {
  test::TempDir dir;
  util::write_file(dir / "t.json", R"([{"instruction_id":"a","response_text":"x"}])");
  ModelConfig cfg;
  cfg.backend = "mock";
  cfg.transcript_path = dir / "t.json";
  CHECK(make_backend(cfg)->name() == "mock");
  cfg.transcript_path.clear();
  CHECK_THROWS_AS(make_backend(cfg), Error);
  cfg.backend = "openai";
  CHECK(make_backend(cfg)->name() == "openai:gpt-4o");
  cfg.backend = "other";
  CHECK_THROWS_AS(make_backend(cfg), Error);
}
