#include <doctest.h>

#include <filesystem>
#include <fstream>
#include <sstream>

#include "support.hpp"
#include "vgs/cli/cli.hpp"
#include "vgs/util/text.hpp"

using namespace vgs;
using nlohmann::json;
namespace fs = std::filesystem;

namespace {

struct Run {
  int code = 0;
  std::string out;
  std::string err;
};

Run run(std::vector<std::string> args) {
  std::ostringstream out, err;
  Run r;
  r.code = cli::dispatch(args, out, err);
  r.out = out.str();
  r.err = err.str();
  return r;
}

std::string dataset() { return test::fixture_path("books/dataset.jsonl"); }
std::string transcript() { return test::fixture_path("books/vgs_transcript.json"); }

// The first `n` bundled samples with absolute urls, written next to the
// temp directory.
std::string subset(const test::TempDir& dir, std::size_t n) {
  std::ifstream in(dataset());
  std::string line, text;
  for (std::size_t i = 0; i < n && std::getline(in, line); ++i) {
    json j = json::parse(line);
    for (auto& u : j["urls"]) u = test::fixture_url("books/" + u.get<std::string>());
    text += j.dump() + "\n";
  }
  const std::string path = dir / "subset.jsonl";
  util::write_file(path, text);
  return path;
}

std::vector<json> jsonl(const std::string& path) {
  std::vector<json> out;
  std::istringstream in(util::read_file(path));
  std::string line;
  while (std::getline(in, line)) {
    if (!line.empty()) out.push_back(json::parse(line));
  }
  return out;
}

}  // namespace

TEST_CASE("usage errors exit with 2") {
  CHECK(run({}).code == cli::kExitUsage);
  const Run unknown = run({"frobnicate"});
  CHECK(unknown.code == cli::kExitUsage);
  CHECK(unknown.err.find("generate") != std::string::npos);
  test::TempDir dir;
  CHECK(run({"generate", "--dataset", dataset(), "--out", dir / "o", "--mock", transcript(), "--viewport", "wide"}).code ==
        cli::kExitUsage);
  CHECK(run({"generate", "--dataset", dataset()}).code == cli::kExitUsage);
  CHECK(run({"generate", "--dataset", dataset(), "--out", dir / "o", "--mock", transcript(), "--method", "magic"}).code ==
        cli::kExitUsage);
  CHECK(run({"evaluate", "--dataset", dataset(), "--out", dir / "e"}).code == cli::kExitUsage);
  CHECK(run({"--help"}).code == cli::kExitOk);
}

TEST_CASE("generate writes one wrapper per sample plus a manifest and log") {
  test::TempDir dir;
  const std::string out = dir / "gen";
  const Run r = run({"generate", "--method", "vgs", "--dataset", dataset(), "--out", out, "--mock", transcript()});
  REQUIRE_MESSAGE(r.code == cli::kExitOk, r.err);
  const json manifest = json::parse(util::read_file(out + "/manifest.json"));
  CHECK(manifest["command"] == "generate");
  CHECK(manifest["config"]["segment_distance"] == 2);
  CHECK(manifest["config"]["viewport"] == "1280x1100");
  CHECK(manifest["started_at"] == "1970-01-01T00:00:00Z");
  REQUIRE(manifest["samples"].size() == 12);
  for (const auto& s : manifest["samples"]) {
    CHECK(s["status"] == "ok");
    CHECK(fs::exists(out + "/" + s["wrapper"].get<std::string>()));
  }
  const json w = json::parse(util::read_file(out + "/books-01.wrapper.json"));
  CHECK(w["method"] == "vgs");
  CHECK(w["entries"].contains("title"));
  const auto log = jsonl(out + "/log.jsonl");
  CHECK_FALSE(log.empty());
  for (const auto& line : log) CHECK(line["status"] == "ok");

  const std::string again = dir / "gen2";
  REQUIRE(run({"generate", "--method", "vgs", "--dataset", dataset(), "--out", again, "--mock", transcript(), "--jobs",
               "4"})
              .code == cli::kExitOk);
  for (const auto& entry : fs::directory_iterator(out)) {
    const std::string name = entry.path().filename().string();
    CHECK_MESSAGE(util::read_file(entry.path().string()) == util::read_file(again + "/" + name), name);
  }
}

TEST_CASE("extract then evaluate scores the generated wrappers") {
  test::TempDir dir;
  const std::string gen = dir / "gen", res = dir / "res", rep = dir / "rep";
  REQUIRE(run({"generate", "--dataset", dataset(), "--out", gen, "--mock", transcript()}).code == cli::kExitOk);
  REQUIRE(run({"extract", "--dataset", dataset(), "--out", res, "--wrappers", gen}).code == cli::kExitOk);
  const json result = json::parse(util::read_file(res + "/books-02.result.json"));
  CHECK(result["pages"].size() == 3);
  CHECK(result["pages"][0]["values"]["price"] == json::array({"£51.77"}));

  const Run ev = run({"evaluate", "--dataset", dataset(), "--out", rep, "--results", res, "--no-judge"});
  REQUIRE_MESSAGE(ev.code == cli::kExitOk, ev.err);
  CHECK(ev.out.find("Overall") != std::string::npos);
  const json report = json::parse(util::read_file(rep + "/report.json"));
  CHECK(report["overall"]["f1"] == 1.0);
  for (const char* t : {"I", "II", "III", "IV"}) CHECK(report["by_type"][t]["f1"] == 1.0);
  CHECK(fs::exists(rep + "/report.txt"));

  const std::string rep2 = dir / "rep2";
  REQUIRE(run({"evaluate", "--dataset", dataset(), "--out", rep2, "--wrappers", gen, "--no-judge"}).code == cli::kExitOk);
  CHECK(util::read_file(rep2 + "/report.json") == util::read_file(rep + "/report.json"));
}

TEST_CASE("missing results are scored as empty and flagged") {
  test::TempDir dir;
  fs::create_directories(dir / "empty");
  const Run r = run({"evaluate", "--dataset", dataset(), "--out", dir / "rep", "--results", dir / "empty", "--no-judge"});
  CHECK(r.code == cli::kExitPartial);
  CHECK(json::parse(util::read_file(dir / "rep/report.json"))["overall"]["f1"] == 0.0);
}

TEST_CASE("sweep-distance writes one run per distance") {
  test::TempDir dir;
  const std::string data = subset(dir, 1);
  const Run r = run({"sweep-distance", "--dataset", data, "--out", dir / "sweep", "--mock", transcript()});
  REQUIRE_MESSAGE(r.code == cli::kExitOk, r.err);
  for (int d = 0; d <= 4; ++d) {
    const std::string m = dir / ("sweep/d" + std::to_string(d) + "/manifest.json");
    REQUIRE(fs::exists(m));
    CHECK(json::parse(util::read_file(m))["config"]["segment_distance"] == d);
  }
  CHECK(run({"sweep-distance", "--dataset", data, "--out", dir / "bad", "--mock", transcript(), "--distances", "1,x"})
            .code == cli::kExitUsage);
}

TEST_CASE("direct extraction writes values and latencies") {
  test::TempDir dir;
  const std::string data = subset(dir, 1);
  json t;
  for (int i = 0; i < 3; ++i) {
    t["books-01"].push_back({{"instruction_id", "llm_extractor"}, {"response_text", R"({"title":["x"]})"}});
  }
  util::write_file(dir / "direct.json", t.dump());
  const Run r = run({"direct", "--dataset", data, "--out", dir / "d", "--mock", dir / "direct.json"});
  REQUIRE_MESSAGE(r.code == cli::kExitOk, r.err);
  const json out = json::parse(util::read_file(dir / "d/books-01.direct.json"));
  CHECK(out["method"] == "direct");
  REQUIRE(out["pages"].size() == 3);
  CHECK(out["pages"][2]["values"]["title"] == json::array({"x"}));
  CHECK(out["pages"][0]["latency_ms"] == 0);
  CHECK(jsonl(dir / "d/log.jsonl").size() == 3);
}

TEST_CASE("an exhausted transcript fails the sample, not the run") {
  test::TempDir dir;
  const std::string data = subset(dir, 2);
  json t;
  t["books-01"] = json::parse(util::read_file(transcript()))["books-01"];
  util::write_file(dir / "partial.json", t.dump());
  const Run r = run({"generate", "--dataset", data, "--out", dir / "g", "--mock", dir / "partial.json"});
  CHECK(r.code == cli::kExitPartial);
  const json manifest = json::parse(util::read_file(dir / "g/manifest.json"));
  CHECK(manifest["samples"][0]["status"] == "ok");
  CHECK(manifest["samples"][1]["status"] == "failed");
  CHECK(r.err.find("books-02") != std::string::npos);
}
