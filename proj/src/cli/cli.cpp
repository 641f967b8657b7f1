#include "vgs/cli/cli.hpp"

#include <CLI11.hpp>

#include <atomic>
#include <filesystem>
#include <iostream>
#include <mutex>
#include <optional>
#include <thread>

#include "vgs/baselines/baselines.hpp"
#include "vgs/error.hpp"
#include "vgs/eval/dataset.hpp"
#include "vgs/eval/extraction.hpp"
#include "vgs/eval/metrics.hpp"
#include "vgs/model/gateway.hpp"
#include "vgs/pipeline/vgs.hpp"
#include "vgs/util/text.hpp"

namespace vgs::cli {

using nlohmann::json;
using nlohmann::ordered_json;
namespace fs = std::filesystem;

namespace {

struct Options {
  std::string method = "vgs";
  std::string dataset;
  std::string out;
  std::string mock;
  std::string model_config;
  std::string config;
  std::string wrappers;
  std::string results;
  std::string viewport;
  std::string distances = "0,1,2,3,4";
  std::optional<int> segment_distance;
  std::optional<int> candidate_cap;
  std::optional<int> retry_budget;
  int jobs = 1;
  bool wall_clock = false;
  bool no_judge = false;
};

// Everything a run needs besides the samples.
struct RunSetup {
  pipeline::VgsConfig vgs;
  model::ModelConfig model;
  std::optional<model::Transcript> transcript;
  std::shared_ptr<model::Gateway> shared_gateway;
  baselines::BaselineOptions baseline;
};

browser::Viewport parse_viewport(const std::string& s) {
  const auto x = s.find_first_of("xX");
  try {
    if (x == std::string::npos) throw std::invalid_argument(s);
    std::size_t used = 0;
    browser::Viewport v;
    v.width = std::stoi(s.substr(0, x), &used);
    if (used != x) throw std::invalid_argument(s);
    const std::string h = s.substr(x + 1);
    v.height = std::stoi(h, &used);
    if (used != h.size() || v.width <= 0 || v.height <= 0) throw std::invalid_argument(s);
    return v;
  } catch (const std::exception&) {
    throw Error(ErrorCode::Usage, "--viewport expects WIDTHxHEIGHT, got '" + s + "'");
  }
}

RunSetup make_setup(const Options& o) {
  RunSetup s;
  json file = json::object();
  if (!o.config.empty()) {
    file = json::parse(util::read_file(o.config), nullptr, false);
    if (file.is_discarded() || !file.is_object()) throw Error(ErrorCode::Usage, o.config + " is not a JSON object");
  }
  if (file.contains("viewport")) {
    const json& v = file["viewport"];
    s.vgs.viewport = v.is_string() ? parse_viewport(v.get<std::string>())
                                   : browser::Viewport{v.value("width", 1280), v.value("height", 1100)};
  }
  s.vgs.segment_distance = file.value("segment_distance", s.vgs.segment_distance);
  s.vgs.candidate_cap = file.value("candidate_cap", s.vgs.candidate_cap);
  s.vgs.retry_budget = file.value("retry_budget", s.vgs.retry_budget);
  if (!o.viewport.empty()) s.vgs.viewport = parse_viewport(o.viewport);
  if (o.segment_distance) s.vgs.segment_distance = *o.segment_distance;
  if (o.candidate_cap) s.vgs.candidate_cap = static_cast<std::size_t>(*o.candidate_cap);
  if (o.retry_budget) s.vgs.retry_budget = *o.retry_budget;
  if (s.vgs.segment_distance < 0) throw Error(ErrorCode::Usage, "--segment-distance must be >= 0");
  s.vgs.session = browser::session_options_from_env();

  const bool fixed = !o.mock.empty() && !o.wall_clock;
  s.vgs.clock = pipeline::Clock(fixed);
  s.baseline.clock = s.vgs.clock;

  if (!o.mock.empty()) {
    s.model.backend = "mock";
    s.model.transcript_path = o.mock;
    s.transcript = model::Transcript::load(o.mock);
  } else {
    s.model = model::ModelConfig::load(o.model_config);
    if (s.model.backend == "mock") {
      s.transcript = model::Transcript::load(s.model.transcript_path);
    } else {
      s.shared_gateway = std::make_shared<model::Gateway>(
          model::make_backend(s.model), model::RetryPolicy{s.model.max_attempts, s.model.initial_backoff},
          s.model.requests_per_minute);
      s.shared_gateway->set_decode_params(s.model.decode);
    }
  }
  return s;
}

// A fresh replay for each sample, or the shared live gateway.
std::shared_ptr<model::Gateway> gateway_for(const RunSetup& s, const std::string& sample_id) {
  if (s.shared_gateway) return s.shared_gateway;
  auto backend = std::make_shared<model::MockBackend>(s.transcript->entries_for(sample_id));
  auto g = std::make_shared<model::Gateway>(backend);
  g->set_decode_params(s.model.decode);
  return g;
}

ordered_json config_json(const Options& o, const RunSetup& s) {
  ordered_json j;
  j["method"] = o.method;
  j["viewport"] = std::to_string(s.vgs.viewport.width) + "x" + std::to_string(s.vgs.viewport.height);
  j["segment_distance"] = s.vgs.segment_distance;
  j["candidate_cap"] = s.vgs.candidate_cap;
  j["retry_budget"] = s.vgs.retry_budget;
  j["sample_pages"] = s.baseline.sample_pages;
  j["reflexion_budget"] = s.baseline.reflexion_budget;
  j["model"] = ordered_json::parse(s.model.to_json().dump());
  return j;
}

void write_json(const fs::path& path, const ordered_json& j) { util::write_file(path.string(), j.dump(2) + "\n"); }

void write_lines(const fs::path& path, const std::vector<std::string>& lines) {
  std::string text;
  for (const auto& l : lines) text += l + "\n";
  util::write_file(path.string(), text);
}

std::vector<eval::Sample> load_samples(const Options& o) {
  if (o.dataset.empty()) throw Error(ErrorCode::Usage, "--dataset is required");
  return eval::load_dataset(o.dataset);
}

// Runs fn(i) for each index on up to `jobs` threads.
template <class Fn>
void parallel_for(std::size_t n, int jobs, Fn fn) {
  const std::size_t workers = std::min<std::size_t>(n, static_cast<std::size_t>(std::max(jobs, 1)));
  if (workers <= 1) {
    for (std::size_t i = 0; i < n; ++i) fn(i);
    return;
  }
  std::atomic<std::size_t> next{0};
  std::vector<std::thread> pool;
  for (std::size_t w = 0; w < workers; ++w) {
    pool.emplace_back([&] {
      for (std::size_t i = next++; i < n; i = next++) fn(i);
    });
  }
  for (auto& t : pool) t.join();
}

struct SampleOutcome {
  std::optional<pipeline::Wrapper> wrapper;
  std::string error;
  bool partial = false;
};

std::vector<baselines::SimplifiedPage> baseline_pages(const eval::Sample& sample, const RunSetup& s) {
  std::vector<baselines::SimplifiedPage> pages;
  for (std::size_t i = 0; i < sample.urls.size() && i < std::max<std::size_t>(s.baseline.sample_pages, 1); ++i) {
    auto session = browser::load_page(sample.urls[i], s.vgs.viewport, s.vgs.session);
    pages.emplace_back(sample.urls[i], session->dom_snapshot());
  }
  return pages;
}

SampleOutcome generate_one(const Options& o, const RunSetup& s, const eval::Sample& sample) {
  SampleOutcome out;
  try {
    auto gateway = gateway_for(s, sample.id);
    if (o.method == "vgs") {
      pipeline::Wrapper failed;
      try {
        out.wrapper = pipeline::run_vgs(*gateway, sample.query, sample.urls.front(), s.vgs, &failed);
      } catch (const Error& e) {
        if (e.code() != ErrorCode::AllAttributesFailed) throw;
        out.wrapper = failed;
        out.error = e.what();
      }
    } else {
      const auto pages = baseline_pages(sample, s);
      if (o.method == "cot") {
        out.wrapper = baselines::cot_wrapper(*gateway, sample.query, pages, s.baseline);
      } else if (o.method == "reflexion") {
        out.wrapper = baselines::reflexion_wrapper(*gateway, sample.query, pages, s.baseline);
      } else {
        out.wrapper = baselines::autoscraper_wrapper(*gateway, sample.query, pages, s.baseline);
      }
    }
  } catch (const Error& e) {
    out.error = e.what();
  }
  out.partial = !out.error.empty() || (out.wrapper && out.wrapper->has_failure());
  return out;
}

int run_generate(const Options& o, const fs::path& out_dir, std::ostream& err) {
  const auto samples = load_samples(o);
  const RunSetup setup = make_setup(o);
  const std::string started = setup.vgs.clock.timestamp();
  std::vector<SampleOutcome> outcomes(samples.size());
  parallel_for(samples.size(), o.jobs, [&](std::size_t i) { outcomes[i] = generate_one(o, setup, samples[i]); });

  fs::create_directories(out_dir);
  std::vector<std::string> log;
  ordered_json listed = ordered_json::array();
  bool partial = false;
  for (std::size_t i = 0; i < samples.size(); ++i) {
    const auto& sample = samples[i];
    const auto& r = outcomes[i];
    partial = partial || r.partial;
    ordered_json entry;
    entry["id"] = sample.id;
    entry["status"] = r.error.empty() ? (r.partial ? "partial" : "ok") : "failed";
    if (r.wrapper) {
      const std::string file = sample.id + ".wrapper.json";
      write_json(out_dir / file, pipeline::to_json(*r.wrapper));
      entry["wrapper"] = file;
      for (const auto& t : r.wrapper->traces) {
        ordered_json line;
        line["sample"] = sample.id;
        line["method"] = o.method;
        line["attribute"] = t.attribute;
        line["stage"] = t.stage;
        line["status"] = t.status == pipeline::TraceStatus::Ok ? "ok" : "failed";
        line["detail"] = t.detail;
        log.push_back(line.dump());
      }
    }
    if (!r.error.empty()) {
      entry["error"] = r.error;
      ordered_json line;
      line["sample"] = sample.id;
      line["method"] = o.method;
      line["error"] = r.error;
      log.push_back(line.dump());
      err << sample.id << ": " << r.error << "\n";
    }
    listed.push_back(entry);
  }
  const ordered_json config = config_json(o, setup);
  ordered_json manifest;
  manifest["command"] = "generate";
  manifest["dataset"] = o.dataset;
  manifest["config_hash"] = util::fnv1a_hex(config.dump());
  manifest["config"] = config;
  manifest["started_at"] = started;
  manifest["finished_at"] = setup.vgs.clock.timestamp();
  manifest["samples"] = listed;
  write_json(out_dir / "manifest.json", manifest);
  write_lines(out_dir / "log.jsonl", log);
  return partial ? kExitPartial : kExitOk;
}

int run_sweep(Options o, std::ostream& err) {
  std::vector<int> ds;
  std::string list = o.distances;
  for (char& c : list) {
    if (c == ',') c = ' ';
  }
  for (const auto& t : util::split_whitespace(list)) {
    try {
      const int d = std::stoi(t);
      if (d < 0) throw std::out_of_range(t);
      ds.push_back(d);
    } catch (const std::exception&) {
      throw Error(ErrorCode::Usage, "--distances expects non-negative integers, got '" + t + "'");
    }
  }
  if (ds.empty()) throw Error(ErrorCode::Usage, "--distances is empty");
  int code = kExitOk;
  for (int d : ds) {
    o.segment_distance = d;
    code = std::max(code, run_generate(o, fs::path(o.out) / ("d" + std::to_string(d)), err));
  }
  return code;
}

std::optional<pipeline::Wrapper> read_wrapper(const fs::path& dir, const std::string& id) {
  const fs::path p = dir / (id + ".wrapper.json");
  if (!fs::exists(p)) return std::nullopt;
  const auto j = ordered_json::parse(util::read_file(p.string()), nullptr, false);
  if (j.is_discarded()) throw Error(ErrorCode::SchemaViolation, p.string() + " is not valid JSON");
  return pipeline::wrapper_from_json(j);
}

eval::ExtractionResult extract_one(const pipeline::Wrapper& w, const eval::Sample& s, const RunSetup& setup) {
  return eval::apply_wrapper(w, s, setup.vgs.viewport, setup.vgs.session);
}

int run_extract(const Options& o, std::ostream& err) {
  if (o.wrappers.empty()) throw Error(ErrorCode::Usage, "--wrappers is required");
  const auto samples = load_samples(o);
  RunSetup setup;
  if (!o.viewport.empty()) setup.vgs.viewport = parse_viewport(o.viewport);
  setup.vgs.session = browser::session_options_from_env();
  std::vector<std::optional<eval::ExtractionResult>> results(samples.size());
  std::vector<std::string> errors(samples.size());
  parallel_for(samples.size(), o.jobs, [&](std::size_t i) {
    try {
      const auto w = read_wrapper(o.wrappers, samples[i].id);
      if (!w) {
        errors[i] = "no wrapper for sample";
        return;
      }
      results[i] = extract_one(*w, samples[i], setup);
    } catch (const Error& e) {
      errors[i] = e.what();
    }
  });
  bool partial = false;
  for (std::size_t i = 0; i < samples.size(); ++i) {
    if (results[i]) {
      write_json(fs::path(o.out) / (samples[i].id + ".result.json"), eval::to_json(*results[i]));
      for (const auto& p : results[i]->pages) partial = partial || p.error.has_value();
    }
    if (!errors[i].empty()) {
      partial = true;
      err << samples[i].id << ": " << errors[i] << "\n";
    }
  }
  return partial ? kExitPartial : kExitOk;
}

int run_evaluate(const Options& o, std::ostream& out, std::ostream& err) {
  if (o.results.empty() == o.wrappers.empty()) {
    throw Error(ErrorCode::Usage, "evaluate takes exactly one of --results or --wrappers");
  }
  const auto samples = load_samples(o);
  RunSetup setup;
  if (!o.viewport.empty()) setup.vgs.viewport = parse_viewport(o.viewport);
  setup.vgs.session = browser::session_options_from_env();

  std::shared_ptr<model::Gateway> judge_gateway;
  if (!o.no_judge && !o.mock.empty()) {
    const auto t = model::Transcript::load(o.mock);
    judge_gateway = std::make_shared<model::Gateway>(std::make_shared<model::MockBackend>(t.entries_for("")));
  } else if (!o.no_judge && !o.model_config.empty()) {
    const auto cfg = model::ModelConfig::load(o.model_config);
    judge_gateway = std::make_shared<model::Gateway>(model::make_backend(cfg),
                                                     model::RetryPolicy{cfg.max_attempts, cfg.initial_backoff},
                                                     cfg.requests_per_minute);
  }
  std::optional<eval::Judge> judge;
  if (judge_gateway) judge = eval::model_judge(*judge_gateway);

  std::vector<eval::SampleScore> scores;
  bool partial = false;
  for (const auto& sample : samples) {
    eval::ExtractionResult result;
    result.sample_id = sample.id;
    try {
      if (!o.results.empty()) {
        const fs::path p = fs::path(o.results) / (sample.id + ".result.json");
        if (fs::exists(p)) {
          result = eval::extraction_from_json(json::parse(util::read_file(p.string())));
        } else {
          err << sample.id << ": no extraction result, scored as empty\n";
          partial = true;
        }
      } else if (const auto w = read_wrapper(o.wrappers, sample.id)) {
        result = extract_one(*w, sample, setup);
      } else {
        err << sample.id << ": no wrapper, scored as empty\n";
        partial = true;
      }
    } catch (const Error& e) {
      err << sample.id << ": " << e.what() << "\n";
      partial = true;
    }
    std::vector<std::string> gold_names;
    for (const auto& g : sample.gold) gold_names.push_back(g.name);
    const auto alignment = eval::align_attributes(result.attributes, gold_names, judge ? &*judge : nullptr);
    scores.push_back(eval::score(result, sample, alignment));
  }
  const auto rep = eval::report(samples, scores);
  write_json(fs::path(o.out) / "report.json", eval::to_json(rep));
  const std::string table = eval::format_table(rep);
  util::write_file((fs::path(o.out) / "report.txt").string(), table);
  out << table;
  return partial ? kExitPartial : kExitOk;
}

int run_direct(const Options& o, std::ostream& err) {
  const auto samples = load_samples(o);
  const RunSetup setup = make_setup(o);
  std::vector<ordered_json> outputs(samples.size());
  std::vector<std::string> errors(samples.size());
  parallel_for(samples.size(), o.jobs, [&](std::size_t i) {
    const auto& sample = samples[i];
    ordered_json j;
    j["sample_id"] = sample.id;
    j["method"] = "direct";
    j["pages"] = ordered_json::array();
    try {
      auto gateway = gateway_for(setup, sample.id);
      for (const auto& url : sample.urls) {
        auto session = browser::load_page(url, setup.vgs.viewport, setup.vgs.session);
        const baselines::SimplifiedPage page(url, session->dom_snapshot());
        const auto r = baselines::direct_extract(*gateway, sample.query, page, setup.vgs.clock);
        ordered_json pj;
        pj["url"] = url;
        pj["latency_ms"] = r.latency_ms;
        pj["values"] = r.values;
        j["pages"].push_back(std::move(pj));
      }
    } catch (const Error& e) {
      errors[i] = e.what();
      j["error"] = e.what();
    }
    outputs[i] = std::move(j);
  });
  std::vector<std::string> log;
  bool partial = false;
  for (std::size_t i = 0; i < samples.size(); ++i) {
    write_json(fs::path(o.out) / (samples[i].id + ".direct.json"), outputs[i]);
    for (const auto& p : outputs[i]["pages"]) {
      ordered_json line;
      line["sample"] = samples[i].id;
      line["url"] = p["url"];
      line["latency_ms"] = p["latency_ms"];
      log.push_back(line.dump());
    }
    if (!errors[i].empty()) {
      partial = true;
      err << samples[i].id << ": " << errors[i] << "\n";
    }
  }
  write_lines(fs::path(o.out) / "log.jsonl", log);
  return partial ? kExitPartial : kExitOk;
}

void add_model_flags(CLI::App* c, Options& o) {
  c->add_option("--mock", o.mock, "Replay model replies from a transcript file");
  c->add_option("--model-config", o.model_config, "Model backend config (JSON)");
  c->add_flag("--wall-clock", o.wall_clock, "Record real timestamps even under --mock");
}

void add_run_flags(CLI::App* c, Options& o) {
  c->add_option("--dataset", o.dataset, "Dataset (JSON Lines)")->required();
  c->add_option("--out", o.out, "Output directory")->required();
  c->add_option("--viewport", o.viewport, "Viewport as WIDTHxHEIGHT (default 1280x1100)");
  c->add_option("--jobs", o.jobs, "Samples processed in parallel")->check(CLI::PositiveNumber);
}

}  // namespace

int dispatch(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  Options o;
  CLI::App app{"Wrapper generation and evaluation for on-demand web information extraction", "vgs-wie"};
  app.require_subcommand(1);

  auto* gen = app.add_subcommand("generate", "Generate wrappers for every sample of a dataset");
  add_run_flags(gen, o);
  add_model_flags(gen, o);
  gen->add_option("--method", o.method, "vgs | cot | reflexion | autoscraper")
      ->check(CLI::IsMember({"vgs", "cot", "reflexion", "autoscraper"}));
  gen->add_option("--config", o.config, "Run config (JSON)");
  gen->add_option("--segment-distance", o.segment_distance, "Neighbour distance for HTML segments (default 2)");
  gen->add_option("--candidate-cap", o.candidate_cap, "Most marks per pass (default 50)");
  gen->add_option("--retry-budget", o.retry_budget, "XPath synthesis retries (default 1)");

  auto* sweep = app.add_subcommand("sweep-distance", "Run generate once per segment distance");
  add_run_flags(sweep, o);
  add_model_flags(sweep, o);
  sweep->add_option("--method", o.method, "Generation method")->check(CLI::IsMember({"vgs"}));
  sweep->add_option("--config", o.config, "Run config (JSON)");
  sweep->add_option("--distances", o.distances, "Comma-separated distances (default 0,1,2,3,4)");

  auto* ext = app.add_subcommand("extract", "Apply wrappers to every page of each sample");
  add_run_flags(ext, o);
  ext->add_option("--wrappers", o.wrappers, "Directory of <id>.wrapper.json files")->required();

  auto* ev = app.add_subcommand("evaluate", "Score extraction results and write a report");
  ev->add_option("--dataset", o.dataset, "Dataset (JSON Lines)")->required();
  ev->add_option("--out", o.out, "Output directory")->required();
  ev->add_option("--results", o.results, "Directory of <id>.result.json files");
  ev->add_option("--wrappers", o.wrappers, "Directory of wrappers to apply before scoring");
  ev->add_option("--viewport", o.viewport, "Viewport as WIDTHxHEIGHT");
  ev->add_option("--mock", o.mock, "Replay alignment-judge replies from a transcript");
  ev->add_option("--model-config", o.model_config, "Model backend for the alignment judge");
  ev->add_flag("--no-judge", o.no_judge, "Align attribute names by exact match only");

  auto* dir = app.add_subcommand("direct", "Extract values directly with the model, page by page");
  add_run_flags(dir, o);
  add_model_flags(dir, o);

  std::vector<const char*> argv{"vgs-wie"};
  for (const auto& a : args) argv.push_back(a.c_str());
  try {
    app.parse(static_cast<int>(argv.size()), argv.data());
  } catch (const CLI::CallForHelp& e) {
    out << app.help();
    return kExitOk;
  } catch (const CLI::CallForAllHelp& e) {
    out << app.help("", CLI::AppFormatMode::All);
    return kExitOk;
  } catch (const CLI::ParseError& e) {
    err << "error: " << e.what() << "\n\n" << app.help();
    return kExitUsage;
  }

  try {
    if (gen->parsed()) return run_generate(o, o.out, err);
    if (sweep->parsed()) return run_sweep(o, err);
    if (ext->parsed()) return run_extract(o, err);
    if (ev->parsed()) return run_evaluate(o, out, err);
    if (dir->parsed()) return run_direct(o, err);
  } catch (const Error& e) {
    err << "error: " << e.what() << "\n";
    if (e.code() == ErrorCode::Usage) {
      err << "\n" << app.help();
      return kExitUsage;
    }
    return kExitPartial;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << "\n";
    return kExitPartial;
  }
  return kExitUsage;
}

int dispatch(int argc, const char* const* argv) {
  std::vector<std::string> args;
  for (int i = 1; i < argc; ++i) args.emplace_back(argv[i]);
  return dispatch(args, std::cout, std::cerr);
}

}  // namespace vgs::cli
