#include "vgs/baselines/baselines.hpp"

#include <algorithm>

#include "vgs/error.hpp"
#include "vgs/html/serialize.hpp"
#include "vgs/html/xpath.hpp"
#include "vgs/util/text.hpp"

namespace vgs::baselines {

using nlohmann::json;
using pipeline::Trace;
using pipeline::TraceStatus;
using pipeline::Wrapper;
namespace ids = model::ids;

namespace {

constexpr std::string_view kTopDown = "top-down";
constexpr std::string_view kReflection = "self-reflection";
constexpr std::string_view kStepBack = "step-back";
constexpr std::string_view kSynthesis = "synthesis";

const json& parsed_or_throw(const model::ModelResponse& r, std::string_view what) {
  if (!r.parsed) {
    throw Error(ErrorCode::ModelParseFailure, std::string(what) + ": " + r.parse_error.value_or("no JSON"));
  }
  return *r.parsed;
}

std::vector<std::string> as_strings(const json& v) {
  std::vector<std::string> out;
  if (v.is_array()) {
    for (const auto& x : v) {
      if (x.is_string()) {
        out.push_back(x.get<std::string>());
      } else if (!x.is_null()) {
        out.push_back(x.dump());
      }
    }
  } else if (v.is_string()) {
    out.push_back(v.get<std::string>());
  } else if (!v.is_null()) {
    out.push_back(v.dump());
  }
  return out;
}

FieldMap field_map(const json& j) {
  FieldMap out;
  if (!j.is_object()) return out;
  for (const auto& [k, v] : j.items()) out[k] = as_strings(v);
  return out;
}

bool says_yes(const json& reply, std::string_view key) {
  if (!reply.is_object() || !reply.contains(key)) return false;
  const json& v = reply[std::string(key)];
  if (v.is_boolean()) return v.get<bool>();
  if (!v.is_string()) return false;
  return util::to_lower(util::trim(v.get<std::string>())) == "yes";
}

void note(Wrapper& w, std::string_view stage, TraceStatus status, std::string detail, std::string attribute = {}) {
  w.traces.push_back({std::move(attribute), std::string(stage), status, std::move(detail)});
}

Wrapper start_wrapper(const pipeline::ExtractionQuery& query, const std::vector<SimplifiedPage>& pages,
                      std::string method, const BaselineOptions& options) {
  if (pages.empty()) throw Error(ErrorCode::PreconditionViolation, "no pages given");
  Wrapper w;
  w.query_id = query.id;
  w.source_url = pages.front().url();
  w.generated_at = options.clock.timestamp();
  w.method = std::move(method);
  return w;
}

std::vector<const SimplifiedPage*> samples(const std::vector<SimplifiedPage>& pages, std::size_t k) {
  std::vector<const SimplifiedPage*> out;
  for (std::size_t i = 0; i < pages.size() && i < std::max<std::size_t>(k, 1); ++i) out.push_back(&pages[i]);
  return out;
}

ActionSequence top_down(model::Gateway& gateway, std::string_view id, const pipeline::ExtractionQuery& query,
                        const std::string& html, Wrapper& w) {
  const auto r = gateway.call(id, {{"0", query.text}, {"1", html}});
  ActionSequence seq = parse_action_sequence(parsed_or_throw(r, "top-down"));
  for (const auto& f : seq.dropped) {
    note(w, kTopDown, TraceStatus::Failed, "KeyMismatch: value and xpath disagree on '" + f + "'", f);
  }
  return seq;
}

// Discriminator call over the candidates; the winner's first xpath per
// field becomes the wrapper.
void synthesize(model::Gateway& gateway, std::string_view id, const pipeline::ExtractionQuery& query,
                const std::vector<FieldMap>& candidates, const std::vector<const SimplifiedPage*>& pages, Wrapper& w) {
  bool any = false;
  for (const auto& c : candidates) any = any || !c.empty();
  if (!any) {
    note(w, kSynthesis, TraceStatus::Ok, "no candidate produced any field");
    return;
  }
  const auto r = gateway.call(id, {{"0", query.text}, {"1", describe_candidates(candidates, pages)}});
  const json& j = parsed_or_throw(r, "synthesis");
  const std::size_t pick = chosen_index(j, candidates.size());
  note(w, kSynthesis, TraceStatus::Ok, "chose sequence " + std::to_string(pick));
  for (const auto& [field, xpaths] : candidates[pick]) {
    if (!xpaths.empty() && !util::trim(xpaths.front()).empty()) w.entries.emplace_back(field, xpaths.front());
  }
}

void finish(Wrapper& w, const BaselineOptions& options, std::chrono::steady_clock::time_point started) {
  w.duration_ms = options.clock.elapsed_ms(started);
}

}  // namespace

SimplifiedPage::SimplifiedPage(std::string url, std::string_view raw_html)
    : url_(std::move(url)), simplified_(html::simplify(raw_html)), doc_(html::Document::parse(simplified_.content)) {}

ActionSequence parse_action_sequence(const json& reply) {
  ActionSequence seq;
  if (reply.contains("thought") && reply["thought"].is_string()) seq.thought = reply["thought"].get<std::string>();
  FieldMap value = field_map(reply.value("value", json::object()));
  FieldMap xpath = field_map(reply.value("xpath", json::object()));
  for (auto& [k, v] : xpath) {
    if (value.count(k)) {
      seq.xpath[k] = std::move(v);
    } else {
      seq.dropped.push_back(k);
    }
  }
  for (auto& [k, v] : value) {
    if (seq.xpath.count(k)) {
      seq.value[k] = std::move(v);
    } else if (std::find(seq.dropped.begin(), seq.dropped.end(), k) == seq.dropped.end()) {
      seq.dropped.push_back(k);
    }
  }
  std::sort(seq.dropped.begin(), seq.dropped.end());
  return seq;
}

FieldMap execute_sequence(const html::Document& doc, const FieldMap& xpaths) {
  FieldMap out;
  for (const auto& [field, list] : xpaths) {
    auto& values = out[field];
    for (const auto& xp : list) {
      try {
        for (auto& v : html::evaluate_xpath_strings(doc, xp)) values.push_back(std::move(v));
      } catch (const Error&) {
      }
    }
  }
  return out;
}

std::string describe_candidates(const std::vector<FieldMap>& candidates,
                                const std::vector<const SimplifiedPage*>& pages) {
  std::string out;
  for (std::size_t i = 0; i < candidates.size(); ++i) {
    if (i) out += "\n\n";
    out += "Sequence " + std::to_string(i) + ":\nxpath: " + json(candidates[i]).dump();
    for (std::size_t p = 0; p < pages.size(); ++p) {
      out += "\nresult on page " + std::to_string(p) + " (" + pages[p]->url() +
             "): " + json(execute_sequence(pages[p]->document(), candidates[i])).dump();
    }
  }
  return out;
}

std::size_t chosen_index(const json& reply, std::size_t count) {
  if (!reply.is_object() || !reply.contains("number") || count == 0) return 0;
  const json& n = reply["number"];
  long long v = -1;
  if (n.is_number_integer()) {
    v = n.get<long long>();
  } else if (n.is_string()) {
    const std::string s = util::trim(n.get<std::string>());
    if (!s.empty() && s.size() < 10 && std::all_of(s.begin(), s.end(), [](char c) { return c >= '0' && c <= '9'; })) {
      v = std::stoll(s);
    }
  }
  return v >= 0 && static_cast<std::size_t>(v) < count ? static_cast<std::size_t>(v) : 0;
}

std::string step_back_values(const std::vector<std::string>& values, std::size_t limit) {
  json out = json::array();
  for (std::size_t i = 0; i < values.size() && i < limit; ++i) out.push_back(values[i]);
  return out.dump();
}

Wrapper cot_wrapper(model::Gateway& gateway, const pipeline::ExtractionQuery& query,
                    const std::vector<SimplifiedPage>& pages, const BaselineOptions& options) {
  const auto started = options.clock.start();
  Wrapper w = start_wrapper(query, pages, "cot", options);
  const auto sample = samples(pages, options.sample_pages);
  std::vector<FieldMap> candidates;
  for (const auto* page : sample) {
    ActionSequence seq = top_down(gateway, ids::kCotTopDown, query, page->html(), w);
    note(w, kTopDown, TraceStatus::Ok, page->url() + ": " + std::to_string(seq.xpath.size()) + " fields");
    candidates.push_back(std::move(seq.xpath));
  }
  synthesize(gateway, ids::kCotSynthesis, query, candidates, sample, w);
  finish(w, options, started);
  return w;
}

Wrapper reflexion_wrapper(model::Gateway& gateway, const pipeline::ExtractionQuery& query,
                          const std::vector<SimplifiedPage>& pages, const BaselineOptions& options) {
  const auto started = options.clock.start();
  Wrapper w = start_wrapper(query, pages, "reflexion", options);
  const auto sample = samples(pages, options.sample_pages);
  std::vector<FieldMap> candidates;
  for (const auto* page : sample) {
    ActionSequence current = top_down(gateway, ids::kReflexionTopDown, query, page->html(), w);
    json history = json::array();
    bool consistent = false;
    int round = 0;
    while (round < options.reflexion_budget) {
      ++round;
      history.push_back({{"round", round},
                         {"thought", current.thought},
                         {"expected", current.value},
                         {"xpath", current.xpath},
                         {"result", execute_sequence(page->document(), current.xpath)}});
      const auto r = gateway.call(ids::kReflexionSelfReflection,
                                  {{"0", query.text}, {"1", history.dump(2)}, {"2", page->html()}});
      const json& j = parsed_or_throw(r, "self-reflection");
      ActionSequence next = parse_action_sequence(j);
      consistent = says_yes(j, "consistent");
      for (const auto& f : next.dropped) {
        note(w, kReflection, TraceStatus::Failed, "KeyMismatch: value and xpath disagree on '" + f + "'", f);
      }
      // An empty xpath map keeps the previous round's xpaths.
      if (!next.xpath.empty()) current = std::move(next);
      if (consistent) break;
    }
    if (consistent) {
      note(w, kReflection, TraceStatus::Ok, page->url() + ": consistent after round " + std::to_string(round));
    } else {
      note(w, kReflection, TraceStatus::Failed,
           "BudgetExhausted: " + page->url() + " still inconsistent after " + std::to_string(round) + " rounds");
    }
    candidates.push_back(current.xpath);
  }
  synthesize(gateway, ids::kReflexionSynthesis, query, candidates, sample, w);
  finish(w, options, started);
  return w;
}

PruneResult prune(model::Gateway& gateway, const pipeline::ExtractionQuery& query, const SimplifiedPage& page,
                  const std::vector<std::string>& expected, std::size_t max_values) {
  PruneResult out;
  const html::Document& doc = page.document();
  const html::Node* root = doc.body() ? doc.body() : doc.document_element();
  if (!root) {
    out.dead_end = true;
    out.context = page.html();
    return out;
  }
  const std::string shown = step_back_values(expected, max_values);
  auto judge = [&](const html::Node& n) {
    ++out.judgements;
    const auto r = gateway.call(model::ids::kAutoScraperStepBack,
                                {{"0", query.text}, {"1", shown}, {"2", html::serialize(n)}});
    return says_yes(parsed_or_throw(r, "step-back"), "judgement");
  };
  if (!judge(*root)) {
    out.dead_end = true;
    out.context = page.html();
    return out;
  }
  const html::Node* current = root;
  out.path.push_back(html::absolute_xpath(*root));
  for (;;) {
    const html::Node* next = nullptr;
    for (const html::Node* child : current->element_children()) {
      if (judge(*child)) {
        next = child;
        break;
      }
    }
    if (!next) break;
    current = next;
    out.path.push_back(html::absolute_xpath(*current));
  }
  out.context = html::serialize(*current);
  return out;
}

Wrapper autoscraper_wrapper(model::Gateway& gateway, const pipeline::ExtractionQuery& query,
                            const std::vector<SimplifiedPage>& pages, const BaselineOptions& options) {
  const auto started = options.clock.start();
  Wrapper w = start_wrapper(query, pages, "autoscraper", options);
  const auto sample = samples(pages, options.sample_pages);
  std::vector<FieldMap> candidates;
  for (const auto* page : sample) {
    ActionSequence first = top_down(gateway, ids::kAutoScraperTopDown, query, page->html(), w);
    std::vector<std::string> expected;
    for (const auto& [field, values] : first.value) {
      for (const auto& v : values) expected.push_back(v);
    }
    if (expected.empty()) {
      note(w, kStepBack, TraceStatus::Ok, page->url() + ": no expected values, pruning skipped");
      candidates.push_back(std::move(first.xpath));
      continue;
    }
    const PruneResult pr = prune(gateway, query, *page, expected, options.max_step_back_values);
    if (pr.dead_end) {
      note(w, kStepBack, TraceStatus::Failed, "PruneDeadEnd: " + page->url() + " root judged no; using full HTML");
      candidates.push_back(std::move(first.xpath));
      continue;
    }
    note(w, kStepBack, TraceStatus::Ok, page->url() + ": pruned to " + pr.path.back());
    ActionSequence again = top_down(gateway, ids::kAutoScraperTopDown, query, pr.context, w);
    candidates.push_back(std::move(again.xpath));
  }
  synthesize(gateway, ids::kAutoScraperSynthesis, query, candidates, sample, w);
  finish(w, options, started);
  return w;
}

DirectResult direct_extract(model::Gateway& gateway, const pipeline::ExtractionQuery& query,
                            const SimplifiedPage& page, const pipeline::Clock& clock) {
  const auto started = clock.start();
  const auto r = gateway.call(ids::kLlmExtractor, {{"0", query.text}, {"1", page.html()}});
  DirectResult out;
  out.latency_ms = clock.elapsed_ms(started);
  const json& j = parsed_or_throw(r, "direct extraction");
  for (const auto& [k, v] : j.items()) {
    auto& list = out.values[k];
    for (auto& s : as_strings(v)) list.push_back(util::normalize_whitespace(s));
  }
  return out;
}

}  // namespace vgs::baselines
