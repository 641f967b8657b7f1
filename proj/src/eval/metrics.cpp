#include "vgs/eval/metrics.hpp"

#include <algorithm>
#include <cstdio>
#include <set>
#include <unordered_map>

#include "vgs/error.hpp"
#include "vgs/util/text.hpp"

namespace vgs::eval {

namespace {

std::string name_key(std::string_view s) { return util::to_lower(util::normalize_whitespace(s)); }

Metrics mean(const std::vector<Metrics>& ms) {
  Metrics out;
  if (ms.empty()) return out;
  for (const auto& m : ms) {
    out.precision += m.precision;
    out.recall += m.recall;
    out.f1 += m.f1;
  }
  const double n = static_cast<double>(ms.size());
  out.precision /= n;
  out.recall /= n;
  out.f1 /= n;
  return out;
}

nlohmann::ordered_json metrics_json(const Metrics& m) {
  nlohmann::ordered_json j;
  j["p"] = m.precision;
  j["r"] = m.recall;
  j["f1"] = m.f1;
  return j;
}

std::string pct(double v) {
  char buf[16];
  std::snprintf(buf, sizeof buf, "%6.2f", v * 100.0);
  return buf;
}

}  // namespace

double f1_score(double precision, double recall) noexcept {
  return precision + recall > 0 ? 2 * precision * recall / (precision + recall) : 0.0;
}

Metrics cell_metrics(const std::vector<std::string>& predicted, const std::vector<std::string>& gold) {
  if (predicted.empty() && gold.empty()) return {1, 1, 1};
  if (predicted.empty() || gold.empty()) return {0, 0, 0};
  std::unordered_map<std::string, long> remaining;
  for (const auto& g : gold) ++remaining[normalize_value(g)];
  std::size_t hits = 0;
  for (const auto& p : predicted) {
    auto it = remaining.find(normalize_value(p));
    if (it != remaining.end() && it->second > 0) {
      --it->second;
      ++hits;
    }
  }
  Metrics m;
  m.precision = static_cast<double>(hits) / static_cast<double>(predicted.size());
  m.recall = static_cast<double>(hits) / static_cast<double>(gold.size());
  m.f1 = f1_score(m.precision, m.recall);
  return m;
}

Judge model_judge(model::Gateway& gateway) {
  return [&gateway](const std::string& predicted, const std::string& gold) {
    model::ModelResponse r;
    try {
      r = gateway.call(model::ids::kAlignmentJudge, {{"0", predicted}, {"1", gold}});
    } catch (const Error& e) {
      throw Error(ErrorCode::JudgeUnavailable, e.what());
    }
    if (!r.parsed || !r.parsed->contains("match")) return false;
    const auto& v = (*r.parsed)["match"];
    if (v.is_boolean()) return v.get<bool>();
    return v.is_string() && util::to_lower(util::trim(v.get<std::string>())) == "yes";
  };
}

const std::string* Alignment::predicted_for(const std::string& gold) const {
  for (const auto& [p, g] : pairs) {
    if (g == gold) return &p;
  }
  return nullptr;
}

Alignment align_attributes(const std::vector<std::string>& predicted, const std::vector<std::string>& gold,
                           const Judge* judge) {
  Alignment out;
  std::vector<bool> pred_used(predicted.size(), false);
  std::vector<bool> gold_used(gold.size(), false);
  std::vector<std::pair<std::size_t, std::size_t>> matched;
  for (std::size_t g = 0; g < gold.size(); ++g) {
    for (std::size_t p = 0; p < predicted.size(); ++p) {
      if (!pred_used[p] && name_key(predicted[p]) == name_key(gold[g])) {
        pred_used[p] = gold_used[g] = true;
        matched.emplace_back(p, g);
        break;
      }
    }
  }
  if (judge && *judge) {
    for (std::size_t g = 0; g < gold.size() && !out.judge_unavailable; ++g) {
      if (gold_used[g]) continue;
      for (std::size_t p = 0; p < predicted.size(); ++p) {
        if (pred_used[p]) continue;
        bool yes = false;
        try {
          ++out.judge_calls;
          yes = (*judge)(predicted[p], gold[g]);
        } catch (const Error& e) {
          if (e.code() != ErrorCode::JudgeUnavailable) throw;
          out.judge_unavailable = true;
          break;
        }
        if (yes) {
          pred_used[p] = gold_used[g] = true;
          matched.emplace_back(p, g);
          break;
        }
      }
    }
  }
  std::sort(matched.begin(), matched.end(), [](const auto& a, const auto& b) { return a.second < b.second; });
  for (const auto& [p, g] : matched) out.pairs.emplace_back(predicted[p], gold[g]);
  for (std::size_t p = 0; p < predicted.size(); ++p) {
    if (!pred_used[p]) out.unaligned_predicted.push_back(predicted[p]);
  }
  for (std::size_t g = 0; g < gold.size(); ++g) {
    if (!gold_used[g]) out.unaligned_gold.push_back(gold[g]);
  }
  return out;
}

SampleScore score(const ExtractionResult& result, const Sample& sample, const Alignment& alignment) {
  SampleScore out;
  out.sample_id = sample.id;
  out.task_type = sample.task_type;
  out.alignment = alignment;
  static const std::vector<std::string> kNone;
  auto predicted_values = [&](const std::string& attribute, std::size_t u) -> const std::vector<std::string>& {
    if (u >= result.pages.size()) return kNone;
    const auto& values = result.pages[u].values;
    auto it = values.find(attribute);
    return it == values.end() ? kNone : it->second;
  };
  for (const auto& g : sample.gold) {
    const std::string* pred = alignment.predicted_for(g.name);
    for (std::size_t u = 0; u < sample.urls.size(); ++u) {
      Cell c;
      c.attribute = g.name;
      c.url_index = u;
      c.metrics = pred ? cell_metrics(predicted_values(*pred, u), g.values_per_url[u]) : Metrics{};
      out.cells.push_back(c);
    }
  }
  for (const auto& extra : alignment.unaligned_predicted) {
    for (std::size_t u = 0; u < sample.urls.size(); ++u) {
      if (predicted_values(extra, u).empty()) continue;
      Cell c;
      c.attribute = extra;
      c.url_index = u;
      c.extra = true;
      out.cells.push_back(c);
    }
  }
  double p = 0, r = 0, f = 0;
  std::size_t all = 0, gold_cells = 0;
  for (const auto& c : out.cells) {
    p += c.metrics.precision;
    f += c.metrics.f1;
    ++all;
    if (!c.extra) {
      r += c.metrics.recall;
      ++gold_cells;
    }
  }
  if (all) {
    out.metrics.precision = p / static_cast<double>(all);
    out.metrics.f1 = f / static_cast<double>(all);
  }
  if (gold_cells) out.metrics.recall = r / static_cast<double>(gold_cells);
  return out;
}

EvalReport report(const std::vector<Sample>& samples, const std::vector<SampleScore>& scores) {
  if (scores.empty()) throw Error(ErrorCode::EmptyInput, "no scored samples");
  EvalReport out;
  out.samples = scores;
  std::map<std::string, std::vector<Metrics>> by_type;
  std::map<std::string, std::vector<Metrics>> by_category;
  std::vector<Metrics> all;
  for (const auto& s : scores) {
    all.push_back(s.metrics);
    by_type[std::string(to_string(s.task_type))].push_back(s.metrics);
    out.judge_unavailable = out.judge_unavailable || s.alignment.judge_unavailable;
    const Sample* sample = nullptr;
    for (const auto& candidate : samples) {
      if (candidate.id == s.sample_id) sample = &candidate;
    }
    if (!sample) throw Error(ErrorCode::EmptyInput, "score for unknown sample '" + s.sample_id + "'");
    for (const auto& g : sample->gold) {
      std::vector<Metrics> cells;
      for (const auto& c : s.cells) {
        if (!c.extra && c.attribute == g.name) cells.push_back(c.metrics);
      }
      by_category[std::string(pipeline::to_string(g.category))].push_back(mean(cells));
    }
  }
  out.overall = {mean(all), all.size()};
  for (const auto& [k, v] : by_type) out.by_type[k] = {mean(v), v.size()};
  for (const auto& [k, v] : by_category) out.by_category[k] = {mean(v), v.size()};
  return out;
}

nlohmann::ordered_json to_json(const EvalReport& r) {
  nlohmann::ordered_json j;
  j["overall"] = metrics_json(r.overall.metrics);
  j["overall"]["n"] = r.overall.count;
  j["by_type"] = nlohmann::ordered_json::object();
  for (const char* t : {"I", "II", "III", "IV"}) {
    auto it = r.by_type.find(t);
    if (it == r.by_type.end()) continue;
    j["by_type"][t] = metrics_json(it->second.metrics);
    j["by_type"][t]["n"] = it->second.count;
  }
  j["by_category"] = nlohmann::ordered_json::object();
  for (const auto& [k, v] : r.by_category) {
    j["by_category"][k] = {{"f1", v.metrics.f1}, {"n", v.count}};
  }
  j["judge_unavailable"] = r.judge_unavailable;
  j["samples"] = nlohmann::ordered_json::array();
  for (const auto& s : r.samples) {
    nlohmann::ordered_json sj;
    sj["id"] = s.sample_id;
    sj["task_type"] = to_string(s.task_type);
    sj["metrics"] = metrics_json(s.metrics);
    nlohmann::ordered_json al;
    al["pairs"] = nlohmann::ordered_json::array();
    for (const auto& [p, g] : s.alignment.pairs) al["pairs"].push_back({{"predicted", p}, {"gold", g}});
    al["unaligned_predicted"] = s.alignment.unaligned_predicted;
    al["unaligned_gold"] = s.alignment.unaligned_gold;
    al["judge_calls"] = s.alignment.judge_calls;
    sj["alignment"] = al;
    j["samples"].push_back(std::move(sj));
  }
  return j;
}

std::string format_table(const EvalReport& r) {
  std::string out = "stratum      n       P       R      F1\n";
  auto row = [&](const std::string& name, const Stratum& s) {
    char buf[96];
    std::snprintf(buf, sizeof buf, "%-10s %3zu  %s  %s  %s\n", name.c_str(), s.count, pct(s.metrics.precision).c_str(),
                  pct(s.metrics.recall).c_str(), pct(s.metrics.f1).c_str());
    out += buf;
  };
  for (const char* t : {"I", "II", "III", "IV"}) {
    auto it = r.by_type.find(t);
    if (it != r.by_type.end()) row(std::string("Type ") + t, it->second);
  }
  row("Overall", r.overall);
  out += "\ncategory     n      F1\n";
  for (const auto& [k, v] : r.by_category) {
    char buf[64];
    std::snprintf(buf, sizeof buf, "%-10s %3zu  %s\n", k.c_str(), v.count, pct(v.metrics.f1).c_str());
    out += buf;
  }
  if (r.judge_unavailable) out += "\nnote: alignment judge unavailable; exact name matching only\n";
  return out;
}

}  // namespace vgs::eval
