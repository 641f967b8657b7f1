#pragma once

#include <functional>
#include <map>
#include <string>
#include <utility>
#include <vector>

#include <json.hpp>

#include "vgs/eval/dataset.hpp"
#include "vgs/eval/extraction.hpp"
#include "vgs/model/gateway.hpp"

namespace vgs::eval {

struct Metrics {
  double precision = 0;
  double recall = 0;
  double f1 = 0;
};

// 2PR/(P+R), or 0 when P+R is 0.
double f1_score(double precision, double recall) noexcept;

// Multiset overlap of normalized values. Both empty scores 1/1; exactly one
// empty scores 0/0.
Metrics cell_metrics(const std::vector<std::string>& predicted, const std::vector<std::string>& gold);

// Yes/no: do the two attribute names mean the same thing? Throws
// Error{JudgeUnavailable} when no verdict can be had.
using Judge = std::function<bool(const std::string& predicted, const std::string& gold)>;

// Judge backed by the alignment prompt.
Judge model_judge(model::Gateway& gateway);

struct Alignment {
  std::vector<std::pair<std::string, std::string>> pairs;  // predicted -> gold
  std::vector<std::string> unaligned_predicted;
  std::vector<std::string> unaligned_gold;
  std::size_t judge_calls = 0;
  bool judge_unavailable = false;

  const std::string* predicted_for(const std::string& gold) const;
};

// Case-insensitive exact matches first, then the judge over the remaining
// pairs (gold order, then predicted order; first yes wins). Injective.
Alignment align_attributes(const std::vector<std::string>& predicted, const std::vector<std::string>& gold,
                           const Judge* judge = nullptr);

struct Cell {
  std::string attribute;  // gold name, or the predicted name for extras
  std::size_t url_index = 0;
  Metrics metrics;
  bool extra = false;  // unaligned prediction; counts toward precision only
};

struct SampleScore {
  std::string sample_id;
  TaskType task_type = TaskType::I;
  Metrics metrics;
  std::vector<Cell> cells;
  Alignment alignment;
};

// Mean over gold attribute x url cells. Unaligned predicted attributes add
// a zero-precision cell for every url where they produced values.
SampleScore score(const ExtractionResult& result, const Sample& sample, const Alignment& alignment);

struct Stratum {
  Metrics metrics;
  std::size_t count = 0;
};

struct EvalReport {
  Stratum overall;
  std::map<std::string, Stratum> by_type;      // present types only
  std::map<std::string, Stratum> by_category;  // mean per-attribute F1
  std::vector<SampleScore> samples;
  bool judge_unavailable = false;
};

// Macro averages over samples in each stratum. Throws Error{EmptyInput}.
EvalReport report(const std::vector<Sample>& samples, const std::vector<SampleScore>& scores);

nlohmann::ordered_json to_json(const EvalReport& r);
std::string format_table(const EvalReport& r);

}  // namespace vgs::eval
