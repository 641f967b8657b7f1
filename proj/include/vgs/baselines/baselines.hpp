#pragma once

#include <map>
#include <string>
#include <vector>

#include "vgs/html/dom.hpp"
#include "vgs/html/tools.hpp"
#include "vgs/model/gateway.hpp"
#include "vgs/pipeline/types.hpp"

namespace vgs::baselines {

using FieldMap = std::map<std::string, std::vector<std::string>>;

// A page as the baselines see it. Only simplified markup is kept, so no
// baseline can reach the raw document.
class SimplifiedPage {
 public:
  SimplifiedPage(std::string url, std::string_view raw_html);

  const std::string& url() const noexcept { return url_; }
  const std::string& html() const noexcept { return simplified_.content; }
  const html::SimplifiedHtml& simplified() const noexcept { return simplified_; }
  const html::Document& document() const noexcept { return doc_; }

 private:
  std::string url_;
  html::SimplifiedHtml simplified_;
  html::Document doc_;
};

struct BaselineOptions {
  std::size_t sample_pages = 3;
  int reflexion_budget = 3;
  std::size_t max_step_back_values = 10;
  pipeline::Clock clock;
};

// {thought, value, xpath} from a top-down or reflection reply. Fields whose
// key is missing from either map are dropped and listed in `dropped`.
struct ActionSequence {
  std::string thought;
  FieldMap value;
  FieldMap xpath;
  std::vector<std::string> dropped;
};

ActionSequence parse_action_sequence(const nlohmann::json& reply);

// Runs every xpath of each field on `doc` and concatenates the results.
// Invalid expressions give no values.
FieldMap execute_sequence(const html::Document& doc, const FieldMap& xpaths);

// "Sequence i" blocks listing each candidate's xpaths and its results on
// every sample page, as bound into the synthesis prompts.
std::string describe_candidates(const std::vector<FieldMap>& candidates, const std::vector<const SimplifiedPage*>& pages);

// Reads the discriminator's "number" (string or integer). Anything not a
// valid index selects 0.
std::size_t chosen_index(const nlohmann::json& reply, std::size_t count);

// At most `limit` values, as a JSON list.
std::string step_back_values(const std::vector<std::string>& values, std::size_t limit = 10);

// Single-pass generation on each sample page, then one discriminator call.
pipeline::Wrapper cot_wrapper(model::Gateway& gateway, const pipeline::ExtractionQuery& query,
                              const std::vector<SimplifiedPage>& pages, const BaselineOptions& options = {});

// Generation, then execute-and-reflect rounds until the reflection reports
// consistency or the budget runs out; one discriminator call at the end.
pipeline::Wrapper reflexion_wrapper(model::Gateway& gateway, const pipeline::ExtractionQuery& query,
                                    const std::vector<SimplifiedPage>& pages, const BaselineOptions& options = {});

struct PruneResult {
  std::vector<std::string> path;  // absolute xpaths, root first; each a child of the previous
  std::string context;            // markup used for regeneration
  bool dead_end = false;          // root judged "no"
  std::size_t judgements = 0;
};

// Step-back descent from <body>: children are judged in document order and
// the first "yes" is entered.
PruneResult prune(model::Gateway& gateway, const pipeline::ExtractionQuery& query, const SimplifiedPage& page,
                  const std::vector<std::string>& expected, std::size_t max_values = 10);

// Generation, step-back pruning, regeneration on the pruned subtree, then
// one discriminator call.
pipeline::Wrapper autoscraper_wrapper(model::Gateway& gateway, const pipeline::ExtractionQuery& query,
                                      const std::vector<SimplifiedPage>& pages, const BaselineOptions& options = {});

struct DirectResult {
  FieldMap values;
  long long latency_ms = 0;
};

// One extractor call on one page. Throws Error{ModelParseFailure}.
DirectResult direct_extract(model::Gateway& gateway, const pipeline::ExtractionQuery& query,
                            const SimplifiedPage& page, const pipeline::Clock& clock = {});

}  // namespace vgs::baselines
