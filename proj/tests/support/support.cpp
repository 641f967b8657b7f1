#include "support.hpp"

#include <algorithm>
#include <atomic>
#include <functional>
#include <sstream>

#include "vgs/model/templates.hpp"
#include "vgs/util/text.hpp"
#include "vgs/util/url.hpp"

namespace vgs::test {

namespace fs = std::filesystem;

std::string fixture_path(std::string_view rel) { return (fs::path(VGS_FIXTURE_DIR) / rel).string(); }

std::string fixture_url(std::string_view rel) { return util::path_to_file_url(fixture_path(rel)); }

std::string read_fixture(std::string_view rel) { return util::read_file(fixture_path(rel)); }

std::vector<std::string> corpus_paths() {
  std::vector<std::string> out;
  for (const auto& e : fs::directory_iterator(fixture_path("corpus"))) out.push_back(e.path().string());
  for (const auto& e : fs::directory_iterator(fixture_path("books"))) {
    if (e.path().extension() == ".html") out.push_back(e.path().string());
  }
  std::sort(out.begin(), out.end());
  return out;
}

RecordingBackend::RecordingBackend(std::vector<model::TranscriptEntry> entries) : replay_(std::move(entries)) {}

std::string RecordingBackend::complete(const model::ModelRequest& request) {
  requests_.push_back(request);
  return replay_.complete(request);
}

std::vector<model::ModelRequest> RecordingBackend::requests_for(std::string_view instruction_id) const {
  std::vector<model::ModelRequest> out;
  for (const auto& r : requests_) {
    if (r.instruction_id == instruction_id) out.push_back(r);
  }
  return out;
}

Scripted scripted(std::vector<model::TranscriptEntry> entries) {
  Scripted s;
  s.backend = std::make_shared<RecordingBackend>(std::move(entries));
  s.gateway = std::make_unique<model::Gateway>(s.backend, model::RetryPolicy{}, 0, [](std::chrono::milliseconds) {});
  return s;
}

TempDir::TempDir() {
  static std::atomic<int> counter{0};
  std::random_device rd;
  path_ = fs::temp_directory_path() /
          ("vgs-test-" + std::to_string(rd()) + "-" + std::to_string(counter.fetch_add(1)));
  fs::create_directories(path_);
}

TempDir::~TempDir() {
  std::error_code ec;
  fs::remove_all(path_, ec);
}

RandomTree random_tree(std::mt19937& rng, int body_nodes) {
  static const std::vector<std::string> kTags = {"div", "section", "article", "aside", "nav", "span", "main"};
  RandomTree t;
  t.parent = {-1, 0, 0};
  t.tags = {"html", "head", "body"};
  t.children = {{1, 2}, {}, {}};
  for (int i = 0; i < body_nodes; ++i) {
    const int id = static_cast<int>(t.parent.size());
    // Parent among body and earlier body nodes; favour recent nodes so
    // trees get some depth.
    std::uniform_int_distribution<int> pick(2, id - 1);
    int p = pick(rng);
    if (rng() % 3 == 0) p = std::max(2, id - 1 - static_cast<int>(rng() % 3));
    t.parent.push_back(p);
    t.tags.push_back(kTags[rng() % kTags.size()]);
    t.children.emplace_back();
    t.children[static_cast<std::size_t>(p)].push_back(id);
  }
  std::function<void(int)> emit = [&](int n) {
    const auto& tag = t.tags[static_cast<std::size_t>(n)];
    t.markup += "<" + tag + " data-id=\"" + std::to_string(n) + "\">";
    if (n > 2 && rng() % 2 == 0) t.markup += "t" + std::to_string(n);
    for (int c : t.children[static_cast<std::size_t>(n)]) emit(c);
    t.markup += "</" + tag + ">";
  };
  emit(0);
  return t;
}

std::set<int> bfs_within(const RandomTree& tree, int anchor, int d) {
  auto neighbours = [&](int n) {
    std::vector<int> out;
    const int p = tree.parent[static_cast<std::size_t>(n)];
    if (p >= 0) {
      out.push_back(p);
      const auto& sib = tree.children[static_cast<std::size_t>(p)];
      const auto it = std::find(sib.begin(), sib.end(), n);
      if (it != sib.begin()) out.push_back(*(it - 1));
      if (it + 1 != sib.end()) out.push_back(*(it + 1));
    }
    for (int c : tree.children[static_cast<std::size_t>(n)]) out.push_back(c);
    return out;
  };
  std::set<int> seen = {anchor};
  std::deque<std::pair<int, int>> queue = {{anchor, 0}};
  while (!queue.empty()) {
    const auto [n, dist] = queue.front();
    queue.pop_front();
    if (dist == d) continue;
    for (int m : neighbours(n)) {
      if (seen.insert(m).second) queue.emplace_back(m, dist + 1);
    }
  }
  return seen;
}

std::size_t brute_force_overlap(const std::vector<std::string>& a, const std::vector<std::string>& b) {
  std::vector<bool> used(b.size(), false);
  std::function<std::size_t(std::size_t)> go = [&](std::size_t i) -> std::size_t {
    if (i == a.size()) return 0;
    std::size_t best = go(i + 1);
    for (std::size_t j = 0; j < b.size(); ++j) {
      if (used[j] || a[i] != b[j]) continue;
      used[j] = true;
      best = std::max(best, 1 + go(i + 1));
      used[j] = false;
    }
    return best;
  };
  return go(0);
}

std::string collapse_spaces(const std::string& s) {
  std::istringstream in(s);
  std::string word, out;
  while (in >> word) out += (out.empty() ? "" : " ") + word;
  return out;
}

std::string bound_value(std::string_view template_id, int index, const std::string& rendered) {
  const std::string text(model::template_info(template_id).text);
  const std::string mark = "{" + std::to_string(index) + "}";
  const auto at = text.find(mark);
  if (at == std::string::npos) return {};
  // Literal text on either side, up to the neighbouring placeholders.
  const auto prev = text.rfind('}', at == 0 ? 0 : at - 1);
  const std::string before = text.substr(prev == std::string::npos ? 0 : prev + 1, at - (prev == std::string::npos ? 0 : prev + 1));
  const auto after_start = at + mark.size();
  const auto next = text.find('{', after_start);
  const std::string after = text.substr(after_start, next == std::string::npos ? std::string::npos : next - after_start);
  const auto b = rendered.find(before);
  if (b == std::string::npos) return {};
  const auto start = b + before.size();
  const auto e = after.empty() ? rendered.size() : rendered.find(after, start);
  if (e == std::string::npos) return {};
  return rendered.substr(start, e - start);
}

}  // namespace vgs::test
