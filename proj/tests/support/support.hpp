#pragma once

#include <deque>
#include <filesystem>
#include <memory>
#include <mutex>
#include <random>
#include <set>
#include <string>
#include <vector>

#include "vgs/model/gateway.hpp"

namespace vgs::test {

std::string fixture_path(std::string_view rel);
std::string fixture_url(std::string_view rel);
std::string read_fixture(std::string_view rel);

// The simplify corpus plus the book pages.
std::vector<std::string> corpus_paths();

// Replays scripted replies in order and keeps every request it saw.
class RecordingBackend final : public model::Backend {
 public:
  explicit RecordingBackend(std::vector<model::TranscriptEntry> entries);
  std::string complete(const model::ModelRequest& request) override;
  std::string name() const override { return "recording"; }
  std::vector<model::ModelRequest> requests_for(std::string_view instruction_id) const;
  const std::vector<model::ModelRequest>& requests() const { return requests_; }
  std::size_t remaining() const { return replay_.remaining(); }

 private:
  model::MockBackend replay_;
  std::vector<model::ModelRequest> requests_;
};

struct Scripted {
  std::shared_ptr<RecordingBackend> backend;
  std::unique_ptr<model::Gateway> gateway;
};

// Gateway over a RecordingBackend; retries never sleep.
Scripted scripted(std::vector<model::TranscriptEntry> entries);

class TempDir {
 public:
  TempDir();
  ~TempDir();
  TempDir(const TempDir&) = delete;
  TempDir& operator=(const TempDir&) = delete;
  const std::filesystem::path& path() const { return path_; }
  std::string operator/(std::string_view name) const { return (path_ / name).string(); }

 private:
  std::filesystem::path path_;
};

// Random element tree. Node 0 is <html>, 1 <head>, 2 <body>; every element
// carries data-id="<index>".
struct RandomTree {
  std::vector<int> parent;
  std::vector<std::vector<int>> children;
  std::vector<std::string> tags;
  std::string markup;
};

RandomTree random_tree(std::mt19937& rng, int body_nodes);

// Breadth-first search over parent, child and adjacent-sibling edges.
std::set<int> bfs_within(const RandomTree& tree, int anchor, int d);

// Largest number of equal pairs over all matchings between the two lists,
// found by exhaustive search.
std::size_t brute_force_overlap(const std::vector<std::string>& a, const std::vector<std::string>& b);

// Whitespace collapse written independently of the library.
std::string collapse_spaces(const std::string& s);

// The value bound to placeholder `index` in a prompt rendered from
// `template_id`, recovered by matching the template's surrounding text.
std::string bound_value(std::string_view template_id, int index, const std::string& rendered);

}  // namespace vgs::test
