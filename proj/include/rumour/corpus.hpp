#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "rumour/common.hpp"
#include "rumour/labels.hpp"

namespace rumour {

/// Malformed corpus input. Carries the offending file and post id when known.
class CorpusError : public ValidationError {
 public:
  CorpusError(std::string file, std::string post_id, const std::string& message);

  const std::string& file() const { return file_; }
  const std::string& post_id() const { return post_id_; }

 private:
  std::string file_;
  std::string post_id_;
};

struct Post {
  std::string id;
  std::string text;
  std::optional<std::string> parent;
  std::optional<Stance> stance;
  // Derived from the raw text at ingest, before preprocessing strips it.
  bool has_url = false;
  bool has_hashtag = false;

  bool operator==(const Post&) const = default;
};

/// Builds a post and fills has_url / has_hashtag from the raw text.
Post make_post(std::string id, std::string text, std::optional<std::string> parent,
               std::optional<Stance> stance = std::nullopt);

/// A source post and its reply tree. posts[0] is always the source; the
/// remaining entries are replies, each with a parent inside the thread.
struct Thread {
  std::vector<Post> posts;
  std::string event;
  std::optional<Detection> detection;
  std::optional<Veracity> veracity;

  const Post& source() const { return posts.front(); }
  std::span<const Post> replies() const { return std::span<const Post>(posts).subspan(1); }
  /// Threads are identified by their source post id.
  const std::string& id() const { return posts.front().id; }
  /// Position of a post id in `posts`, if present.
  std::optional<std::size_t> index_of(std::string_view post_id) const;

  bool operator==(const Thread&) const = default;
};

/// Checks the thread invariants. Throws CorpusError naming `origin`.
void validate_thread(const Thread& thread, const std::string& origin = "<memory>");

/// One root-to-leaf path. Entries index Thread::posts, source first, leaf last.
struct Branch {
  std::vector<std::size_t> posts;

  bool operator==(const Branch&) const = default;
};

struct Corpus {
  std::vector<Thread> threads;
  std::vector<std::string> events;  // sorted, distinct

  /// Builds a corpus and derives the event set from the threads.
  static Corpus from_threads(std::vector<Thread> threads);

  std::size_t num_posts() const;
  bool operator==(const Corpus&) const = default;
};

/// Loads a directory of *.json files (one thread object each, read in
/// filename order) or a single newline-delimited JSON file.
Corpus load_corpus(const std::filesystem::path& path);

/// Writes newline-delimited JSON, one thread per line.
void save_corpus(const Corpus& corpus, const std::filesystem::path& file);
/// Writes one <index>.json file per thread into `dir` (created if missing).
void save_corpus_dir(const Corpus& corpus, const std::filesystem::path& dir);

/// One branch per leaf, ordered by leaf post id ascending.
std::vector<Branch> decompose_branches(const Thread& thread);
std::vector<std::string> branch_ids(const Thread& thread, const Branch& branch);

/// Partitions the corpus into (train, test) with `held_out` as the test event.
std::pair<Corpus, Corpus> split_loeo(const Corpus& corpus, const std::string& held_out);

/// Keeps only the threads whose event is in `events`.
Corpus select_events(const Corpus& corpus, std::span<const std::string> events);

struct SynthSpec {
  int events = 5;
  int threads_per_event = 40;
  int min_branches = 1;
  int max_branches = 4;
  /// Replies on a root-to-leaf path.
  int min_depth = 1;
  int max_depth = 4;
  int tokens_per_post = 6;
  int pool_size = 12;
  /// Probability that a thread is a rumour (otherwise non-rumour, no veracity).
  double rumour_prior = 1.0;
  /// Veracity priors in class order (false, true, unverified).
  std::array<double, 3> veracity_priors{1.0, 1.0, 1.0};
  /// Probability that a reply stance is drawn from the veracity-conditioned
  /// distribution instead of the shared base distribution.
  double coupling = 1.0;
  /// Probability that a source post carries a token from its class pool.
  double source_signal = 1.0;

  void validate() const;
};

/// Deterministic synthetic corpus for a given (spec, seed).
Corpus generate_synthetic(const SynthSpec& spec, std::uint64_t seed);

}  // namespace rumour
