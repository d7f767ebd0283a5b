#pragma once

// Shared fixtures and random generators for the unit tests.

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <map>
#include <set>
#include <string>
#include <vector>

#include "rumour/common.hpp"
#include "rumour/corpus.hpp"
#include "rumour/search.hpp"

namespace testing {

using namespace rumour;

/// Fresh empty directory under the system temp dir.
inline std::filesystem::path scratch_dir(const std::string& name) {
  auto dir = std::filesystem::temp_directory_path() / ("rumour-tests-" + name);
  std::filesystem::remove_all(dir);
  std::filesystem::create_directories(dir);
  return dir;
}

/// Random tree with `n` posts. Post i > 0 attaches to a uniformly chosen
/// earlier post; ids are random so their order differs from the tree order.
inline Thread random_thread(Rng& rng, std::size_t n, const std::string& event = "ev") {
  std::vector<std::string> ids;
  std::set<std::string> used;
  while (ids.size() < n) {
    char buf[16];
    std::snprintf(buf, sizeof buf, "x%05zu", rng.index(100000));
    if (used.insert(buf).second) ids.push_back(buf);
  }
  Thread t;
  t.event = event;
  for (std::size_t i = 0; i < n; ++i) {
    std::optional<std::string> parent;
    if (i > 0) parent = ids[rng.index(i)];
    std::optional<Stance> stance;
    if (rng.bernoulli(0.8)) stance = static_cast<Stance>(rng.index(4));
    t.posts.push_back(make_post(ids[i], "post " + ids[i], parent, stance));
  }
  if (rng.bernoulli(0.8)) {
    t.detection = Detection::Rumour;
    if (rng.bernoulli(0.8)) t.veracity = static_cast<Veracity>(rng.index(3));
  } else if (rng.bernoulli(0.5)) {
    t.detection = Detection::NonRumour;
  }
  return t;
}

/// Source-only threads with the requested label counts, named by event.
struct EventCounts {
  std::string event;
  std::size_t non_rumours = 0;
  std::size_t true_ = 0;
  std::size_t false_ = 0;
  std::size_t unverified = 0;
};

inline Corpus counts_corpus(const std::vector<EventCounts>& spec) {
  std::vector<Thread> threads;
  for (const EventCounts& e : spec) {
    auto add = [&](std::optional<Detection> d, std::optional<Veracity> v, std::size_t count) {
      for (std::size_t i = 0; i < count; ++i) {
        Thread t;
        t.event = e.event;
        t.detection = d;
        t.veracity = v;
        t.posts.push_back(make_post(e.event + "-" + std::to_string(threads.size()), "source text", std::nullopt));
        threads.push_back(std::move(t));
      }
    };
    add(Detection::NonRumour, std::nullopt, e.non_rumours);
    add(Detection::Rumour, Veracity::True, e.true_);
    add(Detection::Rumour, Veracity::False, e.false_);
    add(Detection::Rumour, Veracity::Unverified, e.unverified);
  }
  return Corpus::from_threads(std::move(threads));
}

/// The nine events with their thread and label counts.
inline std::vector<EventCounts> pheme_counts() {
  // threads = non-rumours + rumours; rumours = true + false + unverified
  return {{"charliehebdo", 1621, 193, 116, 149},   {"sydneysiege", 699, 382, 86, 54},
          {"ferguson", 859, 10, 8, 266},           {"ottawashooting", 420, 329, 72, 69},
          {"germanwings-crash", 231, 94, 111, 33}, {"putinmissing", 112, 0, 9, 117},
          {"prince-toronto", 4, 0, 222, 7},        {"gurlitt", 77, 59, 0, 2},
          {"ebola-essien", 0, 0, 14, 0}};
}

/// Leaf-to-root path oracle built only from parent links.
inline std::vector<std::vector<std::string>> brute_force_paths(const Thread& t) {
  std::map<std::string, std::string> parent;
  std::set<std::string> has_child;
  for (const Post& p : t.posts) {
    if (p.parent) {
      parent[p.id] = *p.parent;
      has_child.insert(*p.parent);
    }
  }
  std::vector<std::string> leaves;
  for (const Post& p : t.posts) {
    if (!has_child.count(p.id)) leaves.push_back(p.id);
  }
  std::sort(leaves.begin(), leaves.end());
  std::vector<std::vector<std::string>> paths;
  for (const std::string& leaf : leaves) {
    std::vector<std::string> path{leaf};
    while (parent.count(path.back())) path.push_back(parent[path.back()]);
    std::reverse(path.begin(), path.end());
    paths.push_back(path);
  }
  return paths;
}

/// Deterministic objective with a single zero at `optimum`; every other
/// configuration scores 0.3 plus 0.7 times its mean normalised index distance.
inline double planted_objective(const SearchSpace& space, const Configuration& optimum, const Configuration& c) {
  if (c == optimum) return 0.0;
  double distance = 0.0;
  for (std::size_t d = 0; d < c.size(); ++d) {
    const auto k = static_cast<double>(space.dimensions()[d].values.size());
    distance += std::abs(static_cast<double>(c[d]) - static_cast<double>(optimum[d])) / (k - 1.0);
  }
  return 0.3 + 0.7 * distance / static_cast<double>(c.size());
}

/// Evaluator reporting the planted objective as a single veracity macro-F.
inline Evaluator planted_evaluator(const SearchSpace& space, const Configuration& optimum) {
  return [space, optimum](const Configuration& c, std::uint64_t) {
    Evaluation e;
    e.macro_f[Task::Veracity] = 1.0 - planted_objective(space, optimum, c);
    return e;
  };
}

}  // namespace testing
