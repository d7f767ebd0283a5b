#pragma once

// Label-distribution diagnostics per event and task: entropy, excess kurtosis
// and token-type ratio.

#include <array>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "rumour/corpus.hpp"
#include "rumour/labels.hpp"

namespace rumour {

struct LabelDistribution {
  Task task = Task::Veracity;
  std::string event;
  std::vector<std::size_t> counts;  // indexed by class, alphabetical order

  std::size_t total() const;
};

/// Label counts of `task` over the threads (or, for stance, posts) of `event`.
/// An empty event name means the whole corpus.
LabelDistribution label_distribution(const Corpus& corpus, Task task, const std::string& event = {});

/// Shannon entropy in nats of the relative frequencies.
double entropy(std::span<const std::size_t> counts);

/// Excess kurtosis m4/m2^2 - 3 of the class index 0..K-1 under the relative
/// frequencies, with population moments. Absent when only one class occurs.
std::optional<double> kurtosis(std::span<const std::size_t> counts);

/// Distinct tokens over total tokens.
double ttr(std::span<const std::vector<std::string>> texts);

struct DatasetStats {
  std::size_t total = 0;
  double entropy = 0.0;
  std::optional<double> kurtosis;  // absent for single-class distributions
  double ttr = 0.0;
};

struct EventAnalysis {
  std::string event;
  std::array<std::optional<DatasetStats>, 3> tasks;  // indexed by Task; absent without labels
};

/// One row per event (sorted). TTR covers every post of the threads that
/// carry a label for the task.
std::vector<EventAnalysis> analyze_corpus(const Corpus& corpus);

/// Columns: event, kurtosis S/V/D, entropy S/V/D, TTR S/V/D. Missing cells
/// are "-", single-class kurtosis is written "degenerate(-3)".
std::string analysis_csv(std::span<const EventAnalysis> rows);

}  // namespace rumour
