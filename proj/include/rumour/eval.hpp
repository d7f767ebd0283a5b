#pragma once

#include <cstdint>
#include <functional>
#include <span>
#include <string>
#include <vector>

#include "rumour/corpus.hpp"
#include "rumour/labels.hpp"
#include "rumour/prediction.hpp"

namespace rumour {

/// Gold rows, predicted columns, over a fixed class set.
class ConfusionMatrix {
 public:
  explicit ConfusionMatrix(std::size_t num_classes) : k_(num_classes), counts_(num_classes * num_classes, 0) {}
  static ConfusionMatrix from(std::span<const std::size_t> preds, std::span<const std::size_t> gold,
                              std::size_t num_classes);

  void add(std::size_t gold, std::size_t pred);
  void merge(const ConfusionMatrix& other);
  std::size_t at(std::size_t gold, std::size_t pred) const { return counts_[gold * k_ + pred]; }
  std::size_t num_classes() const { return k_; }
  std::size_t total() const;
  std::size_t trace() const;

  bool operator==(const ConfusionMatrix&) const = default;

 private:
  std::size_t k_;
  std::vector<std::size_t> counts_;
};

struct Metrics {
  std::size_t count = 0;
  double accuracy = 0.0;
  std::vector<double> f1;  // per class of the fixed set
  double macro_f = 0.0;    // unweighted mean of f1; absent classes count as 0

  bool operator==(const Metrics&) const = default;
};

/// Precision, recall and F1 use 0 for any 0/0.
Metrics metrics_from_confusion(const ConfusionMatrix& cm);
Metrics compute_metrics(std::span<const std::size_t> preds, std::span<const std::size_t> gold,
                        std::size_t num_classes);

struct FoldResult {
  std::string event;
  std::vector<std::string> threads;   // evaluated (gold-labelled) threads
  std::vector<std::size_t> gold;
  std::vector<std::size_t> preds;
  Metrics metrics;
  std::vector<ThreadPrediction> predictions;  // every held-out thread
};

struct LoeoResult {
  Task task = Task::Veracity;
  std::vector<FoldResult> folds;
  Metrics pooled;
};

/// Trains on `train`, returns one prediction per thread of `test`.
using FoldPredictor =
    std::function<std::vector<ThreadPrediction>(const Corpus& train, const Corpus& test, std::uint64_t seed)>;

/// Scores predictions for one task against the gold labels of `test`.
/// Threads without a gold label for the task are skipped.
FoldResult score_fold(const Corpus& test, std::vector<ThreadPrediction> predictions, Task task, std::string event);

/// Micro-average: metrics of the concatenated fold predictions.
Metrics pool_folds(std::span<const FoldResult> folds, Task task);

/// One fold per event (in `corpus.events` order). Each fold's seed is derived
/// from `seed` and the event name. Folds run on up to `jobs` threads.
LoeoResult loeo_evaluate(const Corpus& corpus, const FoldPredictor& predictor, std::uint64_t seed,
                         Task task = Task::Veracity, int jobs = 1);

/// Per-post stance metrics over posts that have both a gold label and a
/// predicted label. Predictions are matched to threads by id.
Metrics stance_metrics(const Corpus& test, std::span<const ThreadPrediction> predictions);

/// "Charlie Hebdo" (matched case- and punctuation-insensitively) when present,
/// otherwise the event with the most threads (ties: alphabetical).
std::string development_event(const Corpus& corpus);

// ---------------------------------------------------------------------------
// Reports

struct Table {
  std::string title;
  std::vector<std::string> header;
  std::vector<std::vector<std::string>> rows;
};

struct Report {
  std::vector<Table> tables;

  bool empty() const { return tables.empty(); }
  std::string render_csv() const;
  std::string render_text() const;
};

struct ModelResult {
  std::string model;
  LoeoResult result;
};

/// Model comparison (macro-F, accuracy), per-event macro-F (models x events)
/// and, per model, a per-event breakdown with per-class F1.
Report emit_report(std::span<const ModelResult> results);

/// Fixed three-decimal rendering used in every report cell.
std::string format_score(double v);

}  // namespace rumour
