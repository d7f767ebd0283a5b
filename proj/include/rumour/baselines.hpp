#pragma once

// Veracity baselines: the training-majority class, and a pipeline linear
// classifier over a bag of words of the source post plus URL / hashtag flags
// and the support / deny / query proportions among the replies.

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <unordered_map>
#include <vector>

#include "rumour/corpus.hpp"
#include "rumour/prediction.hpp"

namespace rumour {

// ---------------------------------------------------------------------------
// Majority class

/// Most frequent training veracity label; ties go to the alphabetically first.
Veracity majority_fit(const Corpus& train);
std::vector<ThreadPrediction> majority_predict(Veracity label, const Corpus& test);

// ---------------------------------------------------------------------------
// Bag of words + thread features

class BowVocabulary {
 public:
  /// Counts preprocessed source-post tokens and keeps the `max_size` most
  /// frequent (ties broken alphabetically). Indices follow that ranking.
  static BowVocabulary build(const Corpus& train, std::size_t max_size = 5000);

  std::size_t size() const { return tokens_.size(); }
  std::optional<std::size_t> index(const std::string& token) const;
  const std::vector<std::string>& tokens() const { return tokens_; }

 private:
  std::vector<std::string> tokens_;
  std::unordered_map<std::string, std::size_t> index_;
};

/// Stance of each post, aligned with Thread::posts.
using StanceAssignment = std::vector<std::optional<Stance>>;
StanceAssignment gold_stances(const Thread& thread);

struct NileFeatureVector {
  std::vector<double> bow;
  bool has_url = false;
  bool has_hashtag = false;
  double support = 0.0;
  double deny = 0.0;
  double query = 0.0;

  /// bow counts, then has_url, has_hashtag, support, deny, query.
  std::vector<double> flatten() const;
};

/// Proportions run over replies with a known stance; none gives (0, 0, 0).
NileFeatureVector extract_nile_features(const Thread& thread, const BowVocabulary& vocab,
                                        const StanceAssignment& stances);

// ---------------------------------------------------------------------------
// One-vs-rest linear SVM

struct LinearModel {
  std::size_t num_classes = 0;
  std::size_t num_features = 0;
  std::vector<std::vector<double>> weights;  // per class
  std::vector<double> bias;                  // per class
  double lambda = 0.0;

  std::vector<double> margins(std::span<const double> x) const;
};

struct SvmOptions {
  double lambda = 1e-3;
  int epochs = 50;
};

/// Hinge loss + (lambda/2)||w||^2 per class, minimised by stochastic
/// subgradient descent with step 1/(lambda t) over a seeded example order.
/// The returned weights average the iterates of the final epoch.
LinearModel svm_fit(std::span<const std::vector<double>> features, std::span<const std::size_t> labels,
                    std::size_t num_classes, const SvmOptions& options, std::uint64_t seed);

/// Class with the largest margin; ties go to the lower class index.
std::size_t svm_predict(const LinearModel& model, std::span<const double> x);

/// Builds the vocabulary on `train`, fits the SVM on its veracity-labelled
/// threads and predicts every thread of `test`. Stance proportions come from
/// the supplied assignments (gold or predicted), keyed by thread position.
std::vector<ThreadPrediction> nile_fit_predict(const Corpus& train, std::span<const StanceAssignment> train_stances,
                                               const Corpus& test, std::span<const StanceAssignment> test_stances,
                                               const SvmOptions& options, std::uint64_t seed);

}  // namespace rumour
