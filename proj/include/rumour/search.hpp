#pragma once

// Tree-of-Parzen-Estimators search over a small discrete hyperparameter grid.
//
// With every dimension categorical, the good/bad Parzen densities are
// smoothed per-dimension category frequencies.

#include <cstdint>
#include <filesystem>
#include <functional>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "json.hpp"

#include "rumour/common.hpp"
#include "rumour/labels.hpp"
#include "rumour/mtl.hpp"

namespace rumour {

struct Dimension {
  std::string name;
  std::vector<double> values;
  bool integral = true;
};

/// A configuration stores, per dimension, the index of the chosen value.
using Configuration = std::vector<std::size_t>;

class SearchSpace {
 public:
  SearchSpace() = default;
  explicit SearchSpace(std::vector<Dimension> dims);

  /// dense_layers {1..4}, lstm_layers {1,2}, dense_width {300,400,500,600},
  /// lstm_width {100,200,300}, l2 {1e-4,1e-3}.
  static SearchSpace paper();
  /// Same layer counts and l2 grid with small widths, for fast experiments.
  static SearchSpace miniature();
  static SearchSpace by_name(const std::string& name);

  const std::vector<Dimension>& dimensions() const { return dims_; }
  std::size_t size() const;  // number of configurations
  bool contains(const Configuration& c) const;
  double value(const Configuration& c, std::size_t dim) const;

  /// Enumerates configurations in mixed-radix order (last dimension fastest).
  Configuration at(std::size_t flat_index) const;
  std::size_t flat_index(const Configuration& c) const;

  /// Copies the searched fields of `c` over `base`.
  HyperParams apply(const Configuration& c, HyperParams base) const;
  nlohmann::ordered_json to_json(const Configuration& c) const;

 private:
  std::vector<Dimension> dims_;
};

struct TPEConfig {
  double gamma = 0.25;
  std::size_t n_startup = 10;
  std::size_t n_candidates = 24;
  double prior_weight = 1.0;

  void validate() const;
};

enum class ObjectiveKind { Product, Accuracy };
ObjectiveKind parse_objective_kind(const std::string& s);

/// Product over the given tasks of (1 - macroF). Values must lie in [0, 1].
double objective(const std::map<Task, double>& macro_f);

/// What one configuration scored on the development data.
struct Evaluation {
  std::map<Task, double> macro_f;
  std::optional<double> accuracy;
};

enum class TrialStatus { Ok, Failed };

struct Trial {
  std::size_t index = 0;
  Configuration config;
  std::uint64_t seed = 0;
  TrialStatus status = TrialStatus::Ok;
  double objective = 1.0;  // meaningful only when status == Ok
  Evaluation evaluation;
  std::string error;
};

/// Next configuration to try. Failed trials rank below every successful one.
/// Among the candidates drawn from the good density, configurations not yet
/// in the history take precedence.
Configuration tpe_suggest(const std::vector<Trial>& history, const SearchSpace& space, const TPEConfig& cfg, Rng& rng);

/// Smoothed category densities of one dimension for the good and bad sets.
struct DimensionDensities {
  std::vector<double> good;
  std::vector<double> bad;
};
/// Exposed for tests: the densities tpe_suggest would use for `history`.
std::vector<DimensionDensities> tpe_densities(const std::vector<Trial>& history, const SearchSpace& space,
                                              const TPEConfig& cfg);

using Evaluator = std::function<Evaluation(const Configuration& config, std::uint64_t seed)>;
/// Called after each trial is recorded, with the history so far.
using TrialCallback = std::function<void(const std::vector<Trial>& history)>;

struct SearchOptions {
  std::size_t n_trials = 30;
  TPEConfig tpe;
  ObjectiveKind kind = ObjectiveKind::Product;
  int jobs = 1;
};

struct SearchResult {
  std::vector<Trial> history;
  std::optional<std::size_t> best;  // argmin objective over Ok trials, earliest on ties
};

/// Suggest, evaluate, record. The startup trials do not depend on the history,
/// so they are drawn up front and evaluated on up to `jobs` threads; later
/// trials run one at a time. The history is therefore the same for any `jobs`.
SearchResult run_search(const SearchSpace& space, const Evaluator& evaluate, const SearchOptions& options,
                        std::uint64_t seed, const TrialCallback& on_trial = {});

nlohmann::ordered_json trial_to_json(const Trial& t, const SearchSpace& space);
std::string trial_log(const std::vector<Trial>& history, const SearchSpace& space);

}  // namespace rumour
