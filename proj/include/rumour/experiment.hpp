#pragma once

// Run configuration and the model factories shared by the command-line tool,
// the acceptance suite and the tests.

#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "rumour/baselines.hpp"
#include "rumour/corpus.hpp"
#include "rumour/eval.hpp"
#include "rumour/mtl.hpp"
#include "rumour/search.hpp"
#include "rumour/text.hpp"

namespace rumour {

/// Flat "key = value" settings. Blank lines and lines starting with '#' are
/// ignored; keys may appear once.
class KeyValues {
 public:
  static KeyValues parse(const std::string& text, const std::string& origin = "<string>");
  static KeyValues load(const std::filesystem::path& path);

  /// Adds or replaces a value ("key=value" form for set_assignment).
  void set(const std::string& key, const std::string& value);
  void set_assignment(const std::string& assignment);

  bool has(const std::string& key) const { return values_.count(key) > 0; }
  std::optional<std::string> get(const std::string& key) const;
  const std::map<std::string, std::string>& values() const { return values_; }
  const std::string& origin() const { return origin_; }

  /// Throws ValidationError naming the first key not in `known`.
  void require_known(const std::vector<std::string>& known) const;

 private:
  std::string origin_ = "<string>";
  std::map<std::string, std::string> values_;
};

std::int64_t parse_int(const std::string& key, const std::string& value);
double parse_double(const std::string& key, const std::string& value);

struct RunConfig {
  std::filesystem::path corpus;
  std::optional<std::filesystem::path> embeddings;  // hash embeddings when absent
  std::size_t embedding_dim = 32;
  std::optional<std::uint64_t> embedding_seed;       // derived from seed when absent
  std::uint64_t seed = 0;
  TaskSet tasks{Task::Stance, Task::Detection, Task::Veracity};
  HyperParams hp;
  std::string test_event;  // holdout event for train / evaluate
  std::string dev_event;   // development event for search
  std::filesystem::path output = "out";
  ObjectiveKind objective = ObjectiveKind::Product;
  std::string space = "paper";
  TPEConfig tpe;
  SvmOptions svm;
  std::string nile_stance = "predicted";
  int checkpoint_every = 0;
  std::vector<std::string> models;
  std::size_t trials = 30;
  int jobs = 1;

  /// Paths are resolved against `base_dir` when relative.
  static RunConfig from(const KeyValues& kv, const std::filesystem::path& base_dir = {});
  static std::vector<std::string> known_keys();
  void validate() const;
};

EmbeddingTable make_embeddings(const RunConfig& cfg);

/// Model names accepted by the `loeo` command.
const std::vector<std::string>& model_names();
/// Task set of a neural model name; absent for the baselines.
std::optional<TaskSet> neural_tasks(const std::string& model);

/// Trains `tasks` on `train` and predicts every thread of `test`.
std::vector<ThreadPrediction> neural_fit_predict(const HyperParams& hp, TaskSet tasks, const Corpus& train,
                                                 const Corpus& test, const EmbeddingTable& table, std::uint64_t seed,
                                                 TrainHistory* history = nullptr);

/// Per-thread stance assignment predicted by a stance tagger trained on `train`.
std::vector<StanceAssignment> predicted_stances(const HyperParams& hp, const Corpus& train, const Corpus& target,
                                                const EmbeddingTable& table, std::uint64_t seed);

/// `table` must outlive the returned predictor.
FoldPredictor make_predictor(const std::string& model, const RunConfig& cfg, const EmbeddingTable& table);

/// Trains on `train` and scores `dev`: macro-F for each task of `tasks` that
/// `dev` labels, plus veracity accuracy.
Evaluation evaluate_configuration(const HyperParams& hp, TaskSet tasks, const Corpus& train, const Corpus& dev,
                                  const EmbeddingTable& table, std::uint64_t seed);

/// key = value rendering of the hyperparameters.
std::string hyperparams_to_key_values(const HyperParams& hp);

}  // namespace rumour
