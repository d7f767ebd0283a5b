#pragma once

// Shared-LSTM multi-task branch classifier.
//
// One LSTM stack reads the branch; each task owns a stack of dense ReLU
// layers followed by dropout and a softmax layer. Stance is predicted at
// every real time step, detection and veracity from the final step. The
// training loss is the sum of per-task cross-entropies in which missing
// labels contribute nothing.

#include <array>
#include <cstdint>
#include <filesystem>
#include <functional>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "rumour/corpus.hpp"
#include "rumour/labels.hpp"
#include "rumour/neural.hpp"
#include "rumour/prediction.hpp"
#include "rumour/text.hpp"

namespace rumour {

struct HyperParams {
  int num_dense_layers = 2;
  int num_lstm_layers = 1;
  std::size_t dense_width = 300;
  std::size_t lstm_width = 100;
  double l2 = 1e-4;
  std::size_t batch_size = 32;
  int epochs = 50;
  double dropout = 0.5;
  double learning_rate = 1e-3;
  std::size_t max_branch_len = 25;
  /// Per-task loss weights, indexed by Task.
  std::array<double, 3> task_weights{1.0, 1.0, 1.0};

  /// Structural checks (positive widths, layer counts in range, rates in [0,1)).
  /// Widths need not come from the search space so miniature models are legal.
  void validate() const;
  /// True when every searched field takes one of the tuned values.
  bool in_search_space() const;

  bool operator==(const HyperParams&) const = default;
};

/// One branch of one thread, ready for the network.
struct TrainingInstance {
  BranchTensor branch;
  /// Empty, or one optional label per real step.
  std::vector<std::optional<Stance>> stance;
  std::optional<Detection> detection;
  std::optional<Veracity> veracity;
  std::string thread;
  std::string event;
  /// Thread::posts indices of the real steps.
  std::vector<std::size_t> posts;
};

/// Branch instances of one thread (thread labels copied to every branch).
std::vector<TrainingInstance> make_instances(const Thread& thread, const EmbeddingTable& table, std::size_t max_len);
std::vector<TrainingInstance> make_instances(const Corpus& corpus, const EmbeddingTable& table, std::size_t max_len);

/// Class probabilities from one forward pass.
struct Predictions {
  std::vector<std::vector<double>> stance;  // one distribution per real step
  std::vector<double> detection;
  std::vector<double> veracity;
};

/// Per-task cross-entropy terms of one instance (unweighted), indexed by Task.
using TaskLosses = std::array<double, 3>;

/// Independent dropout streams per head, so one task's masks never depend on
/// which other heads exist.
class DropoutStreams {
 public:
  explicit DropoutStreams(std::uint64_t seed);
  Rng& stream(Task task) { return streams_[static_cast<std::size_t>(task)]; }

 private:
  std::array<Rng, 3> streams_;
};

class MTLModel {
 public:
  struct Head {
    std::vector<neural::DenseLayer> hidden;
    neural::DenseLayer output;
  };

  struct HeadTrace {
    std::vector<double> input;
    std::vector<std::vector<double>> activations;  // outputs of the hidden layers
    std::vector<double> mask;                      // dropout mask (empty when inactive)
    std::vector<double> dropped;                   // input of the output layer
    std::vector<double> probs;
  };

  struct ForwardPass {
    std::vector<double> input;
    std::vector<std::uint8_t> mask;
    std::vector<neural::LstmTrace> lstm;
    std::vector<std::size_t> stance_steps;
    std::vector<HeadTrace> stance;
    std::optional<HeadTrace> detection;
    std::optional<HeadTrace> veracity;

    Predictions predictions() const;
  };

  /// `tasks` must contain veracity.
  static MTLModel build(const HyperParams& hp, TaskSet tasks, std::size_t input_dim, std::uint64_t seed);
  /// Stance-only network, used to produce stance predictions for the
  /// pipeline baseline.
  static MTLModel build_stance_tagger(const HyperParams& hp, std::size_t input_dim, std::uint64_t seed);

  const HyperParams& hyper() const { return hp_; }
  TaskSet tasks() const { return tasks_; }
  std::size_t input_dim() const { return input_dim_; }
  bool has_head(Task t) const { return heads_[static_cast<std::size_t>(t)].has_value(); }

  neural::ParamSet& params() { return params_; }
  const neural::ParamSet& params() const { return params_; }

  /// Training mode when `dropout` is given, evaluation mode otherwise.
  ForwardPass forward(const BranchTensor& branch, DropoutStreams* dropout = nullptr) const;
  Predictions predict(const BranchTensor& branch) const { return forward(branch).predictions(); }

  /// Accumulates scale * d(weighted joint loss)/d(params) into `grads` and
  /// returns the weighted joint loss. No L2 term.
  double backward(const ForwardPass& pass, const TrainingInstance& instance, neural::ParamSet& grads,
                  double scale = 1.0) const;

  /// Weighted sum over this model's heads; L2 excluded.
  double joint_loss(const Predictions& predictions, const TrainingInstance& instance) const;
  /// joint_loss plus the model-level L2 penalty.
  double total_loss(const Predictions& predictions, const TrainingInstance& instance) const;

  bool operator==(const MTLModel& other) const {
    return hp_ == other.hp_ && tasks_ == other.tasks_ && input_dim_ == other.input_dim_ && params_ == other.params_;
  }

 private:
  MTLModel(const HyperParams& hp, TaskSet tasks, std::size_t input_dim, std::uint64_t seed);
  HeadTrace run_head(const Head& head, std::span<const double> x, Rng* dropout) const;
  std::vector<double> head_backward(const Head& head, const HeadTrace& trace, std::span<const double> d_logits,
                                    neural::ParamSet& grads) const;

  HyperParams hp_;
  TaskSet tasks_;
  std::size_t input_dim_ = 0;
  neural::ParamSet params_;
  std::vector<neural::LstmLayer> lstm_;
  std::array<std::optional<Head>, 3> heads_;

  friend MTLModel load_checkpoint(const std::filesystem::path& path);
};

/// Cross-entropy terms for every task the instance has a label for and the
/// predictions cover. Stance averages over labelled steps.
TaskLosses task_losses(const Predictions& predictions, const TrainingInstance& instance);
/// Sum of weights[t] * losses[t] over the tasks in `tasks`.
double joint_loss(const Predictions& predictions, const TrainingInstance& instance, TaskSet tasks,
                  const std::array<double, 3>& weights = {1.0, 1.0, 1.0});

struct TrainHistory {
  std::vector<double> loss;             // per epoch: mean batch (data + L2) loss
  std::vector<TaskLosses> task_loss;    // per epoch: mean per-instance task terms
};

/// Called after each epoch with the 1-based epoch number; return false to stop.
using EpochCallback = std::function<bool(int epoch, const MTLModel& model)>;

/// Mini-batch training with the model's hyperparameters (epochs, batch size,
/// dropout, learning rate, L2). Shuffling and dropout draw from streams
/// derived from `seed`.
TrainHistory train(MTLModel& model, std::span<const TrainingInstance> instances, std::uint64_t seed,
                   const EpochCallback& on_epoch = {});

/// Branch-level accuracy per task (stance over labelled steps); absent when
/// the model lacks the head or no instance has the label.
std::array<std::optional<double>, 3> branch_accuracy(const MTLModel& model,
                                                      std::span<const TrainingInstance> instances);

/// Majority vote over branch class distributions. Ties go to the class with
/// the larger summed probability, then to the lower class index.
std::size_t majority_vote(std::span<const std::vector<double>> branch_probs);

/// Thread prediction from branch votes; per-tweet stance comes from the first
/// branch (in branch order) that contains the tweet.
ThreadPrediction predict_thread(const MTLModel& model, const Thread& thread, const EmbeddingTable& table);

/// Gradient check of the full model on one instance with fixed dropout masks.
neural::GradCheckReport grad_check_model(MTLModel& model, const TrainingInstance& instance,
                                         std::uint64_t dropout_seed, double epsilon = 1e-5);

/// JSON checkpoint: hyperparameters, task heads, and named parameter blocks.
void save_checkpoint(const MTLModel& model, const std::filesystem::path& path);
std::string checkpoint_json(const MTLModel& model);
MTLModel load_checkpoint(const std::filesystem::path& path);

nlohmann::ordered_json to_json(const HyperParams& hp);
HyperParams hyperparams_from_json(const nlohmann::json& j);

}  // namespace rumour
