#pragma once

// Differentiable building blocks for the branch classifier: LSTM and dense
// layers with hand-written reverse passes, softmax / cross-entropy, dropout,
// L2 regularisation, an Adam optimizer, and a finite-difference gradient
// checker. Everything is double precision.

#include <cstdint>
#include <functional>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "json.hpp"
#include "rumour/common.hpp"
#include "rumour/text.hpp"

namespace rumour::neural {

/// A named parameter block. Matrices are row-major {rows, cols}.
struct Tensor {
  std::string name;
  std::vector<std::size_t> shape;
  std::vector<double> values;

  std::size_t rows() const { return shape.empty() ? 0 : shape[0]; }
  std::size_t cols() const { return shape.size() < 2 ? 1 : shape[1]; }
  bool operator==(const Tensor&) const = default;
};

/// Ordered collection of parameter blocks. Also used for gradients and
/// optimizer moments, which share the layout of the parameters.
class ParamSet {
 public:
  /// Adds a zero-initialised block and returns its index.
  std::size_t add(std::string name, std::vector<std::size_t> shape);

  std::size_t size() const { return blocks_.size(); }
  Tensor& operator[](std::size_t i) { return blocks_[i]; }
  const Tensor& operator[](std::size_t i) const { return blocks_[i]; }
  std::span<double> values(std::size_t i) { return blocks_[i].values; }
  std::span<const double> values(std::size_t i) const { return blocks_[i].values; }

  std::optional<std::size_t> find(std::string_view name) const;
  std::size_t num_scalars() const;

  /// Same names and shapes, all zero.
  ParamSet zeros_like() const;
  void set_zero();
  bool same_layout(const ParamSet& other) const;

  bool operator==(const ParamSet&) const = default;

  auto begin() const { return blocks_.begin(); }
  auto end() const { return blocks_.end(); }

 private:
  std::vector<Tensor> blocks_;
};

/// Uniform in +-sqrt(6 / (fan_in + fan_out)).
void glorot_uniform(std::span<double> values, std::size_t fan_in, std::size_t fan_out, Rng& rng);

// ---------------------------------------------------------------------------
// LSTM

/// Block indices of one LSTM layer. Gate order inside the 4h rows is
/// input, forget, output, candidate.
struct LstmLayer {
  std::size_t input_dim = 0;
  std::size_t hidden = 0;
  std::size_t w = 0;  // 4h x input_dim
  std::size_t u = 0;  // 4h x hidden
  std::size_t b = 0;  // 4h

  /// Registers the three blocks under `prefix` and returns the layer.
  static LstmLayer create(ParamSet& params, const std::string& prefix, std::size_t input_dim, std::size_t hidden);
};

/// Values recorded by the forward pass for the reverse pass.
struct LstmTrace {
  std::size_t steps = 0;
  std::size_t hidden = 0;
  std::vector<std::uint8_t> active;
  std::vector<double> gates;       // steps x 4h, post-activation
  std::vector<double> cells;       // steps x h
  std::vector<double> tanh_cells;  // steps x h
  std::vector<double> outputs;     // steps x h, hidden states

  std::span<const double> output(std::size_t t) const { return {outputs.data() + t * hidden, hidden}; }
  std::span<const double> cell(std::size_t t) const { return {cells.data() + t * hidden, hidden}; }
};

/// Runs the recurrence over `steps` rows of `inputs`. At masked steps the
/// cell and hidden state carry through unchanged.
LstmTrace lstm_forward(const ParamSet& params, const LstmLayer& layer, std::span<const double> inputs,
                       std::span<const std::uint8_t> mask);
LstmTrace lstm_forward(const ParamSet& params, const LstmLayer& layer, const BranchTensor& branch);

/// Accumulates parameter gradients into `grads` given d(loss)/d(outputs)
/// (steps x h). Writes d(loss)/d(inputs) into `d_inputs` when non-empty.
void lstm_backward(const ParamSet& params, const LstmLayer& layer, std::span<const double> inputs,
                   const LstmTrace& trace, std::span<const double> d_outputs, ParamSet& grads,
                   std::span<double> d_inputs);

// ---------------------------------------------------------------------------
// Dense layers, softmax, loss

struct DenseLayer {
  std::size_t input_dim = 0;
  std::size_t output_dim = 0;
  std::size_t w = 0;  // output x input
  std::size_t b = 0;  // output

  static DenseLayer create(ParamSet& params, const std::string& prefix, std::size_t input_dim,
                           std::size_t output_dim);
};

/// W x + b, optionally followed by ReLU.
std::vector<double> dense_forward(const ParamSet& params, const DenseLayer& layer, std::span<const double> x,
                                  bool relu);
/// `d_out` is the gradient wrt the layer output (post-activation when relu is
/// set; `out` is that output). Returns the gradient wrt `x`.
std::vector<double> dense_backward(const ParamSet& params, const DenseLayer& layer, std::span<const double> x,
                                   std::span<const double> out, std::span<const double> d_out, bool relu,
                                   ParamSet& grads);

/// Numerically stable softmax (shift by the maximum logit).
std::vector<double> softmax(std::span<const double> logits);

/// Lower clip applied to p[gold] inside cross_entropy.
inline constexpr double kProbabilityClip = 1e-12;

/// -log(max(p[gold], clip)). Throws for an out-of-range class.
double cross_entropy(std::span<const double> probs, std::size_t gold);

/// Inverted-dropout mask: each entry is 0 with probability `rate`, else 1/(1-rate).
std::vector<double> dropout_mask(std::size_t n, double rate, Rng& rng);

/// lambda * sum of squares over every block.
double l2_penalty(const ParamSet& params, double lambda);
/// grads += 2 * lambda * params.
void add_l2_gradient(const ParamSet& params, double lambda, ParamSet& grads);

// ---------------------------------------------------------------------------
// Optimizer

struct AdamConfig {
  double learning_rate = 1e-3;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;
};

/// Adam with bias-corrected moments.
class Adam {
 public:
  Adam(const ParamSet& like, AdamConfig config = {});

  /// Applies one update. Throws RuntimeFailure naming the block if any
  /// gradient entry is not finite; parameters are untouched in that case.
  void step(ParamSet& params, const ParamSet& grads);

  std::uint64_t steps() const { return steps_; }
  const AdamConfig& config() const { return config_; }

 private:
  AdamConfig config_;
  ParamSet m_;
  ParamSet v_;
  std::uint64_t steps_ = 0;
};

// ---------------------------------------------------------------------------
// Gradient checking

struct BlockError {
  std::string name;
  double max_relative_error = 0.0;
  std::size_t worst_index = 0;
};

struct GradCheckReport {
  std::vector<BlockError> blocks;

  double max_relative_error() const;
  bool passed(double tolerance) const { return max_relative_error() < tolerance; }
};

/// |a - n| / max(|a|, |n|, floor). The floor keeps near-zero gradients from
/// producing spurious ratios.
double relative_error(double analytic, double numeric, double floor = 1e-6);

/// Compares `analytic` against central differences of `loss`, which must read
/// the current contents of `params`. Each entry is restored after probing.
GradCheckReport grad_check(ParamSet& params, const ParamSet& analytic, const std::function<double()>& loss,
                           double epsilon = 1e-5);

// ---------------------------------------------------------------------------
// Serialisation

nlohmann::ordered_json to_json(const ParamSet& params);
ParamSet params_from_json(const nlohmann::json& j);

}  // namespace rumour::neural
