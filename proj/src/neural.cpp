#include "rumour/neural.hpp"

#include <algorithm>
#include <cmath>

#include "rumour/kernels.hpp"

namespace rumour::neural {

std::size_t ParamSet::add(std::string name, std::vector<std::size_t> shape) {
  std::size_t n = 1;
  for (std::size_t d : shape) n *= d;
  if (n == 0) throw ValidationError("parameter block '" + name + "' has an empty shape");
  if (find(name)) throw ValidationError("duplicate parameter block '" + name + "'");
  blocks_.push_back(Tensor{std::move(name), std::move(shape), std::vector<double>(n, 0.0)});
  return blocks_.size() - 1;
}

std::optional<std::size_t> ParamSet::find(std::string_view name) const {
  for (std::size_t i = 0; i < blocks_.size(); ++i) {
    if (blocks_[i].name == name) return i;
  }
  return std::nullopt;
}

std::size_t ParamSet::num_scalars() const {
  std::size_t n = 0;
  for (const Tensor& t : blocks_) n += t.values.size();
  return n;
}

ParamSet ParamSet::zeros_like() const {
  ParamSet out = *this;
  out.set_zero();
  return out;
}

void ParamSet::set_zero() {
  for (Tensor& t : blocks_) std::fill(t.values.begin(), t.values.end(), 0.0);
}

bool ParamSet::same_layout(const ParamSet& other) const {
  if (blocks_.size() != other.blocks_.size()) return false;
  for (std::size_t i = 0; i < blocks_.size(); ++i) {
    if (blocks_[i].name != other.blocks_[i].name || blocks_[i].shape != other.blocks_[i].shape) return false;
  }
  return true;
}

void glorot_uniform(std::span<double> values, std::size_t fan_in, std::size_t fan_out, Rng& rng) {
  const double limit = std::sqrt(6.0 / static_cast<double>(fan_in + fan_out));
  for (double& v : values) v = (2.0 * rng.uniform() - 1.0) * limit;
}

// ---------------------------------------------------------------------------

namespace {

double sigmoid(double x) {
  if (x >= 0.0) return 1.0 / (1.0 + std::exp(-x));
  const double e = std::exp(x);
  return e / (1.0 + e);
}

void check_block(const ParamSet& params, std::size_t idx, std::size_t rows, std::size_t cols) {
  if (params[idx].values.size() != rows * cols) {
    throw ValidationError("shape mismatch in parameter block '" + params[idx].name + "'");
  }
}

}  // namespace

LstmLayer LstmLayer::create(ParamSet& params, const std::string& prefix, std::size_t input_dim, std::size_t hidden) {
  LstmLayer l;
  l.input_dim = input_dim;
  l.hidden = hidden;
  l.w = params.add(prefix + "/w", {4 * hidden, input_dim});
  l.u = params.add(prefix + "/u", {4 * hidden, hidden});
  l.b = params.add(prefix + "/b", {4 * hidden});
  return l;
}

LstmTrace lstm_forward(const ParamSet& params, const LstmLayer& layer, std::span<const double> inputs,
                       std::span<const std::uint8_t> mask) {
  const std::size_t h = layer.hidden;
  const std::size_t in = layer.input_dim;
  const std::size_t steps = mask.size();
  if (inputs.size() != steps * in) throw ValidationError("lstm_forward: input shape mismatch");
  check_block(params, layer.w, 4 * h, in);
  check_block(params, layer.u, 4 * h, h);
  check_block(params, layer.b, 4 * h, 1);

  LstmTrace tr;
  tr.steps = steps;
  tr.hidden = h;
  tr.active.assign(mask.begin(), mask.end());
  tr.gates.assign(steps * 4 * h, 0.0);
  tr.cells.assign(steps * h, 0.0);
  tr.tanh_cells.assign(steps * h, 0.0);
  tr.outputs.assign(steps * h, 0.0);

  const std::vector<double> zeros(h, 0.0);
  std::span<const double> w = params.values(layer.w);
  std::span<const double> u = params.values(layer.u);
  std::span<const double> b = params.values(layer.b);

  for (std::size_t t = 0; t < steps; ++t) {
    std::span<const double> h_prev = t == 0 ? std::span<const double>(zeros) : tr.output(t - 1);
    std::span<const double> c_prev = t == 0 ? std::span<const double>(zeros) : tr.cell(t - 1);
    double* c = tr.cells.data() + t * h;
    double* out = tr.outputs.data() + t * h;
    if (!mask[t]) {
      std::copy(c_prev.begin(), c_prev.end(), c);
      std::copy(h_prev.begin(), h_prev.end(), out);
      continue;
    }
    std::span<double> z(tr.gates.data() + t * 4 * h, 4 * h);
    std::copy(b.begin(), b.end(), z.begin());
    kernels::gemv(w, 4 * h, in, inputs.subspan(t * in, in), z);
    kernels::gemv(u, 4 * h, h, h_prev, z);
    double* tc = tr.tanh_cells.data() + t * h;
    for (std::size_t k = 0; k < h; ++k) {
      const double ig = sigmoid(z[k]);
      const double fg = sigmoid(z[h + k]);
      const double og = sigmoid(z[2 * h + k]);
      const double g = std::tanh(z[3 * h + k]);
      z[k] = ig;
      z[h + k] = fg;
      z[2 * h + k] = og;
      z[3 * h + k] = g;
      c[k] = fg * c_prev[k] + ig * g;
      tc[k] = std::tanh(c[k]);
      out[k] = og * tc[k];
    }
  }
  return tr;
}

LstmTrace lstm_forward(const ParamSet& params, const LstmLayer& layer, const BranchTensor& branch) {
  if (branch.dimension != layer.input_dim) throw ValidationError("lstm_forward: branch dimension mismatch");
  return lstm_forward(params, layer, branch.data, branch.mask);
}

void lstm_backward(const ParamSet& params, const LstmLayer& layer, std::span<const double> inputs,
                   const LstmTrace& trace, std::span<const double> d_outputs, ParamSet& grads,
                   std::span<double> d_inputs) {
  const std::size_t h = layer.hidden;
  const std::size_t in = layer.input_dim;
  const std::size_t steps = trace.steps;
  if (d_outputs.size() != steps * h) throw ValidationError("lstm_backward: gradient shape mismatch");
  if (!d_inputs.empty()) {
    if (d_inputs.size() != steps * in) throw ValidationError("lstm_backward: input gradient shape mismatch");
    std::fill(d_inputs.begin(), d_inputs.end(), 0.0);
  }

  std::span<const double> w = params.values(layer.w);
  std::span<const double> u = params.values(layer.u);
  std::span<double> dw = grads.values(layer.w);
  std::span<double> du = grads.values(layer.u);
  std::span<double> db = grads.values(layer.b);

  const std::vector<double> zeros(h, 0.0);
  std::vector<double> dh_next(h, 0.0), dc_next(h, 0.0), dh(h), dz(4 * h);

  for (std::size_t t = steps; t-- > 0;) {
    for (std::size_t k = 0; k < h; ++k) dh[k] = d_outputs[t * h + k] + dh_next[k];
    if (!trace.active[t]) {
      // Carried state: gradients pass straight to the previous step.
      dh_next = dh;
      continue;
    }
    std::span<const double> h_prev = t == 0 ? std::span<const double>(zeros) : trace.output(t - 1);
    std::span<const double> c_prev = t == 0 ? std::span<const double>(zeros) : trace.cell(t - 1);
    const double* gate = trace.gates.data() + t * 4 * h;
    const double* tc = trace.tanh_cells.data() + t * h;
    for (std::size_t k = 0; k < h; ++k) {
      const double ig = gate[k], fg = gate[h + k], og = gate[2 * h + k], g = gate[3 * h + k];
      const double d_o = dh[k] * tc[k];
      const double dc = dh[k] * og * (1.0 - tc[k] * tc[k]) + dc_next[k];
      dz[k] = dc * g * ig * (1.0 - ig);
      dz[h + k] = dc * c_prev[k] * fg * (1.0 - fg);
      dz[2 * h + k] = d_o * og * (1.0 - og);
      dz[3 * h + k] = dc * ig * (1.0 - g * g);
      dc_next[k] = dc * fg;
    }
    std::span<const double> x = inputs.subspan(t * in, in);
    kernels::ger(1.0, dz, x, dw);
    kernels::ger(1.0, dz, h_prev, du);
    for (std::size_t k = 0; k < 4 * h; ++k) db[k] += dz[k];
    if (!d_inputs.empty()) kernels::gemv_t(w, 4 * h, in, dz, d_inputs.subspan(t * in, in));
    std::fill(dh_next.begin(), dh_next.end(), 0.0);
    kernels::gemv_t(u, 4 * h, h, dz, dh_next);
  }
}

// ---------------------------------------------------------------------------

DenseLayer DenseLayer::create(ParamSet& params, const std::string& prefix, std::size_t input_dim,
                              std::size_t output_dim) {
  DenseLayer l;
  l.input_dim = input_dim;
  l.output_dim = output_dim;
  l.w = params.add(prefix + "/w", {output_dim, input_dim});
  l.b = params.add(prefix + "/b", {output_dim});
  return l;
}

std::vector<double> dense_forward(const ParamSet& params, const DenseLayer& layer, std::span<const double> x,
                                  bool relu) {
  if (x.size() != layer.input_dim) throw ValidationError("dense_forward: input shape mismatch");
  check_block(params, layer.w, layer.output_dim, layer.input_dim);
  std::span<const double> b = params.values(layer.b);
  std::vector<double> y(b.begin(), b.end());
  kernels::gemv(params.values(layer.w), layer.output_dim, layer.input_dim, x, y);
  if (relu) {
    for (double& v : y) v = v > 0.0 ? v : 0.0;
  }
  return y;
}

std::vector<double> dense_backward(const ParamSet& params, const DenseLayer& layer, std::span<const double> x,
                                   std::span<const double> out, std::span<const double> d_out, bool relu,
                                   ParamSet& grads) {
  std::vector<double> dz(d_out.begin(), d_out.end());
  if (relu) {
    for (std::size_t k = 0; k < dz.size(); ++k) {
      if (!(out[k] > 0.0)) dz[k] = 0.0;
    }
  }
  kernels::ger(1.0, dz, x, grads.values(layer.w));
  std::span<double> db = grads.values(layer.b);
  for (std::size_t k = 0; k < dz.size(); ++k) db[k] += dz[k];
  std::vector<double> dx(layer.input_dim, 0.0);
  kernels::gemv_t(params.values(layer.w), layer.output_dim, layer.input_dim, dz, dx);
  return dx;
}

std::vector<double> softmax(std::span<const double> logits) {
  if (logits.empty()) throw ValidationError("softmax: empty input");
  const double m = *std::max_element(logits.begin(), logits.end());
  std::vector<double> p(logits.size());
  double sum = 0.0;
  for (std::size_t k = 0; k < logits.size(); ++k) {
    p[k] = std::exp(logits[k] - m);
    sum += p[k];
  }
  for (double& v : p) v /= sum;
  return p;
}

double cross_entropy(std::span<const double> probs, std::size_t gold) {
  if (gold >= probs.size()) throw ValidationError("cross_entropy: gold class out of range");
  return -std::log(std::max(probs[gold], kProbabilityClip));
}

std::vector<double> dropout_mask(std::size_t n, double rate, Rng& rng) {
  std::vector<double> mask(n, 1.0);
  if (rate <= 0.0) return mask;
  const double keep = 1.0 / (1.0 - rate);
  for (double& m : mask) m = rng.uniform() < rate ? 0.0 : keep;
  return mask;
}

double l2_penalty(const ParamSet& params, double lambda) {
  if (lambda == 0.0) return 0.0;
  double s = 0.0;
  for (const Tensor& t : params) {
    for (double v : t.values) s += v * v;
  }
  return lambda * s;
}

void add_l2_gradient(const ParamSet& params, double lambda, ParamSet& grads) {
  if (lambda == 0.0) return;
  for (std::size_t i = 0; i < params.size(); ++i) {
    std::span<const double> p = params.values(i);
    std::span<double> g = grads.values(i);
    for (std::size_t k = 0; k < p.size(); ++k) g[k] += 2.0 * lambda * p[k];
  }
}

// ---------------------------------------------------------------------------

Adam::Adam(const ParamSet& like, AdamConfig config)
    : config_(config), m_(like.zeros_like()), v_(like.zeros_like()) {}

void Adam::step(ParamSet& params, const ParamSet& grads) {
  if (!params.same_layout(grads) || !params.same_layout(m_)) {
    throw ValidationError("Adam::step: parameter / gradient layout mismatch");
  }
  for (std::size_t i = 0; i < grads.size(); ++i) {
    for (double g : grads.values(i)) {
      if (!std::isfinite(g)) throw RuntimeFailure("non-finite gradient in parameter block '" + grads[i].name + "'");
    }
  }
  ++steps_;
  const double b1 = config_.beta1, b2 = config_.beta2;
  const double c1 = 1.0 - std::pow(b1, static_cast<double>(steps_));
  const double c2 = 1.0 - std::pow(b2, static_cast<double>(steps_));
  for (std::size_t i = 0; i < params.size(); ++i) {
    std::span<double> p = params.values(i);
    std::span<const double> g = grads.values(i);
    std::span<double> m = m_.values(i);
    std::span<double> v = v_.values(i);
    for (std::size_t k = 0; k < p.size(); ++k) {
      m[k] = b1 * m[k] + (1.0 - b1) * g[k];
      v[k] = b2 * v[k] + (1.0 - b2) * g[k] * g[k];
      const double mhat = m[k] / c1;
      const double vhat = v[k] / c2;
      p[k] -= config_.learning_rate * mhat / (std::sqrt(vhat) + config_.epsilon);
    }
  }
}

// ---------------------------------------------------------------------------

double GradCheckReport::max_relative_error() const {
  double m = 0.0;
  for (const BlockError& b : blocks) m = std::max(m, b.max_relative_error);
  return m;
}

double relative_error(double analytic, double numeric, double floor) {
  const double denom = std::max({std::fabs(analytic), std::fabs(numeric), floor});
  return std::fabs(analytic - numeric) / denom;
}

GradCheckReport grad_check(ParamSet& params, const ParamSet& analytic, const std::function<double()>& loss,
                           double epsilon) {
  if (!params.same_layout(analytic)) throw ValidationError("grad_check: gradient layout mismatch");
  GradCheckReport report;
  for (std::size_t i = 0; i < params.size(); ++i) {
    BlockError be{params[i].name, 0.0, 0};
    std::span<double> p = params.values(i);
    std::span<const double> a = analytic.values(i);
    for (std::size_t k = 0; k < p.size(); ++k) {
      const double saved = p[k];
      p[k] = saved + epsilon;
      const double up = loss();
      p[k] = saved - epsilon;
      const double down = loss();
      p[k] = saved;
      const double numeric = (up - down) / (2.0 * epsilon);
      const double err = relative_error(a[k], numeric);
      if (err > be.max_relative_error) {
        be.max_relative_error = err;
        be.worst_index = k;
      }
    }
    report.blocks.push_back(std::move(be));
  }
  return report;
}

// ---------------------------------------------------------------------------

nlohmann::ordered_json to_json(const ParamSet& params) {
  nlohmann::ordered_json blocks = nlohmann::ordered_json::array();
  for (const Tensor& t : params) {
    nlohmann::ordered_json b;
    b["name"] = t.name;
    b["shape"] = t.shape;
    b["values"] = t.values;
    blocks.push_back(std::move(b));
  }
  return blocks;
}

ParamSet params_from_json(const nlohmann::json& j) {
  if (!j.is_array()) throw ValidationError("checkpoint: 'blocks' must be an array");
  ParamSet params;
  for (const auto& b : j) {
    auto name = b.at("name").get<std::string>();
    auto shape = b.at("shape").get<std::vector<std::size_t>>();
    auto values = b.at("values").get<std::vector<double>>();
    std::size_t idx = params.add(name, shape);
    if (params[idx].values.size() != values.size()) {
      throw ValidationError("checkpoint: block '" + name + "' has " + std::to_string(values.size()) +
                            " values for its shape");
    }
    params[idx].values = std::move(values);
  }
  return params;
}

}  // namespace rumour::neural
