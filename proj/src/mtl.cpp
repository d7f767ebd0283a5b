#include "rumour/mtl.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numeric>
#include <sstream>

namespace rumour {

using neural::DenseLayer;
using neural::LstmLayer;
using neural::ParamSet;

namespace {

bool is_one_of(std::size_t v, std::initializer_list<std::size_t> set) {
  return std::find(set.begin(), set.end(), v) != set.end();
}

std::size_t argmax(std::span<const double> v) {
  return static_cast<std::size_t>(std::max_element(v.begin(), v.end()) - v.begin());
}

// p - onehot(gold), scaled; zero when p[gold] sits under the clip (the
// clipped loss is flat there).
std::vector<double> softmax_ce_grad(std::span<const double> probs, std::size_t gold, double scale) {
  std::vector<double> d(probs.size(), 0.0);
  if (probs[gold] < neural::kProbabilityClip) return d;
  for (std::size_t k = 0; k < probs.size(); ++k) d[k] = scale * (probs[k] - (k == gold ? 1.0 : 0.0));
  return d;
}

std::string head_prefix(Task t) { return std::string(task_name(t)); }

}  // namespace

// ---------------------------------------------------------------------------

void HyperParams::validate() const {
  auto fail = [](const std::string& m) { throw ValidationError("hyperparameters: " + m); };
  if (num_dense_layers < 1 || num_dense_layers > 4) fail("num_dense_layers must be in 1..4");
  if (num_lstm_layers < 1 || num_lstm_layers > 2) fail("num_lstm_layers must be 1 or 2");
  if (dense_width < 1) fail("dense_width must be positive");
  if (lstm_width < 1) fail("lstm_width must be positive");
  if (!(l2 >= 0.0) || !std::isfinite(l2)) fail("l2 must be a finite non-negative number");
  if (batch_size < 1) fail("batch_size must be positive");
  if (epochs < 0) fail("epochs must be non-negative");
  if (!(dropout >= 0.0 && dropout < 1.0)) fail("dropout must lie in [0,1)");
  if (!(learning_rate > 0.0) || !std::isfinite(learning_rate)) fail("learning_rate must be positive");
  if (max_branch_len < 1) fail("max_branch_len must be positive");
  for (double w : task_weights) {
    if (!(w >= 0.0) || !std::isfinite(w)) fail("task weights must be finite and non-negative");
  }
}

bool HyperParams::in_search_space() const {
  return num_dense_layers >= 1 && num_dense_layers <= 4 && num_lstm_layers >= 1 && num_lstm_layers <= 2 &&
         is_one_of(dense_width, {300, 400, 500, 600}) && is_one_of(lstm_width, {100, 200, 300}) &&
         (l2 == 1e-4 || l2 == 1e-3);
}

// ---------------------------------------------------------------------------

std::vector<TrainingInstance> make_instances(const Thread& thread, const EmbeddingTable& table, std::size_t max_len) {
  std::vector<TweetVector> vectors;
  vectors.reserve(thread.posts.size());
  bool any_stance = false;
  for (const Post& p : thread.posts) {
    vectors.push_back(embed_tweet(preprocess(p.text), table));
    any_stance = any_stance || p.stance.has_value();
  }

  std::vector<TrainingInstance> out;
  for (const Branch& b : decompose_branches(thread)) {
    std::vector<TweetVector> seq;
    seq.reserve(b.posts.size());
    for (std::size_t i : b.posts) seq.push_back(vectors[i]);
    TrainingInstance inst;
    inst.branch = pad_and_mask(seq, max_len);
    inst.posts.assign(b.posts.begin(), b.posts.begin() + static_cast<std::ptrdiff_t>(inst.branch.true_length));
    if (any_stance) {
      for (std::size_t i : inst.posts) inst.stance.push_back(thread.posts[i].stance);
    }
    inst.detection = thread.detection;
    inst.veracity = thread.veracity;
    inst.thread = thread.id();
    inst.event = thread.event;
    out.push_back(std::move(inst));
  }
  return out;
}

std::vector<TrainingInstance> make_instances(const Corpus& corpus, const EmbeddingTable& table, std::size_t max_len) {
  std::vector<TrainingInstance> out;
  for (const Thread& t : corpus.threads) {
    auto part = make_instances(t, table, max_len);
    std::move(part.begin(), part.end(), std::back_inserter(out));
  }
  return out;
}

// ---------------------------------------------------------------------------

DropoutStreams::DropoutStreams(std::uint64_t seed)
    : streams_{Rng(derive_seed(seed, "dropout/stance")), Rng(derive_seed(seed, "dropout/detection")),
               Rng(derive_seed(seed, "dropout/veracity"))} {}

Predictions MTLModel::ForwardPass::predictions() const {
  Predictions p;
  for (const HeadTrace& h : stance) p.stance.push_back(h.probs);
  if (detection) p.detection = detection->probs;
  if (veracity) p.veracity = veracity->probs;
  return p;
}

MTLModel::MTLModel(const HyperParams& hp, TaskSet tasks, std::size_t input_dim, std::uint64_t seed)
    : hp_(hp), tasks_(tasks), input_dim_(input_dim) {
  hp.validate();
  if (input_dim == 0) throw ValidationError("build_model: input dimension must be positive");
  if (tasks.empty()) throw ValidationError("build_model: empty task set");

  std::size_t in = input_dim;
  for (int l = 0; l < hp.num_lstm_layers; ++l) {
    lstm_.push_back(LstmLayer::create(params_, "lstm" + std::to_string(l), in, hp.lstm_width));
    in = hp.lstm_width;
  }
  for (Task t : kAllTasks) {
    if (!tasks.contains(t)) continue;
    Head head;
    std::size_t hin = hp.lstm_width;
    for (int d = 0; d < hp.num_dense_layers; ++d) {
      head.hidden.push_back(
          DenseLayer::create(params_, head_prefix(t) + "/dense" + std::to_string(d), hin, hp.dense_width));
      hin = hp.dense_width;
    }
    head.output = DenseLayer::create(params_, head_prefix(t) + "/out", hin, num_classes(t));
    heads_[static_cast<std::size_t>(t)] = std::move(head);
  }

  // Each block draws from its own stream keyed by name, so shared blocks get
  // identical values whatever the task set.
  for (const LstmLayer& l : lstm_) {
    Rng rw(derive_seed(seed, "init/" + params_[l.w].name));
    neural::glorot_uniform(params_.values(l.w), l.input_dim, 4 * l.hidden, rw);
    Rng ru(derive_seed(seed, "init/" + params_[l.u].name));
    neural::glorot_uniform(params_.values(l.u), l.hidden, 4 * l.hidden, ru);
    std::span<double> b = params_.values(l.b);
    std::fill(b.begin() + static_cast<std::ptrdiff_t>(l.hidden), b.begin() + static_cast<std::ptrdiff_t>(2 * l.hidden),
              1.0);
  }
  for (const auto& head : heads_) {
    if (!head) continue;
    auto init = [&](const DenseLayer& d) {
      Rng r(derive_seed(seed, "init/" + params_[d.w].name));
      neural::glorot_uniform(params_.values(d.w), d.input_dim, d.output_dim, r);
    };
    for (const DenseLayer& d : head->hidden) init(d);
    init(head->output);
  }
}

MTLModel MTLModel::build(const HyperParams& hp, TaskSet tasks, std::size_t input_dim, std::uint64_t seed) {
  if (!tasks.contains(Task::Veracity)) throw ValidationError("build_model: task set must include veracity");
  return MTLModel(hp, tasks, input_dim, seed);
}

MTLModel MTLModel::build_stance_tagger(const HyperParams& hp, std::size_t input_dim, std::uint64_t seed) {
  return MTLModel(hp, TaskSet{Task::Stance}, input_dim, seed);
}

MTLModel::HeadTrace MTLModel::run_head(const Head& head, std::span<const double> x, Rng* dropout) const {
  HeadTrace tr;
  tr.input.assign(x.begin(), x.end());
  std::span<const double> cur = tr.input;
  for (const DenseLayer& d : head.hidden) {
    tr.activations.push_back(neural::dense_forward(params_, d, cur, true));
    cur = tr.activations.back();
  }
  tr.dropped.assign(cur.begin(), cur.end());
  if (dropout && hp_.dropout > 0.0) {
    tr.mask = neural::dropout_mask(tr.dropped.size(), hp_.dropout, *dropout);
    for (std::size_t k = 0; k < tr.dropped.size(); ++k) tr.dropped[k] *= tr.mask[k];
  }
  tr.probs = neural::softmax(neural::dense_forward(params_, head.output, tr.dropped, false));
  return tr;
}

MTLModel::ForwardPass MTLModel::forward(const BranchTensor& branch, DropoutStreams* dropout) const {
  if (branch.dimension != input_dim_) {
    throw ValidationError("forward: branch dimension " + std::to_string(branch.dimension) + " != model input " +
                          std::to_string(input_dim_));
  }
  ForwardPass pass;
  pass.input = branch.data;
  pass.mask = branch.mask;
  std::span<const double> x = pass.input;
  for (const LstmLayer& l : lstm_) {
    pass.lstm.push_back(neural::lstm_forward(params_, l, x, pass.mask));
    x = pass.lstm.back().outputs;
  }
  const neural::LstmTrace& top = pass.lstm.back();
  const std::size_t steps = branch.max_len;

  if (const auto& head = heads_[static_cast<std::size_t>(Task::Stance)]) {
    Rng* rng = dropout ? &dropout->stream(Task::Stance) : nullptr;
    for (std::size_t t = 0; t < steps; ++t) {
      if (!pass.mask[t]) continue;
      pass.stance_steps.push_back(t);
      pass.stance.push_back(run_head(*head, top.output(t), rng));
    }
  }
  std::span<const double> last = top.output(steps - 1);
  if (const auto& head = heads_[static_cast<std::size_t>(Task::Detection)]) {
    pass.detection = run_head(*head, last, dropout ? &dropout->stream(Task::Detection) : nullptr);
  }
  if (const auto& head = heads_[static_cast<std::size_t>(Task::Veracity)]) {
    pass.veracity = run_head(*head, last, dropout ? &dropout->stream(Task::Veracity) : nullptr);
  }
  return pass;
}

std::vector<double> MTLModel::head_backward(const Head& head, const HeadTrace& trace, std::span<const double> d_logits,
                                            ParamSet& grads) const {
  std::vector<double> d =
      neural::dense_backward(params_, head.output, trace.dropped, {}, d_logits, false, grads);
  if (!trace.mask.empty()) {
    for (std::size_t k = 0; k < d.size(); ++k) d[k] *= trace.mask[k];
  }
  for (std::size_t k = head.hidden.size(); k-- > 0;) {
    std::span<const double> in = k == 0 ? std::span<const double>(trace.input) : trace.activations[k - 1];
    d = neural::dense_backward(params_, head.hidden[k], in, trace.activations[k], d, true, grads);
  }
  return d;
}

double MTLModel::backward(const ForwardPass& pass, const TrainingInstance& instance, ParamSet& grads,
                          double scale) const {
  if (pass.lstm.empty()) throw ValidationError("backward called before forward");
  if (!grads.same_layout(params_)) throw ValidationError("backward: gradient layout mismatch");
  const std::size_t steps = pass.mask.size();
  const std::size_t h = hp_.lstm_width;
  std::vector<double> d_top(steps * h, 0.0);
  bool any = false;
  double loss = 0.0;
  const auto& w = hp_.task_weights;

  auto add_at = [&](std::size_t t, const std::vector<double>& dx) {
    for (std::size_t k = 0; k < h; ++k) d_top[t * h + k] += dx[k];
  };

  if (const auto& head = heads_[static_cast<std::size_t>(Task::Stance)]; head && !instance.stance.empty()) {
    if (instance.stance.size() != pass.stance.size()) {
      throw ValidationError("stance labels do not align with the branch mask");
    }
    std::size_t labelled = 0;
    for (const auto& s : instance.stance) labelled += s.has_value();
    if (labelled > 0) {
      const double ws = w[static_cast<std::size_t>(Task::Stance)] / static_cast<double>(labelled);
      for (std::size_t i = 0; i < instance.stance.size(); ++i) {
        if (!instance.stance[i]) continue;
        const auto gold = static_cast<std::size_t>(*instance.stance[i]);
        loss += ws * neural::cross_entropy(pass.stance[i].probs, gold);
        add_at(pass.stance_steps[i],
               head_backward(*head, pass.stance[i], softmax_ce_grad(pass.stance[i].probs, gold, scale * ws), grads));
        any = true;
      }
    }
  }
  auto final_task = [&](Task task, const std::optional<HeadTrace>& trace, std::optional<std::size_t> gold) {
    const auto& head = heads_[static_cast<std::size_t>(task)];
    if (!head || !trace || !gold) return;
    const double wt = w[static_cast<std::size_t>(task)];
    loss += wt * neural::cross_entropy(trace->probs, *gold);
    add_at(steps - 1, head_backward(*head, *trace, softmax_ce_grad(trace->probs, *gold, scale * wt), grads));
    any = true;
  };
  final_task(Task::Detection, pass.detection,
             instance.detection ? std::optional<std::size_t>(static_cast<std::size_t>(*instance.detection))
                                : std::nullopt);
  final_task(Task::Veracity, pass.veracity,
             instance.veracity ? std::optional<std::size_t>(static_cast<std::size_t>(*instance.veracity))
                               : std::nullopt);

  if (!any) return loss;
  std::vector<double> d_out = std::move(d_top);
  for (std::size_t l = lstm_.size(); l-- > 0;) {
    std::span<const double> in = l == 0 ? std::span<const double>(pass.input) : pass.lstm[l - 1].outputs;
    std::vector<double> d_in;
    if (l > 0) d_in.assign(steps * lstm_[l].input_dim, 0.0);
    neural::lstm_backward(params_, lstm_[l], in, pass.lstm[l], d_out, grads, d_in);
    d_out = std::move(d_in);
  }
  return loss;
}

TaskLosses task_losses(const Predictions& predictions, const TrainingInstance& instance) {
  TaskLosses out{0.0, 0.0, 0.0};
  if (!predictions.stance.empty() && !instance.stance.empty()) {
    if (instance.stance.size() != predictions.stance.size()) {
      throw ValidationError("stance labels do not align with the branch mask");
    }
    double sum = 0.0;
    std::size_t n = 0;
    for (std::size_t i = 0; i < instance.stance.size(); ++i) {
      if (!instance.stance[i]) continue;
      sum += neural::cross_entropy(predictions.stance[i], static_cast<std::size_t>(*instance.stance[i]));
      ++n;
    }
    if (n > 0) out[static_cast<std::size_t>(Task::Stance)] = sum / static_cast<double>(n);
  }
  if (!predictions.detection.empty() && instance.detection) {
    out[static_cast<std::size_t>(Task::Detection)] =
        neural::cross_entropy(predictions.detection, static_cast<std::size_t>(*instance.detection));
  }
  if (!predictions.veracity.empty() && instance.veracity) {
    out[static_cast<std::size_t>(Task::Veracity)] =
        neural::cross_entropy(predictions.veracity, static_cast<std::size_t>(*instance.veracity));
  }
  return out;
}

double joint_loss(const Predictions& predictions, const TrainingInstance& instance, TaskSet tasks,
                  const std::array<double, 3>& weights) {
  const TaskLosses l = task_losses(predictions, instance);
  double total = 0.0;
  for (Task t : kAllTasks) {
    if (tasks.contains(t)) total += weights[static_cast<std::size_t>(t)] * l[static_cast<std::size_t>(t)];
  }
  return total;
}

double MTLModel::joint_loss(const Predictions& predictions, const TrainingInstance& instance) const {
  return rumour::joint_loss(predictions, instance, tasks_, hp_.task_weights);
}

double MTLModel::total_loss(const Predictions& predictions, const TrainingInstance& instance) const {
  return joint_loss(predictions, instance) + neural::l2_penalty(params_, hp_.l2);
}

// ---------------------------------------------------------------------------

TrainHistory train(MTLModel& model, std::span<const TrainingInstance> instances, std::uint64_t seed,
                   const EpochCallback& on_epoch) {
  const HyperParams& hp = model.hyper();
  const Task required = model.has_head(Task::Veracity) ? Task::Veracity : Task::Stance;
  const bool has_label = std::any_of(instances.begin(), instances.end(), [&](const TrainingInstance& i) {
    return required == Task::Veracity ? i.veracity.has_value() : !i.stance.empty();
  });
  if (!has_label) {
    throw ValidationError(std::string("train: no instance carries a ") + std::string(task_name(required)) + " label");
  }

  Rng shuffle(derive_seed(seed, "shuffle"));
  DropoutStreams dropout(derive_seed(seed, "dropout"));
  neural::Adam adam(model.params(), neural::AdamConfig{hp.learning_rate});
  ParamSet grads = model.params().zeros_like();
  std::vector<std::size_t> order(instances.size());
  std::iota(order.begin(), order.end(), 0);

  TrainHistory history;
  for (int epoch = 1; epoch <= hp.epochs; ++epoch) {
    shuffle.shuffle(std::span<std::size_t>(order));
    double epoch_loss = 0.0;
    std::size_t batches = 0;
    TaskLosses task_sum{0.0, 0.0, 0.0};
    for (std::size_t start = 0; start < order.size(); start += hp.batch_size) {
      const std::size_t end = std::min(order.size(), start + hp.batch_size);
      const double scale = 1.0 / static_cast<double>(end - start);
      grads.set_zero();
      double data = 0.0;
      for (std::size_t k = start; k < end; ++k) {
        const TrainingInstance& inst = instances[order[k]];
        auto pass = model.forward(inst.branch, &dropout);
        data += scale * model.backward(pass, inst, grads, scale);
        const TaskLosses tl = task_losses(pass.predictions(), inst);
        for (std::size_t t = 0; t < 3; ++t) task_sum[t] += tl[t];
      }
      const double batch_loss = data + neural::l2_penalty(model.params(), hp.l2);
      if (!std::isfinite(batch_loss)) {
        throw RuntimeFailure("non-finite loss at epoch " + std::to_string(epoch) + ", batch " +
                             std::to_string(batches + 1));
      }
      neural::add_l2_gradient(model.params(), hp.l2, grads);
      adam.step(model.params(), grads);
      epoch_loss += batch_loss;
      ++batches;
    }
    history.loss.push_back(batches ? epoch_loss / static_cast<double>(batches) : 0.0);
    for (double& v : task_sum) v /= std::max<double>(1.0, static_cast<double>(instances.size()));
    history.task_loss.push_back(task_sum);
    if (on_epoch && !on_epoch(epoch, model)) break;
  }
  return history;
}

std::array<std::optional<double>, 3> branch_accuracy(const MTLModel& model,
                                                      std::span<const TrainingInstance> instances) {
  std::array<std::size_t, 3> correct{0, 0, 0}, total{0, 0, 0};
  for (const TrainingInstance& inst : instances) {
    const Predictions p = model.predict(inst.branch);
    if (!p.stance.empty()) {
      for (std::size_t i = 0; i < inst.stance.size(); ++i) {
        if (!inst.stance[i]) continue;
        ++total[0];
        correct[0] += argmax(p.stance[i]) == static_cast<std::size_t>(*inst.stance[i]);
      }
    }
    if (!p.detection.empty() && inst.detection) {
      ++total[1];
      correct[1] += argmax(p.detection) == static_cast<std::size_t>(*inst.detection);
    }
    if (!p.veracity.empty() && inst.veracity) {
      ++total[2];
      correct[2] += argmax(p.veracity) == static_cast<std::size_t>(*inst.veracity);
    }
  }
  std::array<std::optional<double>, 3> out;
  for (std::size_t t = 0; t < 3; ++t) {
    if (total[t] > 0) out[t] = static_cast<double>(correct[t]) / static_cast<double>(total[t]);
  }
  return out;
}

std::size_t majority_vote(std::span<const std::vector<double>> branch_probs) {
  if (branch_probs.empty()) throw ValidationError("majority_vote: no branches");
  const std::size_t k = branch_probs.front().size();
  std::vector<std::size_t> votes(k, 0);
  std::vector<double> mass(k, 0.0);
  for (const auto& p : branch_probs) {
    if (p.size() != k) throw ValidationError("majority_vote: inconsistent class counts");
    ++votes[argmax(p)];
    for (std::size_t c = 0; c < k; ++c) mass[c] += p[c];
  }
  std::size_t best = 0;
  for (std::size_t c = 1; c < k; ++c) {
    if (votes[c] > votes[best] || (votes[c] == votes[best] && mass[c] > mass[best])) best = c;
  }
  return best;
}

ThreadPrediction predict_thread(const MTLModel& model, const Thread& thread, const EmbeddingTable& table) {
  const auto instances = make_instances(thread, table, model.hyper().max_branch_len);
  std::vector<std::vector<double>> ver, det;
  std::vector<std::optional<Stance>> stance(thread.posts.size());
  for (const TrainingInstance& inst : instances) {
    const Predictions p = model.predict(inst.branch);
    if (!p.veracity.empty()) ver.push_back(p.veracity);
    if (!p.detection.empty()) det.push_back(p.detection);
    for (std::size_t i = 0; i < p.stance.size(); ++i) {
      auto& slot = stance[inst.posts[i]];
      if (!slot) slot = static_cast<Stance>(argmax(p.stance[i]));
    }
  }

  auto summarise = [](const std::vector<std::vector<double>>& probs) {
    TaskPrediction tp;
    tp.label = majority_vote(probs);
    tp.probs.assign(probs.front().size(), 0.0);
    for (const auto& p : probs) {
      for (std::size_t c = 0; c < p.size(); ++c) tp.probs[c] += p[c];
    }
    for (double& v : tp.probs) v /= static_cast<double>(probs.size());
    return tp;
  };

  ThreadPrediction out;
  out.thread = thread.id();
  out.event = thread.event;
  if (!ver.empty()) out.veracity = summarise(ver);
  if (!det.empty()) out.detection = summarise(det);
  if (model.has_head(Task::Stance)) {
    std::vector<StancePrediction> sp;
    for (std::size_t i = 0; i < thread.posts.size(); ++i) {
      if (stance[i]) sp.push_back({thread.posts[i].id, *stance[i]});
    }
    out.stance = std::move(sp);
  }
  return out;
}

neural::GradCheckReport grad_check_model(MTLModel& model, const TrainingInstance& instance, std::uint64_t dropout_seed,
                                         double epsilon) {
  ParamSet analytic = model.params().zeros_like();
  {
    DropoutStreams streams(dropout_seed);
    auto pass = model.forward(instance.branch, &streams);
    model.backward(pass, instance, analytic, 1.0);
    neural::add_l2_gradient(model.params(), model.hyper().l2, analytic);
  }
  auto loss = [&]() {
    DropoutStreams streams(dropout_seed);
    auto pass = model.forward(instance.branch, &streams);
    return model.total_loss(pass.predictions(), instance);
  };
  return neural::grad_check(model.params(), analytic, loss, epsilon);
}

// ---------------------------------------------------------------------------

nlohmann::ordered_json to_json(const HyperParams& hp) {
  nlohmann::ordered_json j;
  j["num_dense_layers"] = hp.num_dense_layers;
  j["num_lstm_layers"] = hp.num_lstm_layers;
  j["dense_width"] = hp.dense_width;
  j["lstm_width"] = hp.lstm_width;
  j["l2"] = hp.l2;
  j["batch_size"] = hp.batch_size;
  j["epochs"] = hp.epochs;
  j["dropout"] = hp.dropout;
  j["learning_rate"] = hp.learning_rate;
  j["max_branch_len"] = hp.max_branch_len;
  j["task_weights"] = hp.task_weights;
  return j;
}

HyperParams hyperparams_from_json(const nlohmann::json& j) {
  HyperParams hp;
  hp.num_dense_layers = j.at("num_dense_layers").get<int>();
  hp.num_lstm_layers = j.at("num_lstm_layers").get<int>();
  hp.dense_width = j.at("dense_width").get<std::size_t>();
  hp.lstm_width = j.at("lstm_width").get<std::size_t>();
  hp.l2 = j.at("l2").get<double>();
  hp.batch_size = j.at("batch_size").get<std::size_t>();
  hp.epochs = j.at("epochs").get<int>();
  hp.dropout = j.at("dropout").get<double>();
  hp.learning_rate = j.at("learning_rate").get<double>();
  hp.max_branch_len = j.at("max_branch_len").get<std::size_t>();
  hp.task_weights = j.at("task_weights").get<std::array<double, 3>>();
  hp.validate();
  return hp;
}

namespace {
constexpr const char* kCheckpointFormat = "rumour-mtl-checkpoint";
constexpr int kCheckpointVersion = 1;
}  // namespace

std::string checkpoint_json(const MTLModel& model) {
  nlohmann::ordered_json j;
  j["format"] = kCheckpointFormat;
  j["version"] = kCheckpointVersion;
  j["tasks"] = model.tasks().to_string();
  j["input_dim"] = model.input_dim();
  j["hyperparams"] = to_json(model.hyper());
  j["blocks"] = neural::to_json(model.params());
  return j.dump() + "\n";
}

void save_checkpoint(const MTLModel& model, const std::filesystem::path& path) {
  write_text_atomic(path, checkpoint_json(model));
}

MTLModel load_checkpoint(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ValidationError("cannot open checkpoint " + path.string());
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(in);
  } catch (const nlohmann::json::exception& e) {
    throw ValidationError("checkpoint " + path.string() + ": " + e.what());
  }
  try {
    if (j.at("format").get<std::string>() != kCheckpointFormat) throw ValidationError("not a model checkpoint");
    if (j.at("version").get<int>() != kCheckpointVersion) throw ValidationError("unsupported checkpoint version");
    const TaskSet tasks = TaskSet::parse(j.at("tasks").get<std::string>());
    const HyperParams hp = hyperparams_from_json(j.at("hyperparams"));
    MTLModel model(hp, tasks, j.at("input_dim").get<std::size_t>(), 0);
    ParamSet params = neural::params_from_json(j.at("blocks"));
    if (!params.same_layout(model.params_)) throw ValidationError("parameter blocks do not match the architecture");
    model.params_ = std::move(params);
    return model;
  } catch (const nlohmann::json::exception& e) {
    throw ValidationError("checkpoint " + path.string() + ": " + e.what());
  } catch (const ValidationError& e) {
    throw ValidationError("checkpoint " + path.string() + ": " + e.what());
  }
}

}  // namespace rumour
