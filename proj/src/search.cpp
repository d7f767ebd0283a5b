#include "rumour/search.hpp"

#include <omp.h>

#include <algorithm>
#include <cmath>
#include <exception>
#include <limits>
#include <numeric>
#include <set>

namespace rumour {

SearchSpace::SearchSpace(std::vector<Dimension> dims) : dims_(std::move(dims)) {
  if (dims_.empty()) throw ValidationError("search space has no dimensions");
  for (const Dimension& d : dims_) {
    if (d.values.empty()) throw ValidationError("search dimension '" + d.name + "' is empty");
  }
}

SearchSpace SearchSpace::paper() {
  return SearchSpace({{"dense_layers", {1, 2, 3, 4}, true},
                      {"lstm_layers", {1, 2}, true},
                      {"dense_width", {300, 400, 500, 600}, true},
                      {"lstm_width", {100, 200, 300}, true},
                      {"l2", {1e-4, 1e-3}, false}});
}

SearchSpace SearchSpace::miniature() {
  return SearchSpace({{"dense_layers", {1, 2, 3, 4}, true},
                      {"lstm_layers", {1, 2}, true},
                      {"dense_width", {8, 12, 16, 20}, true},
                      {"lstm_width", {4, 6, 8}, true},
                      {"l2", {1e-4, 1e-3}, false}});
}

SearchSpace SearchSpace::by_name(const std::string& name) {
  if (name == "paper") return paper();
  if (name == "mini") return miniature();
  throw ValidationError("unknown search space '" + name + "' (expected paper or mini)");
}

std::size_t SearchSpace::size() const {
  if (dims_.empty()) return 0;
  std::size_t n = 1;
  for (const Dimension& d : dims_) n *= d.values.size();
  return n;
}

bool SearchSpace::contains(const Configuration& c) const {
  if (c.size() != dims_.size()) return false;
  for (std::size_t i = 0; i < c.size(); ++i) {
    if (c[i] >= dims_[i].values.size()) return false;
  }
  return true;
}

double SearchSpace::value(const Configuration& c, std::size_t dim) const { return dims_.at(dim).values.at(c.at(dim)); }

Configuration SearchSpace::at(std::size_t flat) const {
  if (flat >= size()) throw ValidationError("configuration index out of range");
  Configuration c(dims_.size());
  for (std::size_t i = dims_.size(); i-- > 0;) {
    c[i] = flat % dims_[i].values.size();
    flat /= dims_[i].values.size();
  }
  return c;
}

std::size_t SearchSpace::flat_index(const Configuration& c) const {
  if (!contains(c)) throw ValidationError("configuration outside the search space");
  std::size_t flat = 0;
  for (std::size_t i = 0; i < dims_.size(); ++i) flat = flat * dims_[i].values.size() + c[i];
  return flat;
}

HyperParams SearchSpace::apply(const Configuration& c, HyperParams base) const {
  if (!contains(c)) throw ValidationError("configuration outside the search space");
  for (std::size_t i = 0; i < dims_.size(); ++i) {
    const std::string& name = dims_[i].name;
    const double v = dims_[i].values[c[i]];
    if (name == "dense_layers") base.num_dense_layers = static_cast<int>(v);
    else if (name == "lstm_layers") base.num_lstm_layers = static_cast<int>(v);
    else if (name == "dense_width") base.dense_width = static_cast<std::size_t>(v);
    else if (name == "lstm_width") base.lstm_width = static_cast<std::size_t>(v);
    else if (name == "l2") base.l2 = v;
    else throw ValidationError("search dimension '" + name + "' does not map to a hyperparameter");
  }
  return base;
}

nlohmann::ordered_json SearchSpace::to_json(const Configuration& c) const {
  nlohmann::ordered_json j = nlohmann::ordered_json::object();
  for (std::size_t i = 0; i < dims_.size(); ++i) {
    const double v = value(c, i);
    if (dims_[i].integral) j[dims_[i].name] = static_cast<long long>(v);
    else j[dims_[i].name] = v;
  }
  return j;
}

void TPEConfig::validate() const {
  if (!(gamma > 0.0 && gamma < 1.0)) throw ValidationError("tpe gamma must lie in (0,1)");
  if (n_candidates < 1) throw ValidationError("tpe n_candidates must be positive");
  if (!(prior_weight > 0.0) || !std::isfinite(prior_weight)) throw ValidationError("tpe prior weight must be positive");
}

ObjectiveKind parse_objective_kind(const std::string& s) {
  if (s == "product") return ObjectiveKind::Product;
  if (s == "accuracy") return ObjectiveKind::Accuracy;
  throw ValidationError("unknown objective '" + s + "' (expected product or accuracy)");
}

double objective(const std::map<Task, double>& macro_f) {
  if (macro_f.empty()) throw ValidationError("objective needs at least one task score");
  double product = 1.0;
  for (const auto& [task, f] : macro_f) {
    if (!(f >= 0.0 && f <= 1.0)) {
      throw ValidationError("macro-F for " + std::string(task_name(task)) + " outside [0,1]");
    }
    product *= 1.0 - f;
  }
  return product;
}

// ---------------------------------------------------------------------------

namespace {

/// Trial positions ordered best first: successful trials by objective, then
/// failed ones; ties keep history order.
std::vector<std::size_t> rank_trials(const std::vector<Trial>& history) {
  std::vector<std::size_t> order(history.size());
  std::iota(order.begin(), order.end(), 0);
  auto key = [&](std::size_t i) {
    return history[i].status == TrialStatus::Ok ? history[i].objective : std::numeric_limits<double>::infinity();
  };
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return key(a) < key(b); });
  return order;
}

Configuration uniform_configuration(const SearchSpace& space, Rng& rng) {
  Configuration c;
  for (const Dimension& d : space.dimensions()) c.push_back(rng.index(d.values.size()));
  return c;
}

}  // namespace

std::vector<DimensionDensities> tpe_densities(const std::vector<Trial>& history, const SearchSpace& space,
                                              const TPEConfig& cfg) {
  const auto order = rank_trials(history);
  const std::size_t n = history.size();
  const std::size_t n_good =
      n == 0 ? 0 : std::max<std::size_t>(1, static_cast<std::size_t>(std::ceil(cfg.gamma * static_cast<double>(n))));

  std::vector<DimensionDensities> out;
  for (std::size_t d = 0; d < space.dimensions().size(); ++d) {
    const std::size_t k = space.dimensions()[d].values.size();
    std::vector<double> good(k, 0.0), bad(k, 0.0);
    for (std::size_t r = 0; r < n; ++r) {
      const Configuration& c = history[order[r]].config;
      (r < n_good ? good : bad)[c.at(d)] += 1.0;
    }
    const double share = cfg.prior_weight / static_cast<double>(k);
    const double good_total = static_cast<double>(n_good) + cfg.prior_weight;
    const double bad_total = static_cast<double>(n - n_good) + cfg.prior_weight;
    for (std::size_t v = 0; v < k; ++v) {
      good[v] = (good[v] + share) / good_total;
      bad[v] = (bad[v] + share) / bad_total;
    }
    out.push_back({std::move(good), std::move(bad)});
  }
  return out;
}

Configuration tpe_suggest(const std::vector<Trial>& history, const SearchSpace& space, const TPEConfig& cfg, Rng& rng) {
  if (space.size() == 0) throw ValidationError("search space is empty");
  cfg.validate();
  if (history.size() < cfg.n_startup) return uniform_configuration(space, rng);

  const auto densities = tpe_densities(history, space, cfg);
  std::set<Configuration> evaluated;
  for (const Trial& t : history) evaluated.insert(t.config);

  // Candidates already in the history are only used when every draw repeats one.
  Configuration best, best_repeat;
  double best_score = -std::numeric_limits<double>::infinity();
  double best_repeat_score = best_score;
  for (std::size_t i = 0; i < cfg.n_candidates; ++i) {
    Configuration c;
    double score = 0.0;
    for (const DimensionDensities& dd : densities) {
      const std::size_t v = rng.categorical(dd.good);
      c.push_back(v);
      score += std::log(dd.good[v]) - std::log(dd.bad[v]);
    }
    const bool repeat = evaluated.count(c) > 0;
    double& target_score = repeat ? best_repeat_score : best_score;
    if (score > target_score) {
      target_score = score;
      (repeat ? best_repeat : best) = std::move(c);
    }
  }
  return best.empty() ? best_repeat : best;
}

// ---------------------------------------------------------------------------

namespace {

void evaluate_trial(Trial& t, const Evaluator& evaluate, ObjectiveKind kind) {
  try {
    t.evaluation = evaluate(t.config, t.seed);
    if (kind == ObjectiveKind::Accuracy) {
      if (!t.evaluation.accuracy) throw RuntimeFailure("evaluation reported no development accuracy");
      const double a = *t.evaluation.accuracy;
      if (!(a >= 0.0 && a <= 1.0)) throw RuntimeFailure("development accuracy outside [0,1]");
      t.objective = 1.0 - a;
    } else {
      t.objective = objective(t.evaluation.macro_f);
    }
    t.status = TrialStatus::Ok;
  } catch (const std::exception& e) {
    t.status = TrialStatus::Failed;
    t.objective = 1.0;
    t.error = e.what();
  }
}

}  // namespace

SearchResult run_search(const SearchSpace& space, const Evaluator& evaluate, const SearchOptions& options,
                        std::uint64_t seed, const TrialCallback& on_trial) {
  if (space.size() == 0) throw ValidationError("search space is empty");
  options.tpe.validate();
  Rng rng(derive_seed(seed, "tpe"));

  SearchResult result;
  auto& history = result.history;
  auto new_trial = [&](std::size_t i) {
    Trial t;
    t.index = i;
    t.seed = derive_seed(seed, "trial", i);
    return t;
  };

  const std::size_t startup = std::min(options.n_trials, options.tpe.n_startup);
  for (std::size_t i = 0; i < startup; ++i) {
    Trial t = new_trial(i);
    t.config = uniform_configuration(space, rng);
    history.push_back(std::move(t));
  }
#pragma omp parallel for schedule(dynamic, 1) num_threads(std::max(1, options.jobs)) if (options.jobs > 1)
  for (std::ptrdiff_t i = 0; i < static_cast<std::ptrdiff_t>(startup); ++i) {
    evaluate_trial(history[static_cast<std::size_t>(i)], evaluate, options.kind);
  }
  if (on_trial && startup > 0) on_trial(history);

  for (std::size_t i = startup; i < options.n_trials; ++i) {
    Trial t = new_trial(i);
    t.config = tpe_suggest(history, space, options.tpe, rng);
    evaluate_trial(t, evaluate, options.kind);
    history.push_back(std::move(t));
    if (on_trial) on_trial(history);
  }

  for (std::size_t i = 0; i < history.size(); ++i) {
    if (history[i].status != TrialStatus::Ok) continue;
    if (!result.best || history[i].objective < history[*result.best].objective) result.best = i;
  }
  return result;
}

nlohmann::ordered_json trial_to_json(const Trial& t, const SearchSpace& space) {
  nlohmann::ordered_json j;
  j["trial"] = t.index;
  j["config"] = space.to_json(t.config);
  if (t.status == TrialStatus::Ok) j["objective"] = t.objective;
  else j["objective"] = nullptr;
  nlohmann::ordered_json mf = nlohmann::ordered_json::object();
  for (const auto& [task, f] : t.evaluation.macro_f) mf[std::string(task_name(task))] = f;
  j["macro_f"] = std::move(mf);
  if (t.evaluation.accuracy) j["dev_accuracy"] = *t.evaluation.accuracy;
  else j["dev_accuracy"] = nullptr;
  j["seed"] = t.seed;
  if (t.status == TrialStatus::Failed) {
    j["status"] = "failed";
    j["error"] = t.error;
  }
  return j;
}

std::string trial_log(const std::vector<Trial>& history, const SearchSpace& space) {
  std::string out;
  for (const Trial& t : history) out += trial_to_json(t, space).dump() + "\n";
  return out;
}

}  // namespace rumour
