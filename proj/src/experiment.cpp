#include "rumour/experiment.hpp"

#include <algorithm>
#include <charconv>
#include <fstream>
#include <map>
#include <sstream>

namespace rumour {

namespace {

std::string trim(const std::string& s) {
  const auto first = s.find_first_not_of(" \t\r");
  if (first == std::string::npos) return {};
  const auto last = s.find_last_not_of(" \t\r");
  return s.substr(first, last - first + 1);
}

std::string shortest(double v) {
  char buf[64];
  auto [end, ec] = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, end);
}

std::vector<std::string> split_list(const std::string& s) {
  std::vector<std::string> out;
  std::stringstream in(s);
  std::string item;
  while (std::getline(in, item, ',')) {
    item = trim(item);
    if (!item.empty()) out.push_back(item);
  }
  return out;
}

}  // namespace

KeyValues KeyValues::parse(const std::string& text, const std::string& origin) {
  KeyValues kv;
  kv.origin_ = origin;
  std::istringstream in(text);
  std::string line;
  for (int lineno = 1; std::getline(in, line); ++lineno) {
    const std::string t = trim(line);
    if (t.empty() || t[0] == '#') continue;
    const auto eq = t.find('=');
    const std::string where = origin + ":" + std::to_string(lineno);
    if (eq == std::string::npos) throw ValidationError(where + ": expected 'key = value'");
    const std::string key = trim(t.substr(0, eq));
    if (key.empty()) throw ValidationError(where + ": empty key");
    if (kv.values_.count(key)) throw ValidationError(where + ": duplicate key '" + key + "'");
    kv.values_[key] = trim(t.substr(eq + 1));
  }
  return kv;
}

KeyValues KeyValues::load(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ValidationError("cannot read config file " + path.string());
  std::stringstream buf;
  buf << in.rdbuf();
  return parse(buf.str(), path.string());
}

void KeyValues::set(const std::string& key, const std::string& value) { values_[trim(key)] = trim(value); }

void KeyValues::set_assignment(const std::string& assignment) {
  const auto eq = assignment.find('=');
  if (eq == std::string::npos || trim(assignment.substr(0, eq)).empty()) {
    throw ValidationError("override '" + assignment + "' is not of the form key=value");
  }
  set(assignment.substr(0, eq), assignment.substr(eq + 1));
}

std::optional<std::string> KeyValues::get(const std::string& key) const {
  auto it = values_.find(key);
  if (it == values_.end()) return std::nullopt;
  return it->second;
}

void KeyValues::require_known(const std::vector<std::string>& known) const {
  for (const auto& [key, value] : values_) {
    if (std::find(known.begin(), known.end(), key) == known.end()) {
      throw ValidationError(origin_ + ": unknown key '" + key + "'");
    }
  }
}

std::int64_t parse_int(const std::string& key, const std::string& value) {
  std::int64_t v = 0;
  auto [end, ec] = std::from_chars(value.data(), value.data() + value.size(), v);
  if (ec != std::errc() || end != value.data() + value.size()) {
    throw ValidationError("'" + key + "' expects an integer, got '" + value + "'");
  }
  return v;
}

double parse_double(const std::string& key, const std::string& value) {
  double v = 0.0;
  auto [end, ec] = std::from_chars(value.data(), value.data() + value.size(), v);
  if (ec != std::errc() || end != value.data() + value.size()) {
    throw ValidationError("'" + key + "' expects a number, got '" + value + "'");
  }
  return v;
}

// ---------------------------------------------------------------------------

std::vector<std::string> RunConfig::known_keys() {
  return {"corpus",         "embeddings",     "embedding_dim",   "embedding_seed",   "seed",
          "tasks",          "test_event",     "dev_event",       "output",           "objective",
          "space",          "tpe_gamma",      "tpe_startup",     "tpe_candidates",   "tpe_prior",
          "svm_lambda",     "svm_epochs",     "nile_stance",     "checkpoint_every", "models",
          "trials",         "jobs",           "dense_layers",    "lstm_layers",      "dense_width",
          "lstm_width",     "l2",             "batch_size",      "epochs",           "dropout",
          "learning_rate",  "max_branch_len", "weight_stance",   "weight_detection", "weight_veracity"};
}

RunConfig RunConfig::from(const KeyValues& kv, const std::filesystem::path& base_dir) {
  kv.require_known(known_keys());
  RunConfig c;
  auto path = [&](const std::string& v) {
    std::filesystem::path p(v);
    return p.is_relative() && !base_dir.empty() ? base_dir / p : p;
  };
  auto positive = [](const std::string& key, std::int64_t v) {
    if (v < 1) throw ValidationError("'" + key + "' must be positive");
    return v;
  };
  for (const auto& [key, v] : kv.values()) {
    if (key == "corpus") c.corpus = path(v);
    else if (key == "embeddings") c.embeddings = path(v);
    else if (key == "embedding_dim") c.embedding_dim = static_cast<std::size_t>(positive(key, parse_int(key, v)));
    else if (key == "embedding_seed") c.embedding_seed = static_cast<std::uint64_t>(parse_int(key, v));
    else if (key == "seed") c.seed = static_cast<std::uint64_t>(parse_int(key, v));
    else if (key == "tasks") c.tasks = TaskSet::parse(v);
    else if (key == "test_event") c.test_event = v;
    else if (key == "dev_event") c.dev_event = v;
    else if (key == "output") c.output = path(v);
    else if (key == "objective") c.objective = parse_objective_kind(v);
    else if (key == "space") c.space = v;
    else if (key == "tpe_gamma") c.tpe.gamma = parse_double(key, v);
    else if (key == "tpe_startup") c.tpe.n_startup = static_cast<std::size_t>(std::max<std::int64_t>(0, parse_int(key, v)));
    else if (key == "tpe_candidates") c.tpe.n_candidates = static_cast<std::size_t>(positive(key, parse_int(key, v)));
    else if (key == "tpe_prior") c.tpe.prior_weight = parse_double(key, v);
    else if (key == "svm_lambda") c.svm.lambda = parse_double(key, v);
    else if (key == "svm_epochs") c.svm.epochs = static_cast<int>(positive(key, parse_int(key, v)));
    else if (key == "nile_stance") c.nile_stance = v;
    else if (key == "checkpoint_every") c.checkpoint_every = static_cast<int>(parse_int(key, v));
    else if (key == "models") c.models = split_list(v);
    else if (key == "trials") c.trials = static_cast<std::size_t>(positive(key, parse_int(key, v)));
    else if (key == "jobs") c.jobs = static_cast<int>(positive(key, parse_int(key, v)));
    else if (key == "dense_layers") c.hp.num_dense_layers = static_cast<int>(parse_int(key, v));
    else if (key == "lstm_layers") c.hp.num_lstm_layers = static_cast<int>(parse_int(key, v));
    else if (key == "dense_width") c.hp.dense_width = static_cast<std::size_t>(positive(key, parse_int(key, v)));
    else if (key == "lstm_width") c.hp.lstm_width = static_cast<std::size_t>(positive(key, parse_int(key, v)));
    else if (key == "l2") c.hp.l2 = parse_double(key, v);
    else if (key == "batch_size") c.hp.batch_size = static_cast<std::size_t>(positive(key, parse_int(key, v)));
    else if (key == "epochs") c.hp.epochs = static_cast<int>(parse_int(key, v));
    else if (key == "dropout") c.hp.dropout = parse_double(key, v);
    else if (key == "learning_rate") c.hp.learning_rate = parse_double(key, v);
    else if (key == "max_branch_len") c.hp.max_branch_len = static_cast<std::size_t>(positive(key, parse_int(key, v)));
    else if (key == "weight_stance") c.hp.task_weights[static_cast<std::size_t>(Task::Stance)] = parse_double(key, v);
    else if (key == "weight_detection") c.hp.task_weights[static_cast<std::size_t>(Task::Detection)] = parse_double(key, v);
    else if (key == "weight_veracity") c.hp.task_weights[static_cast<std::size_t>(Task::Veracity)] = parse_double(key, v);
  }
  c.validate();
  return c;
}

void RunConfig::validate() const {
  if (!tasks.contains(Task::Veracity)) throw ValidationError("tasks must include veracity");
  hp.validate();
  tpe.validate();
  SearchSpace::by_name(space);
  if (nile_stance != "predicted" && nile_stance != "gold") {
    throw ValidationError("nile_stance must be 'predicted' or 'gold'");
  }
  if (!(svm.lambda > 0.0)) throw ValidationError("svm_lambda must be positive");
  if (checkpoint_every < 0) throw ValidationError("checkpoint_every must be non-negative");
  for (const std::string& m : models) {
    const auto& names = model_names();
    if (std::find(names.begin(), names.end(), m) == names.end()) {
      throw ValidationError("unknown model '" + m + "'");
    }
  }
}

EmbeddingTable make_embeddings(const RunConfig& cfg) {
  if (cfg.embeddings) return EmbeddingTable::load(*cfg.embeddings);
  return EmbeddingTable::hashed(cfg.embedding_dim, cfg.embedding_seed.value_or(derive_seed(cfg.seed, "embeddings")));
}

// ---------------------------------------------------------------------------

const std::vector<std::string>& model_names() {
  static const std::vector<std::string> names{"majority", "nile", "single", "mtl2vs", "mtl2vd", "mtl3"};
  return names;
}

std::optional<TaskSet> neural_tasks(const std::string& model) {
  if (model == "single") return TaskSet{Task::Veracity};
  if (model == "mtl2vs") return TaskSet{Task::Veracity, Task::Stance};
  if (model == "mtl2vd") return TaskSet{Task::Veracity, Task::Detection};
  if (model == "mtl3") return TaskSet{Task::Veracity, Task::Stance, Task::Detection};
  return std::nullopt;
}

std::vector<ThreadPrediction> neural_fit_predict(const HyperParams& hp, TaskSet tasks, const Corpus& train,
                                                 const Corpus& test, const EmbeddingTable& table, std::uint64_t seed,
                                                 TrainHistory* history) {
  const auto instances = make_instances(train, table, hp.max_branch_len);
  MTLModel model = MTLModel::build(hp, tasks, table.dimension(), derive_seed(seed, "model"));
  TrainHistory h = rumour::train(model, instances, derive_seed(seed, "train"));
  if (history) *history = std::move(h);
  std::vector<ThreadPrediction> out;
  out.reserve(test.threads.size());
  for (const Thread& t : test.threads) out.push_back(predict_thread(model, t, table));
  return out;
}

std::vector<StanceAssignment> predicted_stances(const HyperParams& hp, const Corpus& train, const Corpus& target,
                                                const EmbeddingTable& table, std::uint64_t seed) {
  const auto instances = make_instances(train, table, hp.max_branch_len);
  MTLModel tagger = MTLModel::build_stance_tagger(hp, table.dimension(), derive_seed(seed, "tagger"));
  rumour::train(tagger, instances, derive_seed(seed, "tagger/train"));
  std::vector<StanceAssignment> out;
  out.reserve(target.threads.size());
  for (const Thread& t : target.threads) {
    const ThreadPrediction p = predict_thread(tagger, t, table);
    std::map<std::string, Stance> by_post;
    for (const StancePrediction& sp : *p.stance) by_post.emplace(sp.post, sp.label);
    StanceAssignment a(t.posts.size());
    for (std::size_t i = 0; i < t.posts.size(); ++i) {
      auto it = by_post.find(t.posts[i].id);
      if (it != by_post.end()) a[i] = it->second;
    }
    out.push_back(std::move(a));
  }
  return out;
}

namespace {

bool has_stance_labels(const Corpus& c) {
  for (const Thread& t : c.threads) {
    for (const Post& p : t.posts) {
      if (p.stance) return true;
    }
  }
  return false;
}

std::vector<ThreadPrediction> tag_model(std::vector<ThreadPrediction> preds, const std::string& name) {
  for (ThreadPrediction& p : preds) p.model = name;
  return preds;
}

}  // namespace

FoldPredictor make_predictor(const std::string& model, const RunConfig& cfg, const EmbeddingTable& table) {
  if (model == "majority") {
    return [](const Corpus& train, const Corpus& test, std::uint64_t) {
      return majority_predict(majority_fit(train), test);
    };
  }
  if (model == "nile") {
    const HyperParams hp = cfg.hp;
    const SvmOptions svm = cfg.svm;
    const bool predicted = cfg.nile_stance == "predicted";
    return [hp, svm, predicted, &table](const Corpus& train, const Corpus& test, std::uint64_t seed) {
      std::vector<StanceAssignment> train_stances, test_stances;
      for (const Thread& t : train.threads) train_stances.push_back(gold_stances(t));
      if (predicted && has_stance_labels(train)) {
        test_stances = predicted_stances(hp, train, test, table, seed);
      } else {
        for (const Thread& t : test.threads) test_stances.push_back(gold_stances(t));
      }
      return nile_fit_predict(train, train_stances, test, test_stances, svm, derive_seed(seed, "svm"));
    };
  }
  if (auto tasks = neural_tasks(model)) {
    const HyperParams hp = cfg.hp;
    const TaskSet ts = *tasks;
    return [hp, ts, model, &table](const Corpus& train, const Corpus& test, std::uint64_t seed) {
      return tag_model(neural_fit_predict(hp, ts, train, test, table, seed), model);
    };
  }
  throw ValidationError("unknown model '" + model + "'");
}

Evaluation evaluate_configuration(const HyperParams& hp, TaskSet tasks, const Corpus& train, const Corpus& dev,
                                  const EmbeddingTable& table, std::uint64_t seed) {
  const auto preds = neural_fit_predict(hp, tasks, train, dev, table, seed);
  Evaluation e;
  const FoldResult ver = score_fold(dev, preds, Task::Veracity, "dev");
  if (ver.metrics.count == 0) throw ValidationError("development set has no veracity labels");
  e.macro_f[Task::Veracity] = ver.metrics.macro_f;
  e.accuracy = ver.metrics.accuracy;
  if (tasks.contains(Task::Detection)) {
    const FoldResult det = score_fold(dev, preds, Task::Detection, "dev");
    if (det.metrics.count > 0) e.macro_f[Task::Detection] = det.metrics.macro_f;
  }
  if (tasks.contains(Task::Stance)) {
    const Metrics st = stance_metrics(dev, preds);
    if (st.count > 0) e.macro_f[Task::Stance] = st.macro_f;
  }
  return e;
}

std::string hyperparams_to_key_values(const HyperParams& hp) {
  std::string out;
  auto line = [&](const char* k, const std::string& v) { out += std::string(k) + " = " + v + "\n"; };
  line("dense_layers", std::to_string(hp.num_dense_layers));
  line("lstm_layers", std::to_string(hp.num_lstm_layers));
  line("dense_width", std::to_string(hp.dense_width));
  line("lstm_width", std::to_string(hp.lstm_width));
  line("l2", shortest(hp.l2));
  line("batch_size", std::to_string(hp.batch_size));
  line("epochs", std::to_string(hp.epochs));
  line("dropout", shortest(hp.dropout));
  line("learning_rate", shortest(hp.learning_rate));
  line("max_branch_len", std::to_string(hp.max_branch_len));
  line("weight_stance", shortest(hp.task_weights[static_cast<std::size_t>(Task::Stance)]));
  line("weight_detection", shortest(hp.task_weights[static_cast<std::size_t>(Task::Detection)]));
  line("weight_veracity", shortest(hp.task_weights[static_cast<std::size_t>(Task::Veracity)]));
  return out;
}

}  // namespace rumour
