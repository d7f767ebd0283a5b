#include "rumour/cli.hpp"

#include <algorithm>
#include <cstdio>
#include <ostream>

#include "CLI11.hpp"
#include "json.hpp"
#include "rumour/analysis.hpp"
#include "rumour/experiment.hpp"

namespace rumour::cli {

namespace {

namespace fs = std::filesystem;
using nlohmann::ordered_json;

struct Overrides {
  std::vector<std::string> sets;
  std::optional<std::uint64_t> seed;
  std::string output;
  int jobs = 0;
};

void add_overrides(CLI::App* cmd, Overrides& o) {
  cmd->add_option("--set", o.sets, "Override a config entry (key=value); repeatable");
  cmd->add_option("--seed", o.seed, "Global seed (overrides the config)");
  cmd->add_option("-o,--output", o.output, "Output directory (overrides the config)");
}

RunConfig load_run_config(const std::string& path, const Overrides& o) {
  KeyValues kv = KeyValues::load(path);
  for (const std::string& s : o.sets) kv.set_assignment(s);
  if (o.seed) kv.set("seed", std::to_string(*o.seed));
  if (o.jobs > 0) kv.set("jobs", std::to_string(o.jobs));
  RunConfig cfg = RunConfig::from(kv, fs::path(path).parent_path());
  if (!o.output.empty()) cfg.output = o.output;
  return cfg;
}

std::string fmt(const char* pattern, double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, pattern, v);
  return buf;
}

std::vector<std::string> split_commas(const std::string& s) {
  std::vector<std::string> out;
  std::size_t start = 0;
  while (start <= s.size()) {
    const auto end = std::min(s.find(',', start), s.size());
    if (end > start) out.push_back(s.substr(start, end - start));
    start = end + 1;
  }
  return out;
}

Corpus without_event(const Corpus& corpus, const std::string& event) {
  if (event.empty()) return corpus;
  if (std::find(corpus.events.begin(), corpus.events.end(), event) == corpus.events.end()) {
    throw ValidationError("event '" + event + "' not found in the corpus");
  }
  std::vector<std::string> keep;
  for (const std::string& e : corpus.events) {
    if (e != event) keep.push_back(e);
  }
  return select_events(corpus, keep);
}

Corpus only_event(const Corpus& corpus, const std::string& event) {
  if (std::find(corpus.events.begin(), corpus.events.end(), event) == corpus.events.end()) {
    throw ValidationError("event '" + event + "' not found in the corpus");
  }
  const std::vector<std::string> keep{event};
  return select_events(corpus, keep);
}

ordered_json metrics_json(const Metrics& m, Task task) {
  ordered_json j;
  j["count"] = m.count;
  j["accuracy"] = m.accuracy;
  j["macro_f"] = m.macro_f;
  ordered_json f1 = ordered_json::object();
  for (std::size_t c = 0; c < m.f1.size(); ++c) f1[std::string(class_names(task)[c])] = m.f1[c];
  j["f1"] = std::move(f1);
  return j;
}

// ---------------------------------------------------------------------------

int cmd_validate(const std::string& path, std::ostream& out) {
  const Corpus corpus = load_corpus(path);
  out << "corpus " << path << ": ok\n";
  out << corpus.threads.size() << " threads, " << corpus.num_posts() << " posts, " << corpus.events.size()
      << " events\n";
  out << "event,threads,rumours,non_rumours,true,false,unverified,stance_labelled_posts\n";
  for (const std::string& e : corpus.events) {
    std::size_t threads = 0, rumours = 0, non_rumours = 0, stance = 0;
    std::array<std::size_t, 3> ver{0, 0, 0};
    for (const Thread& t : corpus.threads) {
      if (t.event != e) continue;
      ++threads;
      if (t.detection == Detection::Rumour) ++rumours;
      if (t.detection == Detection::NonRumour) ++non_rumours;
      if (t.veracity) ++ver[static_cast<std::size_t>(*t.veracity)];
      for (const Post& p : t.posts) stance += p.stance.has_value();
    }
    out << e << ',' << threads << ',' << rumours << ',' << non_rumours << ','
        << ver[static_cast<std::size_t>(Veracity::True)] << ',' << ver[static_cast<std::size_t>(Veracity::False)]
        << ',' << ver[static_cast<std::size_t>(Veracity::Unverified)] << ',' << stance << '\n';
  }
  return 0;
}

SynthSpec synth_spec_from(const KeyValues& kv, std::uint64_t& seed) {
  kv.require_known({"seed", "events", "threads_per_event", "min_branches", "max_branches", "min_depth", "max_depth",
                    "tokens_per_post", "pool_size", "rumour_prior", "veracity_priors", "coupling", "source_signal"});
  SynthSpec s;
  for (const auto& [key, v] : kv.values()) {
    auto as_int = [&] { return static_cast<int>(parse_int(key, v)); };
    if (key == "seed") seed = static_cast<std::uint64_t>(parse_int(key, v));
    else if (key == "events") s.events = as_int();
    else if (key == "threads_per_event") s.threads_per_event = as_int();
    else if (key == "min_branches") s.min_branches = as_int();
    else if (key == "max_branches") s.max_branches = as_int();
    else if (key == "min_depth") s.min_depth = as_int();
    else if (key == "max_depth") s.max_depth = as_int();
    else if (key == "tokens_per_post") s.tokens_per_post = as_int();
    else if (key == "pool_size") s.pool_size = as_int();
    else if (key == "rumour_prior") s.rumour_prior = parse_double(key, v);
    else if (key == "coupling") s.coupling = parse_double(key, v);
    else if (key == "source_signal") s.source_signal = parse_double(key, v);
    else if (key == "veracity_priors") {
      const auto parts = split_commas(v);
      if (parts.size() != 3) throw ValidationError("veracity_priors expects three comma-separated numbers");
      for (std::size_t i = 0; i < 3; ++i) s.veracity_priors[i] = parse_double(key, parts[i]);
    }
  }
  s.validate();
  return s;
}

int cmd_synth(const std::string& spec_path, const std::string& output, const std::optional<std::uint64_t>& seed_flag,
              std::ostream& out) {
  std::uint64_t seed = 0;
  const SynthSpec spec = synth_spec_from(KeyValues::load(spec_path), seed);
  if (seed_flag) seed = *seed_flag;
  const Corpus corpus = generate_synthetic(spec, seed);
  const fs::path target(output);
  const auto ext = target.extension().string();
  if (ext == ".ndjson" || ext == ".jsonl") save_corpus(corpus, target);
  else save_corpus_dir(corpus, target);
  out << "wrote " << corpus.threads.size() << " threads (" << corpus.events.size() << " events) to " << output
      << '\n';
  return 0;
}

int cmd_analyze(const std::string& path, const std::string& output, std::ostream& out) {
  const Corpus corpus = load_corpus(path);
  const std::string csv = analysis_csv(analyze_corpus(corpus));
  if (!output.empty()) write_text_atomic(output, csv);
  out << csv;
  return 0;
}

int cmd_train(const RunConfig& cfg, std::ostream& out) {
  const Corpus corpus = load_corpus(cfg.corpus);
  const Corpus train_set = without_event(corpus, cfg.test_event);
  const EmbeddingTable table = make_embeddings(cfg);
  const auto instances = make_instances(train_set, table, cfg.hp.max_branch_len);
  MTLModel model = MTLModel::build(cfg.hp, cfg.tasks, table.dimension(), derive_seed(cfg.seed, "model"));

  EpochCallback on_epoch;
  if (cfg.checkpoint_every > 0) {
    on_epoch = [&](int epoch, const MTLModel& m) {
      if (epoch % cfg.checkpoint_every == 0) {
        char name[32];
        std::snprintf(name, sizeof name, "epoch-%04d.json", epoch);
        save_checkpoint(m, cfg.output / "checkpoints" / name);
      }
      return true;
    };
  }
  const TrainHistory history = train(model, instances, derive_seed(cfg.seed, "train"), on_epoch);
  save_checkpoint(model, cfg.output / "model.json");

  std::string csv = "epoch,loss,stance,detection,veracity\n";
  for (std::size_t e = 0; e < history.loss.size(); ++e) {
    csv += std::to_string(e + 1) + "," + fmt("%.10g", history.loss[e]);
    for (double v : history.task_loss[e]) csv += "," + fmt("%.10g", v);
    csv += '\n';
  }
  write_text_atomic(cfg.output / "history.csv", csv);

  const auto acc = branch_accuracy(model, instances);
  out << "trained " << cfg.tasks.to_string() << " model on " << train_set.threads.size() << " threads ("
      << instances.size() << " branches), " << history.loss.size() << " epochs\n";
  if (!history.loss.empty()) out << "final loss " << fmt("%.6f", history.loss.back()) << '\n';
  for (Task t : kAllTasks) {
    if (acc[static_cast<std::size_t>(t)]) {
      out << task_name(t) << " branch accuracy " << fmt("%.4f", *acc[static_cast<std::size_t>(t)]) << '\n';
    }
  }
  out << "checkpoint " << (cfg.output / "model.json").string() << '\n';
  return 0;
}

int cmd_evaluate(const RunConfig& cfg, const std::string& checkpoint, std::ostream& out) {
  const MTLModel model = load_checkpoint(checkpoint);
  const EmbeddingTable table = make_embeddings(cfg);
  if (table.dimension() != model.input_dim()) {
    throw ValidationError("embedding dimension " + std::to_string(table.dimension()) +
                          " does not match the checkpoint input dimension " + std::to_string(model.input_dim()));
  }
  const Corpus corpus = load_corpus(cfg.corpus);
  const Corpus test = cfg.test_event.empty() ? corpus : only_event(corpus, cfg.test_event);

  std::vector<ThreadPrediction> preds;
  for (const Thread& t : test.threads) preds.push_back(predict_thread(model, t, table));
  write_predictions(cfg.output / "predictions.ndjson", preds);

  ordered_json metrics;
  metrics["threads"] = test.threads.size();
  for (Task task : {Task::Veracity, Task::Detection}) {
    if (!model.has_head(task)) continue;
    const Metrics m = score_fold(test, preds, task, "test").metrics;
    metrics[std::string(task_name(task))] = metrics_json(m, task);
    out << task_name(task) << ": macro_f " << format_score(m.macro_f) << ", accuracy " << format_score(m.accuracy)
        << " over " << m.count << " threads\n";
  }
  if (model.has_head(Task::Stance)) {
    const Metrics m = stance_metrics(test, preds);
    metrics["stance"] = metrics_json(m, Task::Stance);
    out << "stance: macro_f " << format_score(m.macro_f) << ", accuracy " << format_score(m.accuracy) << " over "
        << m.count << " posts\n";
  }
  write_text_atomic(cfg.output / "metrics.json", metrics.dump(2) + "\n");
  return 0;
}

int cmd_loeo(const RunConfig& cfg, const std::string& models_flag, std::ostream& out) {
  std::vector<std::string> models = models_flag.empty() ? cfg.models : split_commas(models_flag);
  if (models.empty()) throw ValidationError("no models given (use --models or the 'models' config key)");
  for (const std::string& m : models) {
    const auto& names = model_names();
    if (std::find(names.begin(), names.end(), m) == names.end()) throw ValidationError("unknown model '" + m + "'");
  }
  const Corpus corpus = load_corpus(cfg.corpus);
  const EmbeddingTable table = make_embeddings(cfg);

  std::vector<ModelResult> results;
  for (const std::string& m : models) {
    const FoldPredictor inner = make_predictor(m, cfg, table);
    const fs::path dir = cfg.output / "predictions" / m;
    FoldPredictor predictor = [&](const Corpus& train, const Corpus& test, std::uint64_t seed) {
      auto preds = inner(train, test, seed);
      write_predictions(dir / (test.events.front() + ".ndjson"), preds);
      return preds;
    };
    results.push_back({m, loeo_evaluate(corpus, predictor, cfg.seed, Task::Veracity, cfg.jobs)});
  }
  const Report report = emit_report(results);
  write_text_atomic(cfg.output / "report.csv", report.render_csv());
  write_text_atomic(cfg.output / "report.txt", report.render_text());
  out << report.render_text();
  return 0;
}

int cmd_search(const RunConfig& cfg, std::ostream& out) {
  const Corpus corpus = load_corpus(cfg.corpus);
  const Corpus pool = without_event(corpus, cfg.test_event);
  const std::string dev_event = cfg.dev_event.empty() ? development_event(pool) : cfg.dev_event;
  const Corpus dev = only_event(pool, dev_event);
  const Corpus train_set = without_event(pool, dev_event);
  if (train_set.threads.empty()) throw ValidationError("no training events left after removing the development event");
  const EmbeddingTable table = make_embeddings(cfg);
  const SearchSpace space = SearchSpace::by_name(cfg.space);

  SearchOptions options;
  options.n_trials = cfg.trials;
  options.tpe = cfg.tpe;
  options.kind = cfg.objective;
  options.jobs = cfg.jobs;
  const Evaluator evaluate = [&](const Configuration& c, std::uint64_t seed) {
    return evaluate_configuration(space.apply(c, cfg.hp), cfg.tasks, train_set, dev, table, seed);
  };
  const fs::path log_path = cfg.output / "trials.ndjson";
  const SearchResult result = run_search(space, evaluate, options, cfg.seed, [&](const std::vector<Trial>& history) {
    write_text_atomic(log_path, trial_log(history, space));
  });
  write_text_atomic(log_path, trial_log(result.history, space));

  std::size_t failed = 0;
  for (const Trial& t : result.history) failed += t.status == TrialStatus::Failed;
  out << result.history.size() << " trials on development event '" << dev_event << "' (" << failed << " failed)\n";
  if (!result.best) throw RuntimeFailure("every search trial failed; see " + log_path.string());

  const Trial& best = result.history[*result.best];
  write_text_atomic(cfg.output / "best_config.txt", hyperparams_to_key_values(space.apply(best.config, cfg.hp)));
  write_text_atomic(cfg.output / "best_trial.json", trial_to_json(best, space).dump(2) + "\n");
  out << "best trial " << best.index << ": objective " << fmt("%.4f", best.objective) << ", config "
      << space.to_json(best.config).dump() << '\n';
  return 0;
}

// ---------------------------------------------------------------------------

void report_error(std::ostream& err, bool as_json, int status, const std::string& kind, const std::string& message) {
  if (as_json) {
    ordered_json j;
    j["error"] = {{"status", status}, {"kind", kind}, {"message", message}};
    err << j.dump() << '\n';
  } else {
    err << "error: " << message << '\n';
  }
}

}  // namespace

int dispatch(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Multi-task rumour verification: corpora, training, evaluation and search", "rumour"};
  app.require_subcommand(1);
  app.fallthrough();
  bool error_json = false;
  app.add_flag("--error-json", error_json, "Report errors as a JSON object on stderr");

  std::string corpus_path, spec_path, output, config_path, checkpoint, models;
  std::optional<std::uint64_t> seed;
  Overrides train_o, eval_o, loeo_o, search_o;
  std::size_t trials = 0;

  auto* validate = app.add_subcommand("validate", "Check a corpus against the schema and thread invariants");
  validate->add_option("corpus", corpus_path, "Corpus directory or NDJSON file")->required();

  auto* synth = app.add_subcommand("synth", "Generate a synthetic corpus from a key = value spec");
  synth->add_option("spec", spec_path, "Generator spec file")->required();
  synth->add_option("-o,--output", output, "Output directory (or .ndjson file)")->required();
  synth->add_option("--seed", seed, "Seed (overrides the spec)");

  auto* analyze = app.add_subcommand("analyze", "Per-event label entropy, kurtosis and token-type ratio (CSV)");
  analyze->add_option("corpus", corpus_path, "Corpus directory or NDJSON file")->required();
  analyze->add_option("-o,--output", output, "Also write the CSV to this file");

  auto* train_cmd = app.add_subcommand("train", "Train a model; writes a checkpoint and the loss history");
  train_cmd->add_option("config", config_path, "Run config (key = value)")->required();
  add_overrides(train_cmd, train_o);

  auto* evaluate = app.add_subcommand("evaluate", "Predict with a checkpoint; writes predictions and metrics");
  evaluate->add_option("config", config_path, "Run config (key = value)")->required();
  evaluate->add_option("--model", checkpoint, "Checkpoint file")->required();
  add_overrides(evaluate, eval_o);

  auto* loeo = app.add_subcommand("loeo", "Leave-one-event-out comparison of models; writes report.csv/.txt");
  loeo->add_option("config", config_path, "Run config (key = value)")->required();
  loeo->add_option("--models", models, "Comma-separated subset of majority,nile,single,mtl2vs,mtl2vd,mtl3");
  loeo->add_option("--jobs", loeo_o.jobs, "Folds evaluated in parallel")->check(CLI::PositiveNumber);
  add_overrides(loeo, loeo_o);

  auto* search = app.add_subcommand("search", "TPE hyperparameter search on the development event");
  search->add_option("config", config_path, "Run config (key = value)")->required();
  search->add_option("--trials", trials, "Number of trials (default: config 'trials', else 30)")
      ->check(CLI::PositiveNumber);
  search->add_option("--jobs", search_o.jobs, "Startup trials evaluated in parallel")->check(CLI::PositiveNumber);
  add_overrides(search, search_o);

  try {
    std::vector<std::string> reversed(args.rbegin(), args.rend());
    app.parse(reversed);
  } catch (const CLI::CallForHelp&) {
    out << app.help();
    return 0;
  } catch (const CLI::CallForAllHelp&) {
    out << app.help("", CLI::AppFormatMode::All);
    return 0;
  } catch (const CLI::ParseError& e) {
    report_error(err, error_json, 1, "usage", e.what());
    return 1;
  }

  try {
    if (validate->parsed()) return cmd_validate(corpus_path, out);
    if (synth->parsed()) return cmd_synth(spec_path, output, seed, out);
    if (analyze->parsed()) return cmd_analyze(corpus_path, output, out);
    if (train_cmd->parsed()) return cmd_train(load_run_config(config_path, train_o), out);
    if (evaluate->parsed()) return cmd_evaluate(load_run_config(config_path, eval_o), checkpoint, out);
    if (loeo->parsed()) return cmd_loeo(load_run_config(config_path, loeo_o), models, out);
    if (search->parsed()) {
      if (trials > 0) search_o.sets.push_back("trials=" + std::to_string(trials));
      return cmd_search(load_run_config(config_path, search_o), out);
    }
  } catch (const ValidationError& e) {
    report_error(err, error_json, 1, "validation", e.what());
    return 1;
  } catch (const std::exception& e) {
    report_error(err, error_json, 2, "runtime", e.what());
    return 2;
  }
  return 1;
}

}  // namespace rumour::cli
