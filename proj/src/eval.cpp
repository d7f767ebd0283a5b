#include "rumour/eval.hpp"

#include <omp.h>

#include <algorithm>
#include <cstdio>
#include <exception>
#include <map>

namespace rumour {

ConfusionMatrix ConfusionMatrix::from(std::span<const std::size_t> preds, std::span<const std::size_t> gold,
                                      std::size_t num_classes) {
  if (preds.size() != gold.size()) throw ValidationError("metrics: predictions and gold differ in length");
  ConfusionMatrix cm(num_classes);
  for (std::size_t i = 0; i < preds.size(); ++i) cm.add(gold[i], preds[i]);
  return cm;
}

void ConfusionMatrix::add(std::size_t gold, std::size_t pred) {
  if (gold >= k_ || pred >= k_) throw ValidationError("metrics: label outside the class set");
  ++counts_[gold * k_ + pred];
}

void ConfusionMatrix::merge(const ConfusionMatrix& other) {
  if (other.k_ != k_) throw ValidationError("metrics: merging confusion matrices of different sizes");
  for (std::size_t i = 0; i < counts_.size(); ++i) counts_[i] += other.counts_[i];
}

std::size_t ConfusionMatrix::total() const {
  std::size_t n = 0;
  for (std::size_t c : counts_) n += c;
  return n;
}

std::size_t ConfusionMatrix::trace() const {
  std::size_t n = 0;
  for (std::size_t c = 0; c < k_; ++c) n += at(c, c);
  return n;
}

Metrics metrics_from_confusion(const ConfusionMatrix& cm) {
  const std::size_t k = cm.num_classes();
  Metrics m;
  m.count = cm.total();
  m.accuracy = m.count ? static_cast<double>(cm.trace()) / static_cast<double>(m.count) : 0.0;
  m.f1.assign(k, 0.0);
  for (std::size_t c = 0; c < k; ++c) {
    std::size_t tp = cm.at(c, c), pred = 0, gold = 0;
    for (std::size_t o = 0; o < k; ++o) {
      pred += cm.at(o, c);
      gold += cm.at(c, o);
    }
    const double precision = pred ? static_cast<double>(tp) / static_cast<double>(pred) : 0.0;
    const double recall = gold ? static_cast<double>(tp) / static_cast<double>(gold) : 0.0;
    m.f1[c] = precision + recall > 0.0 ? 2.0 * precision * recall / (precision + recall) : 0.0;
  }
  double sum = 0.0;
  for (double f : m.f1) sum += f;
  m.macro_f = k ? sum / static_cast<double>(k) : 0.0;
  return m;
}

Metrics compute_metrics(std::span<const std::size_t> preds, std::span<const std::size_t> gold,
                        std::size_t num_classes) {
  return metrics_from_confusion(ConfusionMatrix::from(preds, gold, num_classes));
}

namespace {

std::optional<std::size_t> gold_label(const Thread& t, Task task) {
  switch (task) {
    case Task::Veracity:
      return t.veracity ? std::optional<std::size_t>(static_cast<std::size_t>(*t.veracity)) : std::nullopt;
    case Task::Detection:
      return t.detection ? std::optional<std::size_t>(static_cast<std::size_t>(*t.detection)) : std::nullopt;
    case Task::Stance:
      break;
  }
  throw ValidationError("thread-level evaluation is defined for veracity and detection only");
}

const std::optional<TaskPrediction>& predicted(const ThreadPrediction& p, Task task) {
  return task == Task::Veracity ? p.veracity : p.detection;
}

}  // namespace

FoldResult score_fold(const Corpus& test, std::vector<ThreadPrediction> predictions, Task task, std::string event) {
  std::map<std::string, std::size_t> by_thread;
  for (std::size_t i = 0; i < predictions.size(); ++i) by_thread.emplace(predictions[i].thread, i);

  FoldResult fold;
  fold.event = std::move(event);
  for (const Thread& t : test.threads) {
    const auto gold = gold_label(t, task);
    if (!gold) continue;
    auto it = by_thread.find(t.id());
    if (it == by_thread.end() || !predicted(predictions[it->second], task)) {
      throw RuntimeFailure("no " + std::string(task_name(task)) + " prediction for thread '" + t.id() + "'");
    }
    fold.threads.push_back(t.id());
    fold.gold.push_back(*gold);
    fold.preds.push_back(predicted(predictions[it->second], task)->label);
  }
  fold.metrics = compute_metrics(fold.preds, fold.gold, num_classes(task));
  fold.predictions = std::move(predictions);
  return fold;
}

Metrics pool_folds(std::span<const FoldResult> folds, Task task) {
  ConfusionMatrix cm(num_classes(task));
  for (const FoldResult& f : folds) cm.merge(ConfusionMatrix::from(f.preds, f.gold, num_classes(task)));
  return metrics_from_confusion(cm);
}

LoeoResult loeo_evaluate(const Corpus& corpus, const FoldPredictor& predictor, std::uint64_t seed, Task task,
                         int jobs) {
  if (corpus.events.size() < 2) throw ValidationError("LOEO evaluation needs at least two events");
  const std::size_t n = corpus.events.size();
  LoeoResult result;
  result.task = task;
  result.folds.resize(n);
  std::vector<std::exception_ptr> errors(n);

#pragma omp parallel for schedule(dynamic, 1) num_threads(std::max(1, jobs)) if (jobs > 1)
  for (std::ptrdiff_t i = 0; i < static_cast<std::ptrdiff_t>(n); ++i) {
    const auto idx = static_cast<std::size_t>(i);
    try {
      const std::string& event = corpus.events[idx];
      auto [train, test] = split_loeo(corpus, event);
      auto preds = predictor(train, test, derive_seed(seed, "fold/" + event));
      result.folds[idx] = score_fold(test, std::move(preds), task, event);
    } catch (...) {
      errors[idx] = std::current_exception();
    }
  }
  for (const auto& e : errors) {
    if (e) std::rethrow_exception(e);
  }
  result.pooled = pool_folds(result.folds, task);
  return result;
}

Metrics stance_metrics(const Corpus& test, std::span<const ThreadPrediction> predictions) {
  std::map<std::string, const ThreadPrediction*> by_thread;
  for (const ThreadPrediction& p : predictions) by_thread.emplace(p.thread, &p);
  ConfusionMatrix cm(num_classes(Task::Stance));
  for (const Thread& t : test.threads) {
    auto it = by_thread.find(t.id());
    if (it == by_thread.end() || !it->second->stance) continue;
    std::map<std::string, Stance> predicted_stance;
    for (const StancePrediction& sp : *it->second->stance) predicted_stance.emplace(sp.post, sp.label);
    for (const Post& p : t.posts) {
      if (!p.stance) continue;
      auto s = predicted_stance.find(p.id);
      if (s == predicted_stance.end()) continue;
      cm.add(static_cast<std::size_t>(*p.stance), static_cast<std::size_t>(s->second));
    }
  }
  return metrics_from_confusion(cm);
}

std::string development_event(const Corpus& corpus) {
  if (corpus.events.empty()) throw ValidationError("corpus has no events");
  for (const std::string& e : corpus.events) {
    std::string key;
    for (char c : e) {
      if (c >= 'A' && c <= 'Z') key += static_cast<char>(c - 'A' + 'a');
      else if (c >= 'a' && c <= 'z') key += c;
    }
    if (key == "charliehebdo") return e;
  }
  std::map<std::string, std::size_t> sizes;
  for (const Thread& t : corpus.threads) ++sizes[t.event];
  std::string best;
  std::size_t best_n = 0;
  for (const auto& [e, count] : sizes) {
    if (count > best_n) {
      best = e;
      best_n = count;
    }
  }
  return best;
}

// ---------------------------------------------------------------------------

std::string format_score(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.3f", v);
  return buf;
}

namespace {

std::string csv_field(const std::string& s) {
  if (s.find_first_of(",\"\n") == std::string::npos) return s;
  std::string out = "\"";
  for (char c : s) {
    if (c == '"') out += '"';
    out += c;
  }
  return out + "\"";
}

std::string class_header(Task task, std::size_t c) {
  std::string name(class_names(task)[c]);
  return "F(" + name + ")";
}

}  // namespace

std::string Report::render_csv() const {
  if (tables.empty()) return "# no results\n";
  std::string out;
  for (std::size_t t = 0; t < tables.size(); ++t) {
    const Table& table = tables[t];
    if (t > 0) out += '\n';
    out += "# " + table.title + "\n";
    for (std::size_t i = 0; i < table.header.size(); ++i) {
      if (i) out += ',';
      out += csv_field(table.header[i]);
    }
    out += '\n';
    for (const auto& row : table.rows) {
      for (std::size_t i = 0; i < row.size(); ++i) {
        if (i) out += ',';
        out += csv_field(row[i]);
      }
      out += '\n';
    }
  }
  return out;
}

std::string Report::render_text() const {
  if (tables.empty()) return "no results\n";
  std::string out;
  for (std::size_t t = 0; t < tables.size(); ++t) {
    const Table& table = tables[t];
    std::vector<std::size_t> width(table.header.size(), 0);
    for (std::size_t i = 0; i < table.header.size(); ++i) width[i] = table.header[i].size();
    for (const auto& row : table.rows) {
      for (std::size_t i = 0; i < row.size() && i < width.size(); ++i) width[i] = std::max(width[i], row[i].size());
    }
    auto line = [&](const std::vector<std::string>& cells) {
      std::string l;
      for (std::size_t i = 0; i < cells.size(); ++i) {
        if (i) l += "  ";
        std::string cell = cells[i];
        if (i == 0) {
          cell.resize(width[i], ' ');
        } else {
          cell.insert(0, width[i] - std::min(width[i], cell.size()), ' ');
        }
        l += cell;
      }
      while (!l.empty() && l.back() == ' ') l.pop_back();
      return l + "\n";
    };
    if (t > 0) out += '\n';
    out += table.title + "\n";
    std::size_t total = 0;
    for (std::size_t w : width) total += w;
    total += 2 * (width.empty() ? 0 : width.size() - 1);
    out += std::string(total, '-') + "\n";
    out += line(table.header);
    for (const auto& row : table.rows) out += line(row);
  }
  return out;
}

Report emit_report(std::span<const ModelResult> results) {
  Report report;
  if (results.empty()) return report;
  const Task task = results.front().result.task;

  Table comparison{"Model comparison (" + std::string(task_name(task)) + ", pooled over folds)",
                   {"model", "macro_f", "accuracy"},
                   {}};
  for (const ModelResult& r : results) {
    comparison.rows.push_back({r.model, format_score(r.result.pooled.macro_f), format_score(r.result.pooled.accuracy)});
  }
  report.tables.push_back(std::move(comparison));

  // Events in first-seen order across models.
  std::vector<std::string> events;
  for (const ModelResult& r : results) {
    for (const FoldResult& f : r.result.folds) {
      if (std::find(events.begin(), events.end(), f.event) == events.end()) events.push_back(f.event);
    }
  }
  Table per_event{"Per-event macro-F", {"model"}, {}};
  per_event.header.insert(per_event.header.end(), events.begin(), events.end());
  for (const ModelResult& r : results) {
    std::vector<std::string> row{r.model};
    for (const std::string& e : events) {
      auto it = std::find_if(r.result.folds.begin(), r.result.folds.end(),
                             [&](const FoldResult& f) { return f.event == e; });
      row.push_back(it == r.result.folds.end() ? "-" : format_score(it->metrics.macro_f));
    }
    per_event.rows.push_back(std::move(row));
  }
  report.tables.push_back(std::move(per_event));

  for (const ModelResult& r : results) {
    Table breakdown{"Per-event and per-class results: " + r.model, {"event", "macro_f", "accuracy"}, {}};
    for (std::size_t c = 0; c < num_classes(task); ++c) breakdown.header.push_back(class_header(task, c));
    for (const FoldResult& f : r.result.folds) {
      std::vector<std::string> row{f.event, format_score(f.metrics.macro_f), format_score(f.metrics.accuracy)};
      for (double v : f.metrics.f1) row.push_back(format_score(v));
      breakdown.rows.push_back(std::move(row));
    }
    report.tables.push_back(std::move(breakdown));
  }
  return report;
}

}  // namespace rumour
