#include "rumour/analysis.hpp"

#include <omp.h>

#include <cmath>
#include <cstdio>
#include <exception>
#include <unordered_set>

#include "rumour/text.hpp"

namespace rumour {

std::size_t LabelDistribution::total() const {
  std::size_t n = 0;
  for (std::size_t c : counts) n += c;
  return n;
}

namespace {

bool thread_labelled(const Thread& t, Task task) {
  switch (task) {
    case Task::Veracity: return t.veracity.has_value();
    case Task::Detection: return t.detection.has_value();
    case Task::Stance:
      for (const Post& p : t.posts) {
        if (p.stance) return true;
      }
      return false;
  }
  return false;
}

std::size_t total_of(std::span<const std::size_t> counts) {
  std::size_t n = 0;
  for (std::size_t c : counts) n += c;
  if (n == 0) throw ValidationError("label distribution has no observations");
  return n;
}

}  // namespace

LabelDistribution label_distribution(const Corpus& corpus, Task task, const std::string& event) {
  LabelDistribution d;
  d.task = task;
  d.event = event;
  d.counts.assign(num_classes(task), 0);
  for (const Thread& t : corpus.threads) {
    if (!event.empty() && t.event != event) continue;
    switch (task) {
      case Task::Veracity:
        if (t.veracity) ++d.counts[static_cast<std::size_t>(*t.veracity)];
        break;
      case Task::Detection:
        if (t.detection) ++d.counts[static_cast<std::size_t>(*t.detection)];
        break;
      case Task::Stance:
        for (const Post& p : t.posts) {
          if (p.stance) ++d.counts[static_cast<std::size_t>(*p.stance)];
        }
        break;
    }
  }
  return d;
}

double entropy(std::span<const std::size_t> counts) {
  const auto n = static_cast<double>(total_of(counts));
  double h = 0.0;
  for (std::size_t c : counts) {
    if (c == 0) continue;
    const double p = static_cast<double>(c) / n;
    h -= p * std::log(p);
  }
  return h;
}

std::optional<double> kurtosis(std::span<const std::size_t> counts) {
  const auto n = static_cast<double>(total_of(counts));
  double mean = 0.0;
  for (std::size_t i = 0; i < counts.size(); ++i) mean += static_cast<double>(i) * static_cast<double>(counts[i]) / n;
  double m2 = 0.0, m4 = 0.0;
  for (std::size_t i = 0; i < counts.size(); ++i) {
    const double p = static_cast<double>(counts[i]) / n;
    const double d = static_cast<double>(i) - mean;
    m2 += p * d * d;
    m4 += p * d * d * d * d;
  }
  std::size_t occupied = 0;
  for (std::size_t c : counts) occupied += c > 0;
  if (occupied < 2) return std::nullopt;
  return m4 / (m2 * m2) - 3.0;
}

double ttr(std::span<const std::vector<std::string>> texts) {
  std::unordered_set<std::string_view> types;
  std::size_t tokens = 0;
  for (const auto& text : texts) {
    for (const std::string& tok : text) types.insert(tok);
    tokens += text.size();
  }
  if (tokens == 0) throw ValidationError("token-type ratio of an empty text collection");
  return static_cast<double>(types.size()) / static_cast<double>(tokens);
}

std::vector<EventAnalysis> analyze_corpus(const Corpus& corpus) {
  std::vector<EventAnalysis> rows(corpus.events.size());
  std::vector<std::exception_ptr> errors(rows.size());
#pragma omp parallel for schedule(dynamic, 1)
  for (std::ptrdiff_t i = 0; i < static_cast<std::ptrdiff_t>(rows.size()); ++i) {
    const auto e = static_cast<std::size_t>(i);
    try {
      EventAnalysis& row = rows[e];
      row.event = corpus.events[e];
      for (Task task : {Task::Stance, Task::Veracity, Task::Detection}) {
        const LabelDistribution d = label_distribution(corpus, task, row.event);
        if (d.total() == 0) continue;
        std::vector<std::vector<std::string>> texts;
        for (const Thread& t : corpus.threads) {
          if (t.event != row.event || !thread_labelled(t, task)) continue;
          for (const Post& p : t.posts) texts.push_back(preprocess(p.text));
        }
        DatasetStats s;
        s.total = d.total();
        s.entropy = entropy(d.counts);
        s.kurtosis = kurtosis(d.counts);
        std::size_t tokens = 0;
        for (const auto& t : texts) tokens += t.size();
        s.ttr = tokens ? ttr(texts) : 0.0;
        row.tasks[static_cast<std::size_t>(task)] = s;
      }
    } catch (...) {
      errors[e] = std::current_exception();
    }
  }
  for (const auto& err : errors) {
    if (err) std::rethrow_exception(err);
  }
  return rows;
}

std::string analysis_csv(std::span<const EventAnalysis> rows) {
  static constexpr Task kOrder[] = {Task::Stance, Task::Veracity, Task::Detection};
  static constexpr const char* kTag[] = {"S", "V", "D"};
  auto num = [](double v) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.4f", v);
    return std::string(buf);
  };

  std::string out = "event";
  for (const char* metric : {"kurtosis", "entropy", "ttr"}) {
    for (const char* tag : kTag) out += std::string(",") + metric + "_" + tag;
  }
  out += '\n';
  for (const EventAnalysis& row : rows) {
    out += row.event;
    for (int metric = 0; metric < 3; ++metric) {
      for (Task task : kOrder) {
        const auto& s = row.tasks[static_cast<std::size_t>(task)];
        out += ',';
        if (!s) {
          out += '-';
        } else if (metric == 0) {
          out += s->kurtosis ? num(*s->kurtosis) : std::string("degenerate(-3)");
        } else if (metric == 1) {
          out += num(s->entropy);
        } else {
          out += num(s->ttr);
        }
      }
    }
    out += '\n';
  }
  return out;
}

}  // namespace rumour
