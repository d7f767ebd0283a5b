#include "rumour/baselines.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <numeric>

#include "rumour/neural.hpp"
#include "rumour/text.hpp"

namespace rumour {

Veracity majority_fit(const Corpus& train) {
  std::array<std::size_t, 3> counts{0, 0, 0};
  std::size_t total = 0;
  for (const Thread& t : train.threads) {
    if (!t.veracity) continue;
    ++counts[static_cast<std::size_t>(*t.veracity)];
    ++total;
  }
  if (total == 0) throw ValidationError("majority baseline: training set has no veracity labels");
  // max_element returns the first maximum, i.e. the alphabetically first class.
  return static_cast<Veracity>(std::max_element(counts.begin(), counts.end()) - counts.begin());
}

std::vector<ThreadPrediction> majority_predict(Veracity label, const Corpus& test) {
  std::vector<ThreadPrediction> out;
  out.reserve(test.threads.size());
  for (const Thread& t : test.threads) {
    ThreadPrediction p;
    p.thread = t.id();
    p.event = t.event;
    p.model = "majority";
    TaskPrediction tp;
    tp.label = static_cast<std::size_t>(label);
    tp.probs.assign(3, 0.0);
    tp.probs[tp.label] = 1.0;
    p.veracity = std::move(tp);
    out.push_back(std::move(p));
  }
  return out;
}

// ---------------------------------------------------------------------------

BowVocabulary BowVocabulary::build(const Corpus& train, std::size_t max_size) {
  std::map<std::string, std::size_t> counts;
  for (const Thread& t : train.threads) {
    for (std::string& tok : preprocess(t.source().text)) ++counts[std::move(tok)];
  }
  std::vector<std::pair<std::string, std::size_t>> ranked(counts.begin(), counts.end());
  std::stable_sort(ranked.begin(), ranked.end(), [](const auto& a, const auto& b) { return a.second > b.second; });
  if (ranked.size() > max_size) ranked.resize(max_size);

  BowVocabulary v;
  for (auto& [tok, n] : ranked) {
    v.index_.emplace(tok, v.tokens_.size());
    v.tokens_.push_back(tok);
  }
  return v;
}

std::optional<std::size_t> BowVocabulary::index(const std::string& token) const {
  auto it = index_.find(token);
  if (it == index_.end()) return std::nullopt;
  return it->second;
}

StanceAssignment gold_stances(const Thread& thread) {
  StanceAssignment out;
  out.reserve(thread.posts.size());
  for (const Post& p : thread.posts) out.push_back(p.stance);
  return out;
}

std::vector<double> NileFeatureVector::flatten() const {
  std::vector<double> x = bow;
  x.push_back(has_url ? 1.0 : 0.0);
  x.push_back(has_hashtag ? 1.0 : 0.0);
  x.push_back(support);
  x.push_back(deny);
  x.push_back(query);
  return x;
}

NileFeatureVector extract_nile_features(const Thread& thread, const BowVocabulary& vocab,
                                        const StanceAssignment& stances) {
  if (stances.size() != thread.posts.size()) throw ValidationError("stance assignment does not match thread size");
  NileFeatureVector f;
  f.bow.assign(vocab.size(), 0.0);
  for (const std::string& tok : preprocess(thread.source().text)) {
    if (auto i = vocab.index(tok)) f.bow[*i] += 1.0;
  }
  f.has_url = thread.source().has_url;
  f.has_hashtag = thread.source().has_hashtag;

  std::size_t known = 0, support = 0, deny = 0, query = 0;
  for (std::size_t i = 1; i < stances.size(); ++i) {
    if (!stances[i]) continue;
    ++known;
    switch (*stances[i]) {
      case Stance::Support: ++support; break;
      case Stance::Deny: ++deny; break;
      case Stance::Query: ++query; break;
      case Stance::Comment: break;
    }
  }
  if (known > 0) {
    const auto n = static_cast<double>(known);
    f.support = static_cast<double>(support) / n;
    f.deny = static_cast<double>(deny) / n;
    f.query = static_cast<double>(query) / n;
  }
  return f;
}

// ---------------------------------------------------------------------------

std::vector<double> LinearModel::margins(std::span<const double> x) const {
  if (x.size() != num_features) throw ValidationError("svm: feature length mismatch");
  std::vector<double> m(num_classes);
  for (std::size_t c = 0; c < num_classes; ++c) {
    double s = bias[c];
    for (std::size_t k = 0; k < x.size(); ++k) s += weights[c][k] * x[k];
    m[c] = s;
  }
  return m;
}

LinearModel svm_fit(std::span<const std::vector<double>> features, std::span<const std::size_t> labels,
                    std::size_t num_classes, const SvmOptions& options, std::uint64_t seed) {
  if (features.size() != labels.size()) throw ValidationError("svm_fit: features / labels length mismatch");
  if (features.empty()) throw ValidationError("svm_fit: empty training set");
  if (!(options.lambda > 0.0)) throw ValidationError("svm_fit: lambda must be positive");
  if (options.epochs < 1) throw ValidationError("svm_fit: epochs must be positive");
  std::vector<bool> seen(num_classes, false);
  for (std::size_t y : labels) {
    if (y >= num_classes) throw ValidationError("svm_fit: label out of range");
    seen[y] = true;
  }
  if (std::count(seen.begin(), seen.end(), true) < 2) {
    throw ValidationError("svm_fit: training labels contain a single class");
  }
  const std::size_t d = features.front().size();
  for (const auto& x : features) {
    if (x.size() != d) throw ValidationError("svm_fit: inconsistent feature lengths");
  }

  LinearModel model;
  model.num_classes = num_classes;
  model.num_features = d;
  model.lambda = options.lambda;
  model.weights.assign(num_classes, std::vector<double>(d, 0.0));
  model.bias.assign(num_classes, 0.0);

  const double lambda = options.lambda;
  const double radius = 1.0 / std::sqrt(lambda);
  // The bias is trained as the weight of a constant feature, so it is
  // regularised along with the rest.
  for (std::size_t c = 0; c < num_classes; ++c) {
    Rng rng(derive_seed(seed, "svm", c));
    std::vector<double> w(d + 1, 0.0), avg(d + 1, 0.0);
    std::vector<std::size_t> order(features.size());
    std::iota(order.begin(), order.end(), 0);
    std::size_t t = 0;
    for (int epoch = 0; epoch < options.epochs; ++epoch) {
      rng.shuffle(std::span<std::size_t>(order));
      const bool last = epoch + 1 == options.epochs;
      for (std::size_t i : order) {
        ++t;
        const double eta = 1.0 / (lambda * static_cast<double>(t));
        const double y = labels[i] == c ? 1.0 : -1.0;
        const auto& x = features[i];
        double score = w[d];
        for (std::size_t k = 0; k < d; ++k) score += w[k] * x[k];
        const double shrink = 1.0 - eta * lambda;
        for (double& v : w) v *= shrink;
        if (y * score < 1.0) {
          for (std::size_t k = 0; k < d; ++k) w[k] += eta * y * x[k];
          w[d] += eta * y;
        }
        double norm2 = 0.0;
        for (double v : w) norm2 += v * v;
        if (norm2 > radius * radius) {
          const double s = radius / std::sqrt(norm2);
          for (double& v : w) v *= s;
        }
        if (last) {
          for (std::size_t k = 0; k <= d; ++k) avg[k] += w[k];
        }
      }
    }
    const auto n = static_cast<double>(features.size());
    for (std::size_t k = 0; k < d; ++k) model.weights[c][k] = avg[k] / n;
    model.bias[c] = avg[d] / n;
  }
  return model;
}

std::size_t svm_predict(const LinearModel& model, std::span<const double> x) {
  const auto m = model.margins(x);
  return static_cast<std::size_t>(std::max_element(m.begin(), m.end()) - m.begin());
}

std::vector<ThreadPrediction> nile_fit_predict(const Corpus& train, std::span<const StanceAssignment> train_stances,
                                               const Corpus& test, std::span<const StanceAssignment> test_stances,
                                               const SvmOptions& options, std::uint64_t seed) {
  if (train_stances.size() != train.threads.size() || test_stances.size() != test.threads.size()) {
    throw ValidationError("nile baseline: stance assignments do not match the corpora");
  }
  const BowVocabulary vocab = BowVocabulary::build(train);
  std::vector<std::vector<double>> xs;
  std::vector<std::size_t> ys;
  for (std::size_t i = 0; i < train.threads.size(); ++i) {
    const Thread& t = train.threads[i];
    if (!t.veracity) continue;
    xs.push_back(extract_nile_features(t, vocab, train_stances[i]).flatten());
    ys.push_back(static_cast<std::size_t>(*t.veracity));
  }
  const LinearModel model = svm_fit(xs, ys, 3, options, seed);

  std::vector<ThreadPrediction> out;
  for (std::size_t i = 0; i < test.threads.size(); ++i) {
    const Thread& t = test.threads[i];
    const auto x = extract_nile_features(t, vocab, test_stances[i]).flatten();
    const auto margins = model.margins(x);
    ThreadPrediction p;
    p.thread = t.id();
    p.event = t.event;
    p.model = "niletmrg_star";
    TaskPrediction tp;
    tp.label = static_cast<std::size_t>(std::max_element(margins.begin(), margins.end()) - margins.begin());
    tp.probs = neural::softmax(margins);
    p.veracity = std::move(tp);
    out.push_back(std::move(p));
  }
  return out;
}

}  // namespace rumour
