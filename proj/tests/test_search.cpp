#include <cmath>
#include <set>

#include "doctest.h"
#include "rumour/search.hpp"
#include "support.hpp"

using namespace rumour;

namespace {

Trial ok_trial(std::size_t index, Configuration c, double objective) {
  Trial t;
  t.index = index;
  t.config = std::move(c);
  t.objective = objective;
  return t;
}

double chi_square(const std::vector<std::size_t>& counts, double expected) {
  double x = 0.0;
  for (std::size_t n : counts) x += (static_cast<double>(n) - expected) * (static_cast<double>(n) - expected) / expected;
  return x;
}

}  // namespace

TEST_CASE("objective multiplies the per-task errors") {
  CHECK(objective({{Task::Veracity, 1.0}}) == 0.0);
  CHECK(objective({{Task::Veracity, 0.5}, {Task::Stance, 0.5}}) == doctest::Approx(0.25));
  CHECK(objective({{Task::Stance, 0.3}, {Task::Detection, 0.4}, {Task::Veracity, 0.5}}) == doctest::Approx(0.21));
  CHECK_THROWS_AS(objective({{Task::Veracity, 1.5}}), ValidationError);
  CHECK_THROWS_AS(objective({{Task::Veracity, -0.1}}), ValidationError);
  CHECK_THROWS_AS(objective({{Task::Veracity, std::nan("")}}), ValidationError);
  CHECK_THROWS_AS(objective({}), ValidationError);
}

TEST_CASE("search spaces enumerate every configuration once") {
  const SearchSpace space = SearchSpace::paper();
  CHECK(space.size() == 192);
  std::set<Configuration> seen;
  for (std::size_t i = 0; i < space.size(); ++i) {
    const Configuration c = space.at(i);
    CHECK(space.contains(c));
    CHECK(space.flat_index(c) == i);
    seen.insert(c);
  }
  CHECK(seen.size() == 192);
  CHECK(SearchSpace::miniature().size() == 192);
  CHECK_THROWS_AS(space.at(192), ValidationError);
  CHECK_THROWS_AS(SearchSpace::by_name("huge"), ValidationError);

  const HyperParams hp = space.apply(space.at(191), HyperParams{});
  CHECK(hp.num_dense_layers == 4);
  CHECK(hp.num_lstm_layers == 2);
  CHECK(hp.dense_width == 600);
  CHECK(hp.lstm_width == 300);
  CHECK(hp.l2 == 1e-3);
  CHECK(space.to_json(space.at(0)).dump() ==
        R"({"dense_layers":1,"lstm_layers":1,"dense_width":300,"lstm_width":100,"l2":0.0001})");
}

TEST_CASE("suggestions always lie in the space") {
  const SearchSpace space = SearchSpace::paper();
  Rng rng(2);
  std::vector<Trial> history;
  for (std::size_t i = 0; i < 60; ++i) {
    const Configuration c = tpe_suggest(history, space, TPEConfig{}, rng);
    CHECK(space.contains(c));
    Trial t = ok_trial(i, c, rng.uniform());
    if (i % 7 == 3) t.status = TrialStatus::Failed;
    history.push_back(t);
  }
}

TEST_CASE("equal objectives split the history without failing") {
  const SearchSpace space = SearchSpace::paper();
  Rng rng(3);
  std::vector<Trial> history;
  for (std::size_t i = 0; i < 20; ++i) history.push_back(ok_trial(i, space.at(rng.index(192)), 0.5));
  for (int k = 0; k < 100; ++k) CHECK(space.contains(tpe_suggest(history, space, TPEConfig{}, rng)));
}

TEST_CASE("densities are smoothed category frequencies of the good and bad sets") {
  const SearchSpace space = SearchSpace::paper();
  std::vector<Trial> history;
  // Eight trials; with gamma 0.25 the best two form the good set.
  history.push_back(ok_trial(0, {0, 0, 0, 2, 0}, 0.10));
  history.push_back(ok_trial(1, {1, 1, 1, 2, 1}, 0.20));
  for (std::size_t i = 2; i < 8; ++i) history.push_back(ok_trial(i, {i % 4, i % 2, i % 4, i % 3, i % 2}, 0.5 + 0.01 * i));
  const TPEConfig cfg;
  const auto dens = tpe_densities(history, space, cfg);
  REQUIRE(dens.size() == 5);
  // lstm width: good counts {0,0,2}; bad counts over i=2..7 of i%3 = {2,2,2}
  const auto& w = dens[3];
  CHECK(w.good[2] == doctest::Approx((2 + 1.0 / 3) / 3.0));
  CHECK(w.good[0] == doctest::Approx((1.0 / 3) / 3.0));
  CHECK(w.bad[1] == doctest::Approx((2 + 1.0 / 3) / 7.0));
  for (const auto& d : dens) {
    double gs = 0.0, bs = 0.0;
    for (double v : d.good) gs += v;
    for (double v : d.bad) bs += v;
    CHECK(gs == doctest::Approx(1.0));
    CHECK(bs == doctest::Approx(1.0));
  }
}

TEST_CASE("a value shared by all good trials is suggested more often than uniform") {
  const SearchSpace space = SearchSpace::paper();
  Rng hist_rng(4);
  std::vector<Trial> history;
  for (std::size_t i = 0; i < 20; ++i) {
    Configuration c = space.at(hist_rng.index(192));
    double obj = 0.8 + 0.01 * static_cast<double>(i);
    if (i < 5) {
      c[3] = 2;  // lstm width 300
      obj = 0.1 * static_cast<double>(i);
    }
    history.push_back(ok_trial(i, c, obj));
  }
  const TPEConfig cfg;
  const auto dens = tpe_densities(history, space, cfg);
  const auto& w = dens[3];
  for (std::size_t v = 0; v < 2; ++v) CHECK(w.good[2] / w.bad[2] > w.good[v] / w.bad[v]);

  Rng rng(5);
  std::size_t hits = 0;
  const std::size_t draws = 1000;
  for (std::size_t k = 0; k < draws; ++k) hits += tpe_suggest(history, space, cfg, rng)[3] == 2;
  // uniform gives 1/3; require more than three standard deviations above it
  const double sd = std::sqrt(draws * (1.0 / 3) * (2.0 / 3));
  CHECK(static_cast<double>(hits) > draws / 3.0 + 3.0 * sd);
}

TEST_CASE("a huge smoothing prior makes single-candidate suggestions uniform") {
  const SearchSpace space = SearchSpace::paper();
  Rng hist_rng(6);
  std::vector<Trial> history;
  for (std::size_t i = 0; i < 30; ++i) {
    Configuration c = space.at(hist_rng.index(8));  // heavily skewed history
    history.push_back(ok_trial(i, c, hist_rng.uniform()));
  }
  TPEConfig cfg;
  cfg.prior_weight = 1e6;
  cfg.n_candidates = 1;
  Rng rng(7);
  std::vector<std::size_t> counts(192, 0);
  const std::size_t draws = 5000;
  for (std::size_t k = 0; k < draws; ++k) ++counts[space.flat_index(tpe_suggest(history, space, cfg, rng))];
  // 99th percentile of chi-square with 191 degrees of freedom
  CHECK(chi_square(counts, draws / 192.0) < 239.39);
}

TEST_CASE("empty history draws uniformly") {
  const SearchSpace space = SearchSpace::paper();
  Rng rng(8);
  std::vector<std::size_t> counts(192, 0);
  for (int k = 0; k < 5000; ++k) ++counts[space.flat_index(tpe_suggest({}, space, TPEConfig{}, rng))];
  CHECK(chi_square(counts, 5000 / 192.0) < 239.39);
}

TEST_CASE("run_search records every trial and picks the earliest best") {
  const SearchSpace space = SearchSpace::paper();
  const Configuration optimum = space.at(77);
  SearchOptions opts;
  const SearchResult r = run_search(space, testing::planted_evaluator(space, optimum), opts, 11);
  CHECK(r.history.size() == 30);
  for (std::size_t i = 0; i < r.history.size(); ++i) {
    CHECK(r.history[i].index == i);
    CHECK(r.history[i].seed == derive_seed(11, "trial", i));
    CHECK(space.contains(r.history[i].config));
  }
  REQUIRE(r.best.has_value());
  for (const Trial& t : r.history) CHECK(r.history[*r.best].objective <= t.objective);

  Evaluator constant = [](const Configuration&, std::uint64_t) {
    Evaluation e;
    e.macro_f[Task::Veracity] = 0.4;
    return e;
  };
  const SearchResult flat = run_search(space, constant, opts, 3);
  CHECK(flat.best == 0u);
}

TEST_CASE("search history is seed-deterministic and independent of the worker count") {
  const SearchSpace space = SearchSpace::paper();
  const Evaluator eval = testing::planted_evaluator(space, space.at(5));
  SearchOptions opts;
  const SearchResult a = run_search(space, eval, opts, 21);
  opts.jobs = 3;
  const SearchResult b = run_search(space, eval, opts, 21);
  CHECK(trial_log(a.history, space) == trial_log(b.history, space));
  const SearchResult c = run_search(space, eval, opts, 22);
  CHECK(trial_log(a.history, space) != trial_log(c.history, space));
}

TEST_CASE("failed evaluations are recorded and the search continues") {
  const SearchSpace space = SearchSpace::paper();
  Evaluator flaky = [&](const Configuration& c, std::uint64_t) {
    if (c[1] == 1) throw RuntimeFailure("two LSTM layers diverged");
    Evaluation e;
    e.macro_f[Task::Veracity] = 0.5;
    e.accuracy = 0.6;
    return e;
  };
  std::size_t callbacks = 0;
  const SearchResult r =
      run_search(space, flaky, SearchOptions{}, 4, [&](const std::vector<Trial>&) { ++callbacks; });
  CHECK(r.history.size() == 30);
  CHECK(callbacks == 21);  // startup batch, then one per trial
  std::size_t failed = 0;
  for (const Trial& t : r.history) {
    if (t.status != TrialStatus::Failed) continue;
    ++failed;
    CHECK(t.error == "two LSTM layers diverged");
    const auto j = trial_to_json(t, space);
    CHECK(j["objective"].is_null());
    CHECK(j["status"] == "failed");
  }
  CHECK(failed > 0);
  REQUIRE(r.best.has_value());
  CHECK(r.history[*r.best].status == TrialStatus::Ok);

  SearchOptions acc;
  acc.kind = ObjectiveKind::Accuracy;
  const SearchResult ra = run_search(space, flaky, acc, 4);
  CHECK(ra.history[*ra.best].objective == doctest::Approx(0.4));
}

TEST_CASE("trial log lines carry the documented keys") {
  const SearchSpace space = SearchSpace::paper();
  Trial t = ok_trial(3, space.at(0), 0.25);
  t.seed = 42;
  t.evaluation.macro_f[Task::Veracity] = 0.75;
  t.evaluation.accuracy = 0.5;
  CHECK(trial_log({t}, space) ==
        R"({"trial":3,"config":{"dense_layers":1,"lstm_layers":1,"dense_width":300,"lstm_width":100,"l2":0.0001},)"
        R"("objective":0.25,"macro_f":{"veracity":0.75},"dev_accuracy":0.5,"seed":42})"
        "\n");
}

TEST_CASE("TPE usually finds a planted optimum within 30 trials") {
  const SearchSpace space = SearchSpace::paper();
  std::size_t hits = 0;
  const std::size_t seeds = 25;
  for (std::size_t s = 0; s < seeds; ++s) {
    Rng pick(derive_seed(s, "optimum"));
    const Configuration optimum = space.at(pick.index(space.size()));
    const SearchResult r = run_search(space, testing::planted_evaluator(space, optimum), SearchOptions{}, s);
    hits += r.history[*r.best].objective == 0.0;
  }
  MESSAGE("TPE hits " << hits << " / " << seeds);
  CHECK(hits * 5 >= seeds * 4);
}

TEST_CASE("suggestions prefer configurations not yet evaluated") {
  const SearchSpace tiny({{"x", {0, 1}, true}});
  TPEConfig cfg;
  cfg.n_startup = 0;
  cfg.n_candidates = 64;
  const std::vector<Trial> history{ok_trial(0, {0}, 0.1)};
  Rng rng(9);
  for (int k = 0; k < 200; ++k) CHECK(tpe_suggest(history, tiny, cfg, rng) == Configuration{1});
  const std::vector<Trial> full{ok_trial(0, {0}, 0.1), ok_trial(1, {1}, 0.2)};
  for (int k = 0; k < 50; ++k) CHECK(tiny.contains(tpe_suggest(full, tiny, cfg, rng)));
}
