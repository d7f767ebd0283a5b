#include <fstream>
#include <set>
#include <sstream>

#include "doctest.h"
#include "rumour/corpus.hpp"
#include "support.hpp"

using namespace rumour;
using testing::scratch_dir;

namespace {

void write_file(const std::filesystem::path& p, const std::string& content) {
  std::ofstream out(p, std::ios::binary);
  out << content;
}

std::string read_file(const std::filesystem::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::stringstream buf;
  buf << in.rdbuf();
  return buf.str();
}

Thread figure_two_thread() {
  // source -> a -> a1, source -> b, source -> c
  Thread t;
  t.event = "ev";
  t.posts = {make_post("s", "source", std::nullopt), make_post("a", "reply a", "s"),
             make_post("a1", "reply to a", "a"), make_post("b", "reply b", "s"), make_post("c", "reply c", "s")};
  return t;
}

std::string load_error(const std::string& json) {
  const auto dir = scratch_dir("corpus-errors");
  write_file(dir / "thread.json", json);
  try {
    load_corpus(dir);
  } catch (const CorpusError& e) {
    return e.what();
  }
  return "";
}

}  // namespace

TEST_CASE("a source with two replies loads as one thread") {
  const auto dir = scratch_dir("corpus-load");
  write_file(dir / "t1.json", R"({"event": "ev", "detection": "rumour", "veracity": "false", "posts": [
      {"id": "1", "text": "Is this #real? http://x", "parent": null, "stance": "support"},
      {"id": "2", "text": "no", "parent": "1", "stance": "deny"},
      {"id": "3", "text": "source?", "parent": "2", "stance": null}]})");
  const Corpus c = load_corpus(dir);
  REQUIRE(c.threads.size() == 1);
  CHECK(c.num_posts() == 3);
  const Thread& t = c.threads[0];
  CHECK(t.detection == Detection::Rumour);
  CHECK(t.veracity == Veracity::False);
  CHECK(t.source().has_url);
  CHECK(t.source().has_hashtag);
  CHECK_FALSE(t.posts[1].has_url);
  CHECK(t.posts[1].stance == Stance::Deny);
  CHECK_FALSE(t.posts[2].stance.has_value());
  CHECK(c.events == std::vector<std::string>{"ev"});
}

TEST_CASE("the source post is placed first whatever the file order") {
  const auto dir = scratch_dir("corpus-order");
  write_file(dir / "t.json", R"({"event": "ev", "detection": null, "veracity": null, "posts": [
      {"id": "r", "text": "reply", "parent": "s", "stance": null},
      {"id": "s", "text": "source", "parent": null, "stance": null}]})");
  const Corpus c = load_corpus(dir);
  CHECK(c.threads[0].id() == "s");
}

TEST_CASE("schema violations name the file and the post") {
  SUBCASE("orphan parent") {
    const auto msg = load_error(R"({"event": "e", "detection": null, "veracity": null, "posts": [
        {"id": "1", "text": "a", "parent": null, "stance": null},
        {"id": "2", "text": "b", "parent": "9", "stance": null}]})");
    CHECK(msg.find("orphan") != std::string::npos);
    CHECK(msg.find("thread.json") != std::string::npos);
    CHECK(msg.find("'2'") != std::string::npos);
  }
  SUBCASE("duplicate id") {
    const auto msg = load_error(R"({"event": "e", "detection": null, "veracity": null, "posts": [
        {"id": "1", "text": "a", "parent": null, "stance": null},
        {"id": "1", "text": "b", "parent": "1", "stance": null}]})");
    CHECK(msg.find("duplicate") != std::string::npos);
  }
  SUBCASE("cycle") {
    const auto msg = load_error(R"({"event": "e", "detection": null, "veracity": null, "posts": [
        {"id": "1", "text": "a", "parent": null, "stance": null},
        {"id": "2", "text": "b", "parent": "3", "stance": null},
        {"id": "3", "text": "c", "parent": "2", "stance": null}]})");
    CHECK(msg.find("cyclic") != std::string::npos);
  }
  SUBCASE("unknown label") {
    const auto msg = load_error(R"({"event": "e", "detection": null, "veracity": null, "posts": [
        {"id": "1", "text": "a", "parent": null, "stance": "agree"}]})");
    CHECK(msg.find("unknown stance label 'agree'") != std::string::npos);
  }
  SUBCASE("parse failure") {
    const auto msg = load_error("{\"event\": ");
    CHECK(msg.find("parse failure") != std::string::npos);
  }
  SUBCASE("veracity on a non-rumour") {
    const auto msg = load_error(R"({"event": "e", "detection": "non-rumour", "veracity": "true", "posts": [
        {"id": "1", "text": "a", "parent": null, "stance": null}]})");
    CHECK(msg.find("veracity label requires") != std::string::npos);
  }
}

TEST_CASE("a RumourEval-sized test set keeps its veracity counts through disk") {
  const Corpus c = testing::counts_corpus({{"test", 0, 8, 12, 8}});
  const auto dir = scratch_dir("corpus-rumoureval");
  save_corpus_dir(c, dir);
  const Corpus loaded = load_corpus(dir);
  std::array<int, 3> counts{};
  for (const Thread& t : loaded.threads) ++counts[static_cast<std::size_t>(*t.veracity)];
  CHECK(loaded.threads.size() == 28);
  CHECK(counts[static_cast<std::size_t>(Veracity::True)] == 8);
  CHECK(counts[static_cast<std::size_t>(Veracity::False)] == 12);
  CHECK(counts[static_cast<std::size_t>(Veracity::Unverified)] == 8);
}

TEST_CASE("save then load is the identity") {
  SynthSpec spec;
  spec.events = 3;
  spec.threads_per_event = 6;
  spec.rumour_prior = 0.6;
  const Corpus c = generate_synthetic(spec, 21);
  const auto dir = scratch_dir("corpus-roundtrip");
  save_corpus(c, dir / "all.ndjson");
  CHECK(load_corpus(dir / "all.ndjson") == c);
  save_corpus_dir(c, dir / "threads");
  CHECK(load_corpus(dir / "threads") == c);
}

TEST_CASE("branch decomposition on fixed shapes") {
  SUBCASE("three-branch conversation") {
    const Thread t = figure_two_thread();
    const auto branches = decompose_branches(t);
    REQUIRE(branches.size() == 3);
    CHECK(branch_ids(t, branches[0]) == std::vector<std::string>{"s", "a", "a1"});
    CHECK(branch_ids(t, branches[1]) == std::vector<std::string>{"s", "b"});
    CHECK(branch_ids(t, branches[2]) == std::vector<std::string>{"s", "c"});
  }
  SUBCASE("source only") {
    Thread t;
    t.posts = {make_post("s", "alone", std::nullopt)};
    const auto branches = decompose_branches(t);
    REQUIRE(branches.size() == 1);
    CHECK(branches[0].posts == std::vector<std::size_t>{0});
  }
  SUBCASE("star") {
    Thread t;
    t.posts = {make_post("s", "src", std::nullopt)};
    for (int k = 0; k < 7; ++k) t.posts.push_back(make_post("r" + std::to_string(k), "r", "s"));
    const auto branches = decompose_branches(t);
    CHECK(branches.size() == 7);
    for (const Branch& b : branches) CHECK(b.posts.size() == 2);
  }
}

TEST_CASE("branches match a brute-force path enumeration on random trees") {
  Rng rng(2024);
  for (int trial = 0; trial < 1000; ++trial) {
    const Thread t = testing::random_thread(rng, 1 + rng.index(50));
    const auto branches = decompose_branches(t);
    const auto oracle = testing::brute_force_paths(t);
    REQUIRE(branches.size() == oracle.size());
    std::set<std::size_t> covered;
    for (std::size_t b = 0; b < branches.size(); ++b) {
      CHECK(branch_ids(t, branches[b]) == oracle[b]);
      const auto& idx = branches[b].posts;
      CHECK(idx.front() == 0);
      for (std::size_t k = 1; k < idx.size(); ++k) CHECK(t.posts[idx[k]].parent == t.posts[idx[k - 1]].id);
      covered.insert(idx.begin(), idx.end());
    }
    CHECK(covered.size() == t.posts.size());
  }
}

TEST_CASE("leave-one-event-out splits partition the corpus") {
  SUBCASE("nine events") {
    const Corpus c = testing::counts_corpus(testing::pheme_counts());
    CHECK(c.events.size() == 9);
    for (const std::string& e : c.events) {
      auto [train, test] = split_loeo(c, e);
      CHECK(train.events.size() == 8);
      CHECK(test.events == std::vector<std::string>{e});
      CHECK(train.threads.size() + test.threads.size() == c.threads.size());
      std::set<std::string> ids;
      for (const Thread& t : train.threads) ids.insert(t.id());
      for (const Thread& t : test.threads) {
        CHECK(t.event == e);
        CHECK(ids.insert(t.id()).second);
      }
    }
    CHECK(split_loeo(c, "germanwings-crash").second.threads.size() == 469);
  }
  SUBCASE("single event") {
    const Corpus c = testing::counts_corpus({{"only", 1, 1, 1, 1}});
    CHECK_THROWS_AS(split_loeo(c, "only"), ValidationError);
  }
  SUBCASE("unknown event") {
    const Corpus c = testing::counts_corpus({{"a", 1, 1, 0, 0}, {"b", 1, 0, 1, 0}});
    CHECK_THROWS_AS(split_loeo(c, "c"), ValidationError);
  }
}

TEST_CASE("random label vectors partition exactly under every held-out event") {
  Rng rng(77);
  for (int trial = 0; trial < 1000; ++trial) {
    std::vector<Thread> threads;
    const std::size_t n_events = 2 + rng.index(5);
    const std::size_t n = n_events + rng.index(30);
    for (std::size_t i = 0; i < n; ++i) {
      const std::string event = "e" + std::to_string(i < n_events ? i : rng.index(n_events));
      Thread t = testing::random_thread(rng, 1 + rng.index(4), event);
      for (Post& p : t.posts) p.id = "t" + std::to_string(i) + p.id;
      for (Post& p : t.posts) {
        if (p.parent) p.parent = "t" + std::to_string(i) + *p.parent;
      }
      threads.push_back(std::move(t));
    }
    const Corpus c = Corpus::from_threads(threads);
    for (const std::string& e : c.events) {
      auto [train, test] = split_loeo(c, e);
      std::size_t expected_test = 0;
      for (const Thread& t : c.threads) expected_test += t.event == e;
      CHECK(test.threads.size() == expected_test);
      CHECK(train.threads.size() == c.threads.size() - expected_test);
    }
  }
}

TEST_CASE("synthetic corpora are deterministic") {
  SynthSpec spec;
  spec.events = 2;
  spec.threads_per_event = 5;
  const auto dir = scratch_dir("corpus-synth");
  save_corpus(generate_synthetic(spec, 7), dir / "a.ndjson");
  save_corpus(generate_synthetic(spec, 7), dir / "b.ndjson");
  CHECK(read_file(dir / "a.ndjson") == read_file(dir / "b.ndjson"));
  save_corpus(generate_synthetic(spec, 8), dir / "c.ndjson");
  CHECK(read_file(dir / "a.ndjson") != read_file(dir / "c.ndjson"));
}

TEST_CASE("synthetic corpora populate every label and respect the spec") {
  SynthSpec spec;
  spec.events = 4;
  spec.threads_per_event = 10;
  const Corpus c = generate_synthetic(spec, 3);
  CHECK(c.events.size() == 4);
  CHECK(c.threads.size() == 40);
  for (const Thread& t : c.threads) {
    CHECK_NOTHROW(validate_thread(t));
    CHECK(t.detection == Detection::Rumour);
    CHECK(t.veracity.has_value());
    const auto branches = decompose_branches(t);
    CHECK(static_cast<int>(branches.size()) >= spec.min_branches);
    CHECK(static_cast<int>(branches.size()) <= spec.max_branches);
    for (const Post& p : t.posts) CHECK(p.stance.has_value());
  }
  SynthSpec bad = spec;
  bad.coupling = 1.5;
  CHECK_THROWS_AS(generate_synthetic(bad, 1), ValidationError);
  bad = spec;
  bad.min_depth = 5;
  bad.max_depth = 2;
  CHECK_THROWS_AS(generate_synthetic(bad, 1), ValidationError);
}

TEST_CASE("full coupling tilts false rumours toward deny and query") {
  SynthSpec spec;
  spec.events = 1;
  spec.threads_per_event = 100;
  spec.veracity_priors = {1.0, 0.0, 0.0};
  spec.coupling = 1.0;
  const Corpus c = generate_synthetic(spec, 5);
  std::size_t deny_query = 0, support = 0;
  for (const Thread& t : c.threads) {
    REQUIRE(t.veracity == Veracity::False);
    for (const Post& p : t.replies()) {
      if (p.stance == Stance::Deny || p.stance == Stance::Query) ++deny_query;
      if (p.stance == Stance::Support) ++support;
    }
  }
  CHECK(deny_query > support);
}

TEST_CASE("zero coupling makes reply stance independent of veracity") {
  SynthSpec spec;
  spec.events = 5;
  spec.threads_per_event = 100;
  spec.coupling = 0.0;
  const Corpus c = generate_synthetic(spec, 99);
  // Contingency table: veracity x per-thread majority reply stance.
  std::array<std::array<double, 4>, 3> table{};
  for (const Thread& t : c.threads) {
    std::array<int, 4> counts{};
    for (const Post& p : t.replies()) ++counts[static_cast<std::size_t>(*p.stance)];
    const auto majority = static_cast<std::size_t>(std::max_element(counts.begin(), counts.end()) - counts.begin());
    table[static_cast<std::size_t>(*t.veracity)][majority] += 1.0;
  }
  std::array<double, 3> rows{};
  std::array<double, 4> cols{};
  double total = 0.0;
  for (std::size_t i = 0; i < 3; ++i) {
    for (std::size_t j = 0; j < 4; ++j) {
      rows[i] += table[i][j];
      cols[j] += table[i][j];
      total += table[i][j];
    }
  }
  double chi2 = 0.0;
  int r = 0, k = 0;
  for (double v : rows) r += v > 0;
  for (double v : cols) k += v > 0;
  for (std::size_t i = 0; i < 3; ++i) {
    for (std::size_t j = 0; j < 4; ++j) {
      const double expected = rows[i] * cols[j] / total;
      if (expected > 0) chi2 += (table[i][j] - expected) * (table[i][j] - expected) / expected;
    }
  }
  const int df = (r - 1) * (k - 1);
  // Upper 1% points of the chi-square distribution.
  const std::map<int, double> critical{{1, 6.635}, {2, 9.210}, {3, 11.345}, {4, 13.277}, {6, 16.812}};
  REQUIRE(critical.count(df));
  CHECK(total == 500.0);
  CHECK(chi2 < critical.at(df));
}
