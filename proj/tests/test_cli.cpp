#include <fstream>
#include <sstream>

#include "doctest.h"
#include "rumour/cli.hpp"
#include "support.hpp"

namespace fs = std::filesystem;

namespace {

struct Run {
  int code = 0;
  std::string out;
  std::string err;
};

Run run(std::vector<std::string> args) {
  std::ostringstream out, err;
  Run r;
  r.code = rumour::cli::dispatch(args, out, err);
  r.out = out.str();
  r.err = err.str();
  return r;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  REQUIRE(in.good());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void write(const fs::path& p, const std::string& text) {
  std::ofstream(p, std::ios::binary) << text;
}

std::size_t count_lines(const std::string& s) { return static_cast<std::size_t>(std::count(s.begin(), s.end(), '\n')); }

/// Three-event synthetic corpus plus a fast run config, under `dir`.
fs::path small_setup(const fs::path& dir) {
  write(dir / "synth.txt", "events = 3\nthreads_per_event = 6\nrumour_prior = 0.8\n");
  REQUIRE(run({"synth", (dir / "synth.txt").string(), "-o", (dir / "corpus").string(), "--seed", "3"}).code == 0);
  write(dir / "run.txt",
        "corpus = corpus\n"
        "embedding_dim = 8\n"
        "seed = 5\n"
        "dense_width = 6\n"
        "lstm_width = 4\n"
        "epochs = 3\n"
        "batch_size = 8\n"
        "space = mini\n"
        "test_event = event-c\n"
        "checkpoint_every = 1\n"
        "output = out\n");
  return dir / "run.txt";
}

}  // namespace

TEST_CASE("help and unknown flags") {
  CHECK(run({"--help"}).code == 0);
  CHECK(run({"loeo", "--help"}).code == 0);
  const Run bad = run({"analyze", "x", "--bogus"});
  CHECK(bad.code == 1);
  CHECK_FALSE(bad.err.empty());
  CHECK(run({}).code == 1);
}

TEST_CASE("validate reports orphan parents with exit code 1") {
  const fs::path dir = testing::scratch_dir("cli-validate");
  const fs::path cfg = small_setup(dir);
  (void)cfg;
  const Run ok = run({"validate", (dir / "corpus").string()});
  CHECK(ok.code == 0);
  CHECK(ok.out.find(": ok") != std::string::npos);

  std::string text = slurp(dir / "corpus" / "000002.json");
  const auto pos = text.find("\"parent\": \"");
  REQUIRE(pos != std::string::npos);
  text.replace(pos, std::string("\"parent\": \"").size(), "\"parent\": \"nobody-");
  write(dir / "corpus" / "000002.json", text);
  const Run broken = run({"validate", (dir / "corpus").string()});
  CHECK(broken.code == 1);
  CHECK(broken.err.find("000002.json") != std::string::npos);
  CHECK(broken.err.find("parent") != std::string::npos);

  const Run as_json = run({"--error-json", "validate", (dir / "corpus").string()});
  CHECK(as_json.code == 1);
  const auto j = nlohmann::json::parse(as_json.err);
  CHECK(j["error"]["status"] == 1);
  CHECK(j["error"]["message"].get<std::string>().find("parent") != std::string::npos);
}

TEST_CASE("loeo report has one row per model and one column per event") {
  const fs::path dir = testing::scratch_dir("cli-loeo");
  const fs::path cfg = small_setup(dir);
  const Run r = run({"loeo", cfg.string(), "--models", "majority,mtl3"});
  REQUIRE(r.code == 0);
  const std::string csv = slurp(dir / "out" / "report.csv");
  std::istringstream lines(csv);
  std::string line;
  std::vector<std::string> per_event;
  bool in_per_event = false;
  while (std::getline(lines, line)) {
    if (line.rfind("# ", 0) == 0) {
      in_per_event = line == "# Per-event macro-F";
      continue;
    }
    if (in_per_event && !line.empty()) per_event.push_back(line);
  }
  REQUIRE(per_event.size() == 3);  // header + two models
  CHECK(per_event[0] == "model,event-a,event-b,event-c");
  CHECK(per_event[1].rfind("majority,", 0) == 0);
  CHECK(per_event[2].rfind("mtl3,", 0) == 0);
  CHECK(fs::exists(dir / "out" / "predictions" / "mtl3" / "event-b.ndjson"));
  CHECK(r.out == slurp(dir / "out" / "report.txt"));

  CHECK(run({"loeo", cfg.string(), "--models", "majority,gpt"}).code == 1);
}

TEST_CASE("search writes one log line per trial") {
  const fs::path dir = testing::scratch_dir("cli-search");
  const fs::path cfg = small_setup(dir);
  const Run r = run({"search", cfg.string(), "--trials", "30", "--set", "epochs=1"});
  REQUIRE(r.code == 0);
  const std::string log = slurp(dir / "out" / "trials.ndjson");
  CHECK(count_lines(log) == 30);
  std::istringstream lines(log);
  std::string line;
  while (std::getline(lines, line)) {
    const auto j = nlohmann::json::parse(line);
    CHECK(j.contains("objective"));
    CHECK(j["config"].contains("lstm_width"));
  }
  CHECK(fs::exists(dir / "out" / "best_config.txt"));
  CHECK(fs::exists(dir / "out" / "best_trial.json"));
}

TEST_CASE("train and evaluate write checkpoints, history and metrics") {
  const fs::path dir = testing::scratch_dir("cli-train");
  const fs::path cfg = small_setup(dir);
  REQUIRE(run({"train", cfg.string()}).code == 0);
  CHECK(count_lines(slurp(dir / "out" / "history.csv")) == 4);  // header + 3 epochs
  CHECK(fs::exists(dir / "out" / "checkpoints" / "epoch-0003.json"));
  CHECK(slurp(dir / "out" / "checkpoints" / "epoch-0003.json") == slurp(dir / "out" / "model.json"));

  const Run ev = run({"evaluate", cfg.string(), "--model", (dir / "out" / "model.json").string()});
  REQUIRE(ev.code == 0);
  const auto metrics = nlohmann::json::parse(slurp(dir / "out" / "metrics.json"));
  CHECK(metrics.contains("veracity"));
  CHECK(count_lines(slurp(dir / "out" / "predictions.ndjson")) == 6);

  CHECK(run({"evaluate", cfg.string(), "--model", (dir / "out" / "model.json").string(), "--set",
             "embedding_dim=16"})
            .code == 1);
  CHECK(run({"train", cfg.string(), "--set", "no_such_key=1"}).code == 1);
}

TEST_CASE("reruns with the same config and seed are byte-identical") {
  const fs::path dir = testing::scratch_dir("cli-determinism");
  const fs::path cfg = small_setup(dir);
  const std::vector<std::string> outs{"a", "b"};
  for (const auto& o : outs) {
    const std::string out = (dir / o).string();
    REQUIRE(run({"train", cfg.string(), "-o", out}).code == 0);
    REQUIRE(run({"loeo", cfg.string(), "--models", "majority,nile,mtl2vs", "-o", out}).code == 0);
    REQUIRE(run({"search", cfg.string(), "--trials", "12", "--set", "epochs=1", "-o", out}).code == 0);
    REQUIRE(run({"analyze", (dir / "corpus").string(), "-o", (dir / o / "analysis.csv").string()}).code == 0);
  }
  for (const char* f : {"model.json", "history.csv", "checkpoints/epoch-0002.json", "report.csv", "report.txt",
                        "trials.ndjson", "best_config.txt", "analysis.csv", "predictions/nile/event-a.ndjson"}) {
    INFO(f);
    CHECK(slurp(dir / "a" / f) == slurp(dir / "b" / f));
  }
  REQUIRE(run({"train", cfg.string(), "-o", (dir / "c").string(), "--seed", "6"}).code == 0);
  CHECK(slurp(dir / "a" / "model.json") != slurp(dir / "c" / "model.json"));
}
