// Serial reference kernels against their OpenMP counterparts, plus one
// end-to-end forward/backward pass at search-space sizes.

#include <benchmark/benchmark.h>

#include <vector>

#include "rumour/common.hpp"
#include "rumour/kernels.hpp"
#include "rumour/mtl.hpp"

namespace {

using namespace rumour;

std::vector<double> random_vector(std::size_t n, std::uint64_t seed) {
  Rng rng(seed);
  std::vector<double> v(n);
  for (double& x : v) x = rng.uniform() - 0.5;
  return v;
}

template <void (*Kernel)(std::span<const double>, std::size_t, std::size_t, std::span<const double>,
                         std::span<double>)>
void BM_Gemv(benchmark::State& state) {
  const auto rows = static_cast<std::size_t>(state.range(0));
  const auto cols = static_cast<std::size_t>(state.range(1));
  const auto a = random_vector(rows * cols, 1);
  const auto x = random_vector(cols, 2);
  std::vector<double> y(rows, 0.0);
  for (auto _ : state) {
    Kernel(a, rows, cols, x, y);
    benchmark::DoNotOptimize(y.data());
  }
  state.SetItemsProcessed(static_cast<int64_t>(state.iterations() * rows * cols));
}

template <void (*Kernel)(std::span<const double>, std::size_t, std::size_t, std::span<const double>,
                         std::span<double>)>
void BM_GemvT(benchmark::State& state) {
  const auto rows = static_cast<std::size_t>(state.range(0));
  const auto cols = static_cast<std::size_t>(state.range(1));
  const auto a = random_vector(rows * cols, 1);
  const auto x = random_vector(rows, 2);
  std::vector<double> y(cols, 0.0);
  for (auto _ : state) {
    Kernel(a, rows, cols, x, y);
    benchmark::DoNotOptimize(y.data());
  }
  state.SetItemsProcessed(static_cast<int64_t>(state.iterations() * rows * cols));
}

template <void (*Kernel)(double, std::span<const double>, std::span<const double>, std::span<double>)>
void BM_Ger(benchmark::State& state) {
  const auto rows = static_cast<std::size_t>(state.range(0));
  const auto cols = static_cast<std::size_t>(state.range(1));
  const auto x = random_vector(rows, 1);
  const auto y = random_vector(cols, 2);
  std::vector<double> a(rows * cols, 0.0);
  for (auto _ : state) {
    Kernel(1e-3, x, y, a);
    benchmark::DoNotOptimize(a.data());
  }
  state.SetItemsProcessed(static_cast<int64_t>(state.iterations() * rows * cols));
}

// LSTM gate matrices (4h x in) and dense layers at the tuned widths.
void Shapes(benchmark::internal::Benchmark* b) {
  b->Args({400, 300})->Args({1200, 300})->Args({600, 600})->Args({64, 32});
}

BENCHMARK(BM_Gemv<kernels::serial::gemv>)->Apply(Shapes);
BENCHMARK(BM_Gemv<kernels::omp::gemv>)->Apply(Shapes);
BENCHMARK(BM_GemvT<kernels::serial::gemv_t>)->Apply(Shapes);
BENCHMARK(BM_GemvT<kernels::omp::gemv_t>)->Apply(Shapes);
BENCHMARK(BM_Ger<kernels::serial::ger>)->Apply(Shapes);
BENCHMARK(BM_Ger<kernels::omp::ger>)->Apply(Shapes);

void BM_BranchStep(benchmark::State& state) {
  HyperParams hp;
  hp.lstm_width = static_cast<std::size_t>(state.range(0));
  hp.dense_width = 300;
  const std::size_t dim = 300;
  MTLModel model = MTLModel::build(hp, {Task::Stance, Task::Detection, Task::Veracity}, dim, 1);
  std::vector<TweetVector> tweets;
  for (int i = 0; i < 8; ++i) tweets.push_back({random_vector(dim, 10 + static_cast<std::uint64_t>(i))});
  TrainingInstance inst;
  inst.branch = pad_and_mask(tweets, 25);
  inst.veracity = Veracity::True;
  inst.detection = Detection::Rumour;
  inst.stance.assign(8, Stance::Comment);
  auto grads = model.params().zeros_like();
  DropoutStreams dropout(3);
  for (auto _ : state) {
    auto pass = model.forward(inst.branch, &dropout);
    benchmark::DoNotOptimize(model.backward(pass, inst, grads));
  }
}
BENCHMARK(BM_BranchStep)->Arg(100)->Arg(300)->Unit(benchmark::kMicrosecond);

}  // namespace

BENCHMARK_MAIN();
