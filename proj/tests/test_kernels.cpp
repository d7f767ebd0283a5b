#include <omp.h>

#include <cmath>

#include "doctest.h"
#include "rumour/kernels.hpp"
#include "support.hpp"

using namespace rumour;
namespace k = rumour::kernels;

namespace {

std::vector<double> random_vector(Rng& rng, std::size_t n) {
  std::vector<double> v(n);
  for (double& x : v) x = rng.normal();
  return v;
}

}  // namespace

TEST_CASE("kernels agree with textbook loops") {
  Rng rng(1);
  for (int trial = 0; trial < 200; ++trial) {
    const std::size_t rows = 1 + rng.index(40), cols = 1 + rng.index(40);
    const auto a = random_vector(rng, rows * cols);
    const auto x = random_vector(rng, cols);
    const auto xt = random_vector(rng, rows);
    const auto y0 = random_vector(rng, rows);
    const auto yt0 = random_vector(rng, cols);

    auto y = y0;
    k::serial::gemv(a, rows, cols, x, y);
    auto yt = yt0;
    k::serial::gemv_t(a, rows, cols, xt, yt);
    auto g = a;
    k::serial::ger(0.7, xt, x, g);
    for (std::size_t r = 0; r < rows; ++r) {
      double s = 0.0;
      for (std::size_t c = 0; c < cols; ++c) s += a[r * cols + c] * x[c];
      CHECK(std::abs(y[r] - (y0[r] + s)) < 1e-12);
      for (std::size_t c = 0; c < cols; ++c) {
        CHECK(std::abs(g[r * cols + c] - (a[r * cols + c] + 0.7 * xt[r] * x[c])) < 1e-14);
      }
    }
    for (std::size_t c = 0; c < cols; ++c) {
      double s = 0.0;
      for (std::size_t r = 0; r < rows; ++r) s += a[r * cols + c] * xt[r];
      CHECK(std::abs(yt[c] - (yt0[c] + s)) < 1e-12);
    }
  }
}

TEST_CASE("parallel kernels are bitwise identical to the serial ones") {
  Rng rng(2);
  const int saved = omp_get_max_threads();
  for (int threads : {1, 2, 4}) {
    omp_set_num_threads(threads);
    // Shapes on both sides of the parallel threshold.
    for (auto [rows, cols] : {std::pair<std::size_t, std::size_t>{7, 5}, {400, 300}, {1200, 100}, {64, 600}}) {
      const auto a = random_vector(rng, rows * cols);
      const auto x = random_vector(rng, cols);
      const auto xt = random_vector(rng, rows);
      auto ys = random_vector(rng, rows), yp = ys;
      k::serial::gemv(a, rows, cols, x, ys);
      k::omp::gemv(a, rows, cols, x, yp);
      CHECK(ys == yp);
      auto ts = random_vector(rng, cols), tp = ts;
      k::serial::gemv_t(a, rows, cols, xt, ts);
      k::omp::gemv_t(a, rows, cols, xt, tp);
      CHECK(ts == tp);
      auto gs = a, gp = a;
      k::serial::ger(-1.3, xt, x, gs);
      k::omp::ger(-1.3, xt, x, gp);
      CHECK(gs == gp);
    }
  }
  omp_set_num_threads(saved);
}
