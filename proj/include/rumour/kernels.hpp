#pragma once

// Dense linear-algebra kernels used by the LSTM and dense layers.
//
// Matrices are row-major spans. Every kernel exists twice: a plain serial
// loop in `serial::` (the reference) and an OpenMP version in `omp::`. The
// parallel versions split work over independent output elements and keep
// the per-element summation order of the serial loop, so both produce
// bitwise-identical results. The unqualified functions dispatch to `omp::`.

#include <cstddef>
#include <span>

namespace rumour::kernels {

/// Below this many multiply-adds the OpenMP versions run single-threaded.
inline constexpr std::size_t kParallelThreshold = 1 << 15;

namespace serial {

/// y += A x, A is rows x cols.
void gemv(std::span<const double> a, std::size_t rows, std::size_t cols, std::span<const double> x,
          std::span<double> y);
/// y += A^T x, A is rows x cols, x has rows entries, y has cols.
void gemv_t(std::span<const double> a, std::size_t rows, std::size_t cols, std::span<const double> x,
            std::span<double> y);
/// A += alpha * x y^T.
void ger(double alpha, std::span<const double> x, std::span<const double> y, std::span<double> a);

}  // namespace serial

namespace omp {

void gemv(std::span<const double> a, std::size_t rows, std::size_t cols, std::span<const double> x,
          std::span<double> y);
void gemv_t(std::span<const double> a, std::size_t rows, std::size_t cols, std::span<const double> x,
            std::span<double> y);
void ger(double alpha, std::span<const double> x, std::span<const double> y, std::span<double> a);

}  // namespace omp

inline void gemv(std::span<const double> a, std::size_t rows, std::size_t cols, std::span<const double> x,
                 std::span<double> y) {
  omp::gemv(a, rows, cols, x, y);
}
inline void gemv_t(std::span<const double> a, std::size_t rows, std::size_t cols, std::span<const double> x,
                   std::span<double> y) {
  omp::gemv_t(a, rows, cols, x, y);
}
inline void ger(double alpha, std::span<const double> x, std::span<const double> y, std::span<double> a) {
  omp::ger(alpha, x, y, a);
}

}  // namespace rumour::kernels
