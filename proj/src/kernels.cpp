#include "rumour/kernels.hpp"

#include <omp.h>

#include <cassert>

namespace rumour::kernels {

namespace serial {

void gemv(std::span<const double> a, std::size_t rows, std::size_t cols, std::span<const double> x,
          std::span<double> y) {
  assert(a.size() == rows * cols && x.size() == cols && y.size() == rows);
  for (std::size_t i = 0; i < rows; ++i) {
    const double* row = a.data() + i * cols;
    double acc = 0.0;
    for (std::size_t j = 0; j < cols; ++j) acc += row[j] * x[j];
    y[i] += acc;
  }
}

void gemv_t(std::span<const double> a, std::size_t rows, std::size_t cols, std::span<const double> x,
            std::span<double> y) {
  assert(a.size() == rows * cols && x.size() == rows && y.size() == cols);
  for (std::size_t j = 0; j < cols; ++j) {
    double acc = 0.0;
    for (std::size_t i = 0; i < rows; ++i) acc += a[i * cols + j] * x[i];
    y[j] += acc;
  }
}

void ger(double alpha, std::span<const double> x, std::span<const double> y, std::span<double> a) {
  const std::size_t rows = x.size();
  const std::size_t cols = y.size();
  assert(a.size() == rows * cols);
  for (std::size_t i = 0; i < rows; ++i) {
    const double s = alpha * x[i];
    if (s == 0.0) continue;
    double* row = a.data() + i * cols;
    for (std::size_t j = 0; j < cols; ++j) row[j] += s * y[j];
  }
}

}  // namespace serial

namespace omp {

void gemv(std::span<const double> a, std::size_t rows, std::size_t cols, std::span<const double> x,
          std::span<double> y) {
  assert(a.size() == rows * cols && x.size() == cols && y.size() == rows);
  const auto n = static_cast<std::ptrdiff_t>(rows);
#pragma omp parallel for schedule(static) if (rows * cols >= kParallelThreshold)
  for (std::ptrdiff_t i = 0; i < n; ++i) {
    const double* row = a.data() + static_cast<std::size_t>(i) * cols;
    double acc = 0.0;
    for (std::size_t j = 0; j < cols; ++j) acc += row[j] * x[j];
    y[static_cast<std::size_t>(i)] += acc;
  }
}

void gemv_t(std::span<const double> a, std::size_t rows, std::size_t cols, std::span<const double> x,
            std::span<double> y) {
  assert(a.size() == rows * cols && x.size() == rows && y.size() == cols);
  const auto n = static_cast<std::ptrdiff_t>(cols);
#pragma omp parallel for schedule(static) if (rows * cols >= kParallelThreshold)
  for (std::ptrdiff_t j = 0; j < n; ++j) {
    double acc = 0.0;
    for (std::size_t i = 0; i < rows; ++i) acc += a[i * cols + static_cast<std::size_t>(j)] * x[i];
    y[static_cast<std::size_t>(j)] += acc;
  }
}

void ger(double alpha, std::span<const double> x, std::span<const double> y, std::span<double> a) {
  const std::size_t rows = x.size();
  const std::size_t cols = y.size();
  assert(a.size() == rows * cols);
  const auto n = static_cast<std::ptrdiff_t>(rows);
#pragma omp parallel for schedule(static) if (rows * cols >= kParallelThreshold)
  for (std::ptrdiff_t i = 0; i < n; ++i) {
    const double s = alpha * x[static_cast<std::size_t>(i)];
    if (s == 0.0) continue;
    double* row = a.data() + static_cast<std::size_t>(i) * cols;
    for (std::size_t j = 0; j < cols; ++j) row[j] += s * y[j];
  }
}

}  // namespace omp

}  // namespace rumour::kernels
