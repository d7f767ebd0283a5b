#pragma once

#include <cstdint>
#include <filesystem>
#include <random>
#include <span>
#include <stdexcept>
#include <string>
#include <string_view>
#include <utility>

namespace rumour {

/// Base class for every error raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Bad input data or arguments (maps to CLI exit status 1).
class ValidationError : public Error {
 public:
  using Error::Error;
};

/// Failure while computing (non-finite loss, failed evaluation; exit status 2).
class RuntimeFailure : public Error {
 public:
  using Error::Error;
};

/// Mixes a named sub-stream into a seed. Every random component derives its
/// own stream from the global seed through this function.
std::uint64_t derive_seed(std::uint64_t seed, std::string_view stream);
std::uint64_t derive_seed(std::uint64_t seed, std::string_view stream, std::uint64_t index);

/// Writes `content` to a sibling temporary file and renames it into place.
/// Parent directories are created as needed.
void write_text_atomic(const std::filesystem::path& path, const std::string& content);

/// Deterministic random source. Built on mt19937_64 (whose output sequence is
/// fixed by the standard) with hand-written conversions, so draws are
/// identical across standard library implementations.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : engine_(seed) {}

  std::uint64_t next() { return engine_(); }

  /// Uniform in [0, 1) with 53 random bits.
  double uniform() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }

  /// Uniform integer in [0, n). n must be positive.
  std::size_t index(std::size_t n);

  /// Uniform integer in [lo, hi].
  int between(int lo, int hi);

  bool bernoulli(double p) { return uniform() < p; }

  /// Standard normal via Box-Muller.
  double normal();

  /// Draws an index with probability proportional to weights.
  std::size_t categorical(std::span<const double> weights);

  template <class T>
  void shuffle(std::span<T> items) {
    for (std::size_t i = items.size(); i > 1; --i) {
      std::size_t j = index(i);
      std::swap(items[i - 1], items[j]);
    }
  }

 private:
  std::mt19937_64 engine_;
};

}  // namespace rumour
