#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

namespace rumour {

/// Lowercases, turns every character outside a-z into a space, and splits
/// on whitespace. "don't" becomes [don, t]; digits and URLs punctuation vanish.
std::vector<std::string> preprocess(std::string_view text);

/// Word vectors, either loaded from a text file or generated on demand from
/// a hash of (token, seed). Immutable once built; lookups are reentrant.
class EmbeddingTable {
 public:
  /// Loads "token v1 ... vd" lines with an optional "<count> <dimension>" header.
  static EmbeddingTable load(const std::filesystem::path& path);
  /// Every token maps to a deterministic unit-norm vector.
  static EmbeddingTable hashed(std::size_t dimension, std::uint64_t seed);
  static EmbeddingTable from_entries(std::size_t dimension,
                                     std::unordered_map<std::string, std::vector<double>> entries);

  std::size_t dimension() const { return dimension_; }
  bool is_hashed() const { return hashed_; }
  /// Number of stored entries (0 for hashed tables).
  std::size_t size() const { return entries_.size(); }

  /// Writes the vector for `token` into `out` (size dimension()); false if OOV.
  bool lookup(std::string_view token, std::span<double> out) const;
  std::optional<std::vector<double>> vector(std::string_view token) const;

 private:
  std::size_t dimension_ = 0;
  bool hashed_ = false;
  std::uint64_t seed_ = 0;
  std::unordered_map<std::string, std::vector<double>> entries_;
};

struct TweetVector {
  std::vector<double> values;
};

/// Mean of the in-vocabulary token vectors; zero vector when none are known.
TweetVector embed_tweet(std::span<const std::string> tokens, const EmbeddingTable& table);

/// Padded branch matrix (max_len x dimension, row-major) with a prefix mask.
struct BranchTensor {
  std::size_t max_len = 0;
  std::size_t dimension = 0;
  std::size_t true_length = 0;
  std::vector<double> data;
  std::vector<std::uint8_t> mask;

  std::span<const double> row(std::size_t t) const { return {data.data() + t * dimension, dimension}; }
  std::span<double> row(std::size_t t) { return {data.data() + t * dimension, dimension}; }
};

/// Keeps the first min(len, max_len) vectors (source first), zero-pads the rest.
BranchTensor pad_and_mask(std::span<const TweetVector> vectors, std::size_t max_len);

}  // namespace rumour
