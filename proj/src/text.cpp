#include "rumour/text.hpp"

#include <cmath>
#include <charconv>
#include <fstream>
#include <sstream>

#include "rumour/common.hpp"

namespace rumour {

std::vector<std::string> preprocess(std::string_view text) {
  std::vector<std::string> tokens;
  std::string current;
  for (char raw : text) {
    char c = raw;
    if (c >= 'A' && c <= 'Z') c = static_cast<char>(c - 'A' + 'a');
    if (c >= 'a' && c <= 'z') {
      current += c;
    } else if (!current.empty()) {
      tokens.push_back(std::move(current));
      current.clear();
    }
  }
  if (!current.empty()) tokens.push_back(std::move(current));
  return tokens;
}

namespace {

std::vector<std::string_view> split_fields(std::string_view line) {
  std::vector<std::string_view> fields;
  std::size_t i = 0;
  while (i < line.size()) {
    while (i < line.size() && (line[i] == ' ' || line[i] == '\t' || line[i] == '\r')) ++i;
    std::size_t start = i;
    while (i < line.size() && line[i] != ' ' && line[i] != '\t' && line[i] != '\r') ++i;
    if (i > start) fields.push_back(line.substr(start, i - start));
  }
  return fields;
}

bool all_digits(std::string_view s) {
  if (s.empty()) return false;
  for (char c : s) {
    if (c < '0' || c > '9') return false;
  }
  return true;
}

std::uint64_t token_hash(std::string_view s, std::uint64_t seed) {
  std::uint64_t h = 0xcbf29ce484222325ULL ^ seed;
  for (unsigned char c : s) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return derive_seed(h, "embedding");
}

}  // namespace

EmbeddingTable EmbeddingTable::load(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ValidationError("cannot open embeddings file " + path.string());
  EmbeddingTable table;
  std::string line;
  std::size_t line_no = 0;
  bool first = true;
  while (std::getline(in, line)) {
    ++line_no;
    auto fields = split_fields(line);
    if (fields.empty()) continue;
    const std::string where = path.string() + ":" + std::to_string(line_no);
    if (first && fields.size() == 2 && all_digits(fields[0]) && all_digits(fields[1])) {
      first = false;
      table.dimension_ = std::stoul(std::string(fields[1]));
      if (table.dimension_ == 0) throw ValidationError(where + ": header dimension must be positive");
      continue;
    }
    first = false;
    const std::size_t dim = fields.size() - 1;
    if (dim == 0) throw ValidationError(where + ": entry has no values");
    if (table.dimension_ == 0) table.dimension_ = dim;
    if (dim != table.dimension_) {
      throw ValidationError(where + ": dimension mismatch (expected " + std::to_string(table.dimension_) +
                            ", got " + std::to_string(dim) + ")");
    }
    std::vector<double> values(dim);
    for (std::size_t k = 0; k < dim; ++k) {
      std::string_view f = fields[k + 1];
      auto [ptr, ec] = std::from_chars(f.data(), f.data() + f.size(), values[k]);
      if (ec != std::errc() || ptr != f.data() + f.size() || !std::isfinite(values[k])) {
        throw ValidationError(where + ": non-numeric field '" + std::string(f) + "'");
      }
    }
    table.entries_.insert_or_assign(std::string(fields[0]), std::move(values));
  }
  if (table.dimension_ == 0) throw ValidationError("embeddings file " + path.string() + " is empty");
  return table;
}

EmbeddingTable EmbeddingTable::hashed(std::size_t dimension, std::uint64_t seed) {
  if (dimension == 0) throw ValidationError("embedding dimension must be positive");
  EmbeddingTable table;
  table.dimension_ = dimension;
  table.hashed_ = true;
  table.seed_ = seed;
  return table;
}

EmbeddingTable EmbeddingTable::from_entries(std::size_t dimension,
                                            std::unordered_map<std::string, std::vector<double>> entries) {
  if (dimension == 0) throw ValidationError("embedding dimension must be positive");
  for (const auto& [token, v] : entries) {
    if (v.size() != dimension) throw ValidationError("embedding for '" + token + "' has wrong dimension");
  }
  EmbeddingTable table;
  table.dimension_ = dimension;
  table.entries_ = std::move(entries);
  return table;
}

bool EmbeddingTable::lookup(std::string_view token, std::span<double> out) const {
  if (out.size() != dimension_) throw ValidationError("embedding lookup: output size mismatch");
  if (hashed_) {
    Rng rng(token_hash(token, seed_));
    double norm2 = 0.0;
    do {
      norm2 = 0.0;
      for (double& v : out) {
        v = rng.normal();
        norm2 += v * v;
      }
    } while (norm2 == 0.0);
    const double inv = 1.0 / std::sqrt(norm2);
    for (double& v : out) v *= inv;
    return true;
  }
  auto it = entries_.find(std::string(token));
  if (it == entries_.end()) return false;
  std::copy(it->second.begin(), it->second.end(), out.begin());
  return true;
}

std::optional<std::vector<double>> EmbeddingTable::vector(std::string_view token) const {
  std::vector<double> v(dimension_);
  if (!lookup(token, v)) return std::nullopt;
  return v;
}

TweetVector embed_tweet(std::span<const std::string> tokens, const EmbeddingTable& table) {
  TweetVector out{std::vector<double>(table.dimension(), 0.0)};
  std::vector<double> buf(table.dimension());
  std::size_t used = 0;
  for (const std::string& tok : tokens) {
    if (!table.lookup(tok, buf)) continue;
    for (std::size_t k = 0; k < buf.size(); ++k) out.values[k] += buf[k];
    ++used;
  }
  if (used > 0) {
    for (double& v : out.values) v /= static_cast<double>(used);
  }
  return out;
}

BranchTensor pad_and_mask(std::span<const TweetVector> vectors, std::size_t max_len) {
  if (max_len < 1) throw ValidationError("pad_and_mask: max_len must be >= 1");
  if (vectors.empty()) throw ValidationError("pad_and_mask: empty branch");
  BranchTensor t;
  t.max_len = max_len;
  t.dimension = vectors.front().values.size();
  t.true_length = std::min(vectors.size(), max_len);
  t.data.assign(max_len * t.dimension, 0.0);
  t.mask.assign(max_len, 0);
  for (std::size_t i = 0; i < t.true_length; ++i) {
    if (vectors[i].values.size() != t.dimension) throw ValidationError("pad_and_mask: inconsistent vector sizes");
    std::copy(vectors[i].values.begin(), vectors[i].values.end(), t.row(i).begin());
    t.mask[i] = 1;
  }
  return t;
}

}  // namespace rumour
