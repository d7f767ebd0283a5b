#include <cmath>
#include <fstream>

#include "doctest.h"
#include "rumour/text.hpp"
#include "support.hpp"

using namespace rumour;
using Tokens = std::vector<std::string>;

namespace {

std::string join(const Tokens& t) {
  std::string s;
  for (const auto& x : t) s += (s.empty() ? "" : " ") + x;
  return s;
}

double norm(std::span<const double> v) {
  double s = 0.0;
  for (double x : v) s += x * x;
  return std::sqrt(s);
}

TweetVector vec(std::vector<double> v) { return TweetVector{std::move(v)}; }

}  // namespace

TEST_CASE("preprocessing lowercases and splits on non-letters") {
  CHECK(preprocess("Is this TRUE?? http://t.co/x") == Tokens{"is", "this", "true", "http", "t", "co", "x"});
  CHECK(preprocess("BREAKING: 2 dead") == Tokens{"breaking", "dead"});
  CHECK(preprocess("") == Tokens{});
  CHECK(preprocess("don't") == Tokens{"don", "t"});
  CHECK(preprocess("   \t\n") == Tokens{});
  CHECK(preprocess("caf\xc3\xa9 ok") == Tokens{"caf", "ok"});
}

TEST_CASE("preprocessing is idempotent on its own output") {
  Rng rng(4);
  const std::string alphabet = "abcXYZ019 #@:/.'!?\t";
  for (int trial = 0; trial < 500; ++trial) {
    std::string s;
    for (std::size_t i = 0, n = rng.index(60); i < n; ++i) s += alphabet[rng.index(alphabet.size())];
    const Tokens once = preprocess(s);
    CHECK(preprocess(join(once)) == once);
    for (const auto& tok : once) {
      CHECK_FALSE(tok.empty());
      for (char c : tok) CHECK((c >= 'a' && c <= 'z'));
    }
  }
}

TEST_CASE("embedding files load with or without a header") {
  const auto dir = testing::scratch_dir("text");
  {
    std::ofstream(dir / "plain.txt") << "cat 1 2 3\ndog 0.5 -1 2e-1\n";
    std::ofstream(dir / "header.txt") << "2 3\ncat 1 2 3\ndog 0.5 -1 2e-1\n";
    std::ofstream(dir / "short.txt") << "cat 1 2 3\ndog 0.5 -1\n";
    std::ofstream(dir / "word.txt") << "cat 1 2 3\ndog 0.5 x 1\n";
  }
  for (const char* name : {"plain.txt", "header.txt"}) {
    const EmbeddingTable t = EmbeddingTable::load(dir / name);
    CHECK(t.dimension() == 3);
    CHECK(t.size() == 2);
    CHECK(t.vector("dog") == std::vector<double>{0.5, -1.0, 0.2});
    CHECK_FALSE(t.vector("bird").has_value());
  }
  try {
    EmbeddingTable::load(dir / "short.txt");
    FAIL("dimension mismatch accepted");
  } catch (const ValidationError& e) {
    CHECK(std::string(e.what()).find("short.txt:2") != std::string::npos);
  }
  CHECK_THROWS_AS(EmbeddingTable::load(dir / "word.txt"), ValidationError);
}

TEST_CASE("hash embeddings are deterministic unit vectors") {
  const EmbeddingTable a = EmbeddingTable::hashed(32, 5);
  const EmbeddingTable b = EmbeddingTable::hashed(32, 5);
  const EmbeddingTable c = EmbeddingTable::hashed(32, 6);
  CHECK(a.vector("rumour") == b.vector("rumour"));
  CHECK(a.vector("rumour") != c.vector("rumour"));
  CHECK(a.vector("rumour") != a.vector("rumours"));
  Rng rng(1);
  for (int i = 0; i < 1000; ++i) {
    std::string tok;
    for (std::size_t k = 0, n = 1 + rng.index(10); k < n; ++k) tok += static_cast<char>('a' + rng.index(26));
    const auto v = a.vector(tok);
    REQUIRE(v.has_value());
    CHECK(std::abs(norm(*v) - 1.0) < 1e-9);
  }
}

TEST_CASE("tweet vectors average the known tokens") {
  const EmbeddingTable t = EmbeddingTable::from_entries(2, {{"a", {1.0, 2.0}}, {"b", {3.0, -2.0}}});
  CHECK(embed_tweet(Tokens{"a"}, t).values == std::vector<double>{1.0, 2.0});
  CHECK(embed_tweet(Tokens{"a", "b"}, t).values == std::vector<double>{2.0, 0.0});
  CHECK(embed_tweet(Tokens{"a", "zzz", "b"}, t).values == std::vector<double>{2.0, 0.0});
  CHECK(embed_tweet(Tokens{"zzz"}, t).values == std::vector<double>{0.0, 0.0});
  CHECK(embed_tweet(Tokens{}, t).values == std::vector<double>{0.0, 0.0});
}

TEST_CASE("a tweet vector is no longer than its longest token vector") {
  const EmbeddingTable t = EmbeddingTable::hashed(8, 3);
  Rng rng(12);
  for (int trial = 0; trial < 300; ++trial) {
    Tokens toks;
    for (std::size_t k = 0, n = 1 + rng.index(8); k < n; ++k) toks.push_back("w" + std::to_string(rng.index(20)));
    CHECK(norm(embed_tweet(toks, t).values) <= 1.0 + 1e-12);
  }
}

TEST_CASE("padding keeps a source-first prefix") {
  std::vector<TweetVector> vs;
  for (int i = 0; i < 7; ++i) vs.push_back(vec({static_cast<double>(i + 1), -1.0}));

  SUBCASE("shorter than max_len") {
    const BranchTensor b = pad_and_mask(std::span(vs).first(2), 5);
    CHECK(b.true_length == 2);
    CHECK(b.mask == std::vector<std::uint8_t>{1, 1, 0, 0, 0});
    CHECK(b.row(1)[0] == 2.0);
    for (std::size_t t = 2; t < 5; ++t) CHECK(norm(b.row(t)) == 0.0);
  }
  SUBCASE("exact length") {
    const BranchTensor b = pad_and_mask(std::span(vs).first(5), 5);
    CHECK(b.true_length == 5);
    CHECK(b.mask == std::vector<std::uint8_t>{1, 1, 1, 1, 1});
  }
  SUBCASE("truncated") {
    const BranchTensor b = pad_and_mask(vs, 5);
    CHECK(b.true_length == 5);
    for (std::size_t t = 0; t < 5; ++t) CHECK(b.row(t)[0] == static_cast<double>(t + 1));
  }
  CHECK_THROWS_AS(pad_and_mask(vs, 0), ValidationError);
  CHECK_THROWS_AS(pad_and_mask(std::span<const TweetVector>(), 3), ValidationError);
}

TEST_CASE("mask sum equals the true length and padded rows are zero") {
  Rng rng(8);
  for (int trial = 0; trial < 500; ++trial) {
    std::vector<TweetVector> vs;
    for (std::size_t i = 0, n = 1 + rng.index(30); i < n; ++i) vs.push_back(vec({rng.normal(), rng.normal(), 1.0}));
    const std::size_t max_len = 1 + rng.index(25);
    const BranchTensor b = pad_and_mask(vs, max_len);
    std::size_t sum = 0;
    for (auto m : b.mask) sum += m;
    CHECK(sum == b.true_length);
    CHECK(b.true_length == std::min(vs.size(), max_len));
    for (std::size_t t = b.true_length; t < max_len; ++t) CHECK(norm(b.row(t)) == 0.0);
  }
}
