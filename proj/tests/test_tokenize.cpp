#include <doctest.h>

#include <cstdio>
#include <filesystem>
#include <set>

#include "smrec/rng.hpp"
#include "smrec/tokenize.hpp"

using namespace smrec;
using tok::NormalizedText;

TEST_CASE("normalize strips punctuation, lowercases and collapses repeats") {
  auto n = tok::normalize("A Man, playing!! playing with his DOG.");
  CHECK(n.words == std::vector<std::string>{"a", "man", "playing", "with", "his", "dog"});
}

TEST_CASE("normalize edge cases") {
  CHECK(tok::normalize("").words.empty());
  CHECK(tok::normalize("   \t\n ").words.empty());
  CHECK(tok::normalize("dog dog Dog").words == std::vector<std::string>{"dog"});
  CHECK(tok::normalize("...  !!!").words.empty());
  CHECK(tok::normalize("it's").words == std::vector<std::string>{"it's"});  // interior kept
}

TEST_CASE("normalize is idempotent") {
  Rng rng(5);
  const std::string alphabet = "abc ABC.,!?  xyz";
  for (int trial = 0; trial < 200; ++trial) {
    std::string s;
    for (int i = 0; i < 40; ++i) s.push_back(alphabet[rng.uniform_int(alphabet.size())]);
    auto once = tok::normalize(s);
    std::string joined;
    for (const auto& w : once.words) joined += w + " ";
    CHECK(tok::normalize(joined) == once);
  }
}

TEST_CASE("train_vocab keeps the most frequent words, ids from 2") {
  std::vector<NormalizedText> corpus{{{"a", "dog"}}, {{"a", "cat"}}, {{"a", "dog"}}};
  auto v = tok::Vocabulary::train(corpus, 4);
  CHECK(v.size() == 4);
  CHECK(v.id_of("a") == 2);
  CHECK(v.id_of("dog") == 3);
  CHECK(v.id_of("cat") == tok::kUnkId);  // cut
}

TEST_CASE("train_vocab breaks frequency ties lexicographically") {
  std::vector<NormalizedText> corpus{{{"x"}}, {{"y"}}};
  auto v = tok::Vocabulary::train(corpus, 4);
  CHECK(v.id_of("x") == 2);
  CHECK(v.id_of("y") == 3);
}

TEST_CASE("train_vocab rejects an empty corpus") {
  CHECK_THROWS_AS(tok::Vocabulary::train({}, 4), tok::CorpusEmpty);
}

TEST_CASE("vocabulary round-trips words through ids") {
  std::vector<NormalizedText> corpus{{{"alpha", "beta", "gamma", "beta"}}};
  auto v = tok::Vocabulary::train(corpus, 10);
  for (const auto& w : {"alpha", "beta", "gamma"}) CHECK(v.word_of(v.id_of(w)) == w);
}

TEST_CASE("vocabulary save/load round trip and duplicate rejection") {
  std::vector<NormalizedText> corpus{{{"a", "dog"}}, {{"a", "cat"}}};
  auto v = tok::Vocabulary::train(corpus, 5);
  const std::string path = "vocab_test.tsv";
  v.save(path);
  auto loaded = tok::Vocabulary::load(path);
  CHECK(loaded.size() == v.size());
  CHECK(loaded.id_of("a") == v.id_of("a"));
  CHECK(loaded.id_of("dog") == v.id_of("dog"));

  // duplicate id must be rejected
  FILE* f = fopen(path.c_str(), "w");
  fputs("a\t2\nb\t2\n", f);
  fclose(f);
  CHECK_THROWS_AS(tok::Vocabulary::load(path), tok::VocabFormatError);
  std::filesystem::remove(path);
}

TEST_CASE("tokenize_a maps unknown words to UNK and truncates") {
  std::vector<NormalizedText> corpus{{{"a", "dog"}}, {{"a", "cat"}}, {{"a", "dog"}}};
  auto v = tok::Vocabulary::train(corpus, 4);
  CHECK(tok::tokenize_a({{"a", "dog", "zebra"}}, v) == tok::TokenIdList{2, 3, 1});
  CHECK(tok::tokenize_a({{}}, v).empty());

  NormalizedText longtext;
  for (int i = 0; i < 40; ++i) longtext.words.push_back("a");
  // adjacent-duplicate collapse happens in normalize, not here
  auto ids = tok::tokenize_a(longtext, v, 32);
  CHECK(ids.size() == 32);
  for (auto id : ids) CHECK(id == 2);
}

TEST_CASE("tokenize_a ids always below vocab size") {
  std::vector<NormalizedText> corpus{{{"p", "q", "r", "s", "t"}}};
  auto v = tok::Vocabulary::train(corpus, 4);
  for (auto id : tok::tokenize_a({{"p", "q", "r", "s", "t", "unknown"}}, v))
    CHECK(id < v.size());
}

TEST_CASE("tokenize_b matches the pinned FNV-1a reference value") {
  // FNV1a64(8 LE zero bytes ++ "dog") mod 65536, from an independent
  // reference implementation
  CHECK(tok::hash_token("dog", 0, 65536) == 40201);
  CHECK(tok::hash_token("dog", 0, 64) == 9);
}

TEST_CASE("tokenize_b is deterministic and bounded") {
  NormalizedText text{{"some", "random", "words", "here"}};
  auto once = tok::tokenize_b(text, 2, 7, 32);
  auto twice = tok::tokenize_b(text, 2, 7, 32);
  CHECK(once == twice);
  for (auto id : once) CHECK(id < 2);
}

TEST_CASE("reducing num_buckets never decreases colliding word pairs") {
  std::vector<std::string> words;
  Rng rng(11);
  for (int i = 0; i < 60; ++i) words.push_back("w" + std::to_string(rng.uniform_int(1000)));
  std::sort(words.begin(), words.end());
  words.erase(std::unique(words.begin(), words.end()), words.end());

  auto colliding_pairs = [&words](uint32_t buckets) {
    size_t pairs = 0;
    for (size_t i = 0; i < words.size(); ++i)
      for (size_t j = i + 1; j < words.size(); ++j)
        if (tok::hash_token(words[i], 3, buckets) == tok::hash_token(words[j], 3, buckets))
          ++pairs;
    return pairs;
  };
  size_t prev = colliding_pairs(1024);
  for (uint32_t buckets : {256u, 64u, 16u, 4u, 2u}) {
    const size_t cur = colliding_pairs(buckets);
    CHECK(cur >= prev);
    prev = cur;
  }
}
