#pragma once

#include <cstdint>
#include <stdexcept>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

namespace smrec::tok {

inline constexpr uint32_t kPadId = 0;
inline constexpr uint32_t kUnkId = 1;
inline constexpr size_t kDefaultMaxLen = 32;

// Lowercased words, punctuation stripped at word boundaries, adjacent
// duplicates collapsed.
struct NormalizedText {
  std::vector<std::string> words;

  bool operator==(const NormalizedText&) const = default;
};

NormalizedText normalize(std::string_view text);

struct CorpusEmpty : std::runtime_error {
  CorpusEmpty() : std::runtime_error("train_vocab: empty corpus") {}
};

struct VocabFormatError : std::runtime_error {
  explicit VocabFormatError(const std::string& what) : std::runtime_error(what) {}
};

// Frequency-trained word vocabulary with reserved PAD=0 / UNK=1.
// Non-special ids are dense in [2, size).
class Vocabulary {
 public:
  Vocabulary() = default;

  static Vocabulary train(const std::vector<NormalizedText>& corpus, size_t size);

  uint32_t id_of(const std::string& word) const {
    auto it = word_to_id_.find(word);
    return it == word_to_id_.end() ? kUnkId : it->second;
  }
  const std::string& word_of(uint32_t id) const { return id_to_word_.at(id); }
  bool contains(const std::string& word) const { return word_to_id_.count(word) > 0; }

  // Capacity (PAD + UNK + words), the id-space bound for tokenize_a.
  size_t size() const { return size_; }
  size_t num_words() const { return word_to_id_.size(); }

  void save(const std::string& path) const;
  static Vocabulary load(const std::string& path);

 private:
  std::unordered_map<std::string, uint32_t> word_to_id_;
  std::vector<std::string> id_to_word_;  // indexed by id; [0]="<pad>", [1]="<unk>"
  size_t size_ = 2;
};

using TokenIdList = std::vector<uint32_t>;

// Tokenizer A: vocabulary lookup with UNK fallback, head-keep truncation.
TokenIdList tokenize_a(const NormalizedText& text, const Vocabulary& vocab,
                       size_t max_len = kDefaultMaxLen);

// Tokenizer B: seeded FNV-1a 64 hashing into num_buckets.
// id(w) = FNV1a64(seed as 8 LE bytes ++ UTF-8 bytes of w) mod num_buckets.
uint32_t hash_token(std::string_view word, uint64_t seed, uint32_t num_buckets);
TokenIdList tokenize_b(const NormalizedText& text, uint32_t num_buckets, uint64_t seed,
                       size_t max_len = kDefaultMaxLen);

}  // namespace smrec::tok
