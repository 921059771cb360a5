#include "smrec/tokenize.hpp"

#include <algorithm>
#include <cctype>
#include <fstream>
#include <map>

#include "smrec/fnv.hpp"

namespace smrec::tok {

namespace {

bool is_word_char(unsigned char c) {
  return std::isalnum(c) || c >= 0x80;  // keep non-ASCII bytes intact
}

}  // namespace

NormalizedText normalize(std::string_view text) {
  NormalizedText out;
  std::string word;
  auto flush = [&] {
    if (word.empty()) return;
    // strip non-alphanumeric characters from the boundaries
    size_t b = 0, e = word.size();
    while (b < e && !is_word_char(static_cast<unsigned char>(word[b]))) ++b;
    while (e > b && !is_word_char(static_cast<unsigned char>(word[e - 1]))) --e;
    std::string w = word.substr(b, e - b);
    word.clear();
    if (w.empty()) return;
    if (!out.words.empty() && out.words.back() == w) return;  // collapse adjacent dupes
    out.words.push_back(std::move(w));
  };
  for (unsigned char c : text) {
    if (std::isspace(c)) {
      flush();
    } else {
      word.push_back(static_cast<char>(std::tolower(c)));
    }
  }
  flush();
  return out;
}

Vocabulary Vocabulary::train(const std::vector<NormalizedText>& corpus, size_t size) {
  if (corpus.empty()) throw CorpusEmpty();
  if (size < 3) throw std::invalid_argument("train_vocab: size must be >= 3");
  // std::map gives the lexicographic tie-break for free
  std::map<std::string, uint64_t> freq;
  for (const auto& text : corpus)
    for (const auto& w : text.words) ++freq[w];

  std::vector<std::pair<std::string, uint64_t>> entries(freq.begin(), freq.end());
  std::stable_sort(entries.begin(), entries.end(),
                   [](const auto& a, const auto& b) { return a.second > b.second; });

  Vocabulary v;
  v.size_ = size;
  v.id_to_word_ = {"<pad>", "<unk>"};
  const size_t keep = std::min(entries.size(), size >= 2 ? size - 2 : 0);
  for (size_t i = 0; i < keep; ++i) {
    v.word_to_id_.emplace(entries[i].first, static_cast<uint32_t>(2 + i));
    v.id_to_word_.push_back(entries[i].first);
  }
  return v;
}

void Vocabulary::save(const std::string& path) const {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw VocabFormatError("cannot open for write: " + path);
  for (size_t id = 2; id < id_to_word_.size(); ++id)
    out << id_to_word_[id] << '\t' << id << '\n';
}

Vocabulary Vocabulary::load(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw VocabFormatError("cannot open: " + path);
  Vocabulary v;
  v.id_to_word_ = {"<pad>", "<unk>"};
  std::string line;
  uint32_t expected = 2;
  size_t max_id = 1;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    auto tab = line.find('\t');
    if (tab == std::string::npos) throw VocabFormatError("missing tab: " + line);
    std::string word = line.substr(0, tab);
    uint32_t id = static_cast<uint32_t>(std::stoul(line.substr(tab + 1)));
    if (id != expected) throw VocabFormatError("ids must be dense and sorted from 2");
    if (!v.word_to_id_.emplace(word, id).second)
      throw VocabFormatError("duplicate word: " + word);
    v.id_to_word_.push_back(word);
    max_id = id;
    ++expected;
  }
  v.size_ = max_id + 1;
  return v;
}

TokenIdList tokenize_a(const NormalizedText& text, const Vocabulary& vocab, size_t max_len) {
  TokenIdList ids;
  ids.reserve(std::min(text.words.size(), max_len));
  for (const auto& w : text.words) {
    if (ids.size() == max_len) break;
    ids.push_back(vocab.id_of(w));
  }
  return ids;
}

uint32_t hash_token(std::string_view word, uint64_t seed, uint32_t num_buckets) {
  uint64_t h = fnv1a64_u64le(seed);
  h = fnv1a64(word, h);
  return static_cast<uint32_t>(h % num_buckets);
}

TokenIdList tokenize_b(const NormalizedText& text, uint32_t num_buckets, uint64_t seed,
                       size_t max_len) {
  TokenIdList ids;
  ids.reserve(std::min(text.words.size(), max_len));
  for (const auto& w : text.words) {
    if (ids.size() == max_len) break;
    ids.push_back(hash_token(w, seed, num_buckets));
  }
  return ids;
}

}  // namespace smrec::tok
