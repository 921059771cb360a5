#pragma once

#include <array>
#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

#include "smrec/profile.hpp"
#include "smrec/tokenize.hpp"

namespace smrec::feat {

inline constexpr uint32_t kDefaultTableSize = 1u << 17;
inline constexpr size_t kNumTasks = 5;  // comment, like, share, dwell, consume

enum class FeatureGroup : uint8_t { kVisual = 0, kItemTokens, kProfileTokens };
inline constexpr size_t kNumFeatureGroups = 3;

const char* feature_group_name(FeatureGroup g);
FeatureGroup feature_group_from_name(const std::string& name);

struct FeatureGroupSet {
  bool visual = true;
  bool item_tokens = false;
  bool profile_tokens = false;

  bool enabled(FeatureGroup g) const {
    switch (g) {
      case FeatureGroup::kVisual: return visual;
      case FeatureGroup::kItemTokens: return item_tokens;
      case FeatureGroup::kProfileTokens: return profile_tokens;
    }
    return false;
  }
};

// One training/eval example. The schema is arm-invariant: disabled feature
// groups are represented as empty token lists, never as missing fields.
struct FeatureBundle {
  uint32_t user_idx = 0;
  uint32_t item_idx = 0;
  std::vector<double> visual;
  tok::TokenIdList item_tokens;
  std::array<tok::TokenIdList, prof::kNumEventTypes> profile_tokens;
  std::array<uint8_t, kNumTasks> labels{};
};

using Dataset = std::vector<FeatureBundle>;

struct DatasetSplit {
  Dataset train;
  Dataset eval;
  std::pair<int, int> ratio{7, 1};
};

struct MissingLabel : std::runtime_error {
  MissingLabel() : std::runtime_error("impression lacks one of the 5 task labels") {}
};

// FNV1a64 of the 8-byte little-endian raw id, mod table_size.
uint32_t hash_id(uint64_t raw_id, uint32_t table_size);

struct AssembleConfig {
  uint32_t user_table = kDefaultTableSize;
  uint32_t item_table = kDefaultTableSize;
  FeatureGroupSet groups;
};

// labels must carry exactly kNumTasks entries (each 0/1).
FeatureBundle assemble(uint64_t user_id, uint64_t item_id, const std::vector<double>& visual,
                       const tok::TokenIdList& caption_tokens, const prof::UserInterestProfile& profile,
                       const std::vector<uint8_t>& labels, const AssembleConfig& config,
                       size_t profile_topk = prof::kDefaultTopK);

// Seeded-shuffle partition; |eval| = round(n / (num+den)) * den ... i.e.
// counts within one example of the ratio.
DatasetSplit split(const Dataset& dataset, std::pair<int, int> ratio, uint64_t seed);

// Line-delimited JSON, one bundle per line; reals at full round-trip precision.
void write_dataset(const std::string& path, const Dataset& dataset);
Dataset read_dataset(const std::string& path);

}  // namespace smrec::feat
