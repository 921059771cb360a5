#include "smrec/features.hpp"

#include <fstream>

#include <json.hpp>

#include "smrec/fnv.hpp"
#include "smrec/rng.hpp"

namespace smrec::feat {

namespace {
constexpr const char* kGroupNames[kNumFeatureGroups] = {"visual", "item_tokens",
                                                        "profile_tokens"};
}

const char* feature_group_name(FeatureGroup g) { return kGroupNames[static_cast<size_t>(g)]; }

FeatureGroup feature_group_from_name(const std::string& name) {
  for (size_t i = 0; i < kNumFeatureGroups; ++i)
    if (name == kGroupNames[i]) return static_cast<FeatureGroup>(i);
  throw std::invalid_argument("unknown feature group: " + name);
}

uint32_t hash_id(uint64_t raw_id, uint32_t table_size) {
  return static_cast<uint32_t>(fnv1a64_u64le(raw_id) % table_size);
}

FeatureBundle assemble(uint64_t user_id, uint64_t item_id, const std::vector<double>& visual,
                       const tok::TokenIdList& caption_tokens,
                       const prof::UserInterestProfile& profile,
                       const std::vector<uint8_t>& labels, const AssembleConfig& config,
                       size_t profile_topk) {
  if (labels.size() != kNumTasks) throw MissingLabel();
  FeatureBundle b;
  b.user_idx = hash_id(user_id, config.user_table);
  b.item_idx = hash_id(item_id, config.item_table);
  b.visual = visual;
  if (config.groups.item_tokens) b.item_tokens = caption_tokens;
  if (config.groups.profile_tokens) {
    for (size_t t = 0; t < prof::kNumEventTypes; ++t)
      b.profile_tokens[t] = profile.snapshot_topk(static_cast<prof::EventType>(t), profile_topk);
  }
  for (size_t k = 0; k < kNumTasks; ++k) b.labels[k] = labels[k] ? 1 : 0;
  return b;
}

DatasetSplit split(const Dataset& dataset, std::pair<int, int> ratio, uint64_t seed) {
  const size_t n = dataset.size();
  if (n == 0) throw std::invalid_argument("split: empty dataset");
  std::vector<uint32_t> order = identity_permutation(n);
  Rng rng(seed);
  rng.shuffle(order);
  const double eval_frac =
      static_cast<double>(ratio.second) / static_cast<double>(ratio.first + ratio.second);
  size_t n_eval = static_cast<size_t>(static_cast<double>(n) * eval_frac + 0.5);
  if (n_eval == 0) n_eval = 1;
  if (n_eval >= n) n_eval = n - 1;
  DatasetSplit out;
  out.ratio = ratio;
  out.eval.reserve(n_eval);
  out.train.reserve(n - n_eval);
  for (size_t i = 0; i < n; ++i) {
    const FeatureBundle& b = dataset[order[i]];
    if (i < n_eval)
      out.eval.push_back(b);
    else
      out.train.push_back(b);
  }
  return out;
}

namespace {

nlohmann::json bundle_to_json(const FeatureBundle& b) {
  nlohmann::json pt = nlohmann::json::object();
  for (size_t t = 0; t < prof::kNumEventTypes; ++t)
    pt[prof::event_type_name(static_cast<prof::EventType>(t))] = b.profile_tokens[t];
  return nlohmann::json{{"user_idx", b.user_idx},   {"item_idx", b.item_idx},
                        {"visual", b.visual},       {"item_tokens", b.item_tokens},
                        {"profile_tokens", pt},     {"labels", b.labels}};
}

FeatureBundle bundle_from_json(const nlohmann::json& j) {
  FeatureBundle b;
  b.user_idx = j.at("user_idx").get<uint32_t>();
  b.item_idx = j.at("item_idx").get<uint32_t>();
  b.visual = j.at("visual").get<std::vector<double>>();
  b.item_tokens = j.at("item_tokens").get<tok::TokenIdList>();
  const auto& pt = j.at("profile_tokens");
  for (size_t t = 0; t < prof::kNumEventTypes; ++t) {
    const char* name = prof::event_type_name(static_cast<prof::EventType>(t));
    if (pt.contains(name)) b.profile_tokens[t] = pt.at(name).get<tok::TokenIdList>();
  }
  auto labels = j.at("labels").get<std::vector<uint8_t>>();
  if (labels.size() != kNumTasks) throw MissingLabel();
  for (size_t k = 0; k < kNumTasks; ++k) b.labels[k] = labels[k];
  return b;
}

}  // namespace

void write_dataset(const std::string& path, const Dataset& dataset) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot open for write: " + path);
  for (const auto& b : dataset) out << bundle_to_json(b).dump() << '\n';
}

Dataset read_dataset(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open: " + path);
  Dataset out;
  std::string line;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    out.push_back(bundle_from_json(nlohmann::json::parse(line)));
  }
  return out;
}

}  // namespace smrec::feat
