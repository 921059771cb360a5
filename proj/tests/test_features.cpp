#include <doctest.h>

#include <filesystem>
#include <set>

#include "smrec/features.hpp"
#include "smrec/rng.hpp"

using namespace smrec;

namespace {

feat::Dataset random_dataset(size_t n, uint64_t seed) {
  Rng rng(seed);
  feat::Dataset out;
  for (size_t i = 0; i < n; ++i) {
    feat::FeatureBundle b;
    b.user_idx = static_cast<uint32_t>(i);  // unique, doubles as example id
    b.item_idx = static_cast<uint32_t>(rng.uniform_int(100));
    b.visual = {rng.uniform(), rng.uniform()};
    for (size_t k = 0; k < feat::kNumTasks; ++k) b.labels[k] = rng.uniform() < 0.5;
    out.push_back(b);
  }
  return out;
}

}  // namespace

TEST_CASE("hash_id pinned reference values") {
  CHECK(feat::hash_id(42, 1000) == 255);       // independent FNV-1a oracle
  CHECK(feat::hash_id(7, 1u << 17) == 23394);  //
  CHECK(feat::hash_id(123456, 1) == 0);
  CHECK(feat::hash_id(42, 1000) == feat::hash_id(42, 1000));
}

TEST_CASE("assemble populates fields per arm") {
  prof::UserInterestProfile profile(9);
  profile.update({9, 1, prof::EventType::kLike, 10}, {4, 5});
  const std::vector<double> visual{0.1, 0.2};
  const tok::TokenIdList caption_tokens{11, 12};
  const std::vector<uint8_t> labels{1, 0, 1, 0, 0};

  feat::AssembleConfig baseline;
  baseline.groups = {.visual = true};
  auto b = feat::assemble(9, 3, visual, caption_tokens, profile, labels, baseline);
  CHECK(b.visual == visual);
  CHECK(b.item_tokens.empty());
  for (const auto& pt : b.profile_tokens) CHECK(pt.empty());
  CHECK(b.labels == std::array<uint8_t, 5>{1, 0, 1, 0, 0});

  feat::AssembleConfig treatment;
  treatment.groups = {.visual = true, .item_tokens = true, .profile_tokens = true};
  auto t = feat::assemble(9, 3, visual, caption_tokens, profile, labels, treatment);
  CHECK(t.item_tokens == caption_tokens);
  CHECK(t.profile_tokens[static_cast<size_t>(prof::EventType::kLike)] ==
        tok::TokenIdList{4, 5});
  CHECK(t.user_idx == b.user_idx);  // arm-invariant ids
}

TEST_CASE("assemble rejects incomplete labels") {
  prof::UserInterestProfile profile(1);
  CHECK_THROWS_AS(
      feat::assemble(1, 1, {0.0}, {}, profile, {1, 0, 1}, feat::AssembleConfig{}),
      feat::MissingLabel);
}

TEST_CASE("split produces a 7:1 partition, disjoint and covering") {
  auto data = random_dataset(8000, 1);
  auto s = feat::split(data, {7, 1}, 99);
  CHECK(s.train.size() == 7000);
  CHECK(s.eval.size() == 1000);

  std::set<uint32_t> train_ids, eval_ids;
  for (const auto& b : s.train) train_ids.insert(b.user_idx);
  for (const auto& b : s.eval) eval_ids.insert(b.user_idx);
  CHECK(train_ids.size() == 7000);
  CHECK(eval_ids.size() == 1000);
  for (uint32_t id : eval_ids) CHECK(train_ids.count(id) == 0);
}

TEST_CASE("split determinism and the smallest exact case") {
  auto data = random_dataset(8, 2);
  auto a = feat::split(data, {7, 1}, 5);
  auto b = feat::split(data, {7, 1}, 5);
  CHECK(a.train.size() == 7);
  CHECK(a.eval.size() == 1);
  CHECK(a.eval[0].user_idx == b.eval[0].user_idx);
  for (size_t i = 0; i < a.train.size(); ++i)
    CHECK(a.train[i].user_idx == b.train[i].user_idx);
}

TEST_CASE("dataset JSONL round trip preserves bundles exactly") {
  auto data = random_dataset(50, 3);
  data[0].item_tokens = {1, 2, 3};
  data[0].profile_tokens[2] = {9, 8};
  const std::string path = "dataset_test.jsonl";
  feat::write_dataset(path, data);
  auto loaded = feat::read_dataset(path);
  REQUIRE(loaded.size() == data.size());
  for (size_t i = 0; i < data.size(); ++i) {
    CHECK(loaded[i].user_idx == data[i].user_idx);
    CHECK(loaded[i].item_idx == data[i].item_idx);
    CHECK(loaded[i].visual == data[i].visual);  // full round-trip precision
    CHECK(loaded[i].item_tokens == data[i].item_tokens);
    CHECK(loaded[i].profile_tokens == data[i].profile_tokens);
    CHECK(loaded[i].labels == data[i].labels);
  }
  std::filesystem::remove(path);
}
