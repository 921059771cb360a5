#include <doctest.h>

#include <cmath>
#include <filesystem>
#include <fstream>

#include "smrec/metrics.hpp"
#include "smrec/model.hpp"
#include "smrec/rng.hpp"

using namespace smrec;

namespace {

model::ModelConfig tiny_config() {
  model::ModelConfig cfg;
  cfg.embedding_dim = 2;
  cfg.visual_dim = 2;
  cfg.hidden = {3};
  cfg.user_rows = 2;
  cfg.item_rows = 2;
  cfg.item_token_rows = 3;
  cfg.profile_token_rows = 3;
  cfg.groups = {.visual = true, .item_tokens = true, .profile_tokens = true};
  return cfg;
}

feat::FeatureBundle tiny_bundle(uint32_t user, uint32_t item, Rng& rng) {
  feat::FeatureBundle b;
  b.user_idx = user;
  b.item_idx = item;
  b.visual = {rng.uniform(-1, 1), rng.uniform(-1, 1)};
  b.item_tokens = {static_cast<uint32_t>(rng.uniform_int(3)),
                   static_cast<uint32_t>(rng.uniform_int(3))};
  b.profile_tokens[1] = {static_cast<uint32_t>(rng.uniform_int(3))};
  b.profile_tokens[4] = {0, 2};
  for (size_t k = 0; k < feat::kNumTasks; ++k) b.labels[k] = rng.uniform() < 0.5;
  return b;
}

double total_loss(const feat::Dataset& data, model::ModelParams& params) {
  model::Workspace ws;
  double sum = 0.0;
  for (const auto& b : data) {
    model::forward(b, params, ws);
    sum += model::loss(ws.probs, b.labels);
  }
  return sum;
}

// Flattens a Gradients object into checkpoint/param_ptrs order.
std::vector<double> flatten(const model::Gradients& grads, const model::ModelParams& params) {
  std::vector<double> flat;
  auto push_table = [&flat](const model::EmbeddingTable& table,
                            const std::map<uint32_t, std::vector<double>>& rows) {
    for (uint32_t r = 0; r < table.rows; ++r) {
      auto it = rows.find(r);
      for (uint32_t d = 0; d < table.dim; ++d)
        flat.push_back(it == rows.end() ? 0.0 : it->second[d]);
    }
  };
  push_table(params.user_table, grads.user_rows);
  push_table(params.item_table, grads.item_rows);
  push_table(params.token_table_item, grads.token_item_rows);
  push_table(params.token_table_profile, grads.token_profile_rows);
  for (const auto& l : grads.trunk) {
    for (double w : l.weights) flat.push_back(w);
    for (double b : l.bias) flat.push_back(b);
  }
  for (const auto& h : grads.heads) {
    for (double w : h.weights) flat.push_back(w);
    for (double b : h.bias) flat.push_back(b);
  }
  return flat;
}

}  // namespace

TEST_CASE("pool: singleton, empty, duplicate mean") {
  model::EmbeddingTable t;
  t.rows = 4;
  t.dim = 2;
  t.weights = {1, 2, 3, 4, 5, 6, 7, 8};
  CHECK(model::pool({3}, t) == std::vector<double>{7, 8});
  CHECK(model::pool({}, t) == std::vector<double>{0, 0});
  CHECK(model::pool({3, 3}, t) == std::vector<double>{7, 8});
  auto m = model::pool({0, 1}, t);
  CHECK(m[0] == doctest::Approx(2.0));
  CHECK(m[1] == doctest::Approx(3.0));
  CHECK_THROWS_AS(model::pool({4}, t), model::IdOutOfRange);
}

TEST_CASE("pool linearity over concatenation") {
  Rng rng(4);
  model::EmbeddingTable t;
  t.rows = 10;
  t.dim = 3;
  t.weights.resize(30);
  for (double& w : t.weights) w = rng.uniform(-1, 1);
  for (int trial = 0; trial < 50; ++trial) {
    tok::TokenIdList l1, l2;
    for (int i = 0; i < 1 + static_cast<int>(rng.uniform_int(5)); ++i)
      l1.push_back(static_cast<uint32_t>(rng.uniform_int(10)));
    for (int i = 0; i < 1 + static_cast<int>(rng.uniform_int(5)); ++i)
      l2.push_back(static_cast<uint32_t>(rng.uniform_int(10)));
    tok::TokenIdList joined = l1;
    joined.insert(joined.end(), l2.begin(), l2.end());
    auto pj = model::pool(joined, t);
    auto p1 = model::pool(l1, t);
    auto p2 = model::pool(l2, t);
    const double n1 = l1.size(), n2 = l2.size();
    for (size_t d = 0; d < 3; ++d)
      CHECK(pj[d] == doctest::Approx((n1 * p1[d] + n2 * p2[d]) / (n1 + n2)).epsilon(1e-12));
  }
}

TEST_CASE("forward with all-zero parameters yields 0.5 everywhere") {
  auto params = model::ModelParams::init(tiny_config(), 1);
  for (double* p : params.param_ptrs()) *p = 0.0;
  Rng rng(7);
  auto b = tiny_bundle(0, 1, rng);
  auto probs = model::forward(b, params);
  for (double p : probs) CHECK(p == doctest::Approx(0.5));
}

TEST_CASE("forward outputs stay strictly inside (0,1)") {
  auto params = model::ModelParams::init(tiny_config(), 2);
  Rng rng(8);
  for (int i = 0; i < 20; ++i) {
    auto b = tiny_bundle(i % 2, (i + 1) % 2, rng);
    for (double p : model::forward(b, params)) {
      CHECK(p > 0.0);
      CHECK(p < 1.0);
    }
  }
}

TEST_CASE("tiny hand-set model reproduces the hand-computed probability") {
  model::ModelConfig cfg;
  cfg.embedding_dim = 2;
  cfg.visual_dim = 2;
  cfg.hidden = {1};
  cfg.user_rows = 1;
  cfg.item_rows = 1;
  cfg.item_token_rows = 1;
  cfg.profile_token_rows = 1;
  cfg.groups = {.visual = true};
  auto params = model::ModelParams::init(cfg, 1);
  params.user_table.weights = {1.0, 2.0};
  params.item_table.weights = {3.0, 4.0};
  std::fill(params.trunk[0].weights.begin(), params.trunk[0].weights.end(), 0.1);
  params.trunk[0].bias = {0.5};
  for (auto& head : params.heads) {
    head.weights = {2.0};
    head.bias = {-1.0};
  }
  feat::FeatureBundle b;
  b.user_idx = 0;
  b.item_idx = 0;
  b.visual = {0.3, 0.4};
  // input = [1,2,3,4,0.3,0.4,0,0,0,0]; z = 0.1*10.7+0.5 = 1.57
  // logit = 2*1.57-1 = 2.14; p = sigmoid(2.14)
  auto probs = model::forward(b, params);
  for (double p : probs) CHECK(p == doctest::Approx(0.8947306104774903).epsilon(1e-12));
}

TEST_CASE("loss analytic values") {
  std::array<double, 5> half{0.5, 0.5, 0.5, 0.5, 0.5};
  CHECK(model::loss(half, {1, 0, 1, 0, 1}) == doctest::Approx(3.4657359027997265));
  std::array<double, 5> perfect{1.0, 0.0, 1.0, 0.0, 1.0};  // clamped internally
  CHECK(model::loss(perfect, {1, 0, 1, 0, 1}) ==
        doctest::Approx(-5 * std::log(1.0 - 1e-7)).epsilon(1e-9));
  std::array<double, 5> wrong{1e-9, 0.5, 0.5, 0.5, 0.5};
  const double expect = -std::log(1e-7) + 4 * std::log(2.0);
  CHECK(model::loss(wrong, {1, 0, 1, 0, 1}) == doctest::Approx(expect));
}

TEST_CASE("analytic gradient matches central finite differences") {
  auto cfg = tiny_config();
  auto params = model::ModelParams::init(cfg, 3);
  REQUIRE(params.num_params() <= 100);

  Rng rng(10);
  feat::Dataset data;
  for (int i = 0; i < 6; ++i) data.push_back(tiny_bundle(i % 2, (i / 2) % 2, rng));

  auto grads = model::Gradients::zeros_like(params);
  model::Workspace ws;
  for (const auto& b : data) {
    model::forward(b, params, ws);
    model::backward(b, params, ws, grads);
  }
  const auto analytic = flatten(grads, params);
  auto ptrs = params.param_ptrs();
  REQUIRE(analytic.size() == ptrs.size());

  const double h = 1e-5;
  for (size_t i = 0; i < ptrs.size(); ++i) {
    const double saved = *ptrs[i];
    *ptrs[i] = saved + h;
    const double lp = total_loss(data, params);
    *ptrs[i] = saved - h;
    const double lm = total_loss(data, params);
    *ptrs[i] = saved;
    const double fd = (lp - lm) / (2 * h);
    const double rel = std::abs(analytic[i] - fd) / std::max(1e-6, std::abs(analytic[i]) + std::abs(fd));
    CHECK(rel < 1e-4);
  }
}

TEST_CASE("disabled feature groups receive zero gradient") {
  auto cfg = tiny_config();
  cfg.groups = {.visual = true};  // token groups off
  auto params = model::ModelParams::init(cfg, 4);
  Rng rng(11);
  auto grads = model::Gradients::zeros_like(params);
  model::Workspace ws;
  for (int i = 0; i < 10; ++i) {
    auto b = tiny_bundle(i % 2, (i / 2) % 2, rng);  // bundles still carry tokens
    model::forward(b, params, ws);
    model::backward(b, params, ws, grads);
  }
  CHECK(grads.token_item_rows.empty());
  CHECK(grads.token_profile_rows.empty());
  CHECK_FALSE(grads.user_rows.empty());
}

TEST_CASE("train with lr=0 leaves parameters unchanged") {
  auto cfg = tiny_config();
  Rng rng(12);
  feat::DatasetSplit split;
  split.train.push_back(tiny_bundle(0, 0, rng));
  model::TrainConfig tc;
  tc.lr = 0.0;
  tc.epochs = 1;
  tc.seed = 5;
  auto trained = model::train(split, cfg, tc);
  auto reference = model::ModelParams::init(cfg, 5);
  auto a = trained.param_ptrs();
  auto b = reference.param_ptrs();
  for (size_t i = 0; i < a.size(); ++i) CHECK(*a[i] == *b[i]);
}

TEST_CASE("training is bit-deterministic given the seed") {
  auto cfg = tiny_config();
  Rng rng(13);
  feat::DatasetSplit split;
  for (int i = 0; i < 100; ++i) split.train.push_back(tiny_bundle(i % 2, (i / 3) % 2, rng));
  model::TrainConfig tc;
  tc.epochs = 3;
  tc.batch_size = 16;
  tc.seed = 21;
  auto p1 = model::train(split, cfg, tc);
  auto p2 = model::train(split, cfg, tc);
  auto a = p1.param_ptrs();
  auto b = p2.param_ptrs();
  for (size_t i = 0; i < a.size(); ++i) CHECK(*a[i] == *b[i]);
}

TEST_CASE("separable toy set reaches high eval AUC") {
  // labels = threshold on one visual coordinate
  model::ModelConfig cfg;
  cfg.embedding_dim = 2;
  cfg.visual_dim = 2;
  cfg.hidden = {8};
  cfg.user_rows = 4;
  cfg.item_rows = 4;
  cfg.item_token_rows = 2;
  cfg.profile_token_rows = 2;
  cfg.groups = {.visual = true};
  Rng rng(14);
  feat::Dataset data;
  for (int i = 0; i < 1200; ++i) {
    feat::FeatureBundle b;
    b.user_idx = static_cast<uint32_t>(rng.uniform_int(4));
    b.item_idx = static_cast<uint32_t>(rng.uniform_int(4));
    b.visual = {rng.uniform(-1, 1), rng.uniform(-1, 1)};
    const uint8_t y = b.visual[0] > 0.0 ? 1 : 0;
    for (size_t k = 0; k < feat::kNumTasks; ++k) b.labels[k] = y;
    data.push_back(b);
  }
  auto split = feat::split(data, {7, 1}, 3);
  model::TrainConfig tc;
  tc.epochs = 5;
  tc.seed = 2;
  model::TrainLog log;
  auto params = model::train(split, cfg, tc, &log);
  const auto& last = log.epochs.back();
  for (size_t k = 0; k < feat::kNumTasks; ++k) CHECK(last.eval_auc[k] > 0.95);
}

TEST_CASE("predict is pure and batch-size invariant") {
  auto cfg = tiny_config();
  auto params = model::ModelParams::init(cfg, 6);
  Rng rng(15);
  feat::Dataset data;
  for (int i = 0; i < 37; ++i) data.push_back(tiny_bundle(i % 2, (i / 5) % 2, rng));
  auto all = model::predict(data, params);
  auto again = model::predict(data, params);
  CHECK(all == again);
  // element-wise agreement with single-example calls
  for (size_t i = 0; i < data.size(); ++i) {
    auto single = model::forward(data[i], params);
    for (size_t k = 0; k < feat::kNumTasks; ++k)
      CHECK(std::abs(single[k] - all[i][k]) <= 1e-12);
  }
  CHECK(model::predict({}, params).empty());
}

TEST_CASE("checkpoint round trip is bit-exact; corruption is detected") {
  auto cfg = tiny_config();
  auto params = model::ModelParams::init(cfg, 7);
  const std::string path = "ckpt_test.bin";
  model::save_checkpoint(params, path);
  auto loaded = model::load_checkpoint(path);
  auto a = params.param_ptrs();
  auto b = loaded.param_ptrs();
  REQUIRE(a.size() == b.size());
  for (size_t i = 0; i < a.size(); ++i) CHECK(*a[i] == *b[i]);
  CHECK(loaded.config.groups.item_tokens == cfg.groups.item_tokens);

  // truncation -> corrupt_checksum
  {
    std::ifstream in(path, std::ios::binary);
    std::string buf((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
    std::ofstream out(path + ".trunc", std::ios::binary);
    out.write(buf.data(), static_cast<std::streamsize>(buf.size() - 16));
  }
  CHECK_THROWS_AS(model::load_checkpoint(path + ".trunc"), model::CorruptChecksum);

  // flipped payload byte -> corrupt_checksum
  {
    std::ifstream in(path, std::ios::binary);
    std::string buf((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
    buf[buf.size() / 2] ^= 0x40;
    std::ofstream out(path + ".flip", std::ios::binary);
    out.write(buf.data(), static_cast<std::streamsize>(buf.size()));
  }
  CHECK_THROWS_AS(model::load_checkpoint(path + ".flip"), model::CorruptChecksum);

  // wrong magic -> version_mismatch
  {
    std::ofstream out(path + ".magic", std::ios::binary);
    out << "WRONG-MAGIC-FILE-CONTENTS";
  }
  CHECK_THROWS_AS(model::load_checkpoint(path + ".magic"), model::VersionMismatch);

  for (const char* suffix : {"", ".trunc", ".flip", ".magic"})
    std::filesystem::remove(path + suffix);
}
