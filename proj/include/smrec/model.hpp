#pragma once

#include <array>
#include <cstdint>
#include <map>
#include <stdexcept>
#include <string>
#include <vector>

#include "smrec/features.hpp"

namespace smrec::model {

struct IdOutOfRange : std::runtime_error {
  IdOutOfRange(uint32_t id, uint32_t rows)
      : std::runtime_error("embedding id " + std::to_string(id) + " >= rows " +
                           std::to_string(rows)) {}
};
struct NonFiniteActivation : std::runtime_error {
  NonFiniteActivation() : std::runtime_error("non-finite activation in forward pass") {}
};
struct Diverged : std::runtime_error {
  Diverged() : std::runtime_error("training diverged: non-finite loss") {}
};

struct EmbeddingTable {
  uint32_t rows = 0;
  uint32_t dim = 0;
  std::vector<double> weights;  // rows x dim, row-major

  double* row(uint32_t r) { return weights.data() + static_cast<size_t>(r) * dim; }
  const double* row(uint32_t r) const { return weights.data() + static_cast<size_t>(r) * dim; }
};

struct Affine {
  uint32_t in = 0;
  uint32_t out = 0;
  std::vector<double> weights;  // out x in, row-major
  std::vector<double> bias;     // out
};

struct ModelConfig {
  uint32_t embedding_dim = 16;
  uint32_t visual_dim = 16;
  std::vector<uint32_t> hidden = {64, 32};
  uint32_t user_rows = feat::kDefaultTableSize;
  uint32_t item_rows = feat::kDefaultTableSize;
  uint32_t item_token_rows = 256;     // id-space of the active tokenizer
  uint32_t profile_token_rows = 256;
  feat::FeatureGroupSet groups;

  // Input layout is schema-stable: disabled groups occupy zero-filled slots so
  // every arm shares one trunk shape.
  uint32_t input_dim() const { return visual_dim + embedding_dim * 4; }
};

struct ModelParams {
  ModelConfig config;
  uint64_t init_seed = 0;
  EmbeddingTable user_table, item_table, token_table_item, token_table_profile;
  std::vector<Affine> trunk;                       // ReLU layers
  std::array<Affine, feat::kNumTasks> heads;       // last hidden -> 1, sigmoid

  static ModelParams init(const ModelConfig& config, uint64_t seed);

  size_t num_params() const;
  // Pointers to every parameter in checkpoint order; for small-model
  // diagnostics (finite differences), not the training path.
  std::vector<double*> param_ptrs();
};

// Mean of the rows indexed by tokens; empty list yields the zero vector.
std::vector<double> pool(const tok::TokenIdList& tokens, const EmbeddingTable& table);

struct Workspace {
  std::vector<double> input;
  std::vector<std::vector<double>> pre;  // per trunk layer, pre-ReLU
  std::vector<std::vector<double>> act;  // per trunk layer, post-ReLU
  std::array<double, feat::kNumTasks> logits{};
  std::array<double, feat::kNumTasks> probs{};
};

std::array<double, feat::kNumTasks> forward(const feat::FeatureBundle& bundle,
                                            const ModelParams& params, Workspace& ws);

inline std::array<double, feat::kNumTasks> forward(const feat::FeatureBundle& bundle,
                                                   const ModelParams& params) {
  Workspace ws;
  return forward(bundle, params, ws);
}

// Summed binary cross-entropy over the task heads; p clamped to [1e-7, 1-1e-7].
double loss(const std::array<double, feat::kNumTasks>& probs,
            const std::array<uint8_t, feat::kNumTasks>& labels);

// Accumulated gradients for one minibatch. Dense for the trunk and heads,
// sparse (row -> vector) for the embedding tables; maps are ordered so the
// update sweep is deterministic.
struct Gradients {
  std::vector<Affine> trunk;
  std::array<Affine, feat::kNumTasks> heads;
  std::map<uint32_t, std::vector<double>> user_rows, item_rows, token_item_rows,
      token_profile_rows;
  size_t count = 0;

  static Gradients zeros_like(const ModelParams& params);
  void reset();
};

// Accumulates dLoss/dparams for one example into grads (ws must hold the
// matching forward activations).
void backward(const feat::FeatureBundle& bundle, const ModelParams& params, const Workspace& ws,
              Gradients& grads);

struct TrainConfig {
  double lr = 0.05;
  uint32_t epochs = 2;
  uint32_t batch_size = 256;
  uint64_t seed = 1;
  double adagrad_eps = 1e-8;
  // multiplicative per-batch shrink applied to the token embedding tables
  double token_weight_decay = 1e-3;
};

struct EpochStats {
  double train_loss = 0.0;
  std::array<double, feat::kNumTasks> eval_auc{};
  std::array<double, feat::kNumTasks> eval_ne{};
};

struct TrainLog {
  std::vector<EpochStats> epochs;
  double seconds_per_example = 0.0;
};

ModelParams train(const feat::DatasetSplit& split, const ModelConfig& model_config,
                  const TrainConfig& train_config, TrainLog* log = nullptr);

std::vector<std::array<double, feat::kNumTasks>> predict(const feat::Dataset& dataset,
                                                         const ModelParams& params);

struct IoError : std::runtime_error {
  explicit IoError(const std::string& what) : std::runtime_error(what) {}
};
struct VersionMismatch : std::runtime_error {
  VersionMismatch() : std::runtime_error("checkpoint magic/version mismatch") {}
};
struct CorruptChecksum : std::runtime_error {
  CorruptChecksum() : std::runtime_error("checkpoint checksum mismatch") {}
};

// "SMRK1" magic, JSON manifest, raw little-endian doubles, FNV-1a64 checksum.
void save_checkpoint(const ModelParams& params, const std::string& path);
ModelParams load_checkpoint(const std::string& path);

}  // namespace smrec::model
