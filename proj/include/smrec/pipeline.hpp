#pragma once

#include <optional>
#include <string>
#include <vector>

#include "smrec/datagen.hpp"
#include "smrec/features.hpp"
#include "smrec/metrics.hpp"
#include "smrec/model.hpp"
#include "smrec/tokenize.hpp"

namespace smrec::pipeline {

struct TokenizerSpec {
  enum class Kind { kVocab, kHashing };  // "Tokenizer A" / "Tokenizer B"
  Kind kind = Kind::kVocab;
  uint32_t vocab_size = 256;   // kVocab
  uint32_t num_buckets = 64;   // kHashing
  uint64_t hash_seed = 0;      // kHashing
  uint32_t max_len = tok::kDefaultMaxLen;

  const char* label() const { return kind == Kind::kVocab ? "A" : "B"; }
};

struct ArmSpec {
  std::string name;
  feat::FeatureGroupSet groups;
  std::optional<TokenizerSpec> tokenizer;  // overrides the experiment default
};

struct EvalSettings {
  uint32_t n_ttest_subsets = 8;
  uint32_t topk_profile = prof::kDefaultTopK;
  uint64_t importance_seed = 1234;
};

struct ExperimentConfig {
  datagen::WorldConfig world;
  TokenizerSpec tokenizer;
  std::vector<ArmSpec> arms;  // empty -> default matrix
  model::TrainConfig train;
  EvalSettings eval;
  uint32_t embedding_dim = 16;
  std::vector<uint32_t> hidden = {64, 32};
  uint32_t user_table = feat::kDefaultTableSize;
  uint32_t item_table = feat::kDefaultTableSize;
  std::pair<int, int> split_ratio{7, 1};
  uint64_t split_seed = 7;
  double profile_half_life_s = prof::kDefaultHalfLifeSeconds;
  content::InvocationPolicy invocation;

  // Strict parse: unknown keys are rejected.
  static ExperimentConfig from_json_file(const std::string& path);
  static ExperimentConfig from_json_text(const std::string& text);

  std::vector<ArmSpec> effective_arms() const;
};

// Builds the per-arm dataset from one shared world: captions through the
// invocation gate, tokenization, online interest-profile replay, bundles in
// impression order.
feat::Dataset build_arm_dataset(const datagen::World& world,
                                const std::vector<datagen::Impression>& impressions,
                                const ArmSpec& arm, const ExperimentConfig& config,
                                const tok::Vocabulary* vocab);

// Trains Tokenizer A's vocabulary on the caption corpus of gate-passing items.
tok::Vocabulary train_arm_vocabulary(const datagen::World& world, const ExperimentConfig& config);

struct ArmResult {
  std::string name;
  feat::FeatureGroupSet groups;
  std::string tokenizer_label;
  metrics::MetricReport report;
  double mean_auc_gain_pct = 0.0;  // vs baseline, 1-AUC convention
  double mean_ne_gain_pct = 0.0;   // negative = better
  metrics::SignificanceResult ttest;  // per-shard mean NE, treat vs base
  double seconds_per_example = 0.0;
};

struct ExperimentSummary {
  std::vector<ArmResult> arms;  // arms[0] is the baseline
  std::vector<metrics::DeepDiveRow> deep_dive;          // best token arm vs baseline
  std::vector<metrics::ImportanceResult> importance;    // best token arm, ranked
  double ablation_intact_ne = 0.0;
  double ablation_emptied_ne = 0.0;
  std::string best_arm;
};

ExperimentSummary run_experiment(const ExperimentConfig& config, const std::string& out_dir);

struct MissingArtifacts : std::runtime_error {
  explicit MissingArtifacts(const std::string& what) : std::runtime_error(what) {}
};

// Renders report.txt (arm summary + task deep dive) from the
// metrics artifacts under run_dir; returns the rendered text.
std::string render_reports(const std::string& run_dir);

}  // namespace smrec::pipeline
