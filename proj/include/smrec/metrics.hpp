#pragma once

#include <array>
#include <cstdint>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "smrec/features.hpp"

namespace smrec::model {
struct ModelParams;
}

namespace smrec::metrics {

struct DegenerateLabels : std::runtime_error {
  DegenerateLabels() : std::runtime_error("metric requires both label classes") {}
};

// Mann-Whitney AUC via the rank-sum statistic, ties get average ranks.
double auc(std::span<const uint8_t> labels, std::span<const double> scores);

// Normalized Entropy: mean prediction cross-entropy divided by the entropy of
// the constant background-rate predictor. 1.0 = no better than the base rate.
double ne(std::span<const uint8_t> labels, std::span<const double> probabilities);

// Percentage change of (1-AUC); positive = improvement.
double auc_gain_pct(double auc_base, double auc_treat);

// 100 * (ne_treat - ne_base) / ne_base; negative values are reductions.
double ne_gain_pct(double ne_base, double ne_treat);

struct MetricReport {
  std::array<double, feat::kNumTasks> auc{};
  std::array<double, feat::kNumTasks> ne{};
  std::string eval_set_id;  // provenance tag used to guard report comparisons

  double mean_auc() const;
  double mean_ne() const;
};

MetricReport compute_report(const feat::Dataset& dataset,
                            const std::vector<std::array<double, feat::kNumTasks>>& probs,
                            std::string eval_set_id = {});

struct SignificanceResult {
  double t_statistic = 0.0;
  double p_value = 1.0;
  size_t n_subsets = 0;
  bool zero_variance = false;
};

// Two-sided paired t-test on per-subset (base, treat) metric pairs.
SignificanceResult paired_ttest(const std::vector<std::pair<double, double>>& metric_pairs);

// Regularized incomplete beta I_x(a, b), continued-fraction evaluation,
// accurate to ~1e-10; the only special function the t-test needs.
double incomplete_beta(double a, double b, double x);

// Two-sided p-value for Student's t with nu degrees of freedom.
double student_t_two_sided_p(double t, double nu);

struct UnknownFeatureGroup : std::runtime_error {
  explicit UnknownFeatureGroup(const std::string& name)
      : std::runtime_error("unknown feature group: " + name) {}
};

struct ImportanceResult {
  feat::FeatureGroup group;
  std::array<double, feat::kNumTasks> delta_ne{};  // NE(shuffled) - NE(intact)
  double mean_delta_ne = 0.0;
};

// Shuffle-all importance: one seeded permutation applied jointly to the whole
// feature group across eval examples, then re-predict.
ImportanceResult shuffle_importance(const model::ModelParams& params,
                                    const feat::Dataset& eval_set, feat::FeatureGroup group,
                                    uint64_t seed);

// Same but with an explicit permutation (identity permutation must yield
// exactly zero deltas).
ImportanceResult shuffle_importance_with_permutation(const model::ModelParams& params,
                                                     const feat::Dataset& eval_set,
                                                     feat::FeatureGroup group,
                                                     const std::vector<uint32_t>& permutation);

// All groups, sorted by mean ΔNE descending (most important first).
std::vector<ImportanceResult> rank_feature_groups(const model::ModelParams& params,
                                                  const feat::Dataset& eval_set, uint64_t seed);

struct MismatchedEvalSets : std::runtime_error {
  MismatchedEvalSets() : std::runtime_error("deep dive requires reports from one eval set") {}
};

struct DeepDiveRow {
  std::string task;
  double delta_ne_pct = 0.0;  // negative = reduction
};

std::vector<DeepDiveRow> deep_dive_report(const MetricReport& base, const MetricReport& treat);

}  // namespace smrec::metrics
