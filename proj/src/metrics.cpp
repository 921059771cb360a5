#include "smrec/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "smrec/model.hpp"
#include "smrec/rng.hpp"

namespace smrec::metrics {

namespace {
constexpr double kProbClamp = 1e-7;
}

double auc(std::span<const uint8_t> labels, std::span<const double> scores) {
  if (labels.size() != scores.size())
    throw std::invalid_argument("auc: labels/scores length mismatch");
  const size_t n = labels.size();
  size_t n_pos = 0;
  for (uint8_t y : labels) n_pos += (y != 0);
  const size_t n_neg = n - n_pos;
  if (n_pos == 0 || n_neg == 0) throw DegenerateLabels();

  std::vector<uint32_t> order(n);
  std::iota(order.begin(), order.end(), 0u);
  std::sort(order.begin(), order.end(),
            [&scores](uint32_t a, uint32_t b) { return scores[a] < scores[b]; });

  // rank-sum of positives with average ranks over tie groups
  double pos_rank_sum = 0.0;
  size_t i = 0;
  while (i < n) {
    size_t j = i;
    while (j + 1 < n && scores[order[j + 1]] == scores[order[i]]) ++j;
    const double avg_rank = 0.5 * static_cast<double>(i + 1 + j + 1);  // 1-based
    for (size_t k = i; k <= j; ++k)
      if (labels[order[k]]) pos_rank_sum += avg_rank;
    i = j + 1;
  }
  const double u = pos_rank_sum - 0.5 * static_cast<double>(n_pos) * (n_pos + 1);
  return u / (static_cast<double>(n_pos) * static_cast<double>(n_neg));
}

double ne(std::span<const uint8_t> labels, std::span<const double> probabilities) {
  if (labels.size() != probabilities.size())
    throw std::invalid_argument("ne: labels/probabilities length mismatch");
  const size_t n = labels.size();
  size_t n_pos = 0;
  for (uint8_t y : labels) n_pos += (y != 0);
  if (n_pos == 0 || n_pos == n) throw DegenerateLabels();

  double ce = 0.0;
  for (size_t i = 0; i < n; ++i) {
    const double p = std::clamp(probabilities[i], kProbClamp, 1.0 - kProbClamp);
    ce -= labels[i] ? std::log(p) : std::log(1.0 - p);
  }
  ce /= static_cast<double>(n);
  const double pbar = static_cast<double>(n_pos) / static_cast<double>(n);
  const double base_entropy = -(pbar * std::log(pbar) + (1.0 - pbar) * std::log(1.0 - pbar));
  return ce / base_entropy;
}

double auc_gain_pct(double auc_base, double auc_treat) {
  if (auc_base >= 1.0) throw std::invalid_argument("auc_gain_pct: base AUC is 1");
  return 100.0 * ((1.0 - auc_base) - (1.0 - auc_treat)) / (1.0 - auc_base);
}

double ne_gain_pct(double ne_base, double ne_treat) {
  if (ne_base <= 0.0) throw std::invalid_argument("ne_gain_pct: base NE must be positive");
  return 100.0 * (ne_treat - ne_base) / ne_base;
}

double MetricReport::mean_auc() const {
  double s = 0.0;
  for (double a : auc) s += a;
  return s / static_cast<double>(feat::kNumTasks);
}

double MetricReport::mean_ne() const {
  double s = 0.0;
  for (double v : ne) s += v;
  return s / static_cast<double>(feat::kNumTasks);
}

MetricReport compute_report(const feat::Dataset& dataset,
                            const std::vector<std::array<double, feat::kNumTasks>>& probs,
                            std::string eval_set_id) {
  if (dataset.size() != probs.size())
    throw std::invalid_argument("compute_report: dataset/probs length mismatch");
  MetricReport report;
  report.eval_set_id = std::move(eval_set_id);
  std::vector<uint8_t> labels(dataset.size());
  std::vector<double> scores(dataset.size());
  for (size_t k = 0; k < feat::kNumTasks; ++k) {
    for (size_t i = 0; i < dataset.size(); ++i) {
      labels[i] = dataset[i].labels[k];
      scores[i] = probs[i][k];
    }
    report.auc[k] = auc(labels, scores);
    report.ne[k] = ne(labels, scores);
  }
  return report;
}

double incomplete_beta(double a, double b, double x) {
  if (x <= 0.0) return 0.0;
  if (x >= 1.0) return 1.0;
  // continued fraction (modified Lentz); use the symmetry relation so the
  // fraction converges fast
  const double ln_front = std::lgamma(a + b) - std::lgamma(a) - std::lgamma(b) +
                          a * std::log(x) + b * std::log(1.0 - x);
  auto cf = [](double a_, double b_, double x_) {
    constexpr double kTiny = 1e-300;
    constexpr double kEps = 1e-14;
    constexpr int kMaxIter = 500;
    double c = 1.0;
    double d = 1.0 - (a_ + b_) * x_ / (a_ + 1.0);
    if (std::fabs(d) < kTiny) d = kTiny;
    d = 1.0 / d;
    double h = d;
    for (int m = 1; m <= kMaxIter; ++m) {
      const double m2 = 2.0 * m;
      double num = m * (b_ - m) * x_ / ((a_ + m2 - 1.0) * (a_ + m2));
      d = 1.0 + num * d;
      if (std::fabs(d) < kTiny) d = kTiny;
      c = 1.0 + num / c;
      if (std::fabs(c) < kTiny) c = kTiny;
      d = 1.0 / d;
      h *= d * c;
      num = -(a_ + m) * (a_ + b_ + m) * x_ / ((a_ + m2) * (a_ + m2 + 1.0));
      d = 1.0 + num * d;
      if (std::fabs(d) < kTiny) d = kTiny;
      c = 1.0 + num / c;
      if (std::fabs(c) < kTiny) c = kTiny;
      d = 1.0 / d;
      const double del = d * c;
      h *= del;
      if (std::fabs(del - 1.0) < kEps) break;
    }
    return h;
  };
  if (x < (a + 1.0) / (a + b + 2.0)) return std::exp(ln_front) * cf(a, b, x) / a;
  return 1.0 - std::exp(std::lgamma(a + b) - std::lgamma(a) - std::lgamma(b) +
                        b * std::log(1.0 - x) + a * std::log(x)) *
                   cf(b, a, 1.0 - x) / b;
}

double student_t_two_sided_p(double t, double nu) {
  if (!std::isfinite(t)) return 0.0;
  const double x = nu / (nu + t * t);
  return incomplete_beta(0.5 * nu, 0.5, x);
}

SignificanceResult paired_ttest(const std::vector<std::pair<double, double>>& metric_pairs) {
  const size_t n = metric_pairs.size();
  if (n < 2) throw std::invalid_argument("paired_ttest: need at least 2 subsets");
  std::vector<double> diffs(n);
  for (size_t i = 0; i < n; ++i) diffs[i] = metric_pairs[i].second - metric_pairs[i].first;

  double mean = 0.0;
  for (double d : diffs) mean += d;
  mean /= static_cast<double>(n);
  double var = 0.0;
  for (double d : diffs) var += (d - mean) * (d - mean);
  var /= static_cast<double>(n - 1);

  SignificanceResult res;
  res.n_subsets = n;
  if (var == 0.0) {
    res.zero_variance = true;
    res.t_statistic = mean == 0.0 ? 0.0 : std::copysign(INFINITY, mean);
    res.p_value = mean == 0.0 ? 1.0 : 0.0;
    return res;
  }
  res.t_statistic = mean / std::sqrt(var / static_cast<double>(n));
  res.p_value = student_t_two_sided_p(res.t_statistic, static_cast<double>(n - 1));
  return res;
}

namespace {

feat::Dataset shuffled_copy(const feat::Dataset& eval_set, feat::FeatureGroup group,
                            const std::vector<uint32_t>& perm) {
  feat::Dataset shuffled = eval_set;
  for (size_t i = 0; i < eval_set.size(); ++i) {
    const feat::FeatureBundle& src = eval_set[perm[i]];
    switch (group) {
      case feat::FeatureGroup::kVisual:
        shuffled[i].visual = src.visual;
        break;
      case feat::FeatureGroup::kItemTokens:
        shuffled[i].item_tokens = src.item_tokens;
        break;
      case feat::FeatureGroup::kProfileTokens:
        shuffled[i].profile_tokens = src.profile_tokens;
        break;
    }
  }
  return shuffled;
}

}  // namespace

ImportanceResult shuffle_importance_with_permutation(const model::ModelParams& params,
                                                     const feat::Dataset& eval_set,
                                                     feat::FeatureGroup group,
                                                     const std::vector<uint32_t>& permutation) {
  if (permutation.size() != eval_set.size())
    throw std::invalid_argument("shuffle_importance: permutation size mismatch");
  const auto intact_probs = model::predict(eval_set, params);
  const MetricReport intact = compute_report(eval_set, intact_probs);
  const feat::Dataset shuffled = shuffled_copy(eval_set, group, permutation);
  const auto shuffled_probs = model::predict(shuffled, params);

  // labels stay with the example; only the feature values moved
  MetricReport degraded = compute_report(eval_set, shuffled_probs);

  ImportanceResult res;
  res.group = group;
  for (size_t k = 0; k < feat::kNumTasks; ++k) {
    res.delta_ne[k] = degraded.ne[k] - intact.ne[k];
    res.mean_delta_ne += res.delta_ne[k];
  }
  res.mean_delta_ne /= static_cast<double>(feat::kNumTasks);
  return res;
}

ImportanceResult shuffle_importance(const model::ModelParams& params,
                                    const feat::Dataset& eval_set, feat::FeatureGroup group,
                                    uint64_t seed) {
  return shuffle_importance_with_permutation(params, eval_set, group,
                                             random_permutation(eval_set.size(), seed));
}

std::vector<ImportanceResult> rank_feature_groups(const model::ModelParams& params,
                                                  const feat::Dataset& eval_set, uint64_t seed) {
  std::vector<ImportanceResult> results;
  for (size_t g = 0; g < feat::kNumFeatureGroups; ++g)
    results.push_back(
        shuffle_importance(params, eval_set, static_cast<feat::FeatureGroup>(g), seed));
  std::stable_sort(results.begin(), results.end(), [](const auto& a, const auto& b) {
    return a.mean_delta_ne > b.mean_delta_ne;
  });
  return results;
}

std::vector<DeepDiveRow> deep_dive_report(const MetricReport& base, const MetricReport& treat) {
  if (!base.eval_set_id.empty() && !treat.eval_set_id.empty() &&
      base.eval_set_id != treat.eval_set_id)
    throw MismatchedEvalSets();
  static constexpr const char* kTaskNames[feat::kNumTasks] = {
      "Comment Related", "Like Related", "Share Related", "Time spent Related",
      "Consumption Related"};
  std::vector<DeepDiveRow> rows;
  for (size_t k = 0; k < feat::kNumTasks; ++k)
    rows.push_back({kTaskNames[k], ne_gain_pct(base.ne[k], treat.ne[k])});
  return rows;
}

}  // namespace smrec::metrics
