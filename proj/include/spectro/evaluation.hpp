// Classification metrics: precision-recall AUC, F1 at a validation-selected
// threshold, sun/shadow stratification and temporal label change.
#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <numeric>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include <json.hpp>

#include "spectro/core.hpp"

namespace spectro::eval {

using nlohmann::json;

namespace detail {

/// Indices sorted by descending score (stable, so equal scores keep input order).
inline std::vector<std::size_t> by_descending_score(std::span<const double> scores) {
  std::vector<std::size_t> idx(scores.size());
  std::iota(idx.begin(), idx.end(), 0);
  std::stable_sort(idx.begin(), idx.end(), [&](std::size_t a, std::size_t b) { return scores[a] > scores[b]; });
  return idx;
}

inline double f1_from_counts(std::size_t tp, std::size_t fp, std::size_t fn) {
  const std::size_t den = 2 * tp + fp + fn;
  return den == 0 ? 0.0 : 2.0 * static_cast<double>(tp) / static_cast<double>(den);
}

}  // namespace detail

/// Average precision: sum over distinct thresholds (descending) of
/// (recall_i - recall_{i-1}) * precision_i. Predicted positive means score >= threshold.
inline double pr_auc(std::span<const double> scores, std::span<const std::uint8_t> truth) {
  if (scores.size() != truth.size()) throw Error("pr_auc: scores and labels differ in length");
  const auto n_pos = static_cast<std::size_t>(std::count(truth.begin(), truth.end(), std::uint8_t{1}));
  if (n_pos == 0) throw Error("pr_auc: no positive samples");
  const auto idx = detail::by_descending_score(scores);
  std::size_t tp = 0, fp = 0;
  double auc = 0.0, prev_recall = 0.0;
  for (std::size_t i = 0; i < idx.size();) {
    const double s = scores[idx[i]];
    for (; i < idx.size() && scores[idx[i]] == s; ++i) (truth[idx[i]] ? tp : fp)++;
    const double recall = static_cast<double>(tp) / static_cast<double>(n_pos);
    const double precision = static_cast<double>(tp) / static_cast<double>(tp + fp);
    auc += (recall - prev_recall) * precision;
    prev_recall = recall;
  }
  return auc;
}

/// F1 of the rule "positive iff score >= threshold".
inline double f1_at(std::span<const double> scores, std::span<const std::uint8_t> truth, double threshold) {
  if (scores.size() != truth.size()) throw Error("f1: scores and labels differ in length");
  std::size_t tp = 0, fp = 0, fn = 0;
  for (std::size_t i = 0; i < scores.size(); ++i) {
    const bool pred = scores[i] >= threshold;
    if (pred && truth[i]) ++tp;
    else if (pred) ++fp;
    else if (truth[i]) ++fn;
  }
  return detail::f1_from_counts(tp, fp, fn);
}

struct ThresholdedF1 {
  double threshold = 0.0;
  double validation_f1 = 0.0;
  double test_f1 = 0.0;
};

/// Choose the validation score that maximises validation F1 (ties go to the
/// lowest threshold), then score the test set at that threshold.
inline double select_threshold(std::span<const double> val_scores, std::span<const std::uint8_t> val_truth,
                               double* best_f1 = nullptr) {
  if (val_scores.size() != val_truth.size()) throw Error("validation scores and labels differ in length");
  const auto n_pos = static_cast<std::size_t>(std::count(val_truth.begin(), val_truth.end(), std::uint8_t{1}));
  if (n_pos == 0 || n_pos == val_truth.size()) throw Error("validation set must contain both positives and negatives");
  // Sweep thresholds from high to low; counts at threshold s include every score >= s.
  const auto idx = detail::by_descending_score(val_scores);
  std::size_t tp = 0, fp = 0;
  double best = -1.0, best_t = 0.0;
  for (std::size_t i = 0; i < idx.size();) {
    const double s = val_scores[idx[i]];
    for (; i < idx.size() && val_scores[idx[i]] == s; ++i) (val_truth[idx[i]] ? tp : fp)++;
    const double f1 = detail::f1_from_counts(tp, fp, n_pos - tp);
    if (f1 >= best) {  // later candidates are lower thresholds, so >= keeps the lowest tie
      best = f1;
      best_t = s;
    }
  }
  if (best_f1) *best_f1 = best;
  return best_t;
}

inline ThresholdedF1 f1_with_validation_threshold(std::span<const double> val_scores,
                                                  std::span<const std::uint8_t> val_truth,
                                                  std::span<const double> test_scores,
                                                  std::span<const std::uint8_t> test_truth) {
  ThresholdedF1 r;
  r.threshold = select_threshold(val_scores, val_truth, &r.validation_f1);
  r.test_f1 = f1_at(test_scores, test_truth, r.threshold);
  return r;
}

/// Fraction of co-registered pixels whose label differs between two maps.
inline double label_change_fraction(std::span<const int> a, std::span<const int> b) {
  if (a.size() != b.size()) throw Error("label maps differ in size");
  if (a.empty()) throw Error("label maps are empty");
  std::size_t changed = 0;
  for (std::size_t i = 0; i < a.size(); ++i) changed += a[i] != b[i];
  return static_cast<double>(changed) / static_cast<double>(a.size());
}

/// Single label per sample: argmax class if its score clears that class's threshold, else -1.
inline int assign_label(std::span<const double> scores, std::span<const double> thresholds) {
  const auto k = static_cast<std::size_t>(std::max_element(scores.begin(), scores.end()) - scores.begin());
  if (!thresholds.empty() && scores[k] < thresholds[k]) return -1;
  return static_cast<int>(k);
}

// ---------------------------------------------------------------------------
// Multi-class reports

/// Class scores for a set of samples, one row per sample.
struct ScoredSet {
  std::vector<std::vector<double>> scores;
  std::vector<int> labels;

  std::size_t size() const { return labels.size(); }

  std::vector<double> column(std::size_t k) const {
    std::vector<double> c(scores.size());
    for (std::size_t i = 0; i < scores.size(); ++i) c[i] = scores[i][k];
    return c;
  }
  std::vector<std::uint8_t> is_class(std::size_t k) const {
    std::vector<std::uint8_t> t(labels.size());
    for (std::size_t i = 0; i < labels.size(); ++i) t[i] = labels[i] == static_cast<int>(k);
    return t;
  }
  ScoredSet subset(const std::vector<std::uint8_t>& keep) const {
    ScoredSet s;
    for (std::size_t i = 0; i < labels.size(); ++i)
      if (keep[i]) {
        s.scores.push_back(scores[i]);
        s.labels.push_back(labels[i]);
      }
    return s;
  }
};

/// Metrics over one set of test samples. Per-class values are missing when a
/// class has no positives there (AUC) or F1 is 0/0 (no positives, no predictions).
struct StratumMetrics {
  std::size_t n_samples = 0;
  std::vector<std::size_t> n_positive;
  std::vector<std::optional<double>> f1;
  std::vector<std::optional<double>> auc;
  std::optional<double> mean_f1;
  std::optional<double> mean_auc;

  bool empty() const { return n_samples == 0; }
};

struct EvalReport {
  std::vector<std::string> class_names;
  std::vector<double> thresholds;
  std::vector<double> validation_f1;
  std::size_t n_validation = 0;
  StratumMetrics all;
  std::optional<StratumMetrics> sun;
  std::optional<StratumMetrics> shadow;
};

namespace detail {

inline std::optional<double> mean_of(const std::vector<std::optional<double>>& v) {
  double s = 0.0;
  std::size_t n = 0;
  for (const auto& x : v)
    if (x) {
      s += *x;
      ++n;
    }
  if (n == 0) return std::nullopt;
  return s / static_cast<double>(n);
}

}  // namespace detail

inline StratumMetrics stratum_metrics(const ScoredSet& test, const std::vector<double>& thresholds) {
  const std::size_t K = thresholds.size();
  StratumMetrics m;
  m.n_samples = test.size();
  m.n_positive.assign(K, 0);
  m.f1.assign(K, std::nullopt);
  m.auc.assign(K, std::nullopt);
  if (m.empty()) return m;
  for (std::size_t k = 0; k < K; ++k) {
    const auto s = test.column(k);
    const auto t = test.is_class(k);
    m.n_positive[k] = static_cast<std::size_t>(std::count(t.begin(), t.end(), std::uint8_t{1}));
    if (m.n_positive[k] > 0) m.auc[k] = pr_auc(s, t);
    const bool any_pred = std::any_of(s.begin(), s.end(), [&](double v) { return v >= thresholds[k]; });
    if (m.n_positive[k] > 0 || any_pred) m.f1[k] = f1_at(s, t, thresholds[k]);
  }
  m.mean_f1 = detail::mean_of(m.f1);
  m.mean_auc = detail::mean_of(m.auc);
  return m;
}

/// Per-class thresholds from validation, then test metrics overall and, when
/// `test_in_shadow` is given, separately over sunlit and shadowed test samples.
inline EvalReport evaluate(const ScoredSet& validation, const ScoredSet& test, std::vector<std::string> class_names,
                           const std::vector<std::uint8_t>* test_in_shadow = nullptr) {
  const std::size_t K = class_names.size();
  EvalReport r;
  r.class_names = std::move(class_names);
  r.n_validation = validation.size();
  r.thresholds.resize(K);
  r.validation_f1.resize(K);
  for (std::size_t k = 0; k < K; ++k)
    r.thresholds[k] = select_threshold(validation.column(k), validation.is_class(k), &r.validation_f1[k]);
  r.all = stratum_metrics(test, r.thresholds);
  if (test_in_shadow) {
    if (test_in_shadow->size() != test.size()) throw Error("shadow mask does not match the test samples");
    std::vector<std::uint8_t> sunlit(test_in_shadow->size());
    for (std::size_t i = 0; i < sunlit.size(); ++i) sunlit[i] = !(*test_in_shadow)[i];
    r.sun = stratum_metrics(test.subset(sunlit), r.thresholds);
    r.shadow = stratum_metrics(test.subset(*test_in_shadow), r.thresholds);
  }
  return r;
}

// ---------------------------------------------------------------------------
// JSON

namespace detail {

inline json opt(const std::optional<double>& v) { return v ? json(*v) : json(nullptr); }

inline json opt_vec(const std::vector<std::optional<double>>& v) {
  json a = json::array();
  for (const auto& x : v) a.push_back(opt(x));
  return a;
}

}  // namespace detail

inline json to_json(const StratumMetrics& m) {
  json j;
  j["n_samples"] = m.n_samples;
  j["empty"] = m.empty();
  j["n_positive"] = m.n_positive;
  j["f1"] = detail::opt_vec(m.f1);
  j["auc"] = detail::opt_vec(m.auc);
  j["mean_f1"] = detail::opt(m.mean_f1);
  j["mean_auc"] = detail::opt(m.mean_auc);
  return j;
}

inline json to_json(const EvalReport& r) {
  json j;
  j["class_names"] = r.class_names;
  j["thresholds"] = r.thresholds;
  j["validation_f1"] = r.validation_f1;
  j["n_validation"] = r.n_validation;
  j["all"] = to_json(r.all);
  j["sun"] = r.sun ? to_json(*r.sun) : json(nullptr);
  j["shadow"] = r.shadow ? to_json(*r.shadow) : json(nullptr);
  j["unassigned_policy"] = "below-threshold samples are false negatives for their class and never false positives";
  return j;
}

}  // namespace spectro::eval
