#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

namespace sli {

/// Binary confusion counts with SLI (label 1) as the positive class.
struct ConfusionMatrix {
  std::uint64_t tp = 0;
  std::uint64_t fp = 0;
  std::uint64_t tn = 0;
  std::uint64_t fn = 0;

  std::uint64_t total() const { return tp + fp + tn + fn; }
  std::uint64_t positives() const { return tp + fn; }
  std::uint64_t negatives() const { return tn + fp; }
};

ConfusionMatrix confusion(std::span<const int> y_true, std::span<const int> y_pred);

/// Each metric is nullopt when its denominator is zero.
struct BasicMetrics {
  std::optional<double> accuracy;
  std::optional<double> precision;   // tp / (tp + fp)
  std::optional<double> recall;      // tp / (tp + fn), sensitivity
  std::optional<double> neg_recall;  // tn / (tn + fp), specificity
  std::optional<double> f1;          // harmonic mean of precision and recall
};

BasicMetrics basic_metrics(const ConfusionMatrix& cm);

/// Area under the ROC curve as the Mann-Whitney statistic
/// P(s+ > s-) + P(s+ = s-) / 2, computed from fractional ranks.
double auc_roc(std::span<const int> y_true, std::span<const double> scores);

struct RocPoint {
  double threshold;  // predict 1 when score >= threshold
  double fpr;
  double tpr;
};

/// ROC vertices from (0,0) to (1,1), one per distinct score (descending).
std::vector<RocPoint> roc_points(std::span<const int> y_true, std::span<const double> scores);

/// Trapezoidal area under roc_points; equals auc_roc.
double trapezoid_auc(std::span<const RocPoint> points);

struct RegressionMetrics {
  double rmse = 0.0;
  double mae = 0.0;
  std::optional<double> r2;  // nullopt when y_true is constant
};

RegressionMetrics regression_metrics(std::span<const double> y_true, std::span<const double> y_hat);

struct EvaluationReport {
  ConfusionMatrix confusion;
  BasicMetrics basic;
  std::optional<double> auc;  // present when scores are supplied and both classes occur
  std::optional<RegressionMetrics> regression;  // of scores against 0/1 labels
};

/// Confusion-based metrics for hard predictions; `scores` (may be empty) add
/// AUC and score-level RMSE / MAE / R^2.
EvaluationReport evaluate(std::span<const int> y_true, std::span<const int> y_pred,
                          std::span<const double> scores = {});

/// Aligned text table: metrics block followed by the confusion matrix.
std::string render_evaluation(const EvaluationReport& report);

}  // namespace sli
