#include "sli/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <iomanip>
#include <limits>
#include <numeric>
#include <sstream>
#include <stdexcept>

#include "sli/stats.hpp"

namespace sli {

namespace {

void check_binary(std::span<const int> y, const char* what) {
  for (const int v : y)
    if (v != 0 && v != 1) throw std::invalid_argument(std::string(what) + ": labels outside {0,1}");
}

std::optional<double> ratio(std::uint64_t num, std::uint64_t den) {
  if (den == 0) return std::nullopt;
  return static_cast<double>(num) / static_cast<double>(den);
}

std::pair<std::uint64_t, std::uint64_t> class_sizes(std::span<const int> y_true) {
  const auto pos = static_cast<std::uint64_t>(std::count(y_true.begin(), y_true.end(), 1));
  return {pos, y_true.size() - pos};
}

}  // namespace

ConfusionMatrix confusion(std::span<const int> y_true, std::span<const int> y_pred) {
  if (y_true.size() != y_pred.size()) throw std::invalid_argument("confusion: length mismatch");
  if (y_true.empty()) throw std::invalid_argument("confusion: empty input");
  check_binary(y_true, "confusion");
  check_binary(y_pred, "confusion");
  ConfusionMatrix cm;
  for (std::size_t i = 0; i < y_true.size(); ++i) {
    if (y_true[i] == 1) {
      ++(y_pred[i] == 1 ? cm.tp : cm.fn);
    } else {
      ++(y_pred[i] == 1 ? cm.fp : cm.tn);
    }
  }
  return cm;
}

BasicMetrics basic_metrics(const ConfusionMatrix& cm) {
  BasicMetrics m;
  m.accuracy = ratio(cm.tp + cm.tn, cm.total());
  m.precision = ratio(cm.tp, cm.tp + cm.fp);
  m.recall = ratio(cm.tp, cm.tp + cm.fn);
  m.neg_recall = ratio(cm.tn, cm.tn + cm.fp);
  if (m.precision && m.recall && *m.precision + *m.recall > 0.0)
    m.f1 = 2.0 * *m.precision * *m.recall / (*m.precision + *m.recall);
  return m;
}

double auc_roc(std::span<const int> y_true, std::span<const double> scores) {
  if (y_true.size() != scores.size()) throw std::invalid_argument("auc_roc: length mismatch");
  check_binary(y_true, "auc_roc");
  const auto [pos, neg] = class_sizes(y_true);
  if (pos == 0 || neg == 0) throw std::invalid_argument("auc_roc: both classes required");
  const auto ranks = fractional_ranks(scores);
  double rank_sum = 0.0;
  for (std::size_t i = 0; i < ranks.size(); ++i)
    if (y_true[i] == 1) rank_sum += ranks[i];
  // Mann-Whitney U of the positives; ties contribute 1/2 through average ranks.
  const double u = rank_sum - 0.5 * static_cast<double>(pos) * static_cast<double>(pos + 1);
  return u / (static_cast<double>(pos) * static_cast<double>(neg));
}

std::vector<RocPoint> roc_points(std::span<const int> y_true, std::span<const double> scores) {
  if (y_true.size() != scores.size()) throw std::invalid_argument("roc_points: length mismatch");
  check_binary(y_true, "roc_points");
  const auto [pos, neg] = class_sizes(y_true);
  if (pos == 0 || neg == 0) throw std::invalid_argument("roc_points: both classes required");

  std::vector<std::size_t> order(scores.size());
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t a, std::size_t b) { return scores[a] > scores[b]; });

  std::vector<RocPoint> points;
  points.push_back({std::numeric_limits<double>::infinity(), 0.0, 0.0});
  std::uint64_t tp = 0;
  std::uint64_t fp = 0;
  std::size_t i = 0;
  while (i < order.size()) {
    const double s = scores[order[i]];
    while (i < order.size() && scores[order[i]] == s) {
      ++(y_true[order[i]] == 1 ? tp : fp);
      ++i;
    }
    points.push_back({s, static_cast<double>(fp) / static_cast<double>(neg),
                      static_cast<double>(tp) / static_cast<double>(pos)});
  }
  return points;
}

double trapezoid_auc(std::span<const RocPoint> points) {
  double area = 0.0;
  for (std::size_t i = 1; i < points.size(); ++i)
    area += (points[i].fpr - points[i - 1].fpr) * 0.5 * (points[i].tpr + points[i - 1].tpr);
  return area;
}

RegressionMetrics regression_metrics(std::span<const double> y_true, std::span<const double> y_hat) {
  if (y_true.size() != y_hat.size()) throw std::invalid_argument("regression_metrics: length mismatch");
  if (y_true.size() < 2) throw std::invalid_argument("regression_metrics: need n >= 2");
  const double n = static_cast<double>(y_true.size());
  const double mean = std::accumulate(y_true.begin(), y_true.end(), 0.0) / n;
  double sse = 0.0;
  double sae = 0.0;
  double sst = 0.0;
  for (std::size_t i = 0; i < y_true.size(); ++i) {
    const double e = y_true[i] - y_hat[i];
    sse += e * e;
    sae += std::abs(e);
    sst += (y_true[i] - mean) * (y_true[i] - mean);
  }
  RegressionMetrics m;
  m.rmse = std::sqrt(sse / n);
  m.mae = sae / n;
  if (sst > 0.0) m.r2 = 1.0 - sse / sst;
  return m;
}

EvaluationReport evaluate(std::span<const int> y_true, std::span<const int> y_pred,
                          std::span<const double> scores) {
  EvaluationReport report;
  report.confusion = confusion(y_true, y_pred);
  report.basic = basic_metrics(report.confusion);
  if (!scores.empty()) {
    const auto [pos, neg] = class_sizes(y_true);
    if (pos > 0 && neg > 0) report.auc = auc_roc(y_true, scores);
    if (y_true.size() >= 2) {
      std::vector<double> truth(y_true.begin(), y_true.end());
      report.regression = regression_metrics(truth, scores);
    }
  }
  return report;
}

std::string render_evaluation(const EvaluationReport& report) {
  auto cell = [](const std::optional<double>& v) {
    if (!v) return std::string("undefined");
    std::ostringstream s;
    s << std::fixed << std::setprecision(2) << 100.0 * *v << '%';
    return s.str();
  };
  std::ostringstream out;
  const auto& b = report.basic;
  out << std::left << std::setw(14) << "accuracy" << std::setw(14) << "precision"
      << std::setw(14) << "f1" << std::setw(14) << "recall" << std::setw(14) << "neg_recall"
      << std::setw(14) << "auc" << '\n';
  out << std::setw(14) << cell(b.accuracy) << std::setw(14) << cell(b.precision) << std::setw(14)
      << cell(b.f1) << std::setw(14) << cell(b.recall) << std::setw(14) << cell(b.neg_recall)
      << std::setw(14) << (report.auc ? cell(report.auc) : std::string("-")) << "\n\n";
  const auto& cm = report.confusion;
  out << std::setw(16) << "" << std::setw(12) << "true SLI" << std::setw(12) << "true TD" << '\n';
  out << std::setw(16) << "predicted SLI" << std::setw(12) << cm.tp << std::setw(12) << cm.fp << '\n';
  out << std::setw(16) << "predicted TD" << std::setw(12) << cm.fn << std::setw(12) << cm.tn << '\n';
  return out.str();
}

}  // namespace sli
