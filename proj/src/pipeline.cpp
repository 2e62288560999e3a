#include "sli/pipeline.hpp"

#include <algorithm>
#include <cmath>
#include <iomanip>
#include <sstream>
#include <stdexcept>

#include "sli/rng.hpp"
#include "sli/stats.hpp"

namespace sli {

void StageOneCriteria::validate() const {
  if (!(correlation_floor >= 0.0)) throw std::invalid_argument("correlation floor must be >= 0");
  if (mode == Mode::Fixed && !std::isfinite(importance_threshold))
    throw std::invalid_argument("importance threshold must be finite");
}

double StageOneCriteria::resolve_threshold(std::span<const double> importance) const {
  if (mode == Mode::Fixed) return importance_threshold;
  return 0.5 * (median(importance) + quartile(importance, 75));
}

double apply_stage1_rule(std::span<const double> importance,
                         std::span<const std::optional<double>> correlation,
                         const StageOneCriteria& criteria, std::vector<bool>& kept) {
  if (importance.size() != correlation.size())
    throw std::invalid_argument("stage 1: importance and correlation lengths differ");
  criteria.validate();
  const double threshold = criteria.resolve_threshold(importance);
  kept.assign(importance.size(), false);
  for (std::size_t v = 0; v < importance.size(); ++v) {
    kept[v] = importance[v] > threshold && correlation[v].has_value() &&
              std::abs(*correlation[v]) > criteria.correlation_floor;
  }
  return threshold;
}

Stage1Result stage1_screen(const FeatureMatrix& data, const ForestParams& params,
                           const StageOneCriteria& criteria) {
  criteria.validate();
  const Forest forest = fit_forest(data, params);
  const auto labels = data.label_values();

  std::vector<std::optional<double>> correlation(data.n_cols());
  for (std::size_t v = 0; v < data.n_cols(); ++v) {
    const auto column = data.column(v);
    if (std::all_of(column.begin(), column.end(), [&](double x) { return x == column[0]; }))
      continue;  // rank correlation undefined; the feature cannot pass the screen
    correlation[v] = spearman(column, labels);
  }

  Stage1Result result;
  std::vector<bool> kept;
  result.threshold = apply_stage1_rule(forest.importance, correlation, criteria, kept);
  result.oob_error = forest.oob_error;
  result.oob_curve = oob_curve(forest, data);
  for (std::size_t v = 0; v < data.n_cols(); ++v) {
    result.features.push_back({data.names()[v], forest.importance[v], correlation[v], kept[v]});
    if (kept[v]) result.kept.push_back(data.names()[v]);
  }
  return result;
}

void CascadeConfig::validate() const {
  if (!(train_fraction > 0.0 && train_fraction < 1.0))
    throw std::invalid_argument("train_fraction must lie in (0,1)");
  if (forest.n_trees < 1) throw std::invalid_argument("trees must be >= 1");
  if (forest.min_leaf < 1) throw std::invalid_argument("min_leaf must be >= 1");
  if (forest.threads < 1) throw std::invalid_argument("threads must be >= 1");
  criteria.validate();
  if (!(alpha > 0.0 && alpha < 1.0)) throw std::invalid_argument("alpha must lie in (0,1)");
  if (folds < 2) throw std::invalid_argument("folds must be >= 2");
}

std::uint64_t CascadeConfig::split_seed() const { return derive_seed(seed, "split"); }
std::uint64_t CascadeConfig::forest_seed() const { return derive_seed(seed, "forest"); }
std::uint64_t CascadeConfig::fold_seed() const { return derive_seed(seed, "folds"); }

SplitPair cascade_split(const FeatureMatrix& data, const CascadeConfig& config) {
  config.validate();
  return split(data, config.train_fraction, config.split_seed(), config.stratify_split);
}

namespace {

const FeatureMatrix& selection_rows(const FeatureMatrix& data, const SplitPair& split,
                                    const CascadeConfig& config) {
  return config.select_on_all ? data : split.train;
}

}  // namespace

Stage1Result run_stage1(const FeatureMatrix& data, const SplitPair& split,
                        const CascadeConfig& config) {
  ForestParams params = config.forest;
  params.seed = config.forest_seed();
  return stage1_screen(selection_rows(data, split, config), params, config.criteria);
}

Stage2Result run_stage2(const FeatureMatrix& data, const SplitPair& split,
                        const Stage1Result& stage1, const CascadeConfig& config) {
  if (stage1.kept.empty()) throw Error("no features survived stage 1");
  const auto input = selection_rows(data, split, config).select_columns(stage1.kept);
  auto eliminated = backward_eliminate(input, config.alpha, config.max_elimination_rounds);
  Stage2Result result;
  result.input_features = stage1.kept;
  result.trace = std::move(eliminated.trace);
  result.wald = wald_table(eliminated.model);
  return result;
}

Stage3Result run_stage3(const SplitPair& split, const Stage2Result& stage2,
                        const CascadeConfig& config) {
  const auto& features = stage2.trace.surviving;
  if (features.empty()) throw Error("no features survived stage 2");
  const auto train = split.train.select_columns(features);
  const std::size_t k_max = config.k_max != 0 ? config.k_max : default_k_max(train.n_rows());
  Stage3Result result;
  result.features = features;
  result.selection = select_k(train, k_max, config.folds, config.fold_seed(), config.stratify_folds);
  result.k = result.selection.chosen_k;
  return result;
}

EvaluationOutcome run_evaluation(const SplitPair& split, const Stage3Result& stage3) {
  const auto train = split.train.select_columns(stage3.features);
  const auto test = split.test.select_columns(stage3.features);
  const auto model = fit_knn(train, stage3.k);

  EvaluationOutcome out;
  out.truth.assign(test.labels().begin(), test.labels().end());
  for (std::size_t r = 0; r < test.n_rows(); ++r) {
    out.scores.push_back(predict_proba(model, test.row(r)));
    out.predictions.push_back(predict(model, test.row(r)));
  }
  out.report = evaluate(out.truth, out.predictions, out.scores);
  if (test.has_both_classes()) out.roc = roc_points(out.truth, out.scores);
  return out;
}

CascadeReport run_cascade(const FeatureMatrix& data, const CascadeConfig& config) {
  CascadeReport report;
  report.config = config;
  report.input_features = data.names();
  report.split.n_rows = data.n_rows();

  std::string stage = "split";
  try {
    const SplitPair parts = cascade_split(data, config);
    report.split.train_rows = parts.train_rows;
    report.split.test_rows = parts.test_rows;
    stage = "stage 1";
    report.stage1 = run_stage1(data, parts, config);
    if (report.stage1->kept.empty()) throw Error("no features survived stage 1");
    stage = "stage 2";
    report.stage2 = run_stage2(data, parts, *report.stage1, config);
    stage = "stage 3";
    report.stage3 = run_stage3(parts, *report.stage2, config);
    stage = "evaluation";
    report.evaluation = run_evaluation(parts, *report.stage3);
  } catch (const std::exception& e) {
    throw CascadeError(stage + ": " + e.what(), std::move(report));
  }
  return report;
}

std::string render_summary(const CascadeReport& report) {
  std::ostringstream out;
  out << "rows: " << report.split.n_rows << " (train " << report.split.train_rows.size()
      << ", test " << report.split.test_rows.size() << ")\n";
  out << "features: " << report.input_features.size();
  if (report.stage1) out << " -> " << report.stage1->kept.size() << " after screening";
  if (report.stage2) out << " -> " << report.stage2->trace.surviving.size() << " after elimination";
  out << '\n';
  if (report.stage1) {
    out << "importance threshold: " << report.stage1->threshold
        << ", correlation floor: " << report.config.criteria.correlation_floor << '\n';
  }
  if (report.stage2) {
    out << "surviving:";
    for (const auto& name : report.stage2->trace.surviving) out << ' ' << name;
    out << '\n';
  }
  if (report.stage3) out << "chosen k: " << report.stage3->k << '\n';
  if (report.evaluation) out << '\n' << render_evaluation(report.evaluation->report);
  return out.str();
}

}  // namespace sli
