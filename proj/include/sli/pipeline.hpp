#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "sli/error.hpp"
#include "sli/forest.hpp"
#include "sli/logit.hpp"
#include "sli/metrics.hpp"
#include "sli/neighbors.hpp"
#include "sli/tabular.hpp"

namespace sli {

/// Stage-1 screening thresholds. A feature is kept iff
/// importance > threshold and |spearman(feature, label)| > correlation_floor.
struct StageOneCriteria {
  enum class Mode {
    Fixed,     // threshold = importance_threshold
    MedianQ3,  // threshold = (median + Q3) / 2 of the observed importances
  };
  Mode mode = Mode::Fixed;
  double importance_threshold = 6.0;
  double correlation_floor = 0.1;

  void validate() const;
  double resolve_threshold(std::span<const double> importance) const;
};

struct FeatureDiagnostic {
  std::string name;
  double importance = 0.0;
  std::optional<double> spearman;  // nullopt for a column constant on the screening rows
  bool kept = false;
};

struct Stage1Result {
  std::vector<FeatureDiagnostic> features;
  std::vector<std::string> kept;
  double threshold = 0.0;
  std::optional<double> oob_error;
  std::vector<double> oob_curve;  // OOB error after 1..M trees
};

/// Applies the stage-1 rule to precomputed statistics. Returns the resolved
/// threshold; `kept[v]` is set per feature.
double apply_stage1_rule(std::span<const double> importance,
                         std::span<const std::optional<double>> correlation,
                         const StageOneCriteria& criteria, std::vector<bool>& kept);

/// Random-forest importance plus Spearman screening over every column.
Stage1Result stage1_screen(const FeatureMatrix& data, const ForestParams& params,
                           const StageOneCriteria& criteria);

struct Stage2Result {
  std::vector<std::string> input_features;
  EliminationTrace trace;
  std::vector<Coefficient> wald;  // final model, intercept first
};

struct Stage3Result {
  std::vector<std::string> features;
  KSelectionReport selection;
  std::size_t k = 0;
};

struct EvaluationOutcome {
  EvaluationReport report;
  std::vector<int> truth;
  std::vector<int> predictions;
  std::vector<double> scores;  // k-NN class-1 probability per test row
  std::vector<RocPoint> roc;
};

struct CascadeConfig {
  std::uint64_t seed = 0;
  double train_fraction = 0.7;
  bool stratify_split = false;
  ForestParams forest;  // forest.seed is ignored; derived from `seed`
  StageOneCriteria criteria;
  double alpha = 0.05;
  std::size_t max_elimination_rounds = 0;  // 0 is unlimited
  std::size_t k_max = 0;                   // 0 selects floor(sqrt(N_train))
  std::size_t folds = 5;
  bool stratify_folds = false;
  bool select_on_all = false;  // run stages 1-2 on every row instead of the training split

  void validate() const;
  std::uint64_t split_seed() const;
  std::uint64_t forest_seed() const;
  std::uint64_t fold_seed() const;
};

struct SplitSummary {
  std::size_t n_rows = 0;
  std::vector<std::size_t> train_rows;
  std::vector<std::size_t> test_rows;
};

struct CascadeReport {
  CascadeConfig config;
  std::vector<std::string> input_features;
  SplitSummary split;
  std::optional<Stage1Result> stage1;
  std::optional<Stage2Result> stage2;
  std::optional<Stage3Result> stage3;
  std::optional<EvaluationOutcome> evaluation;
};

/// A stage failure; carries the report filled in up to the failing stage.
class CascadeError : public Error {
 public:
  CascadeError(const std::string& what, CascadeReport partial)
      : Error(what), partial_(std::move(partial)) {}
  const CascadeReport& partial() const { return partial_; }

 private:
  CascadeReport partial_;
};

// Individual stages. Each takes the full matrix plus the deterministic split,
// so the CLI can run them in separate processes.
SplitPair cascade_split(const FeatureMatrix& data, const CascadeConfig& config);
Stage1Result run_stage1(const FeatureMatrix& data, const SplitPair& split,
                        const CascadeConfig& config);
Stage2Result run_stage2(const FeatureMatrix& data, const SplitPair& split,
                        const Stage1Result& stage1, const CascadeConfig& config);
Stage3Result run_stage3(const SplitPair& split, const Stage2Result& stage2,
                        const CascadeConfig& config);
EvaluationOutcome run_evaluation(const SplitPair& split, const Stage3Result& stage3);

/// Split, screen, eliminate, select k, evaluate on the held-out rows.
/// Throws CascadeError with the partial report when any stage fails.
CascadeReport run_cascade(const FeatureMatrix& data, const CascadeConfig& config);

/// Short narrative of the feature counts through the stages and the final metrics.
std::string render_summary(const CascadeReport& report);

}  // namespace sli
