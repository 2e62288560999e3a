#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "sli/tabular.hpp"

namespace sli {

/// Per-feature z-score parameters (population standard deviation).
struct Standardizer {
  std::vector<double> mean;
  std::vector<double> scale;

  static Standardizer fit(const FeatureMatrix& data);
  std::vector<double> apply(std::span<const double> x) const;
};

/// k-NN classifier over z-scored features with squared Euclidean distance.
struct KnnModel {
  std::vector<std::string> feature_names;
  std::size_t k = 1;
  Standardizer standardizer;
  std::vector<double> train_vectors;  // standardized, row-major
  std::vector<int> train_labels;

  std::size_t n_rows() const { return train_labels.size(); }
  std::size_t n_features() const { return feature_names.size(); }
};

struct Neighbor {
  double distance;  // squared Euclidean in standardized space
  std::size_t row;
};

/// Stores the standardized training rows. Throws std::invalid_argument if
/// k is outside [1, N] and sli::Error naming any constant column.
KnnModel fit_knn(const FeatureMatrix& data, std::size_t k);

/// The k nearest training rows ordered by (distance, row index); rows tied at
/// the k-th distance are admitted lowest index first.
std::vector<Neighbor> nearest_neighbors(const KnnModel& model, std::span<const double> x);

/// Fraction of the k nearest neighbors labeled 1.
double predict_proba(const KnnModel& model, std::span<const double> x);

/// 1 iff predict_proba > 0.5. An exact 0.5 (even k) goes to the class whose
/// neighbors have the smaller summed squared distance, and to 1 if those
/// sums are equal.
int predict(const KnnModel& model, std::span<const double> x);

struct KScore {
  std::size_t k = 0;
  double mae = 0.0;
  double rmse = 0.0;
  double r2 = 0.0;
  double composite = 0.0;  // (mae + rmse + (1 - r2)) / 3
};

struct FoldEvaluation {
  std::size_t fold = 0;
  std::size_t k = 0;
  double mae = 0.0;
  double rmse = 0.0;
  double r2 = 0.0;
};

struct KSelectionReport {
  std::vector<KScore> scores;         // one per candidate k = 1..k_max
  std::vector<FoldEvaluation> folds;  // folds * k_max entries, fold-major
  std::size_t chosen_k = 0;
  std::size_t n_folds = 0;
  std::uint64_t fold_seed = 0;        // seed actually used for the partition
  bool stratified = false;
};

/// floor(sqrt(n_train)), at least 1.
std::size_t default_k_max(std::size_t n_train);

/// Assigns rows to `folds` near-equal folds after a seeded shuffle (per class
/// when `stratify`). Entry i is the fold of row i.
std::vector<std::size_t> assign_folds(const FeatureMatrix& data, std::size_t folds,
                                      std::uint64_t seed, bool stratify);

/// Cross-validated choice of k in 1..k_max. Each fold scores held-out
/// predict_proba values against the 0/1 labels with MAE, RMSE and R^2; the
/// chosen k minimizes the fold-averaged (MAE + RMSE + (1 - R^2)) / 3, ties to
/// the smallest k. If some fold (held-out or training side) lacks a class, the
/// partition is redrawn once with seed + 1 before failing.
KSelectionReport select_k(const FeatureMatrix& data, std::size_t k_max, std::size_t folds,
                          std::uint64_t seed, bool stratify = false);

}  // namespace sli
