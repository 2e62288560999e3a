#include "sli/neighbors.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>

#include "sli/error.hpp"
#include "sli/metrics.hpp"
#include "sli/rng.hpp"

namespace sli {

Standardizer Standardizer::fit(const FeatureMatrix& data) {
  Standardizer s;
  const double n = static_cast<double>(data.n_rows());
  for (std::size_t c = 0; c < data.n_cols(); ++c) {
    double mean = 0.0;
    for (std::size_t r = 0; r < data.n_rows(); ++r) mean += data.at(r, c);
    mean /= n;
    double ss = 0.0;
    for (std::size_t r = 0; r < data.n_rows(); ++r) {
      const double d = data.at(r, c) - mean;
      ss += d * d;
    }
    const double sd = std::sqrt(ss / n);
    if (!(sd > 0.0)) throw Error("constant column \"" + data.names()[c] + "\" cannot be standardized");
    s.mean.push_back(mean);
    s.scale.push_back(sd);
  }
  return s;
}

std::vector<double> Standardizer::apply(std::span<const double> x) const {
  if (x.size() != mean.size())
    throw std::invalid_argument("expected " + std::to_string(mean.size()) + " features, got " +
                                std::to_string(x.size()));
  std::vector<double> z(x.size());
  for (std::size_t j = 0; j < x.size(); ++j) {
    if (!std::isfinite(x[j])) throw std::invalid_argument("non-finite feature value");
    z[j] = (x[j] - mean[j]) / scale[j];
  }
  return z;
}

KnnModel fit_knn(const FeatureMatrix& data, std::size_t k) {
  if (k < 1 || k > data.n_rows())
    throw std::invalid_argument("k must lie in [1, " + std::to_string(data.n_rows()) + "], got " +
                                std::to_string(k));
  KnnModel model;
  model.feature_names = data.names();
  model.k = k;
  model.standardizer = Standardizer::fit(data);
  model.train_vectors.reserve(data.n_rows() * data.n_cols());
  for (std::size_t r = 0; r < data.n_rows(); ++r) {
    const auto z = model.standardizer.apply(data.row(r));
    model.train_vectors.insert(model.train_vectors.end(), z.begin(), z.end());
  }
  model.train_labels.assign(data.labels().begin(), data.labels().end());
  return model;
}

namespace {

bool closer(const Neighbor& a, const Neighbor& b) {
  return a.distance < b.distance || (a.distance == b.distance && a.row < b.row);
}

// Squared distances from the standardized query to every training row.
std::vector<Neighbor> all_distances(const KnnModel& model, std::span<const double> x) {
  const auto z = model.standardizer.apply(x);
  const std::size_t v = model.n_features();
  std::vector<Neighbor> out(model.n_rows());
  for (std::size_t r = 0; r < model.n_rows(); ++r) {
    const double* row = model.train_vectors.data() + r * v;
    double d = 0.0;
    for (std::size_t j = 0; j < v; ++j) {
      const double diff = z[j] - row[j];
      d += diff * diff;
    }
    out[r] = {d, r};
  }
  return out;
}

int vote(const KnnModel& model, std::span<const Neighbor> neighbors) {
  std::size_t ones = 0;
  double sum0 = 0.0;
  double sum1 = 0.0;
  for (const auto& nb : neighbors) {
    if (model.train_labels[nb.row] == kPositiveLabel) {
      ++ones;
      sum1 += nb.distance;
    } else {
      sum0 += nb.distance;
    }
  }
  const std::size_t zeros = neighbors.size() - ones;
  if (ones != zeros) return ones > zeros ? 1 : 0;
  return sum0 < sum1 ? 0 : 1;
}

}  // namespace

std::vector<Neighbor> nearest_neighbors(const KnnModel& model, std::span<const double> x) {
  auto all = all_distances(model, x);
  const auto k = static_cast<std::ptrdiff_t>(model.k);
  std::partial_sort(all.begin(), all.begin() + k, all.end(), closer);
  all.resize(model.k);
  return all;
}

double predict_proba(const KnnModel& model, std::span<const double> x) {
  const auto nbrs = nearest_neighbors(model, x);
  std::size_t ones = 0;
  for (const auto& nb : nbrs) ones += model.train_labels[nb.row] == kPositiveLabel ? 1 : 0;
  return static_cast<double>(ones) / static_cast<double>(nbrs.size());
}

int predict(const KnnModel& model, std::span<const double> x) {
  return vote(model, nearest_neighbors(model, x));
}

std::size_t default_k_max(std::size_t n_train) {
  auto k = static_cast<std::size_t>(std::sqrt(static_cast<double>(n_train)));
  while (k * k > n_train) --k;
  while ((k + 1) * (k + 1) <= n_train) ++k;
  return std::max<std::size_t>(1, k);
}

std::vector<std::size_t> assign_folds(const FeatureMatrix& data, std::size_t folds,
                                      std::uint64_t seed, bool stratify) {
  if (folds < 2) throw std::invalid_argument("folds must be >= 2");
  if (folds > data.n_rows()) throw std::invalid_argument("more folds than rows");
  Rng rng(seed);
  std::vector<std::size_t> fold_of(data.n_rows());
  std::size_t position = 0;
  auto deal = [&](std::vector<std::size_t> rows) {
    rng.shuffle(rows);
    for (const auto r : rows) fold_of[r] = position++ % folds;
  };
  if (!stratify) {
    std::vector<std::size_t> rows(data.n_rows());
    std::iota(rows.begin(), rows.end(), 0);
    deal(std::move(rows));
  } else {
    for (const int cls : {kNegativeLabel, kPositiveLabel}) {
      std::vector<std::size_t> rows;
      for (std::size_t r = 0; r < data.n_rows(); ++r)
        if (data.label(r) == cls) rows.push_back(r);
      deal(std::move(rows));
    }
  }
  return fold_of;
}

namespace {

bool folds_usable(const FeatureMatrix& data, std::span<const std::size_t> fold_of,
                  std::size_t folds) {
  for (std::size_t f = 0; f < folds; ++f) {
    std::size_t held[2] = {0, 0};
    std::size_t kept[2] = {0, 0};
    for (std::size_t r = 0; r < data.n_rows(); ++r)
      ++(fold_of[r] == f ? held : kept)[data.label(r)];
    if (held[0] == 0 || held[1] == 0 || kept[0] == 0 || kept[1] == 0) return false;
  }
  return true;
}

}  // namespace

KSelectionReport select_k(const FeatureMatrix& data, std::size_t k_max, std::size_t folds,
                          std::uint64_t seed, bool stratify) {
  if (k_max < 1) throw std::invalid_argument("k_max must be >= 1");
  data.require_both_classes("select_k");

  std::uint64_t used_seed = seed;
  auto fold_of = assign_folds(data, folds, used_seed, stratify);
  if (!folds_usable(data, fold_of, folds)) {
    used_seed = seed + 1;
    fold_of = assign_folds(data, folds, used_seed, stratify);
    if (!folds_usable(data, fold_of, folds))
      throw Error("select_k: a fold lacks one class even after redrawing the partition");
  }

  KSelectionReport report;
  report.n_folds = folds;
  report.fold_seed = used_seed;
  report.stratified = stratify;
  report.scores.resize(k_max);
  for (std::size_t k = 1; k <= k_max; ++k) report.scores[k - 1].k = k;

  for (std::size_t f = 0; f < folds; ++f) {
    std::vector<std::size_t> train_rows;
    std::vector<std::size_t> held_rows;
    for (std::size_t r = 0; r < data.n_rows(); ++r)
      (fold_of[r] == f ? held_rows : train_rows).push_back(r);
    if (k_max > train_rows.size())
      throw std::invalid_argument("k_max " + std::to_string(k_max) + " exceeds fold training size " +
                                  std::to_string(train_rows.size()));

    const auto train = data.select_rows(train_rows);
    const auto held = data.select_rows(held_rows);
    const auto model = fit_knn(train, 1);

    // One distance sort per query serves every k: the first k entries in
    // (distance, row) order are exactly the k-NN set.
    std::vector<std::vector<double>> proba(k_max, std::vector<double>(held.n_rows()));
    for (std::size_t q = 0; q < held.n_rows(); ++q) {
      auto nbrs = all_distances(model, held.row(q));
      std::partial_sort(nbrs.begin(), nbrs.begin() + static_cast<std::ptrdiff_t>(k_max), nbrs.end(),
                        closer);
      std::size_t ones = 0;
      for (std::size_t k = 1; k <= k_max; ++k) {
        ones += model.train_labels[nbrs[k - 1].row] == kPositiveLabel ? 1 : 0;
        proba[k - 1][q] = static_cast<double>(ones) / static_cast<double>(k);
      }
    }

    const auto truth = held.label_values();
    for (std::size_t k = 1; k <= k_max; ++k) {
      const auto m = regression_metrics(truth, proba[k - 1]);
      const double r2 = m.r2.value();  // held-out labels contain both classes
      report.folds.push_back({f, k, m.mae, m.rmse, r2});
      auto& s = report.scores[k - 1];
      s.mae += m.mae / static_cast<double>(folds);
      s.rmse += m.rmse / static_cast<double>(folds);
      s.r2 += r2 / static_cast<double>(folds);
    }
  }

  std::size_t best = 0;
  for (std::size_t i = 0; i < report.scores.size(); ++i) {
    auto& s = report.scores[i];
    s.composite = (s.mae + s.rmse + (1.0 - s.r2)) / 3.0;
    if (s.composite < report.scores[best].composite) best = i;
  }
  report.chosen_k = report.scores[best].k;
  return report;
}

}  // namespace sli
