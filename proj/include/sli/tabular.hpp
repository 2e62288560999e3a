#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace sli {

/// Label coding: 0 = TD (typical development), 1 = SLI (positive class).
inline constexpr int kNegativeLabel = 0;
inline constexpr int kPositiveLabel = 1;

/// N x V matrix of finite observations with binary labels and unique column
/// names. Immutable once constructed; every constructor validates.
class FeatureMatrix {
 public:
  /// `values` is row-major with rows.size() == labels.size().
  FeatureMatrix(std::vector<std::string> names, std::vector<double> values,
                std::vector<int> labels);

  std::size_t n_rows() const { return labels_.size(); }
  std::size_t n_cols() const { return names_.size(); }

  double at(std::size_t row, std::size_t col) const { return values_[row * n_cols() + col]; }
  std::span<const double> row(std::size_t r) const {
    return {values_.data() + r * n_cols(), n_cols()};
  }
  std::vector<double> column(std::size_t c) const;
  /// Labels as 0.0 / 1.0, for rank and regression statistics.
  std::vector<double> label_values() const;

  std::span<const int> labels() const { return labels_; }
  int label(std::size_t r) const { return labels_[r]; }
  const std::vector<std::string>& names() const { return names_; }
  std::span<const double> values() const { return values_; }

  /// Index of a named column; throws sli::Error if absent.
  std::size_t column_index(std::string_view name) const;

  std::size_t count_positive() const;
  bool has_both_classes() const;
  /// Throws sli::Error naming `context` when one class is missing.
  void require_both_classes(std::string_view context) const;

  FeatureMatrix select_rows(std::span<const std::size_t> rows) const;
  FeatureMatrix select_columns(std::span<const std::size_t> cols) const;
  FeatureMatrix select_columns(std::span<const std::string> names) const;

 private:
  std::vector<std::string> names_;
  std::vector<double> values_;
  std::vector<int> labels_;
};

/// Train/test partition. `train_rows` and `test_rows` index the source matrix.
struct SplitPair {
  FeatureMatrix train;
  FeatureMatrix test;
  std::vector<std::size_t> train_rows;
  std::vector<std::size_t> test_rows;
  std::uint64_t seed;
  double train_fraction;
};

/// Reads a header-first CSV. The label column is removed from the values and
/// must hold 0 or 1; every other cell must parse as a finite decimal.
FeatureMatrix load_csv(const std::filesystem::path& path, std::string_view label_column);

/// Writes the matrix with the label as the last column. Values are printed
/// with 17 significant digits so load_csv recovers them exactly.
void write_csv(const FeatureMatrix& data, const std::filesystem::path& path,
               std::string_view label_column = "group");

/// Seeded shuffle, then the first floor(fraction * N) rows go to train.
/// With `stratify`, each class is shuffled and cut separately (train gets
/// floor(fraction * class size) of each class), so train.N may differ from
/// floor(fraction * N) by at most one.
SplitPair split(const FeatureMatrix& data, double train_fraction, std::uint64_t seed,
                bool stratify = false);

/// Mean shift (in standard deviations) between the class-conditional
/// Gaussians of synth_dataset's informative columns.
inline constexpr double kDefaultSynthShift = 1.5;

/// Synthetic binary data: labels ~ Bernoulli(0.5); informative columns
/// `inf_1..` are N(shift * label, 1); noise columns `noise_1..` are N(0, 1).
FeatureMatrix synth_dataset(std::size_t n, std::size_t informative, std::size_t noise,
                            std::uint64_t seed, double shift = kDefaultSynthShift);

}  // namespace sli
