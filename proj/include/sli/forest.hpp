#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <vector>

#include "sli/tabular.hpp"

namespace sli {

struct ForestParams {
  std::size_t n_trees = 500;
  std::size_t mtry = 0;       // 0 selects floor(sqrt(V))
  std::size_t min_leaf = 1;
  std::size_t max_depth = 0;  // 0 is unlimited
  std::uint64_t seed = 0;
  std::size_t threads = 1;    // output does not depend on this

  /// mtry with the default resolved against V.
  std::size_t resolved_mtry(std::size_t n_features) const;
  void validate(std::size_t n_features) const;
};

/// Tree node in a flat array. Internal nodes send x[feature] <= threshold to
/// `left` and everything else to `right`. `counts` holds the weighted
/// (bootstrap multiplicity) class-0 / class-1 counts reaching the node.
struct TreeNode {
  static constexpr std::int32_t kLeaf = -1;

  std::int32_t feature = kLeaf;
  double threshold = 0.0;
  std::uint32_t left = 0;
  std::uint32_t right = 0;
  std::array<std::uint64_t, 2> counts{0, 0};

  bool is_leaf() const { return feature == kLeaf; }
  std::uint64_t total() const { return counts[0] + counts[1]; }
};

class Tree {
 public:
  Tree() = default;
  explicit Tree(std::vector<TreeNode> nodes);

  /// Majority class of the reached leaf; a tied leaf predicts 0.
  int predict(std::span<const double> x) const;
  const TreeNode& leaf_for(std::span<const double> x) const;

  const std::vector<TreeNode>& nodes() const { return nodes_; }
  std::size_t depth() const;

 private:
  std::vector<TreeNode> nodes_;
};

struct Forest {
  std::vector<Tree> trees;
  /// inbag_counts[t][i]: how many times row i was drawn for tree t. Zero means
  /// out-of-bag. Empty when the forest was loaded without bootstrap bookkeeping.
  std::vector<std::vector<std::uint32_t>> inbag_counts;
  /// Mean decrease in Gini per feature, averaged over trees.
  std::vector<double> importance;
  std::optional<double> oob_error;
  ForestParams params;
  std::size_t n_features = 0;
  std::size_t n_train_rows = 0;
};

/// 1 - sum p_i^2. Throws on negative entries or a sum away from 1 by > 1e-9.
double gini_impurity(std::span<const double> class_probs);

/// Impurity reduction p0 p1 (A) - N(AL)/N(A) p0 p1 (AL) - N(AR)/N(A) p0 p1 (AR)
/// for the split x[feature] <= threshold of the rows in `node_rows` (repeated
/// indices count with multiplicity). Throws if either child is empty.
double split_gain(const FeatureMatrix& data, std::span<const std::size_t> node_rows,
                  std::size_t feature, double threshold);

struct SplitChoice {
  std::size_t feature = 0;
  double threshold = 0.0;
  double gain = 0.0;  // split_gain of the choice
  std::array<std::uint64_t, 2> left_counts{0, 0};
  std::array<std::uint64_t, 2> right_counts{0, 0};
};

/// Exhaustive search over `features` and all midpoints between consecutive
/// distinct values, maximizing split_gain. Gains are compared exactly (integer
/// rational arithmetic); ties go to the lowest feature index, then the lowest
/// threshold. Both children must hold at least `min_leaf` rows.
/// Returns nullopt when no feature admits a valid split.
std::optional<SplitChoice> best_split(const FeatureMatrix& data,
                                      std::span<const std::size_t> node_rows,
                                      std::span<const std::size_t> features,
                                      std::size_t min_leaf = 1);

/// Grows one CART tree on the given (bootstrap) rows. Nodes split while impure
/// and feasible; at each node a random `mtry` subset of features is searched,
/// extended feature by feature (in the same random order) only if none of the
/// sampled features can split. `importance` accumulates, per feature,
/// N(A) Gini(A) - N(AL) Gini(AL) - N(AR) Gini(AR) for every split.
Tree grow_tree(const FeatureMatrix& data, std::span<const std::size_t> rows,
               const ForestParams& params, std::uint64_t tree_seed,
               std::span<double> importance);

/// Bagged forest. Tree t uses derive_seed(params.seed, t) for its bootstrap
/// draw and feature sampling, so results do not depend on params.threads.
Forest fit_forest(const FeatureMatrix& data, const ForestParams& params);

/// Mean tree vote for class 1.
double vote_fraction(const Forest& model, std::span<const double> x);

/// 1 iff strictly more than half of the trees vote 1.
int predict_forest(const Forest& model, std::span<const double> x);

/// Misclassification rate of the out-of-bag majority vote, over rows that are
/// out-of-bag for at least one tree. `data` must be the training matrix.
double oob_error(const Forest& model, const FeatureMatrix& data);

/// OOB error using only the first m trees, for m = 1..M. NaN where no row is
/// out-of-bag yet.
std::vector<double> oob_curve(const Forest& model, const FeatureMatrix& data);

}  // namespace sli
