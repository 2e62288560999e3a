#include "sli/forest.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <stdexcept>
#include <string>
#include <thread>

#include "sli/error.hpp"
#include "sli/rng.hpp"

namespace sli {

std::size_t ForestParams::resolved_mtry(std::size_t n_features) const {
  if (mtry != 0) return mtry;
  const auto root = static_cast<std::size_t>(std::sqrt(static_cast<double>(n_features)));
  return std::max<std::size_t>(1, root);
}

void ForestParams::validate(std::size_t n_features) const {
  if (n_features == 0) throw std::invalid_argument("forest: no features");
  if (n_trees < 1) throw std::invalid_argument("forest: n_trees must be >= 1");
  if (min_leaf < 1) throw std::invalid_argument("forest: min_leaf must be >= 1");
  const auto m = resolved_mtry(n_features);
  if (m < 1 || m > n_features)
    throw std::invalid_argument("forest: mtry must lie in [1, " + std::to_string(n_features) +
                                "], got " + std::to_string(m));
}

Tree::Tree(std::vector<TreeNode> nodes) : nodes_(std::move(nodes)) {
  if (nodes_.empty()) throw std::invalid_argument("tree: no nodes");
  for (const auto& node : nodes_) {
    if (!node.is_leaf() && (node.left >= nodes_.size() || node.right >= nodes_.size()))
      throw std::invalid_argument("tree: child index out of range");
  }
}

const TreeNode& Tree::leaf_for(std::span<const double> x) const {
  const TreeNode* node = &nodes_.front();
  while (!node->is_leaf()) {
    const auto f = static_cast<std::size_t>(node->feature);
    node = &nodes_[x[f] <= node->threshold ? node->left : node->right];
  }
  return *node;
}

int Tree::predict(std::span<const double> x) const {
  const auto& leaf = leaf_for(x);
  return leaf.counts[1] > leaf.counts[0] ? 1 : 0;
}

std::size_t Tree::depth() const {
  std::vector<std::size_t> depth(nodes_.size(), 0);
  std::size_t deepest = 0;
  // Children are always stored after their parent.
  for (std::size_t i = 0; i < nodes_.size(); ++i) {
    const auto& node = nodes_[i];
    deepest = std::max(deepest, depth[i]);
    if (!node.is_leaf()) {
      depth[node.left] = depth[i] + 1;
      depth[node.right] = depth[i] + 1;
    }
  }
  return deepest;
}

double gini_impurity(std::span<const double> class_probs) {
  if (class_probs.empty()) throw std::invalid_argument("gini: empty probability vector");
  double sum = 0.0;
  double sq = 0.0;
  for (const double p : class_probs) {
    if (!(p >= 0.0)) throw std::invalid_argument("gini: negative or NaN probability");
    sum += p;
    sq += p * p;
  }
  if (std::abs(sum - 1.0) > 1e-9) throw std::invalid_argument("gini: probabilities must sum to 1");
  return 1.0 - sq;
}

namespace {

using Counts = std::array<std::uint64_t, 2>;
__extension__ typedef unsigned __int128 u128;

// p0 p1 of a node, weighted by the node's share of the parent.
double weighted_product(const Counts& c, double parent_n) {
  const double n = static_cast<double>(c[0] + c[1]);
  if (n == 0.0) return 0.0;
  return (n / parent_n) * (static_cast<double>(c[0]) / n) * (static_cast<double>(c[1]) / n);
}

double gain_from_counts(const Counts& left, const Counts& right) {
  const Counts parent{left[0] + right[0], left[1] + right[1]};
  const double n = static_cast<double>(parent[0] + parent[1]);
  return weighted_product(parent, n) - weighted_product(left, n) - weighted_product(right, n);
}

// N(A) * (Gini(A) - N(AL)/N(A) Gini(AL) - N(AR)/N(A) Gini(AR)), Gini = 2 p0 p1.
double weighted_gini_decrease(const Counts& left, const Counts& right) {
  const double n = static_cast<double>(left[0] + left[1] + right[0] + right[1]);
  return 2.0 * n * gain_from_counts(left, right);
}

// Children impurity c0L c1L / nL + c0R c1R / nR as an exact fraction. A split
// maximizes gain iff it minimizes this quantity (the parent term is shared).
struct ChildImpurity {
  u128 num;
  u128 den;

  static ChildImpurity of(const Counts& l, const Counts& r) {
    const u128 nl = l[0] + l[1];
    const u128 nr = r[0] + r[1];
    return {u128(l[0]) * l[1] * nr + u128(r[0]) * r[1] * nl, nl * nr};
  }
  // Three-way comparison of num/den values.
  int compare(const ChildImpurity& o) const {
    const u128 a = num * o.den;
    const u128 b = o.num * den;
    return a < b ? -1 : (a > b ? 1 : 0);
  }
};

double midpoint(double lo, double hi) {
  double mid = 0.5 * lo + 0.5 * hi;
  if (!(mid < hi)) mid = lo;  // adjacent doubles: keep hi on the right
  return mid;
}

struct ValueLabel {
  double value;
  int label;
};

struct Candidate {
  SplitChoice choice;
  ChildImpurity impurity;
};

bool better(const Candidate& a, const Candidate& b) {
  const int c = a.impurity.compare(b.impurity);
  if (c != 0) return c < 0;
  if (a.choice.feature != b.choice.feature) return a.choice.feature < b.choice.feature;
  return a.choice.threshold < b.choice.threshold;
}

// Best split on a single feature, or nullopt when the feature is constant
// over the node or no threshold leaves min_leaf rows on both sides.
std::optional<Candidate> best_split_on(const FeatureMatrix& data,
                                       std::span<const std::size_t> rows, std::size_t feature,
                                       std::size_t min_leaf, std::vector<ValueLabel>& scratch) {
  scratch.clear();
  Counts total{0, 0};
  for (const auto r : rows) {
    const int y = data.label(r);
    scratch.push_back({data.at(r, feature), y});
    ++total[static_cast<std::size_t>(y)];
  }
  std::sort(scratch.begin(), scratch.end(),
            [](const ValueLabel& a, const ValueLabel& b) { return a.value < b.value; });

  std::optional<Candidate> best;
  Counts left{0, 0};
  const std::size_t n = scratch.size();
  for (std::size_t i = 0; i + 1 < n; ++i) {
    ++left[static_cast<std::size_t>(scratch[i].label)];
    if (scratch[i].value == scratch[i + 1].value) continue;
    const std::size_t n_left = i + 1;
    if (n_left < min_leaf || n - n_left < min_leaf) continue;
    const Counts right{total[0] - left[0], total[1] - left[1]};
    Candidate cand{{feature, midpoint(scratch[i].value, scratch[i + 1].value),
                    gain_from_counts(left, right), left, right},
                   ChildImpurity::of(left, right)};
    // Thresholds are visited in increasing order, so only strict improvement counts.
    if (!best || cand.impurity.compare(best->impurity) < 0) best = cand;
  }
  return best;
}

}  // namespace

double split_gain(const FeatureMatrix& data, std::span<const std::size_t> node_rows,
                  std::size_t feature, double threshold) {
  if (feature >= data.n_cols()) throw std::invalid_argument("split_gain: feature out of range");
  Counts left{0, 0};
  Counts right{0, 0};
  for (const auto r : node_rows) {
    auto& side = data.at(r, feature) <= threshold ? left : right;
    ++side[static_cast<std::size_t>(data.label(r))];
  }
  if (left[0] + left[1] == 0 || right[0] + right[1] == 0)
    throw std::invalid_argument("split_gain: threshold leaves an empty child");
  return gain_from_counts(left, right);
}

std::optional<SplitChoice> best_split(const FeatureMatrix& data,
                                      std::span<const std::size_t> node_rows,
                                      std::span<const std::size_t> features,
                                      std::size_t min_leaf) {
  std::vector<ValueLabel> scratch;
  std::optional<Candidate> best;
  for (const auto f : features) {
    if (f >= data.n_cols()) throw std::invalid_argument("best_split: feature out of range");
    auto cand = best_split_on(data, node_rows, f, min_leaf, scratch);
    if (cand && (!best || better(*cand, *best))) best = cand;
  }
  if (!best) return std::nullopt;
  return best->choice;
}

Tree grow_tree(const FeatureMatrix& data, std::span<const std::size_t> rows,
               const ForestParams& params, std::uint64_t tree_seed,
               std::span<double> importance) {
  const std::size_t n_features = data.n_cols();
  const std::size_t mtry = params.resolved_mtry(n_features);
  Rng rng(tree_seed);

  struct Pending {
    std::size_t node;
    std::vector<std::size_t> rows;
    std::size_t depth;
  };

  std::vector<TreeNode> nodes;
  std::vector<Pending> stack;
  auto make_node = [&](std::span<const std::size_t> node_rows) {
    TreeNode node;
    for (const auto r : node_rows) ++node.counts[static_cast<std::size_t>(data.label(r))];
    nodes.push_back(node);
    return nodes.size() - 1;
  };

  stack.push_back({make_node(rows), {rows.begin(), rows.end()}, 0});
  std::vector<std::size_t> order(n_features);
  std::vector<ValueLabel> scratch;

  while (!stack.empty()) {
    Pending current = std::move(stack.back());
    stack.pop_back();
    const Counts counts = nodes[current.node].counts;
    const bool pure = counts[0] == 0 || counts[1] == 0;
    const bool depth_capped = params.max_depth != 0 && current.depth >= params.max_depth;
    if (pure || depth_capped || current.rows.size() < 2 * params.min_leaf) continue;

    std::iota(order.begin(), order.end(), 0);
    rng.shuffle(order);
    std::optional<Candidate> best;
    for (std::size_t i = 0; i < n_features; ++i) {
      if (i >= mtry && best) break;
      auto cand = best_split_on(data, current.rows, order[i], params.min_leaf, scratch);
      if (cand && (!best || better(*cand, *best))) best = cand;
    }
    if (!best) continue;

    const auto& choice = best->choice;
    importance[choice.feature] += weighted_gini_decrease(choice.left_counts, choice.right_counts);

    std::vector<std::size_t> left_rows;
    std::vector<std::size_t> right_rows;
    for (const auto r : current.rows) {
      (data.at(r, choice.feature) <= choice.threshold ? left_rows : right_rows).push_back(r);
    }
    current.rows.clear();
    current.rows.shrink_to_fit();

    const auto left = make_node(left_rows);
    const auto right = make_node(right_rows);
    auto& parent = nodes[current.node];
    parent.feature = static_cast<std::int32_t>(choice.feature);
    parent.threshold = choice.threshold;
    parent.left = static_cast<std::uint32_t>(left);
    parent.right = static_cast<std::uint32_t>(right);
    // Right pushed first so the left subtree is expanded first.
    stack.push_back({right, std::move(right_rows), current.depth + 1});
    stack.push_back({left, std::move(left_rows), current.depth + 1});
  }
  return Tree(std::move(nodes));
}

Forest fit_forest(const FeatureMatrix& data, const ForestParams& params) {
  params.validate(data.n_cols());
  data.require_both_classes("fit_forest");

  const std::size_t n = data.n_rows();
  const std::size_t m = params.n_trees;
  Forest forest;
  forest.params = params;
  forest.n_features = data.n_cols();
  forest.n_train_rows = n;
  forest.trees.resize(m);
  forest.inbag_counts.assign(m, std::vector<std::uint32_t>(n, 0));
  std::vector<std::vector<double>> per_tree_importance(m, std::vector<double>(data.n_cols(), 0.0));

  auto fit_one = [&](std::size_t t) {
    Rng rng(derive_seed(params.seed, static_cast<std::uint64_t>(t)));
    std::vector<std::size_t> rows(n);
    for (auto& r : rows) {
      r = static_cast<std::size_t>(rng.uniform_index(n));
      ++forest.inbag_counts[t][r];
    }
    std::sort(rows.begin(), rows.end());
    forest.trees[t] = grow_tree(data, rows, params, rng.next_u64(), per_tree_importance[t]);
  };

  const std::size_t workers = std::clamp<std::size_t>(params.threads, 1, m);
  if (workers == 1) {
    for (std::size_t t = 0; t < m; ++t) fit_one(t);
  } else {
    std::vector<std::jthread> pool;
    for (std::size_t w = 0; w < workers; ++w) {
      pool.emplace_back([&, w] {
        for (std::size_t t = w; t < m; t += workers) fit_one(t);
      });
    }
  }

  // Tree-order reduction keeps the floating-point sum independent of threads.
  forest.importance.assign(data.n_cols(), 0.0);
  for (const auto& imp : per_tree_importance)
    for (std::size_t v = 0; v < imp.size(); ++v) forest.importance[v] += imp[v];
  for (auto& v : forest.importance) v /= static_cast<double>(m);

  const auto curve = oob_curve(forest, data);
  if (!std::isnan(curve.back())) forest.oob_error = curve.back();
  return forest;
}

double vote_fraction(const Forest& model, std::span<const double> x) {
  if (x.size() != model.n_features)
    throw std::invalid_argument("predict_forest: expected " + std::to_string(model.n_features) +
                                " features, got " + std::to_string(x.size()));
  if (model.trees.empty()) throw std::invalid_argument("predict_forest: empty forest");
  std::size_t ones = 0;
  for (const auto& tree : model.trees) ones += static_cast<std::size_t>(tree.predict(x));
  return static_cast<double>(ones) / static_cast<double>(model.trees.size());
}

int predict_forest(const Forest& model, std::span<const double> x) {
  return vote_fraction(model, x) > 0.5 ? 1 : 0;
}

std::vector<double> oob_curve(const Forest& model, const FeatureMatrix& data) {
  const std::size_t n = data.n_rows();
  if (model.inbag_counts.size() != model.trees.size())
    throw Error("oob: forest carries no bootstrap bookkeeping");
  for (const auto& mask : model.inbag_counts)
    if (mask.size() != n) throw Error("oob: data rows do not match the training rows");

  std::vector<std::uint32_t> votes(n, 0);
  std::vector<std::uint32_t> seen(n, 0);
  std::vector<double> curve;
  curve.reserve(model.trees.size());
  std::size_t covered = 0;
  std::size_t wrong = 0;
  for (std::size_t t = 0; t < model.trees.size(); ++t) {
    for (std::size_t i = 0; i < n; ++i) {
      if (model.inbag_counts[t][i] != 0) continue;
      const bool was_wrong = seen[i] > 0 && ((2 * votes[i] > seen[i] ? 1 : 0) != data.label(i));
      if (seen[i] == 0) ++covered;
      ++seen[i];
      votes[i] += static_cast<std::uint32_t>(model.trees[t].predict(data.row(i)));
      const bool is_wrong = (2 * votes[i] > seen[i] ? 1 : 0) != data.label(i);
      if (was_wrong) --wrong;
      if (is_wrong) ++wrong;
    }
    curve.push_back(covered == 0 ? std::numeric_limits<double>::quiet_NaN()
                                 : static_cast<double>(wrong) / static_cast<double>(covered));
  }
  return curve;
}

double oob_error(const Forest& model, const FeatureMatrix& data) {
  if (model.trees.empty()) throw Error("oob: empty forest");
  const double err = oob_curve(model, data).back();
  if (std::isnan(err)) throw Error("oob: no row is out-of-bag for any tree");
  return err;
}

}  // namespace sli
