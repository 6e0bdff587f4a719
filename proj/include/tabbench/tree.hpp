#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <optional>
#include <vector>

#include "tabbench/common.hpp"
#include "tabbench/rng.hpp"
#include "tabbench/tensor.hpp"

namespace tabbench {

// Second-order split statistics in the XGBoost form. A plain variance-
// reduction regression tree is the special case g = y, h = 1 with all
// regularizers zero: the gain becomes half the SSE reduction, a positive
// monotone transform, so the same search serves both tree flavors and their
// arithmetic stays bit-identical (scalings by powers of two are exact).
struct SplitSpec {
  double reg_lambda = 0.0;
  double reg_alpha = 0.0;
  double gamma = 0.0;
  double min_child_weight = 0.0;
  int min_samples_leaf = 1;
};

namespace tree_detail {

inline double soft_threshold(double g, double alpha) {
  if (g > alpha) return g - alpha;
  if (g < -alpha) return g + alpha;
  return 0.0;
}

inline double leaf_score(double G, double H, const SplitSpec& s) {
  double t = soft_threshold(G, s.reg_alpha);
  return t * t / (H + s.reg_lambda);
}

inline double leaf_weight(double G, double H, const SplitSpec& s) {
  return -soft_threshold(G, s.reg_alpha) / (H + s.reg_lambda);
}

struct BestSplit {
  int feature = -1;
  double threshold = 0.0;
  double gain = 0.0;
  std::vector<int> left, right;  // in parent-list order
};

// Exhaustive scan over candidate features; thresholds are midpoints between
// consecutive distinct sorted values. Ties keep the first candidate found, so
// iterating features ascending and thresholds ascending yields the
// (lowest feature, lowest threshold) tie-break.
inline std::optional<BestSplit> find_best_split(const Mat& X, const std::vector<int>& idx,
                                                const std::vector<int>& features,
                                                const std::vector<double>& g,
                                                const std::vector<double>& h,
                                                const SplitSpec& spec) {
  const int n = static_cast<int>(idx.size());
  if (n < 2) return std::nullopt;

  double G = 0.0, H = 0.0;
  for (int i : idx) {
    G += g[i];
    H += h[i];
  }
  const double parent_score = leaf_score(G, H, spec);

  struct Entry {
    double v;
    int pos;  // position in the parent list
  };
  std::vector<Entry> order(n);

  int best_feature = -1;
  int best_split_pos = -1;  // count of sorted entries going left
  double best_threshold = 0.0;
  double best_gain = 0.0;
  bool found = false;

  for (int f : features) {
    for (int i = 0; i < n; ++i) order[i] = {X(idx[i], f), i};
    std::stable_sort(order.begin(), order.end(),
                     [](const Entry& a, const Entry& b) { return a.v < b.v; });

    // Suffix sums so the right-side statistics are true sums, not
    // differences (keeps the brute-force oracle bit-comparable).
    std::vector<double> gsuf(n + 1, 0.0), hsuf(n + 1, 0.0);
    for (int i = n - 1; i >= 0; --i) {
      gsuf[i] = gsuf[i + 1] + g[idx[order[i].pos]];
      hsuf[i] = hsuf[i + 1] + h[idx[order[i].pos]];
    }

    double gl = 0.0, hl = 0.0;
    for (int i = 0; i < n - 1; ++i) {
      gl += g[idx[order[i].pos]];
      hl += h[idx[order[i].pos]];
      if (order[i].v == order[i + 1].v) continue;  // not a boundary
      int nl = i + 1, nr = n - nl;
      if (nl < spec.min_samples_leaf || nr < spec.min_samples_leaf) continue;
      if (hl < spec.min_child_weight || hsuf[nl] < spec.min_child_weight) continue;
      double gain =
          0.5 * (leaf_score(gl, hl, spec) + leaf_score(gsuf[nl], hsuf[nl], spec) - parent_score) -
          spec.gamma;
      if (gain <= 0.0) continue;
      if (!found || gain > best_gain) {
        found = true;
        best_gain = gain;
        best_feature = f;
        best_split_pos = nl;
        best_threshold = order[i].v + 0.5 * (order[i + 1].v - order[i].v);
      }
    }
  }
  if (!found) return std::nullopt;

  // Rebuild the winning partition positionally (by sort order, not by
  // comparing against the threshold, which can misplace a sample when the
  // midpoint rounds onto a boundary value). Children preserve parent order.
  for (int i = 0; i < n; ++i) order[i] = {X(idx[i], best_feature), i};
  std::stable_sort(order.begin(), order.end(),
                   [](const Entry& a, const Entry& b) { return a.v < b.v; });
  std::vector<char> goes_left(n, 0);
  for (int i = 0; i < best_split_pos; ++i) goes_left[order[i].pos] = 1;

  BestSplit out;
  out.feature = best_feature;
  out.threshold = best_threshold;
  out.gain = best_gain;
  for (int i = 0; i < n; ++i) (goes_left[i] ? out.left : out.right).push_back(idx[i]);
  return out;
}

}  // namespace tree_detail

struct TreeConstraints {
  int max_depth = 30;
  int min_samples_split = 2;
  int min_samples_leaf = 1;
  double max_features = 1.0;  // fraction of features considered per split
};

struct TreeNode {
  int feature = -1;  // -1: leaf
  double threshold = 0.0;
  int left = -1, right = -1;
  double value = 0.0;
};

struct DecisionTree {
  std::vector<TreeNode> nodes;

  double predict_row(const Mat& X, Eigen::Index row) const {
    int cur = 0;
    while (nodes[cur].feature >= 0)
      cur = X(row, nodes[cur].feature) < nodes[cur].threshold ? nodes[cur].left : nodes[cur].right;
    return nodes[cur].value;
  }

  std::vector<double> predict(const Mat& X) const {
    std::vector<double> out(static_cast<size_t>(X.rows()));
    for (Eigen::Index i = 0; i < X.rows(); ++i) out[static_cast<size_t>(i)] = predict_row(X, i);
    return out;
  }
};

namespace tree_detail {

inline std::vector<int> feature_candidates(int d, double max_features, Rng* rng) {
  int m = std::max(1, static_cast<int>(std::ceil(max_features * d)));
  m = std::min(m, d);
  if (m == d || rng == nullptr) {
    std::vector<int> all(d);
    for (int i = 0; i < d; ++i) all[i] = i;
    return all;
  }
  std::vector<int> pick = rng->sample_without_replacement(d, m);
  std::sort(pick.begin(), pick.end());
  return pick;
}

inline int grow_variance_tree(DecisionTree& tree, const Mat& X, const std::vector<double>& y,
                              const std::vector<int>& idx, int depth,
                              const TreeConstraints& c, Rng* rng) {
  double sum = 0.0;
  for (int i : idx) sum += y[i];
  const double mean = sum / static_cast<double>(idx.size());

  auto make_leaf = [&]() {
    tree.nodes.push_back(TreeNode{-1, 0.0, -1, -1, mean});
    return static_cast<int>(tree.nodes.size() - 1);
  };

  if (depth >= c.max_depth || static_cast<int>(idx.size()) < c.min_samples_split) return make_leaf();

  std::vector<int> feats = feature_candidates(static_cast<int>(X.cols()), c.max_features, rng);
  SplitSpec spec;
  spec.min_samples_leaf = c.min_samples_leaf;
  // g = y, h = 1 turns the second-order gain into half the SSE reduction.
  std::vector<double> ones(y.size(), 1.0);
  auto split = find_best_split(X, idx, feats, y, ones, spec);
  if (!split) return make_leaf();

  int self = static_cast<int>(tree.nodes.size());
  tree.nodes.push_back(TreeNode{split->feature, split->threshold, -1, -1, mean});
  int l = grow_variance_tree(tree, X, y, split->left, depth + 1, c, rng);
  int r = grow_variance_tree(tree, X, y, split->right, depth + 1, c, rng);
  tree.nodes[self].left = l;
  tree.nodes[self].right = r;
  return self;
}

}  // namespace tree_detail

// Greedy variance-reduction regression tree. `rng` drives per-split feature
// subsampling; pass nullptr to consider every feature.
inline DecisionTree fit_tree(const Mat& X, const std::vector<double>& y,
                             const TreeConstraints& c = {}, Rng* rng = nullptr) {
  require(X.rows() >= 1, ErrorKind::EmptyDataset, "tree fit on empty data");
  require(static_cast<size_t>(X.rows()) == y.size(), ErrorKind::DimensionMismatch,
          "tree fit target length");
  std::vector<int> idx(static_cast<size_t>(X.rows()));
  for (size_t i = 0; i < idx.size(); ++i) idx[i] = static_cast<int>(i);
  DecisionTree tree;
  tree_detail::grow_variance_tree(tree, X, y, idx, 0, c, rng);
  return tree;
}

}  // namespace tabbench
