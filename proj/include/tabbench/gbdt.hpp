#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <vector>

#include "tabbench/common.hpp"
#include "tabbench/metrics.hpp"
#include "tabbench/rng.hpp"
#include "tabbench/tensor.hpp"
#include "tabbench/tree.hpp"

namespace tabbench {

struct GbdtSpec {
  double learning_rate = 0.1;
  int max_depth = 6;
  double min_child_weight = 1.0;
  double subsample = 1.0;
  double colsample_bytree = 1.0;
  double gamma = 0.0;
  double reg_alpha = 0.0;
  double reg_lambda = 1.0;
  int max_rounds = 1000;
  int early_stopping_rounds = 40;
};

// Gradient-boosted trees with the squared-error second-order objective:
// g = 2(pred - y), h = 2, leaf weight -soft_threshold(G, alpha)/(H + lambda),
// split gain thresholded by gamma. Rounds stop after `early_stopping_rounds`
// without validation-RMSE improvement; the model keeps the best round count.
struct GbdtModel {
  double base = 0.0;
  double learning_rate = 0.1;
  std::vector<DecisionTree> trees;  // already truncated to the best round
  int best_rounds = 0;

  double predict_row(const Mat& X, Eigen::Index row) const {
    double p = base;
    for (const DecisionTree& t : trees) p += learning_rate * t.predict_row(X, row);
    return p;
  }

  std::vector<double> predict(const Mat& X) const {
    std::vector<double> out(static_cast<size_t>(X.rows()));
    for (Eigen::Index i = 0; i < X.rows(); ++i) out[static_cast<size_t>(i)] = predict_row(X, i);
    return out;
  }
};

namespace gbdt_detail {

inline int grow_boost_tree(DecisionTree& tree, const Mat& X, const std::vector<double>& g,
                           const std::vector<double>& h, const std::vector<int>& idx,
                           const std::vector<int>& features, int depth, int max_depth,
                           const SplitSpec& spec) {
  double G = 0.0, H = 0.0;
  for (int i : idx) {
    G += g[i];
    H += h[i];
  }
  auto make_leaf = [&]() {
    tree.nodes.push_back(TreeNode{-1, 0.0, -1, -1, tree_detail::leaf_weight(G, H, spec)});
    return static_cast<int>(tree.nodes.size() - 1);
  };
  if (depth >= max_depth) return make_leaf();
  auto split = tree_detail::find_best_split(X, idx, features, g, h, spec);
  if (!split) return make_leaf();

  int self = static_cast<int>(tree.nodes.size());
  tree.nodes.push_back(TreeNode{split->feature, split->threshold, -1, -1, 0.0});
  int l = grow_boost_tree(tree, X, g, h, split->left, features, depth + 1, max_depth, spec);
  int r = grow_boost_tree(tree, X, g, h, split->right, features, depth + 1, max_depth, spec);
  tree.nodes[self].left = l;
  tree.nodes[self].right = r;
  return self;
}

}  // namespace gbdt_detail

// X_val/y_val drive early stopping and must be disjoint from the training
// rows; pass the training set itself only in tests.
inline GbdtModel fit_gbdt(const Mat& X, const std::vector<double>& y, const GbdtSpec& spec,
                          const Mat& X_val, const std::vector<double>& y_val, uint64_t seed) {
  const int n = static_cast<int>(X.rows());
  const int d = static_cast<int>(X.cols());
  require(n >= 1, ErrorKind::EmptyDataset, "gbdt fit on empty data");
  require(!y_val.empty(), ErrorKind::EmptyDataset, "gbdt needs a validation set for stopping");

  GbdtModel model;
  model.learning_rate = spec.learning_rate;
  double base = 0.0;
  for (double v : y) base += v;
  base /= static_cast<double>(n);
  model.base = base;

  std::vector<double> pred(static_cast<size_t>(n), base);
  std::vector<double> val_pred(y_val.size(), base);
  std::vector<double> g(static_cast<size_t>(n)), h(static_cast<size_t>(n));

  SplitSpec split_spec;
  split_spec.reg_lambda = spec.reg_lambda;
  split_spec.reg_alpha = spec.reg_alpha;
  split_spec.gamma = spec.gamma;
  split_spec.min_child_weight = spec.min_child_weight;
  split_spec.min_samples_leaf = 1;

  double best_val = rmse(y_val, val_pred);
  int best_round = 0;
  int since_best = 0;

  for (int round = 0; round < spec.max_rounds; ++round) {
    Rng rng(derive_seed(seed, 0x6BD7, static_cast<uint64_t>(round)));

    std::vector<int> rows;
    if (spec.subsample < 1.0) {
      int k = std::max(1, static_cast<int>(std::round(spec.subsample * n)));
      rows = rng.sample_without_replacement(n, k);
      std::sort(rows.begin(), rows.end());
    } else {
      rows.resize(static_cast<size_t>(n));
      for (int i = 0; i < n; ++i) rows[static_cast<size_t>(i)] = i;
    }

    std::vector<int> cols;
    if (spec.colsample_bytree < 1.0) {
      int m = std::max(1, static_cast<int>(std::round(spec.colsample_bytree * d)));
      cols = rng.sample_without_replacement(d, m);
      std::sort(cols.begin(), cols.end());
    } else {
      cols.resize(static_cast<size_t>(d));
      for (int i = 0; i < d; ++i) cols[static_cast<size_t>(i)] = i;
    }

    for (int i = 0; i < n; ++i) {
      g[static_cast<size_t>(i)] = 2.0 * (pred[static_cast<size_t>(i)] - y[static_cast<size_t>(i)]);
      h[static_cast<size_t>(i)] = 2.0;
    }

    DecisionTree tree;
    gbdt_detail::grow_boost_tree(tree, X, g, h, rows, cols, 0, spec.max_depth, split_spec);
    model.trees.push_back(std::move(tree));
    const DecisionTree& t = model.trees.back();

    for (int i = 0; i < n; ++i)
      pred[static_cast<size_t>(i)] += spec.learning_rate * t.predict_row(X, i);
    for (size_t i = 0; i < y_val.size(); ++i)
      val_pred[i] += spec.learning_rate * t.predict_row(X_val, static_cast<Eigen::Index>(i));

    double val = rmse(y_val, val_pred);
    if (val < best_val) {
      best_val = val;
      best_round = round + 1;
      since_best = 0;
    } else {
      ++since_best;
      if (since_best >= spec.early_stopping_rounds) break;
    }
  }

  model.trees.resize(static_cast<size_t>(best_round));
  model.best_rounds = best_round;
  return model;
}

}  // namespace tabbench
