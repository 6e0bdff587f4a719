#pragma once

#include <cstdint>
#include <vector>

#include "tabbench/common.hpp"
#include "tabbench/rng.hpp"
#include "tabbench/tensor.hpp"
#include "tabbench/tree.hpp"

namespace tabbench {

struct ForestSpec {
  int n_trees = 1000;
  int max_depth = 30;
  int min_samples_split = 2;
  int min_samples_leaf = 1;
  double max_features = 1.0;
  bool bootstrap = true;  // test hook: false trains every tree on the full set
};

// Bagged regression forest. Tree t draws from its own seed stream
// derive(seed, t), so the ensemble is identical no matter how fitting is
// scheduled; prediction is the mean over trees.
struct ForestModel {
  std::vector<DecisionTree> trees;

  std::vector<double> predict(const Mat& X) const {
    std::vector<double> out(static_cast<size_t>(X.rows()), 0.0);
    for (const DecisionTree& t : trees) {
      for (Eigen::Index i = 0; i < X.rows(); ++i)
        out[static_cast<size_t>(i)] += t.predict_row(X, i);
    }
    for (double& v : out) v /= static_cast<double>(trees.size());
    return out;
  }
};

inline ForestModel fit_forest(const Mat& X, const std::vector<double>& y, const ForestSpec& spec,
                              uint64_t seed) {
  require(spec.n_trees >= 1, ErrorKind::InvalidSpec, "forest needs at least one tree");
  const int n = static_cast<int>(X.rows());
  TreeConstraints c;
  c.max_depth = spec.max_depth;
  c.min_samples_split = spec.min_samples_split;
  c.min_samples_leaf = spec.min_samples_leaf;
  c.max_features = spec.max_features;

  ForestModel model;
  model.trees.reserve(spec.n_trees);
  for (int t = 0; t < spec.n_trees; ++t) {
    Rng rng(derive_seed(seed, 0xF0BE57, static_cast<uint64_t>(t)));
    if (spec.bootstrap) {
      std::vector<int> rows(static_cast<size_t>(n));
      std::vector<double> yb(static_cast<size_t>(n));
      Mat Xb(n, X.cols());
      for (int i = 0; i < n; ++i) {
        int r = static_cast<int>(rng.index(static_cast<size_t>(n)));
        Xb.row(i) = X.row(r);
        yb[static_cast<size_t>(i)] = y[static_cast<size_t>(r)];
      }
      model.trees.push_back(fit_tree(Xb, yb, c, &rng));
    } else {
      model.trees.push_back(fit_tree(X, y, c, &rng));
    }
  }
  return model;
}

}  // namespace tabbench
