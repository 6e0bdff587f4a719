#pragma once

#include <algorithm>
#include <cmath>
#include <vector>

#include <Eigen/Dense>
#include <Eigen/Eigenvalues>

#include "tabbench/common.hpp"
#include "tabbench/quantile.hpp"
#include "tabbench/tensor.hpp"

namespace tabbench {

// ---------------------------------------------------------------------------
// Robust scaling: x~ = s * (x - median), s = 1/IQR, or 1 when the IQR
// vanishes. Fit on training rows only.
// ---------------------------------------------------------------------------
struct RobustScaler {
  Vec center;  // per-feature median
  Vec scale;   // per-feature 1/IQR (or 1)

  Mat apply(const Mat& x) const {
    require(x.cols() == center.size(), ErrorKind::DimensionMismatch, "scaler width mismatch");
    Mat out = x;
    out.rowwise() -= center.transpose();
    out.array().rowwise() *= scale.transpose().array();
    return out;
  }

  std::vector<double> apply_targets(const std::vector<double>& y) const {
    std::vector<double> out(y.size());
    for (size_t i = 0; i < y.size(); ++i) out[i] = scale(0) * (y[i] - center(0));
    return out;
  }
  double invert_target(double v) const { return v / scale(0) + center(0); }
};

inline RobustScaler fit_robust_scaler(const Mat& train) {
  require(train.rows() >= 1, ErrorKind::EmptyDataset, "scaler fit on empty matrix");
  RobustScaler s;
  s.center.resize(train.cols());
  s.scale.resize(train.cols());
  std::vector<double> col(static_cast<size_t>(train.rows()));
  for (Eigen::Index j = 0; j < train.cols(); ++j) {
    for (Eigen::Index i = 0; i < train.rows(); ++i) col[static_cast<size_t>(i)] = train(i, j);
    std::sort(col.begin(), col.end());
    double q1 = quantile_sorted(col, 0.25);
    double q2 = quantile_sorted(col, 0.5);
    double q3 = quantile_sorted(col, 0.75);
    s.center(j) = q2;
    double iqr = q3 - q1;
    s.scale(j) = iqr > 0.0 ? 1.0 / iqr : 1.0;
  }
  return s;
}

inline RobustScaler fit_target_scaler(const std::vector<double>& y) {
  Mat m(static_cast<Eigen::Index>(y.size()), 1);
  for (size_t i = 0; i < y.size(); ++i) m(static_cast<Eigen::Index>(i), 0) = y[i];
  return fit_robust_scaler(m);
}

// ---------------------------------------------------------------------------
// PCA on the mean-centered training matrix. Uses the covariance
// eigendecomposition when d <= n and the Gram trick otherwise (n x n problem,
// essential for wide spectral matrices). Sign fixed deterministically: the
// largest-magnitude loading of each component is positive.
// ---------------------------------------------------------------------------
struct PcaTransform {
  Vec mean;            // d
  Mat components;      // d x k, orthonormal columns
  Vec explained;       // variance per component, descending
  int requested_k = 0;
  bool clamped = false;  // requested k exceeded attainable rank

  int k() const { return static_cast<int>(components.cols()); }

  Mat apply(const Mat& x) const {
    require(x.cols() == mean.size(), ErrorKind::DimensionMismatch, "pca width mismatch");
    return (x.rowwise() - mean.transpose()) * components;
  }

  // First-k sub-transform; the parent must have been fit with at least k
  // components. Lets one decomposition serve every trial's k.
  PcaTransform take(int kk) const {
    require(kk >= 1 && kk <= k(), ErrorKind::RankDeficient, "take exceeds fitted components");
    PcaTransform out;
    out.mean = mean;
    out.components = components.leftCols(kk);
    out.explained = explained.head(kk);
    out.requested_k = kk;
    out.clamped = false;
    return out;
  }
};

inline PcaTransform fit_pca(const Mat& train, int k) {
  const Eigen::Index n = train.rows(), d = train.cols();
  require(n >= 2, ErrorKind::TooFewSamples, "pca needs at least 2 rows");
  require(k >= 1, ErrorKind::InvalidSpec, "pca k must be >= 1");

  PcaTransform p;
  p.requested_k = k;
  p.mean = train.colwise().mean();
  Mat xc = train.rowwise() - p.mean.transpose();

  Mat comps;  // d x r, descending variance
  Vec vars;
  if (d <= n) {
    Mat cov = (xc.transpose() * xc) / static_cast<double>(n - 1);
    Eigen::SelfAdjointEigenSolver<Mat> es(cov);
    require(es.info() == Eigen::Success, ErrorKind::NumericalFailure, "pca eigensolver failed");
    const Eigen::Index r = d;
    comps.resize(d, r);
    vars.resize(r);
    for (Eigen::Index i = 0; i < r; ++i) {  // ascending -> descending
      comps.col(i) = es.eigenvectors().col(r - 1 - i);
      vars(i) = es.eigenvalues()(r - 1 - i);
    }
  } else {
    Mat gram = xc * xc.transpose();  // n x n
    Eigen::SelfAdjointEigenSolver<Mat> es(gram);
    require(es.info() == Eigen::Success, ErrorKind::NumericalFailure, "pca eigensolver failed");
    const Eigen::Index r = n;
    comps.resize(d, r);
    vars.resize(r);
    for (Eigen::Index i = 0; i < r; ++i) {
      double lam = std::max(es.eigenvalues()(r - 1 - i), 0.0);
      vars(i) = lam / static_cast<double>(n - 1);
      if (lam > 0.0)
        comps.col(i) = (xc.transpose() * es.eigenvectors().col(r - 1 - i)) / std::sqrt(lam);
      else
        comps.col(i).setZero();
    }
  }

  // Attainable rank: components with non-negligible variance, at most n-1.
  double tol = std::max(vars.size() > 0 ? vars(0) : 0.0, 0.0) * 1e-12;
  int rank = 0;
  for (Eigen::Index i = 0; i < vars.size() && i < n - 1; ++i) {
    if (vars(i) > tol) ++rank;
    else break;
  }
  rank = std::max(rank, 1);
  int eff = k;
  if (eff > rank) {
    eff = rank;
    p.clamped = true;
  }

  p.components = comps.leftCols(eff);
  p.explained = vars.head(eff).cwiseMax(0.0);
  for (Eigen::Index c = 0; c < p.components.cols(); ++c) {
    Eigen::Index at = 0;
    double best = -1.0;
    for (Eigen::Index i = 0; i < p.components.rows(); ++i) {
      double a = std::abs(p.components(i, c));
      if (a > best) {
        best = a;
        at = i;
      }
    }
    if (p.components(at, c) < 0.0) p.components.col(c) = -p.components.col(c);
  }
  return p;
}

// ---------------------------------------------------------------------------
// Quantile bins for the piecewise-linear embeddings. Edges sit at type-7
// quantiles i/B for i = 0..B where B = min(max_bins, #distinct values); the
// distinct-value cap plus deduplication makes the effective bin count
// data-dependent. A constant feature collapses to one degenerate bin.
// ---------------------------------------------------------------------------
struct QuantileBins {
  std::vector<std::vector<double>> edges;  // per feature, strictly increasing

  int n_features() const { return static_cast<int>(edges.size()); }
  int bin_count(int f) const { return std::max(1, static_cast<int>(edges[f].size()) - 1); }
  int total_bins() const {
    int t = 0;
    for (int f = 0; f < n_features(); ++f) t += bin_count(f);
    return t;
  }
};

inline QuantileBins compute_quantile_bins(const Mat& train, int max_bins) {
  require(max_bins >= 1, ErrorKind::InvalidSpec, "max_bins must be >= 1");
  require(train.rows() >= 1, ErrorKind::EmptyDataset, "bins fit on empty matrix");
  QuantileBins qb;
  qb.edges.resize(static_cast<size_t>(train.cols()));
  std::vector<double> col(static_cast<size_t>(train.rows()));
  for (Eigen::Index j = 0; j < train.cols(); ++j) {
    for (Eigen::Index i = 0; i < train.rows(); ++i) col[static_cast<size_t>(i)] = train(i, j);
    std::sort(col.begin(), col.end());
    int distinct = 1;
    for (size_t i = 1; i < col.size(); ++i)
      if (col[i] != col[i - 1]) ++distinct;
    int b = std::max(1, std::min(max_bins, distinct));
    std::vector<double>& e = qb.edges[static_cast<size_t>(j)];
    e.clear();
    for (int i = 0; i <= b; ++i) {
      double q = quantile_sorted(col, static_cast<double>(i) / static_cast<double>(b));
      if (e.empty() || q > e.back()) e.push_back(q);
    }
  }
  return qb;
}

}  // namespace tabbench
