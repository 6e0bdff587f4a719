#pragma once

#include <cmath>
#include <vector>

#include <Eigen/Dense>

#include "tabbench/common.hpp"
#include "tabbench/tensor.hpp"

namespace tabbench {

// PLS1 via NIPALS: components chosen to maximize covariance with the single
// response, X deflated after each component. With n_components = rank(X) the
// training predictions coincide with least squares.
struct PlsrModel {
  Vec beta;
  double intercept = 0.0;
  int n_components = 0;  // effective count (may be clamped below the request)
  bool clamped = false;
  Mat scores;  // training X-scores, mutually orthogonal columns

  std::vector<double> predict(const Mat& X) const {
    require(X.cols() == beta.size(), ErrorKind::DimensionMismatch, "plsr predict width");
    Vec p = (X * beta).array() + intercept;
    return std::vector<double>(p.data(), p.data() + p.size());
  }
};

inline PlsrModel fit_plsr(const Mat& X, const std::vector<double>& y, int n_components) {
  const Eigen::Index n = X.rows(), d = X.cols();
  require(n >= 2, ErrorKind::TooFewSamples, "plsr fit needs >= 2 samples");
  require(static_cast<size_t>(n) == y.size(), ErrorKind::DimensionMismatch, "target length");
  require(n_components >= 1, ErrorKind::InvalidSpec, "plsr needs >= 1 component");

  Vec yv(n);
  for (Eigen::Index i = 0; i < n; ++i) yv(i) = y[static_cast<size_t>(i)];
  Vec xmean = X.colwise().mean();
  const double ymean = yv.mean();
  Mat E = X.rowwise() - xmean.transpose();  // deflated copies
  Vec f = yv.array() - ymean;

  const double xscale = E.norm();
  const double tol = std::max(xscale, 1.0) * 1e-12;

  Mat W(d, n_components), P(d, n_components);
  Vec q(n_components);
  Mat T(n, n_components);
  int k = 0;
  for (; k < n_components; ++k) {
    Vec w = E.transpose() * f;
    double wn = w.norm();
    if (wn <= tol) break;  // remaining X carries no covariance with y
    w /= wn;
    Vec t = E * w;
    double tt = t.squaredNorm();
    if (tt <= tol * tol) break;
    Vec p = E.transpose() * t / tt;
    double qk = f.dot(t) / tt;
    E.noalias() -= t * p.transpose();
    f.noalias() -= qk * t;
    W.col(k) = w;
    P.col(k) = p;
    q(k) = qk;
    T.col(k) = t;
  }

  PlsrModel m;
  m.n_components = k;
  m.clamped = k < n_components;
  if (k == 0) {  // y uncorrelated with X: predict its mean
    m.beta = Vec::Zero(d);
    m.intercept = ymean;
    m.scores = Mat(n, 0);
    return m;
  }
  Mat Wk = W.leftCols(k), Pk = P.leftCols(k);
  Vec qk = q.head(k);
  // beta = W (P^T W)^{-1} q ; P^T W is upper triangular in exact arithmetic.
  Mat PtW = Pk.transpose() * Wk;
  m.beta = Wk * PtW.colPivHouseholderQr().solve(qk);
  m.intercept = ymean - xmean.dot(m.beta);
  m.scores = T.leftCols(k);
  return m;
}

}  // namespace tabbench
