#pragma once

#include <cmath>
#include <vector>

#include <Eigen/Dense>

#include "tabbench/common.hpp"
#include "tabbench/tensor.hpp"

namespace tabbench {

enum class Penalty { none, l1, l2 };

struct LinearModel {
  Vec beta;
  double intercept = 0.0;
  Penalty penalty = Penalty::none;
  double alpha = 0.0;

  std::vector<double> predict(const Mat& X) const {
    require(X.cols() == beta.size(), ErrorKind::DimensionMismatch, "linear predict width");
    Vec p = (X * beta).array() + intercept;
    return std::vector<double>(p.data(), p.data() + p.size());
  }
};

namespace linear_detail {

inline double soft(double x, double t) {
  if (x > t) return x - t;
  if (x < -t) return x + t;
  return 0.0;
}

// Cyclic coordinate descent for (1/(2n))||y - b0 - Xb||^2 + alpha*||b||_1 on
// centered data, run to duality gap <= tol. Returns centered-space beta.
inline Vec lasso_cd(const Mat& Xc, const Vec& yc, double alpha, double tol, int max_sweeps) {
  const Eigen::Index n = Xc.rows(), d = Xc.cols();
  Vec beta = Vec::Zero(d);
  Vec r = yc;  // residual y - X beta
  Vec col_ms(d);  // (1/n) ||x_j||^2
  for (Eigen::Index j = 0; j < d; ++j)
    col_ms(j) = Xc.col(j).squaredNorm() / static_cast<double>(n);

  const double y_ms = yc.squaredNorm() / (2.0 * static_cast<double>(n));
  for (int sweep = 0; sweep < max_sweeps; ++sweep) {
    for (Eigen::Index j = 0; j < d; ++j) {
      if (col_ms(j) == 0.0) continue;
      double old = beta(j);
      double rho = Xc.col(j).dot(r) / static_cast<double>(n) + col_ms(j) * old;
      double next = soft(rho, alpha) / col_ms(j);
      if (next != old) {
        r += Xc.col(j) * (old - next);
        beta(j) = next;
      }
    }
    // Duality gap: primal minus the dual value at the scaled residual.
    double primal = r.squaredNorm() / (2.0 * static_cast<double>(n)) + alpha * beta.lpNorm<1>();
    Vec xtr = Xc.transpose() * r / static_cast<double>(n);
    double inf = xtr.lpNorm<Eigen::Infinity>();
    double s = inf > alpha ? alpha / inf : 1.0;
    Vec nu = (s / static_cast<double>(n)) * r;
    double dual = y_ms - (static_cast<double>(n) / 2.0) *
                             (nu - yc / static_cast<double>(n)).squaredNorm();
    if (primal - dual <= tol) break;
  }
  return beta;
}

}  // namespace linear_detail

// penalty none: QR least squares (errors on rank deficiency). l2: normal
// equations on centered data, intercept unpenalized. l1: coordinate descent
// with the (1/(2n)) RSS convention.
inline LinearModel fit_linear(const Mat& X, const std::vector<double>& y, Penalty penalty,
                              double alpha = 0.0, double l1_tol = 1e-6) {
  const Eigen::Index n = X.rows(), d = X.cols();
  require(n >= 2, ErrorKind::TooFewSamples, "linear fit needs >= 2 samples");
  require(static_cast<size_t>(n) == y.size(), ErrorKind::DimensionMismatch, "target length");
  require(penalty == Penalty::none || alpha > 0.0, ErrorKind::InvalidSpec,
          "penalized fit needs alpha > 0");

  Vec yv(n);
  for (Eigen::Index i = 0; i < n; ++i) yv(i) = y[static_cast<size_t>(i)];

  LinearModel m;
  m.penalty = penalty;
  m.alpha = alpha;

  if (penalty == Penalty::none) {
    Mat Xa(n, d + 1);
    Xa.col(0).setOnes();
    Xa.rightCols(d) = X;
    Eigen::ColPivHouseholderQR<Mat> qr(Xa);
    require(qr.rank() == d + 1, ErrorKind::SingularSystem,
            "rank-deficient design matrix in unpenalized fit");
    Vec sol = qr.solve(yv);
    m.intercept = sol(0);
    m.beta = sol.tail(d);
    return m;
  }

  Vec xmean = X.colwise().mean();
  double ymean = yv.mean();
  Mat Xc = X.rowwise() - xmean.transpose();
  Vec yc = yv.array() - ymean;

  if (penalty == Penalty::l2) {
    Mat A = Xc.transpose() * Xc + alpha * Mat::Identity(d, d);
    m.beta = Eigen::LDLT<Mat>(A).solve(Xc.transpose() * yc);
  } else {
    m.beta = linear_detail::lasso_cd(Xc, yc, alpha, l1_tol, 100000);
  }
  m.intercept = ymean - xmean.dot(m.beta);
  return m;
}

}  // namespace tabbench
