#pragma once

#include <Eigen/Dense>

namespace tabbench {

// All neural-net math runs on dense row-major double matrices. Row-major so
// that a mini-batch is a contiguous block of rows.
using Mat = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using Vec = Eigen::VectorXd;

/// A trainable parameter: the value buffer lives with the model, the tape
// accumulates into `grad` which the optimizer consumes.
struct Param {
  Mat value;
  Mat grad;

  explicit Param(int rows = 0, int cols = 0) { resize(rows, cols); }
  void resize(int rows, int cols) {
    value = Mat::Zero(rows, cols);
    grad = Mat::Zero(rows, cols);
  }
  void zero_grad() { grad.setZero(); }
  Eigen::Index size() const { return value.size(); }
};

}  // namespace tabbench
