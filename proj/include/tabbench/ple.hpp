#pragma once

#include <vector>

#include "tabbench/common.hpp"
#include "tabbench/preprocess.hpp"
#include "tabbench/tensor.hpp"

namespace tabbench {

// Piecewise-linear activation pattern for one value against one feature's bin
// edges: bins below the value saturate at 1, the value's own bin contributes
// its fractional position, higher bins stay 0. Out-of-range values clamp to
// the end bins, so the encoding is continuous and bounded. A degenerate
// single-edge feature (constant in training) encodes as a single always-zero
// activation, leaving only the trainable bias active.
inline void ple_activation_row(const std::vector<double>& edges, double v, double* out) {
  const int bins = std::max(1, static_cast<int>(edges.size()) - 1);
  if (edges.size() <= 1) {
    out[0] = 0.0;
    return;
  }
  for (int t = 0; t < bins; ++t) {
    double lo = edges[static_cast<size_t>(t)], hi = edges[static_cast<size_t>(t) + 1];
    double a = (v - lo) / (hi - lo);
    out[t] = a <= 0.0 ? 0.0 : (a >= 1.0 ? 1.0 : a);
  }
}

/// Dense activation matrix for a whole input block: column layout is feature 0
// bins, feature 1 bins, ... (offsets from QuantileBins::bin_count).
inline Mat ple_activations(const QuantileBins& bins, const Mat& X) {
  require(X.cols() == bins.n_features(), ErrorKind::DimensionMismatch, "ple width mismatch");
  Mat out(X.rows(), bins.total_bins());
  for (Eigen::Index i = 0; i < X.rows(); ++i) {
    int off = 0;
    for (int f = 0; f < bins.n_features(); ++f) {
      ple_activation_row(bins.edges[static_cast<size_t>(f)], X(i, f), out.row(i).data() + off);
      off += bins.bin_count(f);
    }
  }
  return out;
}

}  // namespace tabbench
