#pragma once

#include <cmath>
#include <vector>

#include "tabbench/common.hpp"
#include "tabbench/tensor.hpp"

namespace tabbench {

inline double rmse(const std::vector<double>& y, const std::vector<double>& yhat) {
  require(y.size() == yhat.size(), ErrorKind::DimensionMismatch, "rmse length mismatch");
  require(!y.empty(), ErrorKind::DimensionMismatch, "rmse of empty vectors");
  double s = 0.0;
  for (size_t i = 0; i < y.size(); ++i) {
    double d = y[i] - yhat[i];
    s += d * d;
  }
  return std::sqrt(s / static_cast<double>(y.size()));
}

// Coefficient of determination; may be negative for predictors worse than
// the mean. Undefined for constant targets.
inline double r2(const std::vector<double>& y, const std::vector<double>& yhat) {
  require(y.size() == yhat.size(), ErrorKind::DimensionMismatch, "r2 length mismatch");
  require(y.size() >= 2, ErrorKind::DimensionMismatch, "r2 needs at least 2 samples");
  double mean = 0.0;
  for (double v : y) mean += v;
  mean /= static_cast<double>(y.size());
  double ss_res = 0.0, ss_tot = 0.0;
  for (size_t i = 0; i < y.size(); ++i) {
    double d = y[i] - yhat[i];
    ss_res += d * d;
    double c = y[i] - mean;
    ss_tot += c * c;
  }
  require(ss_tot > 0.0, ErrorKind::ZeroVariance, "r2 with constant targets");
  return 1.0 - ss_res / ss_tot;
}

inline std::vector<double> to_std(const Vec& v) {
  return std::vector<double>(v.data(), v.data() + v.size());
}
inline Vec to_vec(const std::vector<double>& v) {
  Vec out(static_cast<Eigen::Index>(v.size()));
  for (size_t i = 0; i < v.size(); ++i) out(static_cast<Eigen::Index>(i)) = v[i];
  return out;
}

inline double rmse(const Vec& y, const Vec& yhat) { return rmse(to_std(y), to_std(yhat)); }
inline double r2(const Vec& y, const Vec& yhat) { return r2(to_std(y), to_std(yhat)); }

}  // namespace tabbench
