#pragma once

#include <algorithm>
#include <cmath>
#include <vector>

#include "tabbench/common.hpp"

namespace tabbench {

// Linear interpolation between order statistics ("type 7", the convention of
// numpy.quantile and R's default). Used everywhere a quantile is needed:
// robust scaler, embedding bins, corpus medians.
inline double quantile_sorted(const std::vector<double>& sorted, double p) {
  require(!sorted.empty(), ErrorKind::EmptyDataset, "quantile of empty vector");
  const size_t n = sorted.size();
  if (n == 1) return sorted[0];
  double h = static_cast<double>(n - 1) * p;
  double lo = std::floor(h);
  size_t i = static_cast<size_t>(lo);
  if (i >= n - 1) return sorted[n - 1];
  double frac = h - lo;
  return sorted[i] + frac * (sorted[i + 1] - sorted[i]);
}

inline double quantile(std::vector<double> values, double p) {
  std::sort(values.begin(), values.end());
  return quantile_sorted(values, p);
}

inline double median(const std::vector<double>& values) { return quantile(values, 0.5); }

}  // namespace tabbench
