#pragma once

#include <cstdint>
#include <numeric>
#include <vector>

#include "tabbench/common.hpp"
#include "tabbench/rng.hpp"

namespace tabbench {

// Seeded nested assignment: 5 disjoint outer test folds covering all samples;
// within each outer fold's training indices, 5 inner folds partitioning them.
// All randomness flows from the seed; plans are value types.
struct FoldPlan {
  uint64_t seed = 0;
  int n = 0;
  std::vector<std::vector<int>> outer_test;                // [5][...]
  std::vector<std::vector<int>> outer_train;               // complements
  std::vector<std::vector<std::vector<int>>> inner_folds;  // [5][5][...]

  static constexpr int kOuter = 5;
  static constexpr int kInner = 5;
};

namespace detail {
// Near-equal contiguous chunks of a shuffled index list; the first
// (size % k) chunks get one extra element.
inline std::vector<std::vector<int>> chunk(const std::vector<int>& idx, int k) {
  std::vector<std::vector<int>> out(k);
  const int n = static_cast<int>(idx.size());
  const int base = n / k, extra = n % k;
  int pos = 0;
  for (int i = 0; i < k; ++i) {
    int len = base + (i < extra ? 1 : 0);
    out[i].assign(idx.begin() + pos, idx.begin() + pos + len);
    pos += len;
  }
  return out;
}
}  // namespace detail

inline FoldPlan make_fold_plan(int n, uint64_t seed) {
  require(n >= 10, ErrorKind::TooFewSamples, "need at least 10 samples for 5x5 nested folds");
  FoldPlan plan;
  plan.seed = seed;
  plan.n = n;

  std::vector<int> idx(n);
  std::iota(idx.begin(), idx.end(), 0);
  Rng rng(derive_seed(seed, 0xF01D5));
  rng.shuffle(idx);
  plan.outer_test = detail::chunk(idx, FoldPlan::kOuter);

  plan.outer_train.resize(FoldPlan::kOuter);
  plan.inner_folds.resize(FoldPlan::kOuter);
  for (int o = 0; o < FoldPlan::kOuter; ++o) {
    std::vector<bool> in_test(n, false);
    for (int i : plan.outer_test[o]) in_test[i] = true;
    for (int i : idx)
      if (!in_test[i]) plan.outer_train[o].push_back(i);

    std::vector<int> train = plan.outer_train[o];
    Rng inner_rng(derive_seed(seed, 0x122E5, static_cast<uint64_t>(o)));
    inner_rng.shuffle(train);
    plan.inner_folds[o] = detail::chunk(train, FoldPlan::kInner);
  }
  return plan;
}

// Training indices of inner fold `j` within outer fold `o` (everything in the
// outer-train set except inner fold j).
inline std::vector<int> inner_train_indices(const FoldPlan& plan, int o, int j) {
  std::vector<int> out;
  for (int k = 0; k < FoldPlan::kInner; ++k)
    if (k != j) out.insert(out.end(), plan.inner_folds[o][k].begin(), plan.inner_folds[o][k].end());
  return out;
}

}  // namespace tabbench
