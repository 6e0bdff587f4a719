#pragma once

#include <algorithm>
#include <cmath>
#include <limits>
#include <set>
#include <string>
#include <vector>

#include "tabbench/common.hpp"
#include "tabbench/rng.hpp"
#include "tabbench/space.hpp"

namespace tabbench {

struct Trial {
  Assignment x;
  double objective = std::numeric_limits<double>::infinity();
  bool failed = false;
};

struct TpeConfig {
  int n_trials = 100;
  int warmup = 20;       // uniform random rounds before the model kicks in
  int candidates = 24;   // draws from l(x) per suggestion
  double gamma = 0.1;    // good-trial fraction
};

// ---------------------------------------------------------------------------
// Multivariate TPE: completed trials are split into "good" (the gamma
// fraction with the lowest objectives) and "bad"; each good/bad trial
// contributes one joint kernel — a product of per-dimension Gaussians
// (truncated at the bounds, Scott-rule bandwidths, log dimensions modeled in
// log space) and Laplace-smoothed categorical masses. Candidates are drawn
// from the good mixture and scored by log l(x) - log g(x).
//
// Two classic Parzen-estimator safeguards keep exploration alive: each
// mixture carries one extra uniform prior component, and bandwidths are
// clipped from below by range / min(100, 1 + #kernels). Without them the
// good-set kernels collapse onto the incumbent and the search degenerates
// into a tiny-step random walk.
// ---------------------------------------------------------------------------
class TpeSampler {
 public:
  TpeSampler(SearchSpace space, TpeConfig cfg, uint64_t seed)
      : space_(std::move(space)), cfg_(cfg), rng_(derive_seed(seed, 0x79E11)) {
    std::set<std::string> names;
    for (const auto& d : space_.dims) {
      require(names.insert(d.name).second, ErrorKind::InvalidSpec,
              "duplicate search dimension: " + d.name);
    }
    require(cfg_.warmup >= 1 && cfg_.candidates >= 1 && cfg_.gamma > 0.0 && cfg_.gamma < 1.0,
            ErrorKind::InvalidSpec, "invalid TPE configuration");
  }

  const std::vector<Trial>& history() const { return history_; }

  // Size of the good set the next model-based suggestion will use.
  int good_count() const {
    const int n = static_cast<int>(history_.size());
    return std::max(1, static_cast<int>(std::ceil(cfg_.gamma * n)));
  }

  void tell(Assignment a, double objective, bool failed) {
    Trial t;
    t.x = std::move(a);
    t.failed = failed || !std::isfinite(objective);
    t.objective = t.failed ? std::numeric_limits<double>::infinity() : objective;
    history_.push_back(std::move(t));
  }

  Assignment suggest() {
    const int n = static_cast<int>(history_.size());
    if (n < cfg_.warmup || space_.dims.empty()) return sample_assignment(space_, rng_);

    // Stable split: sort trial indices by objective, ties by age.
    std::vector<int> order(history_.size());
    for (size_t i = 0; i < order.size(); ++i) order[i] = static_cast<int>(i);
    std::stable_sort(order.begin(), order.end(), [&](int a, int b) {
      return history_[a].objective < history_[b].objective;
    });
    const int n_good = good_count();
    std::vector<const Trial*> good, bad;
    for (int i = 0; i < n; ++i)
      (i < n_good ? good : bad).push_back(&history_[order[i]]);
    if (bad.empty()) return sample_assignment(space_, rng_);

    const auto tg = transform_set(good);
    const auto tb = transform_set(bad);
    const std::vector<double> bw_good = bandwidths(tg);
    const std::vector<double> bw_bad = bandwidths(tb);

    double best_score = -std::numeric_limits<double>::infinity();
    std::vector<double> best_x;
    for (int c = 0; c < cfg_.candidates; ++c) {
      // The prior counts as one more component of the good mixture.
      const size_t pick = rng_.index(tg.size() + 1);
      std::vector<double> x =
          pick < tg.size() ? draw_candidate(tg[pick], bw_good) : draw_prior();
      const double score = log_mixture(x, tg, bw_good) - log_mixture(x, tb, bw_bad);
      if (score > best_score) {
        best_score = score;
        best_x = std::move(x);
      }
    }
    return untransform(best_x);
  }

 private:
  static constexpr double kLog2Pi = 1.8378770664093453;

  double t_lo(const Dimension& d) const {
    return d.kind == DimKind::loguniform ? std::log(d.lo) : d.lo;
  }
  double t_hi(const Dimension& d) const {
    return d.kind == DimKind::loguniform ? std::log(d.hi) : d.hi;
  }

  // Transformed coordinates: log dims in log space, integers as doubles,
  // categoricals as choice index.
  std::vector<std::vector<double>> transform_set(const std::vector<const Trial*>& set) const {
    std::vector<std::vector<double>> out(set.size());
    for (size_t i = 0; i < set.size(); ++i) {
      out[i].resize(space_.dims.size());
      for (size_t d = 0; d < space_.dims.size(); ++d) {
        const Dimension& dim = space_.dims[d];
        const double v = set[i]->x.at(dim.name);
        if (dim.kind == DimKind::categorical) {
          int idx = 0;
          for (size_t k = 0; k < dim.choices.size(); ++k)
            if (dim.choices[k] == v) idx = static_cast<int>(k);
          out[i][d] = static_cast<double>(idx);
        } else if (dim.kind == DimKind::loguniform) {
          out[i][d] = std::log(v);
        } else {
          out[i][d] = v;
        }
      }
    }
    return out;
  }

  // Scott's rule per dimension, clipped to [range / min(100, 1 + n), range].
  // The lower clip widens kernels while a set is small, so early model-based
  // rounds still cover the box. Categorical entries are unused (set to 1).
  std::vector<double> bandwidths(const std::vector<std::vector<double>>& t) const {
    const double n = static_cast<double>(t.size());
    std::vector<double> bw(space_.dims.size(), 1.0);
    for (size_t d = 0; d < space_.dims.size(); ++d) {
      const Dimension& dim = space_.dims[d];
      if (dim.kind == DimKind::categorical) continue;
      double mean = 0.0;
      for (const auto& row : t) mean += row[d];
      mean /= n;
      double var = 0.0;
      for (const auto& row : t) var += (row[d] - mean) * (row[d] - mean);
      var = t.size() > 1 ? var / (n - 1.0) : 0.0;
      const double range = t_hi(dim) - t_lo(dim);
      bw[d] = std::clamp(std::sqrt(var) * std::pow(n, -0.2), range / std::min(100.0, n + 1.0),
                         range);
    }
    return bw;
  }

  static double norm_cdf(double z) { return 0.5 * std::erfc(-z / std::sqrt(2.0)); }

  // log of the truncated Gaussian density at x.
  double log_kernel_1d(double x, double mu, double h, double a, double b) const {
    const double z = (x - mu) / h;
    const double mass =
        std::max(norm_cdf((b - mu) / h) - norm_cdf((a - mu) / h), 1e-12);
    return -0.5 * z * z - 0.5 * kLog2Pi - std::log(h) - std::log(mass);
  }

  // Laplace-smoothed categorical mass of choice index c under a component
  // whose observed choice index is ci.
  static double log_cat_mass(int c, int ci, int K) {
    const double p = ((c == ci ? 1.0 : 0.0) + 1.0) / (1.0 + static_cast<double>(K));
    return std::log(p);
  }

  // Equal-weight mixture over the observation kernels plus one uniform prior
  // component covering the whole (transformed) box.
  double log_mixture(const std::vector<double>& x,
                     const std::vector<std::vector<double>>& comps,
                     const std::vector<double>& bw) const {
    double max_term = -std::numeric_limits<double>::infinity();
    std::vector<double> terms(comps.size() + 1);
    for (size_t i = 0; i < comps.size(); ++i) {
      double lp = 0.0;
      for (size_t d = 0; d < space_.dims.size(); ++d) {
        const Dimension& dim = space_.dims[d];
        if (dim.kind == DimKind::categorical) {
          lp += log_cat_mass(static_cast<int>(x[d]), static_cast<int>(comps[i][d]),
                             static_cast<int>(dim.choices.size()));
        } else {
          lp += log_kernel_1d(x[d], comps[i][d], bw[d], t_lo(dim), t_hi(dim));
        }
      }
      terms[i] = lp;
      max_term = std::max(max_term, lp);
    }
    double lp_prior = 0.0;
    for (const Dimension& dim : space_.dims) {
      if (dim.kind == DimKind::categorical)
        lp_prior -= std::log(static_cast<double>(dim.choices.size()));
      else
        lp_prior -= std::log(t_hi(dim) - t_lo(dim));
    }
    terms.back() = lp_prior;
    max_term = std::max(max_term, lp_prior);
    double s = 0.0;
    for (double t : terms) s += std::exp(t - max_term);
    return max_term + std::log(s) - std::log(static_cast<double>(terms.size()));
  }

  std::vector<double> draw_candidate(const std::vector<double>& center,
                                     const std::vector<double>& bw) {
    std::vector<double> x(space_.dims.size());
    for (size_t d = 0; d < space_.dims.size(); ++d) {
      const Dimension& dim = space_.dims[d];
      if (dim.kind == DimKind::categorical) {
        // Sample the component's smoothed categorical distribution.
        const int K = static_cast<int>(dim.choices.size());
        const int ci = static_cast<int>(center[d]);
        double u = rng_.uniform() * (1.0 + K);
        int pick = K - 1;
        double acc = 0.0;
        for (int c = 0; c < K; ++c) {
          acc += (c == ci ? 2.0 : 1.0);
          if (u < acc) {
            pick = c;
            break;
          }
        }
        x[d] = static_cast<double>(pick);
        continue;
      }
      const double a = t_lo(dim), b = t_hi(dim);
      double v = center[d] + bw[d] * rng_.normal();
      for (int tries = 0; (v < a || v > b) && tries < 100; ++tries)
        v = center[d] + bw[d] * rng_.normal();
      v = std::clamp(v, a, b);
      if (dim.kind == DimKind::integer_range)
        v = std::clamp(std::round(v), dim.lo, dim.hi);
      x[d] = v;
    }
    return x;
  }

  // A draw from the uniform prior component, in transformed coordinates.
  std::vector<double> draw_prior() {
    std::vector<double> x(space_.dims.size());
    for (size_t d = 0; d < space_.dims.size(); ++d) {
      const Dimension& dim = space_.dims[d];
      if (dim.kind == DimKind::categorical)
        x[d] = static_cast<double>(rng_.index(dim.choices.size()));
      else if (dim.kind == DimKind::integer_range)
        x[d] = static_cast<double>(
            rng_.uniform_int(static_cast<int64_t>(dim.lo), static_cast<int64_t>(dim.hi)));
      else
        x[d] = rng_.uniform(t_lo(dim), t_hi(dim));
    }
    return x;
  }

  Assignment untransform(const std::vector<double>& x) const {
    Assignment a;
    for (size_t d = 0; d < space_.dims.size(); ++d) {
      const Dimension& dim = space_.dims[d];
      switch (dim.kind) {
        case DimKind::uniform: a[dim.name] = x[d]; break;
        case DimKind::loguniform: a[dim.name] = std::exp(x[d]); break;
        case DimKind::integer_range:
          a[dim.name] = std::clamp(std::round(x[d]), dim.lo, dim.hi);
          break;
        case DimKind::categorical:
          a[dim.name] = dim.choices[static_cast<size_t>(x[d])];
          break;
      }
    }
    return a;
  }

  SearchSpace space_;
  TpeConfig cfg_;
  Rng rng_;
  std::vector<Trial> history_;
};

struct StudyResult {
  Trial best;
  std::vector<Trial> history;
  int n_failures = 0;
};

// Runs a full study: exactly cfg.n_trials evaluations; objective errors and
// non-finite values become failed trials with objective +infinity. Best is
// the earliest minimal trial.
template <typename Objective>
StudyResult run_study(Objective&& objective, const SearchSpace& space, const TpeConfig& cfg,
                      uint64_t seed) {
  require(cfg.n_trials >= 1, ErrorKind::InvalidSpec, "study needs at least one trial");
  TpeSampler sampler(space, cfg, seed);
  StudyResult res;
  for (int t = 0; t < cfg.n_trials; ++t) {
    Assignment a = sampler.suggest();
    double obj = std::numeric_limits<double>::infinity();
    bool failed = false;
    try {
      obj = objective(static_cast<const Assignment&>(a));
      if (!std::isfinite(obj)) failed = true;
    } catch (const std::exception&) {
      failed = true;
    }
    if (failed) obj = std::numeric_limits<double>::infinity();
    sampler.tell(a, obj, failed);
    const Trial& done = sampler.history().back();
    if (done.failed) ++res.n_failures;
    if (t == 0 || done.objective < res.best.objective) res.best = done;
  }
  res.history = sampler.history();
  return res;
}

}  // namespace tabbench
