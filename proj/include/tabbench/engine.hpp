#pragma once

#include <cmath>
#include <functional>
#include <limits>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "tabbench/dataset.hpp"
#include "tabbench/folds.hpp"
#include "tabbench/forest.hpp"
#include "tabbench/gbdt.hpp"
#include "tabbench/linear.hpp"
#include "tabbench/metrics.hpp"
#include "tabbench/nn.hpp"
#include "tabbench/plsr.hpp"
#include "tabbench/preprocess.hpp"
#include "tabbench/space.hpp"
#include "tabbench/tpe.hpp"

namespace tabbench {

struct EngineConfig {
  int tpe_trials = 100;
  int tpe_warmup = 20;
  int tpe_candidates = 24;
  int ensemble_members = 16;
  int inner_max_epochs = 256;   // ceiling for patience-stopped trial training
  int final_max_epochs = 256;   // fixed-epoch budget of ensemble members
  int patience = 40;
  int max_bins = 48;            // PLE quantile bin budget
  int pca_budget = 32;          // PCA component search upper bound
  bool use_ple = true;
  uint64_t seed = 0;
};

// ---------------------------------------------------------------------------
// Per-training-partition preprocessing: robust scaling always; PCA (fitted
// once at the full budget, sliced per trial) for high-dimensional tasks.
// ---------------------------------------------------------------------------
struct FittedPrep {
  RobustScaler xscaler;
  bool use_pca = false;
  PcaTransform pca;

  Mat apply(const Mat& X, int k) const {
    Mat Z = xscaler.apply(X);
    if (use_pca) {
      require(k >= 1, ErrorKind::InvalidSpec, "high-dimensional task needs a component count");
      Z = pca.take(k).apply(Z);
    }
    return Z;
  }
};

inline FittedPrep fit_prep(const Mat& Xtr, bool high_dim, int pca_budget) {
  FittedPrep p;
  p.xscaler = fit_robust_scaler(Xtr);
  if (high_dim) {
    p.use_pca = true;
    p.pca = fit_pca(p.xscaler.apply(Xtr), pca_budget);
  }
  return p;
}

namespace engine_detail {

inline Mat take_rows(const Mat& X, const std::vector<int>& idx) {
  Mat out(static_cast<Eigen::Index>(idx.size()), X.cols());
  for (size_t i = 0; i < idx.size(); ++i) out.row(static_cast<Eigen::Index>(i)) = X.row(idx[i]);
  return out;
}

inline std::vector<double> take(const std::vector<double>& y, const std::vector<int>& idx) {
  std::vector<double> out;
  out.reserve(idx.size());
  for (int i : idx) out.push_back(y[static_cast<size_t>(i)]);
  return out;
}

inline Mat encode_with(const QuantileBins* bins, const Mat& X) {
  return bins ? ple_activations(*bins, X) : X;
}

}  // namespace engine_detail

// ---------------------------------------------------------------------------
// Classical fits behind one closure so the nested-CV loop stays uniform.
// `X_es`/`y_es` feed GBDT early stopping and are ignored by everything else.
// ---------------------------------------------------------------------------
inline std::function<std::vector<double>(const Mat&)> fit_classical(
    const ModelSpec& ms, const Mat& X, const std::vector<double>& y, const Mat* X_es,
    const std::vector<double>* y_es, uint64_t seed) {
  switch (ms.family) {
    case ModelFamily::mlr: {
      auto m = fit_linear(X, y, Penalty::none, 0.0);
      return [m](const Mat& Q) { return m.predict(Q); };
    }
    case ModelFamily::ridge: {
      auto m = fit_linear(X, y, Penalty::l2, ms.get("alpha", 1.0));
      return [m](const Mat& Q) { return m.predict(Q); };
    }
    case ModelFamily::lasso: {
      auto m = fit_linear(X, y, Penalty::l1, ms.get("alpha", 1.0));
      return [m](const Mat& Q) { return m.predict(Q); };
    }
    case ModelFamily::plsr: {
      auto m = fit_plsr(X, y, ms.get_int("n_components", 2));
      return [m](const Mat& Q) { return m.predict(Q); };
    }
    case ModelFamily::random_forest: {
      auto m = fit_forest(X, y, to_forest_spec(ms), seed);
      return [m](const Mat& Q) { return m.predict(Q); };
    }
    case ModelFamily::gbdt: {
      require(X_es != nullptr && y_es != nullptr, ErrorKind::InvalidSpec,
              "gbdt needs an early-stopping validation set");
      auto m = fit_gbdt(X, y, to_gbdt_spec(ms), *X_es, *y_es, seed);
      return [m](const Mat& Q) { return m.predict(Q); };
    }
    default:
      fail(ErrorKind::InvalidSpec, "not a classical family");
  }
}

// ---------------------------------------------------------------------------
// Deep ensembles: M members differing only in seed and (round-robin) held-out
// validation split, trained in fixed-epoch mode with best-epoch weights.
// Members that diverge are dropped; the ensemble prediction is the mean.
// ---------------------------------------------------------------------------
struct EnsembleSpec {
  int members = 16;
  int max_epochs = 256;
  int patience = 40;  // carried for bookkeeping; fixed mode ignores it
  uint64_t seed = 0;
};

struct DeepEnsemble {
  std::vector<std::unique_ptr<NeuralModel>> members;
  std::vector<int> member_seed_index;  // original member slots of survivors
  int requested = 0;

  Vec predict_encoded(const Mat& enc) const {
    require(!members.empty(), ErrorKind::NumericalFailure, "every ensemble member failed");
    Vec acc = Vec::Zero(enc.rows());
    for (const auto& m : members) acc += m->predict_encoded(enc);
    return acc / static_cast<double>(members.size());
  }
  // Mean over the first `m` surviving members (ablation curves).
  Vec predict_prefix(const Mat& enc, int m) const {
    const int use = std::min<int>(m, static_cast<int>(members.size()));
    require(use >= 1, ErrorKind::NumericalFailure, "empty ensemble prefix");
    Vec acc = Vec::Zero(enc.rows());
    for (int i = 0; i < use; ++i) acc += members[static_cast<size_t>(i)]->predict_encoded(enc);
    return acc / static_cast<double>(use);
  }
};

// `val_positions` are row positions into X_enc (usually the 5 inner folds of
// the outer-train partition, re-indexed); member m validates on split m % S.
inline DeepEnsemble train_deep_ensemble(const NeuralSpec& nspec, double lr, double weight_decay,
                                        int batch, const Mat& X_enc, const Vec& y,
                                        const std::vector<std::vector<int>>& val_positions,
                                        int n_raw_features, const QuantileBins* bins,
                                        const EnsembleSpec& es) {
  require(!val_positions.empty(), ErrorKind::InvalidSpec, "ensemble needs validation splits");
  require(es.members >= 1, ErrorKind::InvalidSpec, "ensemble needs at least one member");
  const int n = static_cast<int>(X_enc.rows());
  const int S = static_cast<int>(val_positions.size());

  DeepEnsemble ens;
  ens.requested = es.members;
  for (int m = 0; m < es.members; ++m) {
    const int split = m % S;
    std::vector<char> in_val(static_cast<size_t>(n), 0);
    for (int p : val_positions[static_cast<size_t>(split)]) in_val[static_cast<size_t>(p)] = 1;
    std::vector<int> tr, va;
    for (int i = 0; i < n; ++i) (in_val[static_cast<size_t>(i)] ? va : tr).push_back(i);
    require(!tr.empty() && !va.empty(), ErrorKind::InvalidSpec, "degenerate ensemble split");

    const uint64_t mseed = derive_seed(es.seed, 0xE57B, static_cast<uint64_t>(m));
    try {
      auto model = build_model(nspec, n_raw_features, mseed, bins);
      TrainConfig tc;
      tc.lr = lr;
      tc.weight_decay = weight_decay;
      tc.batch = batch;
      tc.max_epochs = es.max_epochs;
      tc.patience = es.patience;
      tc.seed = mseed;
      Mat Xtr = engine_detail::take_rows(X_enc, tr);
      Mat Xva = engine_detail::take_rows(X_enc, va);
      Vec ytr(tr.size()), yva(va.size());
      for (size_t i = 0; i < tr.size(); ++i) ytr(static_cast<Eigen::Index>(i)) = y(tr[i]);
      for (size_t i = 0; i < va.size(); ++i) yva(static_cast<Eigen::Index>(i)) = y(va[i]);
      train_model(*model, Xtr, ytr, Xva, yva, tc, TrainMode::fixed_epochs_best);
      ens.members.push_back(std::move(model));
      ens.member_seed_index.push_back(m);
    } catch (const Error& e) {
      if (e.kind() != ErrorKind::NumericalFailure) throw;  // diverged members are dropped
    }
  }
  require(!ens.members.empty(), ErrorKind::NumericalFailure, "every ensemble member failed");
  return ens;
}

// ---------------------------------------------------------------------------
// Nested cross-validation
// ---------------------------------------------------------------------------
struct FoldOutcome {
  int fold = 0;
  Assignment best;
  double best_objective = std::numeric_limits<double>::infinity();
  int failed_trials = 0;
  int ensemble_members_used = 0;  // 0 for classical families
  std::vector<int> test_indices;
  std::vector<double> predictions;  // original units, aligned with test_indices
  double fold_rmse = 0.0;
};

struct TaskRunResult {
  std::string task_id, dataset, property, model, group;
  int n_samples = 0, n_features = 0;
  uint64_t seed = 0;
  std::vector<FoldOutcome> folds;
  std::vector<double> pooled_pred;  // indexed by sample
  double rmse = 0.0, r2 = 0.0;
};

namespace engine_detail {

struct SplitEval {
  const Mat* X = nullptr;
  const std::vector<double>* y = nullptr;
  const EngineConfig* cfg = nullptr;
  bool high_dim = false;

  // Lazily fitted preprocessing per training partition (keyed by caller).
  FittedPrep& prep_for(std::optional<FittedPrep>& slot, const std::vector<int>& train_idx) const {
    if (!slot) slot = fit_prep(take_rows(*X, train_idx), high_dim, cfg->pca_budget);
    return *slot;
  }

  // One (train, validate) evaluation of a concrete assignment; returns the
  // validation RMSE in original target units.
  double eval(const ModelSpec& ms, const FittedPrep& prep, const std::vector<int>& train_idx,
              const std::vector<int>& val_idx, uint64_t seed) const {
    const int k = ms.pca_components();
    Mat Xtr = prep.apply(take_rows(*X, train_idx), k);
    Mat Xva = prep.apply(take_rows(*X, val_idx), k);
    std::vector<double> ytr = take(*y, train_idx);
    std::vector<double> yva = take(*y, val_idx);

    if (!is_neural(ms.family)) {
      auto predict = fit_classical(ms, Xtr, ytr, &Xva, &yva, seed);
      return rmse(yva, predict(Xva));
    }

    RobustScaler ys = fit_target_scaler(ytr);
    QuantileBins bins;
    const QuantileBins* pb = nullptr;
    if (cfg->use_ple) {
      bins = compute_quantile_bins(Xtr, cfg->max_bins);
      pb = &bins;
    }
    NeuralSpec ns = to_neural_spec(ms, cfg->use_ple);
    auto model = build_model(ns, static_cast<int>(Xtr.cols()), seed, pb);
    TrainConfig tc;
    tc.lr = ms.get("learning_rate", 1e-3);
    tc.weight_decay = ms.get("weight_decay", 0.0);
    tc.batch = ms.get_int("batch", 32);
    tc.max_epochs = cfg->inner_max_epochs;
    tc.patience = cfg->patience;
    tc.seed = seed;
    Mat enc_tr = model->encode(Xtr);
    Mat enc_va = model->encode(Xva);
    train_model(*model, enc_tr, to_vec(ys.apply_targets(ytr)), enc_va,
                to_vec(ys.apply_targets(yva)), tc, TrainMode::patience);
    Vec vp = model->predict_encoded(enc_va);
    std::vector<double> inv(static_cast<size_t>(vp.size()));
    for (Eigen::Index i = 0; i < vp.size(); ++i)
      inv[static_cast<size_t>(i)] = ys.invert_target(vp(i));
    return rmse(yva, inv);
  }
};

}  // namespace engine_detail

// Runs one outer fold: a TPE study over the inner folds, then the final refit
// on the outer-train partition (deep ensemble for neural families; single
// refit for classical ones, with GBDT stopping on inner split 0).
inline FoldOutcome run_outer_fold(const Task& task, ModelFamily family, const EngineConfig& cfg,
                                  const FoldPlan& plan, int o, uint64_t task_seed) {
  const Dataset& ds = *task.dataset;
  const bool high_dim = classify_group(ds) == DimGroup::HighDimensional;
  const std::vector<double>& y = task.targets();

  engine_detail::SplitEval se;
  se.X = &ds.features;
  se.y = &y;
  se.cfg = &cfg;
  se.high_dim = high_dim;

  SearchSpace space = make_search_space(family, high_dim);
  const uint64_t fold_seed = derive_seed(task_seed, 0x0F01D, static_cast<uint64_t>(o));

  // Inner preprocessing is independent of the trial assignment: fit lazily
  // once per inner split and reuse across the study.
  std::vector<std::optional<FittedPrep>> inner_prep(FoldPlan::kInner);
  std::vector<std::vector<int>> inner_train(FoldPlan::kInner);
  for (int j = 0; j < FoldPlan::kInner; ++j) inner_train[j] = inner_train_indices(plan, o, j);

  int trial_counter = 0;
  auto objective = [&](const Assignment& a) -> double {
    ModelSpec ms{family, a};
    const uint64_t trial_seed =
        derive_seed(fold_seed, 0x731A1, static_cast<uint64_t>(trial_counter++));
    double sum = 0.0;
    for (int j = 0; j < FoldPlan::kInner; ++j) {
      const FittedPrep& prep = se.prep_for(inner_prep[static_cast<size_t>(j)], inner_train[j]);
      sum += se.eval(ms, prep, inner_train[j],
                     plan.inner_folds[static_cast<size_t>(o)][static_cast<size_t>(j)],
                     derive_seed(trial_seed, static_cast<uint64_t>(j)));
    }
    return sum / FoldPlan::kInner;
  };

  TpeConfig tpe;
  tpe.n_trials = space.dims.empty() ? 1 : cfg.tpe_trials;  // nothing to search
  tpe.warmup = cfg.tpe_warmup;
  tpe.candidates = cfg.tpe_candidates;
  StudyResult study = run_study(objective, space, tpe, fold_seed);

  FoldOutcome out;
  out.fold = o;
  out.best = study.best.x;
  out.best_objective = study.best.objective;
  out.failed_trials = study.n_failures;
  require(!study.best.failed, ErrorKind::NumericalFailure,
          "every trial failed for " + task.id() + " / " + to_string(family));

  // ---- final refit on the outer-train partition ----
  const std::vector<int>& otr = plan.outer_train[static_cast<size_t>(o)];
  const std::vector<int>& ote = plan.outer_test[static_cast<size_t>(o)];
  const ModelSpec ms{family, study.best.x};
  const int k = ms.pca_components();
  FittedPrep prep = fit_prep(engine_detail::take_rows(ds.features, otr), high_dim, cfg.pca_budget);
  Mat Xtr = prep.apply(engine_detail::take_rows(ds.features, otr), k);
  Mat Xte = prep.apply(engine_detail::take_rows(ds.features, ote), k);
  std::vector<double> ytr = engine_detail::take(y, otr);
  const uint64_t refit_seed = derive_seed(fold_seed, 0x5EF17);

  std::vector<double> preds;
  if (!is_neural(family)) {
    if (family == ModelFamily::gbdt) {
      // Early stopping holds out inner split 0 of the outer-train.
      std::vector<int> gtr = inner_train_indices(plan, o, 0);
      const std::vector<int>& ges = plan.inner_folds[static_cast<size_t>(o)][0];
      Mat Xg = prep.apply(engine_detail::take_rows(ds.features, gtr), k);
      Mat Xe = prep.apply(engine_detail::take_rows(ds.features, ges), k);
      std::vector<double> yg = engine_detail::take(y, gtr);
      std::vector<double> ye = engine_detail::take(y, ges);
      auto predict = fit_classical(ms, Xg, yg, &Xe, &ye, refit_seed);
      preds = predict(Xte);
    } else {
      auto predict = fit_classical(ms, Xtr, ytr, nullptr, nullptr, refit_seed);
      preds = predict(Xte);
    }
  } else {
    RobustScaler ys = fit_target_scaler(ytr);
    QuantileBins bins;
    const QuantileBins* pb = nullptr;
    if (cfg.use_ple) {
      bins = compute_quantile_bins(Xtr, cfg.max_bins);
      pb = &bins;
    }
    // Re-index the inner folds to positions within the outer-train matrix.
    std::vector<int> pos(static_cast<size_t>(ds.n_samples()), -1);
    for (size_t i = 0; i < otr.size(); ++i) pos[static_cast<size_t>(otr[i])] = static_cast<int>(i);
    std::vector<std::vector<int>> val_positions(FoldPlan::kInner);
    for (int j = 0; j < FoldPlan::kInner; ++j)
      for (int g : plan.inner_folds[static_cast<size_t>(o)][static_cast<size_t>(j)])
        val_positions[static_cast<size_t>(j)].push_back(pos[static_cast<size_t>(g)]);

    NeuralSpec ns = to_neural_spec(ms, cfg.use_ple);
    EnsembleSpec es;
    es.members = cfg.ensemble_members;
    es.max_epochs = cfg.final_max_epochs;
    es.patience = cfg.patience;
    es.seed = refit_seed;
    Mat enc_tr = engine_detail::encode_with(pb, Xtr);
    Mat enc_te = engine_detail::encode_with(pb, Xte);
    DeepEnsemble ens =
        train_deep_ensemble(ns, ms.get("learning_rate", 1e-3), ms.get("weight_decay", 0.0),
                            ms.get_int("batch", 32), enc_tr, to_vec(ys.apply_targets(ytr)),
                            val_positions, static_cast<int>(Xtr.cols()), pb, es);
    out.ensemble_members_used = static_cast<int>(ens.members.size());
    Vec p = ens.predict_encoded(enc_te);
    preds.resize(static_cast<size_t>(p.size()));
    for (Eigen::Index i = 0; i < p.size(); ++i)
      preds[static_cast<size_t>(i)] = ys.invert_target(p(i));
  }

  out.test_indices = ote;
  out.predictions = preds;
  out.fold_rmse = rmse(engine_detail::take(y, ote), preds);
  return out;
}

inline TaskRunResult run_nested_cv(const Task& task, ModelFamily family, const EngineConfig& cfg) {
  const Dataset& ds = *task.dataset;
  const std::vector<double>& y = task.targets();
  const uint64_t task_seed = derive_seed(cfg.seed, fnv1a(task.id()));
  FoldPlan plan = make_fold_plan(ds.n_samples(), task_seed);

  TaskRunResult res;
  res.task_id = task.id();
  res.dataset = ds.name;
  res.property = to_string(task.property);
  res.model = to_string(family);
  res.group = classify_group(ds) == DimGroup::HighDimensional ? "high" : "low";
  res.n_samples = ds.n_samples();
  res.n_features = ds.n_features();
  res.seed = cfg.seed;
  res.pooled_pred.assign(static_cast<size_t>(ds.n_samples()), 0.0);

  for (int o = 0; o < FoldPlan::kOuter; ++o) {
    FoldOutcome fo = run_outer_fold(task, family, cfg, plan, o, task_seed);
    for (size_t i = 0; i < fo.test_indices.size(); ++i)
      res.pooled_pred[static_cast<size_t>(fo.test_indices[i])] = fo.predictions[i];
    res.folds.push_back(std::move(fo));
  }

  res.rmse = rmse(y, res.pooled_pred);
  res.r2 = r2(y, res.pooled_pred);
  return res;
}

// ---------------------------------------------------------------------------
// Ensemble-size ablation: per outer fold, train the largest requested member
// count once and evaluate prefix means, pooling predictions across folds.
// With tpe_trials == 0 the space's deterministic default assignment is used.
// ---------------------------------------------------------------------------
struct AblationResult {
  std::string task_id, model;
  std::vector<int> sizes;
  std::vector<double> rmse_by_size;
  std::vector<double> marginal;  // improvement from sizes[i-1] to sizes[i]
};

inline AblationResult ensemble_ablation(const Task& task, ModelFamily family,
                                        const EngineConfig& cfg, std::vector<int> sizes = {}) {
  require(is_neural(family), ErrorKind::InvalidSpec, "ablation applies to neural families");
  if (sizes.empty())
    for (int m = 1; m <= 64; ++m) sizes.push_back(m);
  const int m_max = *std::max_element(sizes.begin(), sizes.end());

  const Dataset& ds = *task.dataset;
  const bool high_dim = classify_group(ds) == DimGroup::HighDimensional;
  const std::vector<double>& y = task.targets();
  const uint64_t task_seed = derive_seed(cfg.seed, fnv1a(task.id()), 0xAB1A);
  FoldPlan plan = make_fold_plan(ds.n_samples(), task_seed);

  // One pooled prediction vector per candidate size.
  std::vector<std::vector<double>> pooled(sizes.size(),
                                          std::vector<double>(static_cast<size_t>(ds.n_samples())));

  for (int o = 0; o < FoldPlan::kOuter; ++o) {
    const uint64_t fold_seed = derive_seed(task_seed, 0x0F01D, static_cast<uint64_t>(o));
    SearchSpace space = make_search_space(family, high_dim);

    Assignment best;
    if (cfg.tpe_trials <= 0) {
      best = default_assignment(space);
    } else {
      engine_detail::SplitEval se;
      se.X = &ds.features;
      se.y = &y;
      se.cfg = &cfg;
      se.high_dim = high_dim;
      std::vector<std::optional<FittedPrep>> inner_prep(FoldPlan::kInner);
      std::vector<std::vector<int>> inner_train(FoldPlan::kInner);
      for (int j = 0; j < FoldPlan::kInner; ++j) inner_train[j] = inner_train_indices(plan, o, j);
      int trial_counter = 0;
      auto objective = [&](const Assignment& a) -> double {
        ModelSpec ms{family, a};
        const uint64_t trial_seed =
            derive_seed(fold_seed, 0x731A1, static_cast<uint64_t>(trial_counter++));
        double sum = 0.0;
        for (int j = 0; j < FoldPlan::kInner; ++j) {
          const FittedPrep& prep =
              se.prep_for(inner_prep[static_cast<size_t>(j)], inner_train[j]);
          sum += se.eval(ms, prep, inner_train[j],
                         plan.inner_folds[static_cast<size_t>(o)][static_cast<size_t>(j)],
                         derive_seed(trial_seed, static_cast<uint64_t>(j)));
        }
        return sum / FoldPlan::kInner;
      };
      TpeConfig tpe;
      tpe.n_trials = space.dims.empty() ? 1 : cfg.tpe_trials;
      tpe.warmup = cfg.tpe_warmup;
      tpe.candidates = cfg.tpe_candidates;
      StudyResult study = run_study(objective, space, tpe, fold_seed);
      require(!study.best.failed, ErrorKind::NumericalFailure, "every ablation trial failed");
      best = study.best.x;
    }

    const std::vector<int>& otr = plan.outer_train[static_cast<size_t>(o)];
    const std::vector<int>& ote = plan.outer_test[static_cast<size_t>(o)];
    const ModelSpec ms{family, best};
    const int k = ms.pca_components();
    FittedPrep prep =
        fit_prep(engine_detail::take_rows(ds.features, otr), high_dim, cfg.pca_budget);
    Mat Xtr = prep.apply(engine_detail::take_rows(ds.features, otr), k);
    Mat Xte = prep.apply(engine_detail::take_rows(ds.features, ote), k);
    std::vector<double> ytr = engine_detail::take(y, otr);

    RobustScaler ys = fit_target_scaler(ytr);
    QuantileBins bins;
    const QuantileBins* pb = nullptr;
    if (cfg.use_ple) {
      bins = compute_quantile_bins(Xtr, cfg.max_bins);
      pb = &bins;
    }
    std::vector<int> pos(static_cast<size_t>(ds.n_samples()), -1);
    for (size_t i = 0; i < otr.size(); ++i) pos[static_cast<size_t>(otr[i])] = static_cast<int>(i);
    std::vector<std::vector<int>> val_positions(FoldPlan::kInner);
    for (int j = 0; j < FoldPlan::kInner; ++j)
      for (int g : plan.inner_folds[static_cast<size_t>(o)][static_cast<size_t>(j)])
        val_positions[static_cast<size_t>(j)].push_back(pos[static_cast<size_t>(g)]);

    NeuralSpec ns = to_neural_spec(ms, cfg.use_ple);
    EnsembleSpec es;
    es.members = m_max;
    es.max_epochs = cfg.final_max_epochs;
    es.patience = cfg.patience;
    es.seed = derive_seed(fold_seed, 0x5EF17);
    Mat enc_tr = engine_detail::encode_with(pb, Xtr);
    Mat enc_te = engine_detail::encode_with(pb, Xte);
    DeepEnsemble ens =
        train_deep_ensemble(ns, ms.get("learning_rate", 1e-3), ms.get("weight_decay", 0.0),
                            ms.get_int("batch", 32), enc_tr, to_vec(ys.apply_targets(ytr)),
                            val_positions, static_cast<int>(Xtr.cols()), pb, es);

    for (size_t si = 0; si < sizes.size(); ++si) {
      Vec p = ens.predict_prefix(enc_te, sizes[si]);
      for (Eigen::Index i = 0; i < p.size(); ++i)
        pooled[si][static_cast<size_t>(ote[static_cast<size_t>(i)])] = ys.invert_target(p(i));
    }
  }

  AblationResult res;
  res.task_id = task.id();
  res.model = to_string(family);
  res.sizes = sizes;
  for (size_t si = 0; si < sizes.size(); ++si) res.rmse_by_size.push_back(rmse(y, pooled[si]));
  for (size_t si = 1; si < sizes.size(); ++si)
    res.marginal.push_back(res.rmse_by_size[si - 1] - res.rmse_by_size[si]);
  return res;
}

}  // namespace tabbench
