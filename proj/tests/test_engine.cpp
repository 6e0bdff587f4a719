#include <catch2/catch_amalgamated.hpp>
#include <algorithm>
#include <cmath>
#include <numeric>
#include <vector>

#include "tabbench/engine.hpp"
#include "tabbench/rng.hpp"

using namespace tabbench;

namespace {

Dataset make_linear_dataset(int n, int d, uint64_t seed, bool shuffle_targets = false) {
  Rng rng(seed);
  Dataset ds;
  ds.name = "synthetic";
  ds.sensor_kind = SensorKind::non_spectral;
  ds.features.resize(n, d);
  std::vector<double> y(n);
  for (int i = 0; i < n; ++i) {
    for (int j = 0; j < d; ++j) ds.features(i, j) = rng.normal();
    y[i] = 2.0 * ds.features(i, 0) + 0.1 * rng.normal();
  }
  if (shuffle_targets) {
    std::vector<int> perm(n);
    std::iota(perm.begin(), perm.end(), 0);
    rng.shuffle(perm);
    std::vector<double> shuffled(n);
    for (int i = 0; i < n; ++i) shuffled[i] = y[perm[i]];
    y = shuffled;
  }
  for (int j = 0; j < d; ++j) ds.feature_names.push_back("f" + std::to_string(j));
  ds.targets[Property::pH] = y;
  return ds;
}

EngineConfig tiny_config() {
  EngineConfig cfg;
  cfg.tpe_trials = 8;
  cfg.tpe_warmup = 3;
  cfg.tpe_candidates = 8;
  cfg.ensemble_members = 3;
  cfg.inner_max_epochs = 3;
  cfg.final_max_epochs = 3;
  cfg.patience = 2;
  cfg.use_ple = false;
  cfg.seed = 5;
  return cfg;
}

}  // namespace

TEST_CASE("nested cv recovers a linear signal with ridge") {
  Dataset ds = make_linear_dataset(60, 3, 901);
  Task task{&ds, Property::pH};
  EngineConfig cfg = tiny_config();

  TaskRunResult res = run_nested_cv(task, ModelFamily::ridge, cfg);
  CHECK(res.r2 > 0.9);
  CHECK(res.pooled_pred.size() == 60);
  REQUIRE(res.folds.size() == 5);

  // Outer test folds tile the sample set exactly once.
  std::vector<int> covered;
  for (const auto& f : res.folds) {
    CHECK(!f.test_indices.empty());
    CHECK(f.test_indices.size() == f.predictions.size());
    covered.insert(covered.end(), f.test_indices.begin(), f.test_indices.end());
  }
  std::sort(covered.begin(), covered.end());
  std::vector<int> everyone(60);
  std::iota(everyone.begin(), everyone.end(), 0);
  CHECK(covered == everyone);

  CHECK(res.group == "low");
  CHECK(res.model == "ridge");
  CHECK(res.n_samples == 60);
}

TEST_CASE("shuffled targets score near zero") {
  Dataset ds = make_linear_dataset(60, 3, 902, /*shuffle_targets=*/true);
  Task task{&ds, Property::pH};
  TaskRunResult res = run_nested_cv(task, ModelFamily::ridge, tiny_config());
  CHECK(res.r2 < 0.1);
}

TEST_CASE("inner evaluation ignores rows outside its train and validation sets") {
  Dataset ds = make_linear_dataset(40, 4, 903);
  std::vector<double>& y = ds.targets[Property::pH];
  EngineConfig cfg = tiny_config();

  std::vector<int> train_idx, val_idx, untouched;
  for (int i = 0; i < 24; ++i) train_idx.push_back(i);
  for (int i = 24; i < 32; ++i) val_idx.push_back(i);
  for (int i = 32; i < 40; ++i) untouched.push_back(i);

  engine_detail::SplitEval se;
  se.X = &ds.features;
  se.y = &y;
  se.cfg = &cfg;
  se.high_dim = false;

  auto eval_all = [&]() {
    std::vector<double> out;
    FittedPrep prep = fit_prep(engine_detail::take_rows(ds.features, train_idx), false, 0);
    for (ModelFamily f : {ModelFamily::ridge, ModelFamily::lasso, ModelFamily::plsr,
                          ModelFamily::random_forest, ModelFamily::gbdt, ModelFamily::mlp}) {
      ModelSpec ms{f, default_assignment(make_search_space(f, false))};
      out.push_back(se.eval(ms, prep, train_idx, val_idx, 77));
    }
    return out;
  };

  std::vector<double> before = eval_all();
  for (int i : untouched) {
    ds.features.row(i).setConstant(1e6);
    y[static_cast<size_t>(i)] = -1e6;
  }
  std::vector<double> after = eval_all();
  CHECK(before == after);  // bitwise: held-out rows cannot influence fitting
}

TEST_CASE("preprocessing artifacts depend only on the training partition") {
  Rng rng(904);
  Mat X(30, 6);
  for (int i = 0; i < 30; ++i)
    for (int j = 0; j < 6; ++j) X(i, j) = rng.normal();
  std::vector<int> train_idx;
  for (int i = 0; i < 20; ++i) train_idx.push_back(i);

  FittedPrep a = fit_prep(engine_detail::take_rows(X, train_idx), true, 4);
  QuantileBins bins_a =
      compute_quantile_bins(engine_detail::take_rows(X, train_idx), 8);

  Mat X2 = X;
  for (int i = 20; i < 30; ++i) X2.row(i).setConstant(123.0);
  FittedPrep b = fit_prep(engine_detail::take_rows(X2, train_idx), true, 4);
  QuantileBins bins_b =
      compute_quantile_bins(engine_detail::take_rows(X2, train_idx), 8);

  CHECK(a.xscaler.center == b.xscaler.center);
  CHECK(a.xscaler.scale == b.xscaler.scale);
  CHECK(a.pca.mean == b.pca.mean);
  CHECK(a.pca.components == b.pca.components);
  CHECK(bins_a.edges == bins_b.edges);
}

TEST_CASE("high-dimensional prep projects onto the requested component count") {
  Rng rng(905);
  Mat X(20, 50);
  for (int i = 0; i < 20; ++i)
    for (int j = 0; j < 50; ++j) X(i, j) = rng.normal();

  FittedPrep p = fit_prep(X, true, 8);
  CHECK(p.use_pca);
  CHECK(p.apply(X, 4).cols() == 4);
  CHECK(p.apply(X, 8).cols() == 8);
  CHECK_THROWS_AS(p.apply(X, 0), Error);

  FittedPrep low = fit_prep(X, false, 8);
  CHECK_FALSE(low.use_pca);
  CHECK(low.apply(X, 0).cols() == 50);  // k ignored without PCA
}

TEST_CASE("deep ensembles assign members round-robin and average exactly") {
  Rng rng(906);
  const int n = 25, d = 3;
  Mat X(n, d);
  Vec y(n);
  for (int i = 0; i < n; ++i) {
    for (int j = 0; j < d; ++j) X(i, j) = rng.normal();
    y(i) = X(i, 0) + 0.2 * rng.normal();
  }
  std::vector<std::vector<int>> val_positions(5);
  for (int i = 0; i < n; ++i) val_positions[static_cast<size_t>(i % 5)].push_back(i);

  NeuralSpec ns;
  ns.family = ModelFamily::mlp;
  ns.use_ple = false;
  EnsembleSpec es;
  es.members = 16;
  es.max_epochs = 2;
  es.seed = 31;

  DeepEnsemble ens = train_deep_ensemble(ns, 1e-3, 0.0, 8, X, y, val_positions, d, nullptr, es);
  REQUIRE(ens.members.size() == 16);
  CHECK(ens.requested == 16);
  std::vector<int> expect(16);
  std::iota(expect.begin(), expect.end(), 0);
  CHECK(ens.member_seed_index == expect);

  // Split m % 5: split 0 serves members {0,5,10,15}, the rest three each.
  std::vector<int> per_split(5, 0);
  for (int m : ens.member_seed_index) ++per_split[m % 5];
  CHECK(per_split == std::vector<int>{4, 3, 3, 3, 3});

  // The ensemble prediction is the arithmetic mean of its members.
  Vec mean = Vec::Zero(n);
  for (const auto& m : ens.members) mean += m->predict_encoded(X);
  mean /= 16.0;
  CHECK(ens.predict_encoded(X) == mean);
  CHECK(ens.predict_prefix(X, 16) == mean);

  // A single-member ensemble is just that one trained model.
  EnsembleSpec one = es;
  one.members = 1;
  DeepEnsemble solo = train_deep_ensemble(ns, 1e-3, 0.0, 8, X, y, val_positions, d, nullptr, one);
  REQUIRE(solo.members.size() == 1);

  std::vector<int> tr, va;
  std::vector<char> in_val(n, 0);
  for (int p : val_positions[0]) in_val[static_cast<size_t>(p)] = 1;
  for (int i = 0; i < n; ++i) (in_val[static_cast<size_t>(i)] ? va : tr).push_back(i);
  const uint64_t mseed = derive_seed(es.seed, 0xE57B, 0);
  auto manual = build_model(ns, d, mseed, nullptr);
  TrainConfig tc;
  tc.lr = 1e-3;
  tc.weight_decay = 0.0;
  tc.batch = 8;
  tc.max_epochs = 2;
  tc.patience = es.patience;
  tc.seed = mseed;
  Mat Xtr = engine_detail::take_rows(X, tr);
  Mat Xva = engine_detail::take_rows(X, va);
  Vec ytr(tr.size()), yva(va.size());
  for (size_t i = 0; i < tr.size(); ++i) ytr(static_cast<Eigen::Index>(i)) = y(tr[i]);
  for (size_t i = 0; i < va.size(); ++i) yva(static_cast<Eigen::Index>(i)) = y(va[i]);
  train_model(*manual, Xtr, ytr, Xva, yva, tc, TrainMode::fixed_epochs_best);
  CHECK(solo.predict_encoded(X) == manual->predict_encoded(X));
}

TEST_CASE("an ensemble whose members all diverge raises a numerical failure") {
  Mat X(10, 2);
  Vec y(10);
  Rng rng(907);
  for (int i = 0; i < 10; ++i) {
    X(i, 0) = rng.normal();
    X(i, 1) = rng.normal();
    y(i) = 1e3 * X(i, 0);
  }
  std::vector<std::vector<int>> val_positions{{0, 1}, {2, 3}, {4, 5}, {6, 7}, {8, 9}};
  NeuralSpec ns;
  ns.family = ModelFamily::mlp;
  ns.use_ple = false;
  EnsembleSpec es;
  es.members = 3;
  es.max_epochs = 40;
  es.seed = 13;
  bool threw = false;
  try {
    train_deep_ensemble(ns, 1e18, 0.0, 4, X, y, val_positions, 2, nullptr, es);
  } catch (const Error& e) {
    threw = true;
    CHECK(e.kind() == ErrorKind::NumericalFailure);
  }
  CHECK(threw);
}

TEST_CASE("full runs are bit-reproducible") {
  Dataset ds = make_linear_dataset(40, 3, 908);
  Task task{&ds, Property::pH};
  EngineConfig cfg = tiny_config();

  TaskRunResult a = run_nested_cv(task, ModelFamily::ridge, cfg);
  TaskRunResult b = run_nested_cv(task, ModelFamily::ridge, cfg);
  CHECK(a.pooled_pred == b.pooled_pred);
  CHECK(a.rmse == b.rmse);

  EngineConfig ncfg = cfg;
  ncfg.tpe_trials = 4;
  ncfg.tpe_warmup = 2;
  TaskRunResult m1 = run_nested_cv(task, ModelFamily::mlp, ncfg);
  TaskRunResult m2 = run_nested_cv(task, ModelFamily::mlp, ncfg);
  CHECK(m1.pooled_pred == m2.pooled_pred);
  CHECK(std::isfinite(m1.r2));
  for (const auto& f : m1.folds) CHECK(f.ensemble_members_used == 3);

  EngineConfig other = cfg;
  other.seed = 6;
  TaskRunResult c = run_nested_cv(task, ModelFamily::ridge, other);
  CHECK(a.pooled_pred != c.pooled_pred);
}

TEST_CASE("ensemble-size ablation produces one pooled curve per size") {
  Dataset ds = make_linear_dataset(25, 2, 909);
  Task task{&ds, Property::pH};
  EngineConfig cfg = tiny_config();
  cfg.tpe_trials = 0;  // deterministic default assignment, no study

  AblationResult res = ensemble_ablation(task, ModelFamily::mlp, cfg, {1, 2, 4});
  CHECK(res.sizes == std::vector<int>{1, 2, 4});
  REQUIRE(res.rmse_by_size.size() == 3);
  REQUIRE(res.marginal.size() == 2);
  for (double v : res.rmse_by_size) CHECK(std::isfinite(v));
  CHECK_THAT(res.marginal[0],
             Catch::Matchers::WithinAbs(res.rmse_by_size[0] - res.rmse_by_size[1], 1e-15));
  CHECK_THAT(res.marginal[1],
             Catch::Matchers::WithinAbs(res.rmse_by_size[1] - res.rmse_by_size[2], 1e-15));

  CHECK_THROWS_AS(ensemble_ablation(task, ModelFamily::ridge, cfg, {1, 2}), Error);
}
