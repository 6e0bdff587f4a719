#include <catch2/catch_amalgamated.hpp>
#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <vector>

#include "tabbench/rng.hpp"
#include "tabbench/space.hpp"
#include "tabbench/tpe.hpp"

using namespace tabbench;

namespace {

bool in_choices(const Dimension& d, double v) {
  return std::find(d.choices.begin(), d.choices.end(), v) != d.choices.end();
}

}  // namespace

TEST_CASE("search spaces sample inside their declared bounds") {
  const ModelFamily fams[] = {ModelFamily::mlr,  ModelFamily::ridge, ModelFamily::lasso,
                              ModelFamily::plsr, ModelFamily::random_forest,
                              ModelFamily::gbdt, ModelFamily::mlp,   ModelFamily::tabm,
                              ModelFamily::nca,  ModelFamily::ftt};
  for (ModelFamily f : fams) {
    for (bool high : {false, true}) {
      SearchSpace s = make_search_space(f, high);
      INFO(to_string(f) << (high ? " high" : " low"));

      if (high) {
        const Dimension* pca = s.find("pca_components");
        REQUIRE(pca != nullptr);
        CHECK(pca->kind == DimKind::integer_range);
        CHECK(pca->lo == 2.0);
        CHECK(pca->hi == 32.0);
      } else {
        CHECK(s.find("pca_components") == nullptr);
      }
      if (f == ModelFamily::mlr) {
        CHECK(s.dims.size() == (high ? 1u : 0u));
      } else {
        CHECK(!s.dims.empty());
      }
      if (f == ModelFamily::plsr && high) {
        CHECK(s.find("n_components") != nullptr);  // both reductions searched
      }

      Rng rng(fnv1a(to_string(f)) + (high ? 1 : 0));
      for (int k = 0; k < 100; ++k) {
        Assignment a = sample_assignment(s, rng);
        REQUIRE(a.size() == s.dims.size());
        for (const Dimension& d : s.dims) {
          const double v = a.at(d.name);
          switch (d.kind) {
            case DimKind::uniform:
            case DimKind::loguniform:
              CHECK(v >= d.lo);
              CHECK(v <= d.hi);
              break;
            case DimKind::integer_range:
              CHECK(v == std::floor(v));
              CHECK(v >= d.lo);
              CHECK(v <= d.hi);
              break;
            case DimKind::categorical:
              CHECK(in_choices(d, v));
              break;
          }
        }
      }
    }
  }
}

TEST_CASE("default assignment is deterministic and in bounds") {
  SearchSpace s = make_search_space(ModelFamily::gbdt, true);
  Assignment a = default_assignment(s);
  Assignment b = default_assignment(s);
  CHECK(a == b);
  for (const Dimension& d : s.dims) {
    const double v = a.at(d.name);
    if (d.kind == DimKind::categorical) {
      CHECK(in_choices(d, v));
    } else {
      CHECK(v >= d.lo);
      CHECK(v <= d.hi);
    }
  }
}

TEST_CASE("good-set size follows the ceil(gamma n) rule with a floor of one") {
  SearchSpace s;
  s.uniform("x", 0.0, 1.0);
  TpeConfig cfg;
  cfg.gamma = 0.1;
  TpeSampler sampler(s, cfg, 5);
  const int expect[] = {1, 1, 1, 1, 1, 1, 1, 1, 1, 1,  // n = 1..10
                        2, 2, 2, 2, 2, 2, 2, 2, 2, 2}; // n = 11..20
  for (int n = 1; n <= 20; ++n) {
    sampler.tell({{"x", 0.5}}, static_cast<double>(n), false);
    CHECK(sampler.good_count() == expect[n - 1]);
  }
  for (int n = 21; n <= 95; ++n) sampler.tell({{"x", 0.5}}, 0.0, false);
  CHECK(sampler.good_count() == 10);  // ceil(9.5)
}

TEST_CASE("tpe zeroes in on a quadratic optimum") {
  SearchSpace s;
  s.uniform("x", -10.0, 10.0);
  TpeConfig cfg;
  cfg.n_trials = 120;
  cfg.warmup = 20;
  StudyResult res = run_study(
      [](const Assignment& a) {
        const double x = a.at("x");
        return (x - 2.0) * (x - 2.0);
      },
      s, cfg, 11);
  CHECK(std::abs(res.best.x.at("x") - 2.0) < 0.2);
  CHECK(static_cast<int>(res.history.size()) == 120);
}

TEST_CASE("tpe beats plain random search on most seeds") {
  SearchSpace s;
  s.uniform("x", -10.0, 10.0);
  s.uniform("y", -10.0, 10.0);
  auto obj = [](const Assignment& a) {
    const double x = a.at("x"), y = a.at("y");
    return (x - 2.0) * (x - 2.0) + 0.5 * (y + 4.0) * (y + 4.0);
  };
  TpeConfig cfg;
  cfg.n_trials = 100;
  cfg.warmup = 20;

  int tpe_wins = 0;
  for (uint64_t seed = 0; seed < 40; ++seed) {
    StudyResult res = run_study(obj, s, cfg, seed);
    Rng rng(derive_seed(seed, 0xAB));
    double rand_best = std::numeric_limits<double>::infinity();
    for (int t = 0; t < 100; ++t)
      rand_best = std::min(rand_best, obj(sample_assignment(s, rng)));
    if (res.best.objective < rand_best) ++tpe_wins;
  }
  CHECK(tpe_wins >= 32);
}

TEST_CASE("a constant objective keeps the earliest trial as best") {
  SearchSpace s;
  s.uniform("x", 0.0, 1.0);
  TpeConfig cfg;
  cfg.n_trials = 30;
  cfg.warmup = 5;
  StudyResult res = run_study([](const Assignment&) { return 3.14; }, s, cfg, 3);
  CHECK(res.best.objective == 3.14);
  CHECK(res.best.x == res.history.front().x);
  CHECK(res.n_failures == 0);
}

TEST_CASE("exceptions and non-finite scores become failed trials") {
  SearchSpace s;
  s.uniform("x", -1.0, 1.0);
  TpeConfig cfg;
  cfg.n_trials = 50;
  cfg.warmup = 10;

  StudyResult all_fail = run_study(
      [](const Assignment&) -> double { throw std::runtime_error("boom"); }, s, cfg, 17);
  CHECK(all_fail.n_failures == 50);
  CHECK(std::isinf(all_fail.best.objective));
  for (const Trial& t : all_fail.history) CHECK(t.failed);

  StudyResult partial = run_study(
      [](const Assignment& a) -> double {
        const double x = a.at("x");
        if (x < 0.0) throw std::runtime_error("left half fails");
        return x;
      },
      s, cfg, 19);
  CHECK(partial.n_failures > 0);
  CHECK(partial.n_failures < 50);
  CHECK(std::isfinite(partial.best.objective));
  CHECK(partial.best.x.at("x") >= 0.0);

  StudyResult nan_obj = run_study(
      [](const Assignment& a) {
        const double x = a.at("x");
        return x > 0.0 ? x : std::numeric_limits<double>::quiet_NaN();
      },
      s, cfg, 23);
  CHECK(nan_obj.n_failures > 0);
  CHECK(std::isfinite(nan_obj.best.objective));
}

TEST_CASE("studies are reproducible under a fixed seed") {
  SearchSpace s = make_search_space(ModelFamily::gbdt, false);
  auto obj = [](const Assignment& a) {
    return std::abs(a.at("learning_rate") - 0.05) + a.at("gamma");
  };
  TpeConfig cfg;
  cfg.n_trials = 40;
  cfg.warmup = 10;
  StudyResult a = run_study(obj, s, cfg, 29);
  StudyResult b = run_study(obj, s, cfg, 29);
  REQUIRE(a.history.size() == b.history.size());
  for (size_t i = 0; i < a.history.size(); ++i) {
    CHECK(a.history[i].x == b.history[i].x);
    CHECK(a.history[i].objective == b.history[i].objective);
  }
  CHECK(a.best.x == b.best.x);

  StudyResult c = run_study(obj, s, cfg, 30);
  bool differs = false;
  for (size_t i = 0; i < a.history.size(); ++i)
    if (a.history[i].x != c.history[i].x) differs = true;
  CHECK(differs);
}

TEST_CASE("the model concentrates on the winning categorical choice") {
  SearchSpace s;
  s.categorical("c", {0, 1, 2, 3});
  s.uniform("x", -1.0, 1.0);
  TpeConfig cfg;
  cfg.n_trials = 120;
  cfg.warmup = 20;
  StudyResult res = run_study(
      [](const Assignment& a) {
        return (a.at("c") == 2.0 ? 0.0 : 1.0) + 0.01 * a.at("x") * a.at("x");
      },
      s, cfg, 31);
  int late_hits = 0;
  for (size_t i = 80; i < res.history.size(); ++i)
    if (res.history[i].x.at("c") == 2.0) ++late_hits;
  CHECK(late_hits > 25);
  CHECK(res.best.x.at("c") == 2.0);
}

TEST_CASE("sampler construction rejects duplicate names; studies need trials") {
  SearchSpace dup;
  dup.uniform("x", 0.0, 1.0);
  dup.uniform("x", 2.0, 3.0);
  CHECK_THROWS_AS(TpeSampler(dup, TpeConfig{}, 1), Error);

  SearchSpace ok;
  ok.uniform("x", 0.0, 1.0);
  TpeConfig none;
  none.n_trials = 0;
  CHECK_THROWS_AS(run_study([](const Assignment&) { return 0.0; }, ok, none, 1), Error);
}
