#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <map>
#include <sstream>
#include <string>
#include <vector>

#include "tabbench/config.hpp"
#include "tabbench/dataset.hpp"
#include "tabbench/report.hpp"
#include "tabbench/results.hpp"
#include "tabbench/synth.hpp"

using namespace tabbench;
namespace fs = std::filesystem;

namespace {

struct TempDir {
  fs::path path;
  explicit TempDir(const std::string& tag)
      : path(fs::temp_directory_path() / ("tabbench_io_" + tag)) {
    fs::remove_all(path);
    fs::create_directories(path);
  }
  ~TempDir() {
    std::error_code ec;
    fs::remove_all(path, ec);
  }
  std::string file(const std::string& name) const { return (path / name).string(); }
};

void put(const std::string& path, const std::string& content) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  REQUIRE(out.good());
  out << content;
}

std::string slurp(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  REQUIRE(in.good());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

template <typename F>
void expect_kind(ErrorKind want, F&& f) {
  try {
    f();
    FAIL("expected an Error");
  } catch (const Error& e) {
    CHECK(e.kind() == want);
  }
}

}  // namespace

TEST_CASE("csv loader parses features and targets") {
  TempDir tmp("loader");
  const std::string csv =
      "depth_cm,ec25,ph_target\n"
      "10,0.5,6.1\n"
      "20,0.75,6.4\n"
      "30,1.25,6.8\n"
      "\n"
      "40,1.5,7.0\n"
      "50,2.0,7.3\n";
  put(tmp.file("probe5.csv"), csv);

  Dataset d = load_dataset(tmp.file("probe5.csv"));
  CHECK(d.name == "probe5");
  CHECK(d.n_samples() == 5);
  CHECK(d.n_features() == 2);
  REQUIRE(d.feature_names.size() == 2u);
  CHECK(d.feature_names[0] == "depth_cm");
  CHECK(d.feature_names[1] == "ec25");
  CHECK(d.features(0, 0) == 10.0);
  CHECK(d.features(2, 1) == 1.25);
  CHECK(d.features(4, 1) == 2.0);
  CHECK(d.ratio() == 0.4);
  REQUIRE(d.targets.count(Property::pH) == 1u);
  CHECK(d.targets.count(Property::SOC_or_SOM) == 0u);
  CHECK(d.targets.count(Property::Clay) == 0u);
  const std::vector<double>& y = d.targets.at(Property::pH);
  REQUIRE(y.size() == 5u);
  CHECK(y[0] == 6.1);
  CHECK(y[4] == 7.3);

  // Loading is idempotent down to the bit.
  Dataset d2 = load_dataset(tmp.file("probe5.csv"));
  CHECK((d.features.array() == d2.features.array()).all());
  CHECK(d.targets.at(Property::pH) == d2.targets.at(Property::pH));

  // An explicit name overrides the file stem.
  Dataset named = load_dataset(tmp.file("probe5.csv"), TargetSchema{}, "field7");
  CHECK(named.name == "field7");

  // Missing trailing newline is harmless.
  put(tmp.file("tail.csv"), "a,ph_target\n1,6.1\n2,6.2");
  CHECK(load_dataset(tmp.file("tail.csv")).n_samples() == 2);
}

TEST_CASE("csv loader rejects malformed input") {
  TempDir tmp("badcsv");

  put(tmp.file("text.csv"), "a,ph_target\nabc,6.1\n");
  expect_kind(ErrorKind::MalformedFile, [&] { load_dataset(tmp.file("text.csv")); });

  put(tmp.file("ragged.csv"), "a,b,ph_target\n1,2,6.1\n3,4\n");
  expect_kind(ErrorKind::MalformedFile, [&] { load_dataset(tmp.file("ragged.csv")); });

  put(tmp.file("inf.csv"), "a,ph_target\ninf,6.1\n");
  expect_kind(ErrorKind::MalformedFile, [&] { load_dataset(tmp.file("inf.csv")); });

  put(tmp.file("hole.csv"), "a,b,ph_target\n1,,6.1\n");
  expect_kind(ErrorKind::MalformedFile, [&] { load_dataset(tmp.file("hole.csv")); });

  put(tmp.file("notarget.csv"), "a,b\n1,2\n");
  expect_kind(ErrorKind::MissingTargets, [&] { load_dataset(tmp.file("notarget.csv")); });

  put(tmp.file("norows.csv"), "a,ph_target\n");
  expect_kind(ErrorKind::EmptyDataset, [&] { load_dataset(tmp.file("norows.csv")); });

  expect_kind(ErrorKind::MalformedFile, [&] { load_dataset(tmp.file("ghost.csv")); });
}

TEST_CASE("target stems and suffixes match case-insensitively") {
  TempDir tmp("stems");

  // Organic-matter stem folds into the same property as organic carbon.
  put(tmp.file("om.csv"), "x,SOM_Target\n1,2.5\n2,3.5\n");
  Dataset d = load_dataset(tmp.file("om.csv"));
  REQUIRE(d.targets.count(Property::SOC_or_SOM) == 1u);
  CHECK(d.targets.at(Property::SOC_or_SOM) == std::vector<double>{2.5, 3.5});
  CHECK(d.n_features() == 1);

  // Stems match exactly: `soma_target` stays a feature.
  put(tmp.file("soma.csv"), "soma_target,ph_target\n1,6\n2,7\n");
  Dataset d2 = load_dataset(tmp.file("soma.csv"));
  CHECK(d2.n_features() == 1);
  CHECK(d2.feature_names[0] == "soma_target");

  // Without the suffix a stem-named column stays a feature too.
  put(tmp.file("bare.csv"), "ph,ph_target\n5.5,6\n5.8,7\n");
  Dataset d3 = load_dataset(tmp.file("bare.csv"));
  CHECK(d3.n_features() == 1);
  CHECK(d3.feature_names[0] == "ph");

  CHECK(property_from_string("som") == Property::SOC_or_SOM);
  CHECK(property_from_string("SOC") == Property::SOC_or_SOM);
  CHECK(property_from_string("pH") == Property::pH);
  CHECK(property_from_string("CLAY") == Property::Clay);
  CHECK_FALSE(property_from_string("humus").has_value());
  CHECK(std::string(to_string(Property::SOC_or_SOM)) == "SOC");
}

TEST_CASE("dimensionality grouping needs ratio above one and a spectral sensor") {
  auto mk = [](int n, int d, SensorKind k) {
    Dataset ds;
    ds.name = "g";
    ds.features = Mat::Zero(n, d);
    ds.sensor_kind = k;
    return ds;
  };
  CHECK(classify_group(mk(231, 272, SensorKind::spectral)) == DimGroup::HighDimensional);
  CHECK(classify_group(mk(52, 14, SensorKind::non_spectral)) == DimGroup::LowDimensional);
  // Ratio exactly one is not "more features than samples".
  CHECK(classify_group(mk(10, 10, SensorKind::spectral)) == DimGroup::LowDimensional);
  CHECK(classify_group(mk(100, 64, SensorKind::spectral)) == DimGroup::LowDimensional);
  // Wide but non-spectral data stays in the low-dimensional group.
  CHECK(classify_group(mk(10, 30, SensorKind::non_spectral)) == DimGroup::LowDimensional);
  CHECK(std::string(to_string(DimGroup::HighDimensional)) == "HighDimensional");
  CHECK(std::string(to_string(DimGroup::LowDimensional)) == "LowDimensional");
}

TEST_CASE("task enumeration sorts datasets and fixes property order") {
  std::vector<Dataset> corpus(3);
  corpus[0].name = "north";
  corpus[0].features = Mat::Zero(6, 2);
  corpus[0].targets[Property::SOC_or_SOM] = std::vector<double>(6, 1.0);
  corpus[0].targets[Property::pH] = std::vector<double>(6, 2.0);
  corpus[0].targets[Property::Clay] = std::vector<double>(6, 3.0);
  corpus[1].name = "alpha";
  corpus[1].features = Mat::Zero(4, 2);
  corpus[1].targets[Property::pH] = std::vector<double>(4, 2.0);
  corpus[1].targets[Property::Clay] = std::vector<double>(4, 3.0);
  corpus[2].name = "mid";
  corpus[2].features = Mat::Zero(5, 2);
  corpus[2].targets[Property::SOC_or_SOM] = std::vector<double>(5, 1.0);

  std::vector<Task> tasks = enumerate_tasks(corpus);
  REQUIRE(tasks.size() == 6u);
  CHECK(tasks[0].id() == "alpha/pH");
  CHECK(tasks[1].id() == "alpha/Clay");
  CHECK(tasks[2].id() == "mid/SOC");
  CHECK(tasks[3].id() == "north/SOC");
  CHECK(tasks[4].id() == "north/pH");
  CHECK(tasks[5].id() == "north/Clay");
  CHECK(tasks[0].targets().size() == 4u);
  CHECK(tasks[2].targets().size() == 5u);

  expect_kind(ErrorKind::EmptyDataset, [] { enumerate_tasks({}); });
}

TEST_CASE("synthetic corpus matches the frozen summary statistics") {
  TempDir tmp("synth");
  synth::generate_corpus(tmp.file("corpus"), 41);
  std::vector<Dataset> corpus = load_corpus(tmp.file("corpus") + "/manifest.yaml");
  REQUIRE(corpus.size() == 31u);

  const CorpusStats cs = corpus_stats(corpus);
  CHECK(cs.n_datasets == 31);
  CHECK(cs.n_tasks == 93);

  CHECK(cs.low.n_datasets == 16);
  CHECK(cs.low.n_tasks == 48);
  CHECK(cs.low.samples_min == 30.0);
  CHECK(cs.low.samples_median == 52.0);
  CHECK(cs.low.samples_max == 250.0);
  CHECK(cs.low.features_min == 3.0);
  CHECK(cs.low.features_median == 14.0);
  CHECK(cs.low.features_max == 17.0);
  CHECK(std::abs(cs.low.ratio_min - 0.060) < 5e-4);
  CHECK(std::abs(cs.low.ratio_median - 0.126) < 5e-4);
  CHECK(std::abs(cs.low.ratio_max - 0.433) < 5e-4);

  CHECK(cs.high.n_datasets == 15);
  CHECK(cs.high.n_tasks == 45);
  CHECK(cs.high.samples_min == 32.0);
  CHECK(cs.high.samples_median == 98.0);
  CHECK(cs.high.samples_max == 460.0);
  CHECK(cs.high.features_min == 272.0);
  CHECK(cs.high.features_median == 1445.0);
  CHECK(cs.high.features_max == 2489.0);
  CHECK(std::abs(cs.high.ratio_min - 1.178) < 5e-4);
  CHECK(std::abs(cs.high.ratio_median - 17.350) < 5e-4);
  CHECK(std::abs(cs.high.ratio_max - 51.156) < 5e-4);

  for (const Dataset& d : corpus) {
    REQUIRE(d.targets.size() == 3u);
    for (const auto& [p, y] : d.targets) CHECK(static_cast<int>(y.size()) == d.n_samples());
    const bool high = d.name.front() == 'H';
    CHECK(d.sensor_kind == (high ? SensorKind::spectral : SensorKind::non_spectral));
    CHECK(classify_group(d) == (high ? DimGroup::HighDimensional : DimGroup::LowDimensional));
  }
  CHECK(enumerate_tasks(corpus).size() == 93u);

  // Every fourth dataset reports organic matter; the loader folds it into the
  // same property, so all datasets still expose three targets.
  CHECK(slurp(tmp.file("corpus") + "/L02.csv").find("som_target") != std::string::npos);
  CHECK(slurp(tmp.file("corpus") + "/L01.csv").find("soc_target") != std::string::npos);
}

TEST_CASE("synthetic generators are seed-deterministic") {
  Rng a(42), b(42), c(43);
  auto [xa, ta] = synth::make_low(30, 13, a);
  auto [xb, tb] = synth::make_low(30, 13, b);
  auto [xc, tc] = synth::make_low(30, 13, c);
  CHECK((xa.array() == xb.array()).all());
  CHECK(ta.soc == tb.soc);
  CHECK(ta.ph == tb.ph);
  CHECK(ta.clay == tb.clay);
  CHECK_FALSE((xa.array() == xc.array()).all());

  Rng h1(7), h2(7);
  auto [ya, sa] = synth::make_high(12, 64, h1);
  auto [yb, sb] = synth::make_high(12, 64, h2);
  CHECK((ya.array() == yb.array()).all());
  CHECK(sa.clay == sb.clay);
}

TEST_CASE("results store round trips, skips, and forces") {
  TempDir tmp("store");
  ResultsStore store(tmp.file("out"));

  TaskRunResult r;
  r.task_id = "alpha/pH";
  r.dataset = "alpha";
  r.property = "pH";
  r.model = "ridge";
  r.group = "low";
  r.n_samples = 4;
  r.n_features = 3;
  r.seed = 9;
  FoldOutcome f0;
  f0.fold = 0;
  f0.best = {{"alpha", 0.5}, {"pca_components", 8.0}};
  f0.best_objective = 0.41;
  f0.failed_trials = 1;
  f0.ensemble_members_used = 0;
  f0.test_indices = {0, 2};
  f0.predictions = {1.5, 2.5};
  f0.fold_rmse = 0.25;
  FoldOutcome f1 = f0;
  f1.fold = 1;
  f1.test_indices = {1, 3};
  f1.predictions = {3.5, 4.5};
  f1.fold_rmse = 0.5;
  r.folds = {f0, f1};
  r.rmse = 0.3;
  r.r2 = 0.9;
  r.pooled_pred = {1.5, 3.5, 2.5, 4.5};

  const std::string k = store.key(r.task_id, r.model, r.seed, "hA");
  CHECK(k == "task__alpha_pH__ridge__s9__hA");
  CHECK_FALSE(store.has(k));
  CHECK(store.write_task(r, "hA", false));
  CHECK(store.has(k));
  CHECK_FALSE(store.write_task(r, "hA", false));  // existing key is skipped

  // Rewriting under force produces the same bytes: no timestamps, no
  // environment leakage.
  const std::string bytes1 = slurp(store.path_for(k));
  CHECK(store.write_task(r, "hA", true));
  CHECK(slurp(store.path_for(k)) == bytes1);
  CHECK(bytes1.find("timestamp") == std::string::npos);
  CHECK(bytes1.find("schema_version") != std::string::npos);

  ResultsStore::Loaded l = store.load();
  REQUIRE(l.tasks.size() == 1u);
  const TaskRunResult& q = l.tasks[0];
  CHECK(q.task_id == r.task_id);
  CHECK(q.model == "ridge");
  CHECK(q.group == "low");
  CHECK(q.seed == uint64_t{9});
  CHECK(q.rmse == 0.3);
  CHECK(q.r2 == 0.9);
  REQUIRE(q.folds.size() == 2u);
  CHECK(q.folds[0].best.at("pca_components") == 8.0);
  CHECK(q.folds[0].failed_trials == 1);
  CHECK(q.folds[1].test_indices == std::vector<int>{1, 3});
  CHECK(q.folds[1].predictions == std::vector<double>{3.5, 4.5});
  CHECK(q.pooled_pred == r.pooled_pred);

  // A second record under another hash; the load filter separates them.
  TaskRunResult rb = r;
  rb.model = "mlp";
  CHECK(store.write_task(rb, "hB", false));
  CHECK(store.load().tasks.size() == 2u);
  CHECK(store.load("hA").tasks.size() == 1u);
  CHECK(store.load("hA").tasks[0].model == "ridge");
  CHECK(store.load("hB").tasks[0].model == "mlp");
  CHECK(store.load("hC").tasks.empty());

  AblationResult ab;
  ab.task_id = "alpha/pH";
  ab.model = "mlp";
  ab.sizes = {1, 2, 4};
  ab.rmse_by_size = {1.0, 0.8, 0.7};
  ab.marginal = {0.2, 0.1};
  CHECK(store.write_ablation(ab, 9, "hA", false));
  CHECK_FALSE(store.write_ablation(ab, 9, "hA", false));
  ResultsStore::Loaded la = store.load("hA");
  REQUIRE(la.ablations.size() == 1u);
  CHECK(la.ablations[0].at("sizes").get<std::vector<int>>() == std::vector<int>{1, 2, 4});
  CHECK(la.ablations[0].at("kind") == "ensemble_ablation");

  // Unparseable records fail loudly rather than being silently dropped.
  put(store.records_dir() + "/broken.json", "{ not json");
  expect_kind(ErrorKind::MalformedFile, [&] { store.load(); });
  fs::remove(store.records_dir() + "/broken.json");
  CHECK(store.load().tasks.size() == 2u);

  // Non-JSON files and unknown kinds are ignored.
  put(store.records_dir() + "/notes.txt", "hello");
  put(store.records_dir() + "/other.json", "{\"kind\": \"mystery\"}");
  CHECK(store.load().tasks.size() == 2u);
}

TEST_CASE("run config loading validates and resolves paths") {
  TempDir tmp("cfg");
  put(tmp.file("run.yaml"),
      "corpus: corpus/manifest.yaml\n"
      "models: [ridge, mlp]\n"
      "groups: [low]\n"
      "properties: [pH, clay]\n"
      "seed: 7\n"
      "tpe_trials: 12\n"
      "out: results\n");
  RunConfig c = load_run_config(tmp.file("run.yaml"));
  CHECK(c.models == std::vector<std::string>{"ridge", "mlp"});
  CHECK(c.groups == std::vector<std::string>{"low"});
  CHECK(c.properties == std::vector<std::string>{"pH", "clay"});
  CHECK(c.seed == uint64_t{7});
  CHECK(c.tpe_trials == 12);
  CHECK(c.tpe_warmup == 20);
  CHECK(c.tpe_candidates == 24);
  CHECK(c.ensemble_members == 16);
  CHECK(c.inner_epochs == 256);
  CHECK(c.final_epochs == 256);
  CHECK(c.patience == 40);
  CHECK(c.max_bins == 48);
  CHECK(c.pca_budget == 32);
  CHECK(c.use_ple);
  CHECK(c.jobs == 1);
  // Relative paths resolve against the config file's directory.
  CHECK(c.corpus == (tmp.path / "corpus/manifest.yaml").string());
  CHECK(c.out == (tmp.path / "results").string());

  EngineConfig e = to_engine_config(c);
  CHECK(e.seed == uint64_t{7});
  CHECK(e.tpe_trials == 12);
  CHECK(e.inner_max_epochs == 256);
  CHECK(e.final_max_epochs == 256);

  auto rejects = [&](const std::string& name, const std::string& body) {
    put(tmp.file(name), body);
    expect_kind(ErrorKind::InvalidConfig, [&] { load_run_config(tmp.file(name)); });
  };
  rejects("unknown.yaml", "corpus: m.yaml\nmodels: [ridge]\nbogus_key: 3\n");
  rejects("nomodel.yaml", "corpus: m.yaml\n");
  rejects("nocorpus.yaml", "models: [ridge]\n");
  rejects("badmodel.yaml", "corpus: m.yaml\nmodels: [resnet]\n");
  rejects("badgroup.yaml", "corpus: m.yaml\nmodels: [ridge]\ngroups: [mid]\n");
  rejects("badprop.yaml", "corpus: m.yaml\nmodels: [ridge]\nproperties: [density]\n");
  rejects("zerotrials.yaml", "corpus: m.yaml\nmodels: [ridge]\ntpe_trials: 0\n");
  rejects("zeromembers.yaml", "corpus: m.yaml\nmodels: [ridge]\nensemble_members: 0\n");
  rejects("list.yaml", "- 1\n- 2\n");
  rejects("scalarmodels.yaml", "corpus: m.yaml\nmodels: ridge\n");
  rejects("unparse.yaml", "a: [unclosed\n");
  expect_kind(ErrorKind::InvalidConfig, [&] { load_run_config(tmp.file("ghost.yaml")); });
}

TEST_CASE("config hash tracks semantics and data, not cosmetics") {
  TempDir tmp("hash");
  fs::create_directories(tmp.path / "corpus");
  const std::string a_csv = "f1,f2,ph_target\n1,2,6.5\n2,3,6.8\n3,4,7.1\n4,5,7.4\n";
  put(tmp.file("corpus/tiny_a.csv"), a_csv);
  put(tmp.file("corpus/tiny_b.csv"), "wl_0400,wl_0401,clay_target\n0.1,0.2,21\n0.3,0.4,24\n");
  const std::string manifest =
      "datasets:\n"
      "  - {path: tiny_a.csv, sensor_kind: non_spectral}\n"
      "  - {path: tiny_b.csv, sensor_kind: spectral}\n";
  put(tmp.file("corpus/manifest.yaml"), manifest);

  RunConfig c;
  c.corpus = tmp.file("corpus/manifest.yaml");
  c.models = {"ridge", "mlp"};
  c.groups = {"low", "high"};
  c.seed = 1;

  const std::string h0 = config_hash(c);
  CHECK(h0.size() == 16u);
  CHECK(h0.find_first_not_of("0123456789abcdef") == std::string::npos);
  CHECK(config_hash(c) == h0);

  // List order is cosmetic.
  RunConfig p = c;
  p.models = {"mlp", "ridge"};
  CHECK(config_hash(p) == h0);
  p.groups = {"high", "low"};
  CHECK(config_hash(p) == h0);

  // Output path and parallelism are cosmetic too.
  RunConfig cos = c;
  cos.out = "elsewhere";
  cos.jobs = 32;
  CHECK(config_hash(cos) == h0);

  RunConfig seeded = c;
  seeded.seed = 2;
  CHECK(config_hash(seeded) != h0);

  RunConfig trials = c;
  trials.tpe_trials = 101;
  CHECK(config_hash(trials) != h0);

  RunConfig ple = c;
  ple.use_ple = false;
  CHECK(config_hash(ple) != h0);

  RunConfig ab1 = c, ab2 = c;
  ab1.ablation_sizes = {4, 2};
  ab2.ablation_sizes = {2, 4};
  CHECK(config_hash(ab1) == config_hash(ab2));
  CHECK(config_hash(ab1) != h0);

  // One changed byte in a dataset file moves the hash; restoring restores it.
  put(tmp.file("corpus/tiny_a.csv"), "f1,f2,ph_target\n1,2,6.5\n2,3,6.8\n3,4,7.1\n4,5,7.5\n");
  const std::string h_mut = config_hash(c);
  CHECK(h_mut != h0);
  put(tmp.file("corpus/tiny_a.csv"), a_csv);
  CHECK(config_hash(c) == h0);

  // Manifest bytes are part of the identity as well.
  put(tmp.file("corpus/manifest.yaml"), manifest + "# trailing comment\n");
  CHECK(config_hash(c) != h0);
  put(tmp.file("corpus/manifest.yaml"), manifest);
  CHECK(config_hash(c) == h0);

  RunConfig ghost = c;
  ghost.corpus = tmp.file("corpus/ghost.yaml");
  expect_kind(ErrorKind::InvalidConfig, [&] { config_hash(ghost); });

  put(tmp.file("corpus/m2.yaml"), "datasets:\n  - {path: ghost.csv, sensor_kind: spectral}\n");
  RunConfig g2 = c;
  g2.corpus = tmp.file("corpus/m2.yaml");
  expect_kind(ErrorKind::InvalidConfig, [&] { config_hash(g2); });
}

namespace {

TaskRunResult score_rec(const std::string& ds, const std::string& model, const std::string& group,
                        int n, double r2v) {
  TaskRunResult r;
  r.task_id = ds + "/pH";
  r.dataset = ds;
  r.property = "pH";
  r.model = model;
  r.group = group;
  r.n_samples = n;
  r.n_features = 5;
  r.seed = 1;
  r.rmse = 1.0 - r2v;
  r.r2 = r2v;
  return r;
}

}  // namespace

TEST_CASE("report writers emit rank tables from stored scores") {
  struct Row {
    const char* ds;
    const char* grp;
    int n;
    double ridge, rf, mlp;
  };
  const std::vector<Row> fixture = {
      {"a", "low", 40, 0.50, 0.70, 0.90},
      {"b", "low", 60, 0.40, 0.80, 0.60},
      {"c", "high", 130, 0.70, 0.50, 0.90},
      {"d", "high", 200, 0.80, 0.60, 0.80},
  };
  std::vector<TaskRunResult> tasks;
  for (const Row& w : fixture) {
    tasks.push_back(score_rec(w.ds, "ridge", w.grp, w.n, w.ridge));
    tasks.push_back(score_rec(w.ds, "random_forest", w.grp, w.n, w.rf));
    tasks.push_back(score_rec(w.ds, "mlp", w.grp, w.n, w.mlp));
  }

  TempDir tmp("report");
  const std::string dir = tmp.file("rep");

  // Per-task ranks: a -> mlp 1, rf 2, ridge 3; b -> rf 1, mlp 2, ridge 3;
  // c -> mlp 1, ridge 2, rf 3; d -> ridge/mlp tie at 1.5, rf 3.
  RankTable table = write_ranks_report(tasks, dir);
  REQUIRE(table.rows.size() == 3u);
  CHECK(table.rows[0].model == "mlp");
  CHECK(table.rows[0].mean_rank == 1.375);
  CHECK(table.rows[1].model == "random_forest");
  CHECK(table.rows[1].mean_rank == 2.25);
  CHECK(table.rows[2].model == "ridge");
  CHECK(table.rows[2].mean_rank == 2.375);
  CHECK(std::abs(table.rows[0].sem - std::sqrt(0.6875 / 3.0) / 2.0) < 1e-12);

  for (const char* f : {"ranks.csv", "ranks.svg", "ranks_low.csv", "ranks_low.svg",
                        "ranks_high.csv", "ranks_high.svg"})
    CHECK(fs::exists(fs::path(dir) / f));
  const std::string csv = slurp(dir + "/ranks.csv");
  CHECK(csv.rfind("model,mean_rank,sem,n_tasks\n", 0) == 0);
  CHECK(csv.find("mlp,1.375,") != std::string::npos);
  CHECK(slurp(dir + "/ranks.svg").rfind("<svg", 0) == 0);

  // Head-to-head against the per-group baselines (RF low, Ridge high).
  std::vector<HeadToHeadRow> rows = write_head_to_head_report(tasks, dir);
  REQUIRE(rows.size() == 3u);
  auto find = [&](const std::string& m) -> const HeadToHeadRow& {
    for (const auto& r : rows)
      if (r.model == m) return r;
    FAIL("missing row " + m);
    return rows[0];
  };
  const HeadToHeadRow& hm = find("mlp");
  CHECK(hm.wins == 2);
  CHECK(hm.losses == 1);
  CHECK(hm.ties == 1);
  CHECK(hm.win_rate == 0.5);
  const HeadToHeadRow& hf = find("random_forest");
  CHECK(hf.wins == 0);
  CHECK(hf.losses == 2);
  CHECK(hf.ties == 2);
  const HeadToHeadRow& hr = find("ridge");
  CHECK(hr.wins == 0);
  CHECK(hr.losses == 2);
  CHECK(hr.ties == 2);
  CHECK(slurp(dir + "/head_to_head.csv").find("mlp,2,1,1,0.5") != std::string::npos);

  // Two-stage: classical families pool into one group; its best member
  // competes against the MLP group inside each size bin.
  GroupRankTable ts = write_two_stage_report(tasks, dir);
  REQUIRE(ts.bins.size() == 3u);
  CHECK(ts.bins[0].n_tasks == 1);
  CHECK(ts.bins[1].n_tasks == 1);
  CHECK(ts.bins[2].n_tasks == 2);
  for (const auto& b : ts.bins) CHECK_FALSE(b.empty);
  auto grp_rank = [](const GroupRankTable::Bin& b, const std::string& g) -> double {
    for (const auto& r : b.rows)
      if (r.group == g) return r.mean_rank;
    FAIL("missing group " + g);
    return 0.0;
  };
  CHECK(grp_rank(ts.bins[0], "MLP-based") == 1.0);
  CHECK(grp_rank(ts.bins[0], "Classical ML") == 2.0);
  CHECK(grp_rank(ts.bins[1], "Classical ML") == 1.0);
  CHECK(grp_rank(ts.bins[1], "MLP-based") == 2.0);
  CHECK(grp_rank(ts.bins[2], "MLP-based") == 1.25);
  CHECK(grp_rank(ts.bins[2], "Classical ML") == 1.75);
  CHECK(slurp(dir + "/two_stage.csv").rfind("size_bin,n_tasks,group,mean_rank,sem\n", 0) == 0);
  CHECK(slurp(dir + "/two_stage.svg").rfind("<svg", 0) == 0);

  // Regeneration over the same records is byte-identical.
  std::map<std::string, std::string> before;
  for (const auto& e : fs::directory_iterator(dir))
    before[e.path().filename().string()] = slurp(e.path().string());
  write_ranks_report(tasks, dir);
  write_head_to_head_report(tasks, dir);
  write_two_stage_report(tasks, dir);
  for (const auto& [name, bytes] : before)
    CHECK(slurp((fs::path(dir) / name).string()) == bytes);
}

TEST_CASE("linear comparison and ablation reports") {
  struct Row {
    const char* ds;
    double mlr, ridge, lasso, plsr;
  };
  const std::vector<Row> fixture = {{"a", 0.1, 0.4, 0.3, 0.2}, {"b", 0.2, 0.5, 0.4, 0.3}};
  std::vector<TaskRunResult> tasks;
  for (const Row& w : fixture) {
    tasks.push_back(score_rec(w.ds, "mlr", "low", 40, w.mlr));
    tasks.push_back(score_rec(w.ds, "ridge", "low", 40, w.ridge));
    tasks.push_back(score_rec(w.ds, "lasso", "low", 40, w.lasso));
    tasks.push_back(score_rec(w.ds, "plsr", "low", 40, w.plsr));
    tasks.push_back(score_rec(w.ds, "mlp", "low", 40, 0.99));  // filtered out
  }

  TempDir tmp("linrep");
  const std::string dir = tmp.file("rep");
  RankTable lin = write_linear_comparison(tasks, dir);
  REQUIRE(lin.rows.size() == 4u);
  CHECK(lin.rows[0].model == "ridge");
  CHECK(lin.rows[0].mean_rank == 1.0);
  CHECK(lin.rows[0].sem == 0.0);
  CHECK(lin.rows[3].model == "mlr");
  CHECK(lin.rows[3].mean_rank == 4.0);
  CHECK(fs::exists(fs::path(dir) / "linear_comparison.csv"));
  CHECK(fs::exists(fs::path(dir) / "linear_comparison.svg"));

  std::vector<TaskRunResult> no_linear = {score_rec("a", "mlp", "low", 40, 0.9)};
  expect_kind(ErrorKind::IncompleteGrid, [&] { write_linear_comparison(no_linear, dir); });

  AblationResult a1;
  a1.task_id = "a/pH";
  a1.model = "mlp";
  a1.sizes = {1, 2, 4};
  a1.rmse_by_size = {1.0, 0.8, 0.7};
  a1.marginal = {0.2, 0.1};
  AblationResult a2 = a1;
  a2.task_id = "b/pH";
  a2.rmse_by_size = {1.2, 1.0, 0.9};
  a2.marginal = {0.2, 0.1};
  std::vector<nlohmann::ordered_json> recs = {ResultsStore::to_json(a1, 3, "h"),
                                              ResultsStore::to_json(a2, 3, "h")};
  write_ablation_report(recs, dir);
  CHECK(fs::exists(fs::path(dir) / "ensemble_ablation.csv"));
  CHECK(slurp(dir + "/ensemble_ablation.svg").rfind("<svg", 0) == 0);
  const std::string acsv = slurp(dir + "/ensemble_ablation.csv");
  CHECK(acsv.rfind("task,model,members,rmse,marginal\n", 0) == 0);
  CHECK(acsv.find("a/pH,mlp,1,1,\n") != std::string::npos);
  CHECK(acsv.find("a/pH,mlp,2,0.8,0.2") != std::string::npos);
  CHECK(acsv.find("b/pH,mlp,4,0.9,0.1") != std::string::npos);

  AblationResult a3 = a1;
  a3.sizes = {1, 2, 8};
  std::vector<nlohmann::ordered_json> bad = {ResultsStore::to_json(a1, 3, "h"),
                                             ResultsStore::to_json(a3, 3, "h")};
  expect_kind(ErrorKind::ShapeMismatch, [&] { write_ablation_report(bad, dir); });
  expect_kind(ErrorKind::IncompleteGrid, [&] { write_ablation_report({}, dir); });
}
