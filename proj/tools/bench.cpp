// Benchmark CLI: ingest / run / rank / report / ablate over a config file.
//
// Exit codes: 0 success, 1 partial failure (some task-model pairs failed, or
// a report found an incomplete grid), 2 invalid input.

#include <CLI11.hpp>
#include <chrono>
#include <cstdio>
#include <future>
#include <mutex>
#include <optional>
#include <string>
#include <vector>

#include "tabbench/config.hpp"
#include "tabbench/dataset.hpp"
#include "tabbench/engine.hpp"
#include "tabbench/report.hpp"
#include "tabbench/results.hpp"
#include "tabbench/threadpool.hpp"

namespace {

using namespace tabbench;

struct CliOverrides {
  std::optional<uint64_t> seed;
  std::optional<int> jobs;
  std::optional<std::string> out;
  bool force = false;
};

RunConfig effective_config(const std::string& config_path, const CliOverrides& ov) {
  RunConfig cfg = load_run_config(config_path);
  if (ov.seed) cfg.seed = *ov.seed;
  if (ov.jobs) cfg.jobs = *ov.jobs;
  if (ov.out) cfg.out = *ov.out;
  require(cfg.jobs >= 1, ErrorKind::InvalidConfig, "--jobs must be >= 1");
  return cfg;
}

bool keep_task(const RunConfig& cfg, const Task& t) {
  const std::string group =
      classify_group(*t.dataset) == DimGroup::HighDimensional ? "high" : "low";
  if (!cfg.groups.empty() &&
      std::find(cfg.groups.begin(), cfg.groups.end(), group) == cfg.groups.end())
    return false;
  if (!cfg.datasets.empty() && std::find(cfg.datasets.begin(), cfg.datasets.end(),
                                         t.dataset->name) == cfg.datasets.end())
    return false;
  if (!cfg.properties.empty()) {
    bool hit = false;
    for (const auto& p : cfg.properties)
      if (property_from_string(p) == t.property) hit = true;
    if (!hit) return false;
  }
  return true;
}

struct WorkItem {
  Task task;
  ModelFamily family;
};

std::vector<WorkItem> plan_work(const RunConfig& cfg, const std::vector<Dataset>& corpus) {
  std::vector<WorkItem> items;
  for (const Task& t : enumerate_tasks(corpus)) {
    if (!keep_task(cfg, t)) continue;
    for (const auto& m : cfg.models) items.push_back({t, family_from_string(m)});
  }
  return items;
}

int cmd_ingest(const std::string& config_path, const CliOverrides& ov) {
  const RunConfig cfg = effective_config(config_path, ov);
  const auto corpus = load_corpus(cfg.corpus);
  const CorpusStats cs = corpus_stats(corpus);
  const auto tasks = enumerate_tasks(corpus);

  std::printf("corpus: %s\n", cfg.corpus.c_str());
  std::printf("datasets: %d   tasks: %zu\n", cs.n_datasets, tasks.size());
  auto row = [](const char* name, const GroupStats& g) {
    std::printf("%-6s %3d datasets %3d tasks | samples %g/%g/%g | features %g/%g/%g | "
                "ratio %.3f/%.3f/%.3f\n",
                name, g.n_datasets, g.n_tasks, g.samples_min, g.samples_median, g.samples_max,
                g.features_min, g.features_median, g.features_max, g.ratio_min, g.ratio_median,
                g.ratio_max);
  };
  row("low", cs.low);
  row("high", cs.high);
  return 0;
}

int cmd_run(const std::string& config_path, const CliOverrides& ov) {
  const RunConfig cfg = effective_config(config_path, ov);
  const std::string hash = config_hash(cfg);
  const auto corpus = load_corpus(cfg.corpus);
  const auto items = plan_work(cfg, corpus);
  require(!items.empty(), ErrorKind::InvalidConfig, "filters select no task-model pairs");

  ResultsStore store(cfg.out);
  const EngineConfig ecfg = to_engine_config(cfg);
  std::printf("run: %zu task-model pairs, %d jobs, seed %llu, config %s\n", items.size(),
              cfg.jobs, static_cast<unsigned long long>(cfg.seed), hash.c_str());

  std::mutex io;
  std::atomic<int> done{0}, failed{0}, skipped{0};
  const auto t0 = std::chrono::steady_clock::now();

  auto work = [&](const WorkItem& item) {
    const std::string id = item.task.id();
    const std::string model = to_string(item.family);
    const std::string k = store.key(id, model, cfg.seed, hash);
    if (!ov.force && store.has(k)) {
      ++skipped;
      ++done;
      std::lock_guard<std::mutex> g(io);
      std::printf("[%3d/%zu] %-18s %-13s cached\n", done.load(), items.size(), id.c_str(),
                  model.c_str());
      return;
    }
    const auto s0 = std::chrono::steady_clock::now();
    try {
      TaskRunResult r = run_nested_cv(item.task, item.family, ecfg);
      store.write_task(r, hash, ov.force);
      const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - s0).count();
      ++done;
      std::lock_guard<std::mutex> g(io);
      std::printf("[%3d/%zu] %-18s %-13s r2=%7.4f rmse=%8.4f (%.1fs)\n", done.load(),
                  items.size(), id.c_str(), model.c_str(), r.r2, r.rmse, secs);
    } catch (const std::exception& e) {
      ++failed;
      ++done;
      std::lock_guard<std::mutex> g(io);
      std::printf("[%3d/%zu] %-18s %-13s FAILED: %s\n", done.load(), items.size(), id.c_str(),
                  model.c_str(), e.what());
    }
    std::fflush(stdout);
  };

  if (cfg.jobs <= 1) {
    for (const auto& item : items) work(item);
  } else {
    ThreadPool pool(cfg.jobs);
    std::vector<std::future<void>> futs;
    futs.reserve(items.size());
    for (const auto& item : items) futs.push_back(pool.submit([&work, &item] { work(item); }));
    for (auto& f : futs) f.get();
  }

  const double total = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  std::printf("done: %zu pairs (%d cached, %d failed) in %.1fs\n", items.size(), skipped.load(),
              failed.load(), total);
  return failed.load() > 0 ? 1 : 0;
}

int cmd_rank(const std::string& config_path, const CliOverrides& ov) {
  const RunConfig cfg = effective_config(config_path, ov);
  const std::string hash = config_hash(cfg);
  ResultsStore store(cfg.out);
  const auto loaded = store.load(hash);
  require(!loaded.tasks.empty(), ErrorKind::IncompleteGrid,
          "no stored results for this config; run `bench run` first");

  const std::string report_dir = (std::filesystem::path(cfg.out) / "reports").string();
  const RankTable table = write_ranks_report(loaded.tasks, report_dir);
  std::printf("%-14s %10s %8s %7s\n", "model", "mean_rank", "sem", "tasks");
  for (const auto& r : table.rows)
    std::printf("%-14s %10.3f %8.3f %7zu\n", r.model.c_str(), r.mean_rank, r.sem,
                r.per_task.size());
  std::printf("wrote %s/ranks.csv and ranks.svg\n", report_dir.c_str());
  return 0;
}

int cmd_report(const std::string& config_path, const CliOverrides& ov, const std::string& kind) {
  const RunConfig cfg = effective_config(config_path, ov);
  const std::string hash = config_hash(cfg);
  ResultsStore store(cfg.out);
  const auto loaded = store.load(hash);
  require(!loaded.tasks.empty() || !loaded.ablations.empty(), ErrorKind::IncompleteGrid,
          "no stored results for this config; run `bench run` first");
  const std::string report_dir = (std::filesystem::path(cfg.out) / "reports").string();

  auto has_linear = [&] {
    std::set<std::string> fams;
    for (const auto& t : loaded.tasks)
      if (t.model == "mlr" || t.model == "ridge" || t.model == "lasso" || t.model == "plsr")
        fams.insert(t.model);
    return fams.size() >= 2;
  };

  int made = 0;
  auto emit = [&](const std::string& k) {
    if (k == "ranks") {
      write_ranks_report(loaded.tasks, report_dir);
    } else if (k == "two_stage") {
      write_two_stage_report(loaded.tasks, report_dir);
    } else if (k == "head_to_head") {
      write_head_to_head_report(loaded.tasks, report_dir);
    } else if (k == "linear_comparison") {
      write_linear_comparison(loaded.tasks, report_dir);
    } else if (k == "ensemble_ablation") {
      write_ablation_report(loaded.ablations, report_dir);
    } else {
      fail(ErrorKind::InvalidConfig, "unknown report kind: " + k);
    }
    ++made;
    std::printf("wrote %s report to %s\n", k.c_str(), report_dir.c_str());
  };

  if (kind == "all") {
    emit("ranks");
    emit("two_stage");
    emit("head_to_head");
    if (has_linear())
      emit("linear_comparison");
    else
      std::printf("skipping linear_comparison (fewer than two linear families stored)\n");
    if (!loaded.ablations.empty())
      emit("ensemble_ablation");
    else
      std::printf("skipping ensemble_ablation (no ablation records stored)\n");
  } else {
    emit(kind);
  }
  return made > 0 ? 0 : 1;
}

int cmd_ablate(const std::string& config_path, const CliOverrides& ov) {
  const RunConfig cfg = effective_config(config_path, ov);
  const std::string hash = config_hash(cfg);
  const auto corpus = load_corpus(cfg.corpus);
  ResultsStore store(cfg.out);
  const EngineConfig ecfg = to_engine_config(cfg);

  std::vector<WorkItem> items;
  for (const auto& item : plan_work(cfg, corpus))
    if (is_neural(item.family)) items.push_back(item);
  require(!items.empty(), ErrorKind::InvalidConfig,
          "ablation needs at least one neural family in `models`");

  std::mutex io;
  std::atomic<int> done{0}, failed{0};
  auto work = [&](const WorkItem& item) {
    const std::string id = item.task.id();
    const std::string model = to_string(item.family);
    const std::string k = store.key(id, model, cfg.seed, hash, "ablation");
    if (!ov.force && store.has(k)) {
      ++done;
      std::lock_guard<std::mutex> g(io);
      std::printf("[%3d/%zu] %-18s %-13s cached\n", done.load(), items.size(), id.c_str(),
                  model.c_str());
      return;
    }
    try {
      AblationResult r = ensemble_ablation(item.task, item.family, ecfg, cfg.ablation_sizes);
      store.write_ablation(r, cfg.seed, hash, ov.force);
      ++done;
      std::lock_guard<std::mutex> g(io);
      std::printf("[%3d/%zu] %-18s %-13s rmse(1)=%.4f rmse(max)=%.4f\n", done.load(),
                  items.size(), id.c_str(), model.c_str(), r.rmse_by_size.front(),
                  r.rmse_by_size.back());
    } catch (const std::exception& e) {
      ++failed;
      ++done;
      std::lock_guard<std::mutex> g(io);
      std::printf("[%3d/%zu] %-18s %-13s FAILED: %s\n", done.load(), items.size(), id.c_str(),
                  model.c_str(), e.what());
    }
    std::fflush(stdout);
  };

  if (cfg.jobs <= 1) {
    for (const auto& item : items) work(item);
  } else {
    ThreadPool pool(cfg.jobs);
    std::vector<std::future<void>> futs;
    futs.reserve(items.size());
    for (const auto& item : items) futs.push_back(pool.submit([&work, &item] { work(item); }));
    for (auto& f : futs) f.get();
  }
  return failed.load() > 0 ? 1 : 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"small-data tabular regression benchmark"};
  app.require_subcommand(1);

  std::string config_path;
  CliOverrides ov;
  std::string report_kind = "all";

  auto add_common = [&](CLI::App* sub, bool with_force) {
    sub->add_option("--config", config_path, "YAML run configuration")->required();
    sub->add_option("--jobs", [&ov](const CLI::results_t& r) {
      ov.jobs = std::stoi(r[0]);
      return true;
    }, "worker threads");
    sub->add_option("--seed", [&ov](const CLI::results_t& r) {
      ov.seed = std::stoull(r[0]);
      return true;
    }, "override config seed");
    sub->add_option("--out", [&ov](const CLI::results_t& r) {
      ov.out = r[0];
      return true;
    }, "override output directory");
    if (with_force) sub->add_flag("--force", ov.force, "recompute cached results");
  };

  CLI::App* ingest = app.add_subcommand("ingest", "load a corpus and print group statistics");
  add_common(ingest, false);
  CLI::App* run = app.add_subcommand("run", "execute the benchmark (nested CV + TPE)");
  add_common(run, true);
  CLI::App* rnk = app.add_subcommand("rank", "print and write the mean-rank table");
  add_common(rnk, false);
  CLI::App* rep = app.add_subcommand("report", "write CSV/SVG reports from stored records");
  add_common(rep, false);
  rep->add_option("--kind", report_kind,
                  "ranks|two_stage|head_to_head|linear_comparison|ensemble_ablation|all")
      ->capture_default_str();
  CLI::App* abl = app.add_subcommand("ablate", "ensemble-size ablation for neural families");
  add_common(abl, true);

  CLI11_PARSE(app, argc, argv);

  try {
    if (app.got_subcommand(ingest)) return cmd_ingest(config_path, ov);
    if (app.got_subcommand(run)) return cmd_run(config_path, ov);
    if (app.got_subcommand(rnk)) return cmd_rank(config_path, ov);
    if (app.got_subcommand(rep)) return cmd_report(config_path, ov, report_kind);
    if (app.got_subcommand(abl)) return cmd_ablate(config_path, ov);
  } catch (const tabbench::Error& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    // Bad inputs (config, corpus, unknown names) exit 2; everything else is a
    // partial/failed computation and exits 1.
    switch (e.kind()) {
      case tabbench::ErrorKind::InvalidConfig:
      case tabbench::ErrorKind::MalformedFile:
      case tabbench::ErrorKind::MissingTargets:
      case tabbench::ErrorKind::EmptyDataset:
        return 2;
      default:
        return 1;
    }
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 1;
  }
  return 0;
}
