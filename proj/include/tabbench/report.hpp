#pragma once

#include <cstdio>
#include <filesystem>
#include <map>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "tabbench/ranking.hpp"
#include "tabbench/results.hpp"
#include "tabbench/svg.hpp"

// Report generation: every CSV/SVG is recomputed from stored records, so the
// files are pure views over the ResultsStore.

namespace tabbench {

namespace report_detail {

inline std::string fmt(double v) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.10g", v);
  return buf;
}

inline ScoreGrid r2_grid(const std::vector<TaskRunResult>& tasks,
                         const std::set<std::string>& families = {}) {
  ScoreGrid grid;
  for (const auto& t : tasks) {
    if (!families.empty() && !families.count(t.model)) continue;
    grid[t.task_id][t.model] = t.r2;
  }
  return grid;
}

// Architectural group of a model family, mirroring the grouping used for the
// size-binned comparison.
inline std::string arch_group(const std::string& family) {
  if (family == "mlp" || family == "tabm") return "MLP-based";
  if (family == "ftt") return "Attention-based";
  if (family == "nca") return "Retrieval-based";
  return "Classical ML";
}

inline void write_rank_files(const RankTable& table, const std::string& out_dir,
                             const std::string& stem, const std::string& title) {
  std::ostringstream csv;
  csv << "model,mean_rank,sem,n_tasks\n";
  std::vector<std::string> labels;
  std::vector<double> means, sems;
  for (const auto& r : table.rows) {
    csv << r.model << "," << fmt(r.mean_rank) << "," << fmt(r.sem) << "," << r.per_task.size()
        << "\n";
    labels.push_back(r.model);
    means.push_back(r.mean_rank);
    sems.push_back(r.sem);
  }
  ResultsStore::write_file((std::filesystem::path(out_dir) / (stem + ".csv")).string(),
                           csv.str());
  ResultsStore::write_file((std::filesystem::path(out_dir) / (stem + ".svg")).string(),
                           bar_chart_svg(title, labels, means, sems, "mean rank (lower is better)"));
}

}  // namespace report_detail

// Mean-rank comparison over every stored task; per-group tables are added
// when both dimensionality groups are present.
inline RankTable write_ranks_report(const std::vector<TaskRunResult>& tasks,
                                    const std::string& out_dir) {
  std::filesystem::create_directories(out_dir);
  const ScoreGrid grid = report_detail::r2_grid(tasks);
  const RankTable table = rank_models(grid);
  report_detail::write_rank_files(table, out_dir, "ranks", "Mean R2 rank, all tasks");

  std::set<std::string> groups;
  for (const auto& t : tasks) groups.insert(t.group);
  if (groups.size() > 1)
    for (const auto& g : groups) {
      std::vector<TaskRunResult> sub;
      for (const auto& t : tasks)
        if (t.group == g) sub.push_back(t);
      report_detail::write_rank_files(rank_models(report_detail::r2_grid(sub)), out_dir,
                                      "ranks_" + g, "Mean R2 rank, " + g + "-dimensional tasks");
    }
  return table;
}

// Linear baselines only (appendix-style four-model comparison).
inline RankTable write_linear_comparison(const std::vector<TaskRunResult>& tasks,
                                         const std::string& out_dir) {
  std::filesystem::create_directories(out_dir);
  const ScoreGrid grid =
      report_detail::r2_grid(tasks, {"mlr", "ridge", "lasso", "plsr"});
  require(!grid.empty(), ErrorKind::IncompleteGrid, "no linear-model results in store");
  const RankTable table = rank_models(grid);
  report_detail::write_rank_files(table, out_dir, "linear_comparison",
                                  "Mean R2 rank, linear baselines");
  return table;
}

// Two-stage size-binned group ranking (best member per architectural group).
inline GroupRankTable write_two_stage_report(const std::vector<TaskRunResult>& tasks,
                                             const std::string& out_dir) {
  std::filesystem::create_directories(out_dir);
  const ScoreGrid grid = report_detail::r2_grid(tasks);
  std::map<std::string, std::string> group_of_model;
  std::map<std::string, int> task_size;
  for (const auto& t : tasks) {
    group_of_model[t.model] = report_detail::arch_group(t.model);
    task_size[t.task_id] = t.n_samples;
  }
  const GroupRankTable table = two_stage_rank(grid, group_of_model, task_size);

  std::ostringstream csv;
  csv << "size_bin,n_tasks,group,mean_rank,sem\n";
  std::vector<std::string> bin_labels;
  std::set<std::string> group_set;
  for (const auto& b : table.bins) {
    if (b.empty) continue;
    bin_labels.push_back(b.label);
    for (const auto& r : b.rows) {
      csv << b.label << "," << b.n_tasks << "," << r.group << ","
          << report_detail::fmt(r.mean_rank) << "," << report_detail::fmt(r.sem) << "\n";
      group_set.insert(r.group);
    }
  }
  const std::vector<std::string> group_labels(group_set.begin(), group_set.end());
  std::vector<std::vector<double>> values, errors;
  for (const auto& b : table.bins) {
    if (b.empty) continue;
    std::vector<double> v, e;
    for (const auto& g : group_labels) {
      double mv = 0.0, ev = 0.0;
      for (const auto& r : b.rows)
        if (r.group == g) {
          mv = r.mean_rank;
          ev = r.sem;
        }
      v.push_back(mv);
      e.push_back(ev);
    }
    values.push_back(std::move(v));
    errors.push_back(std::move(e));
  }
  ResultsStore::write_file((std::filesystem::path(out_dir) / "two_stage.csv").string(),
                           csv.str());
  ResultsStore::write_file(
      (std::filesystem::path(out_dir) / "two_stage.svg").string(),
      grouped_bar_svg("Group rank by dataset size", bin_labels, group_labels, values, errors,
                      "mean rank (lower is better)"));
  return table;
}

// Win/loss/tie vs the strongest classical baseline of each dimensionality
// group: Random Forest on low-dimensional tasks, Ridge on high-dimensional.
inline std::vector<HeadToHeadRow> write_head_to_head_report(
    const std::vector<TaskRunResult>& tasks, const std::string& out_dir) {
  std::filesystem::create_directories(out_dir);
  const ScoreGrid grid = report_detail::r2_grid(tasks);
  std::map<std::string, std::string> task_group;
  for (const auto& t : tasks) task_group[t.task_id] = t.group;
  const std::map<std::string, std::string> baseline = {{"low", "random_forest"},
                                                       {"high", "ridge"}};
  std::map<std::string, std::string> used;
  for (const auto& [task, g] : task_group) used[g] = baseline.at(g);
  const auto rows = head_to_head(grid, task_group, used);

  std::ostringstream csv;
  csv << "model,wins,losses,ties,win_rate\n";
  std::vector<std::string> labels;
  std::vector<int> wins, losses;
  int n_tasks = static_cast<int>(grid.size());
  for (const auto& r : rows) {
    csv << r.model << "," << r.wins << "," << r.losses << "," << r.ties << ","
        << report_detail::fmt(r.win_rate) << "\n";
    labels.push_back(r.model);
    wins.push_back(r.wins);
    losses.push_back(r.losses);
  }
  ResultsStore::write_file((std::filesystem::path(out_dir) / "head_to_head.csv").string(),
                           csv.str());
  ResultsStore::write_file(
      (std::filesystem::path(out_dir) / "head_to_head.svg").string(),
      win_loss_svg("Wins vs group baseline (RF low / Ridge high)", labels, wins, losses,
                   n_tasks));
  return rows;
}

// Ensemble-size ablation curves: pooled RMSE as a function of member count.
inline void write_ablation_report(const std::vector<nlohmann::ordered_json>& ablations,
                                  const std::string& out_dir) {
  require(!ablations.empty(), ErrorKind::IncompleteGrid, "no ablation records in store");
  std::filesystem::create_directories(out_dir);

  std::ostringstream csv;
  csv << "task,model,members,rmse,marginal\n";
  std::map<std::string, std::vector<double>> series;
  std::vector<double> xs;
  for (const auto& j : ablations) {
    const std::string key = j.value("task", "?") + " " + j.value("model", "?");
    std::vector<double> sizes = j.at("sizes").get<std::vector<double>>();
    std::vector<double> rmse = j.at("rmse").get<std::vector<double>>();
    std::vector<double> marginal = j.at("marginal").get<std::vector<double>>();
    if (xs.empty()) xs = sizes;
    require(sizes == xs, ErrorKind::ShapeMismatch, "ablation records use differing size grids");
    require(rmse.size() == sizes.size() && marginal.size() + 1 == sizes.size(),
            ErrorKind::ShapeMismatch, "ablation record arrays are inconsistent");
    // The first size has no predecessor, so its marginal column stays empty.
    for (size_t i = 0; i < sizes.size(); ++i)
      csv << j.value("task", "?") << "," << j.value("model", "?") << ","
          << static_cast<int>(sizes[i]) << "," << report_detail::fmt(rmse[i]) << ","
          << (i == 0 ? std::string() : report_detail::fmt(marginal[i - 1])) << "\n";
    series[key] = rmse;
  }
  ResultsStore::write_file((std::filesystem::path(out_dir) / "ensemble_ablation.csv").string(),
                           csv.str());
  ResultsStore::write_file(
      (std::filesystem::path(out_dir) / "ensemble_ablation.svg").string(),
      line_chart_svg("Ensemble size ablation", xs, series, "ensemble members", "RMSE"));
}

}  // namespace tabbench
