#pragma once

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <set>
#include <string>
#include <vector>

#include "tabbench/common.hpp"

namespace tabbench {

// R² per (task, model); the grid must be complete for every ranking op.
using ScoreGrid = std::map<std::string, std::map<std::string, double>>;  // task -> model -> R²

namespace rank_detail {

// Average-rank ties on descending scores: rank 1 = highest.
inline std::vector<double> tied_ranks_desc(const std::vector<double>& scores) {
  const size_t m = scores.size();
  std::vector<size_t> order(m);
  for (size_t i = 0; i < m; ++i) order[i] = i;
  std::stable_sort(order.begin(), order.end(),
                   [&](size_t a, size_t b) { return scores[a] > scores[b]; });
  std::vector<double> ranks(m, 0.0);
  size_t i = 0;
  while (i < m) {
    size_t j = i;
    while (j + 1 < m && scores[order[j + 1]] == scores[order[i]]) ++j;
    const double avg = 0.5 * (static_cast<double>(i + 1) + static_cast<double>(j + 1));
    for (size_t k = i; k <= j; ++k) ranks[order[k]] = avg;
    i = j + 1;
  }
  return ranks;
}

inline double mean(const std::vector<double>& v) {
  double s = 0.0;
  for (double x : v) s += x;
  return s / static_cast<double>(v.size());
}

// Standard error of the mean (sample standard deviation / sqrt(n)).
inline double sem(const std::vector<double>& v) {
  if (v.size() < 2) return 0.0;
  const double m = mean(v);
  double ss = 0.0;
  for (double x : v) ss += (x - m) * (x - m);
  return std::sqrt(ss / static_cast<double>(v.size() - 1)) /
         std::sqrt(static_cast<double>(v.size()));
}

inline std::vector<std::string> model_list(const ScoreGrid& grid) {
  std::set<std::string> models;
  for (const auto& [task, row] : grid)
    for (const auto& [model, r2] : row) models.insert(model);
  return {models.begin(), models.end()};
}

inline void check_complete(const ScoreGrid& grid, const std::vector<std::string>& models) {
  std::string missing;
  for (const auto& [task, row] : grid)
    for (const auto& model : models)
      if (!row.count(model)) missing += (missing.empty() ? "" : ", ") + task + "/" + model;
  require(missing.empty(), ErrorKind::IncompleteGrid, "missing results: " + missing);
}

}  // namespace rank_detail

struct RankRow {
  std::string model;
  double mean_rank = 0.0;
  double sem = 0.0;
  std::vector<double> per_task;  // aligned with RankTable::tasks
};

struct RankTable {
  std::vector<std::string> tasks;
  std::vector<RankRow> rows;  // sorted by ascending mean rank
};

inline RankTable rank_models(const ScoreGrid& grid) {
  require(!grid.empty(), ErrorKind::IncompleteGrid, "no results to rank");
  const std::vector<std::string> models = rank_detail::model_list(grid);
  rank_detail::check_complete(grid, models);

  RankTable table;
  std::map<std::string, std::vector<double>> ranks_of;
  for (const auto& [task, row] : grid) {
    table.tasks.push_back(task);
    std::vector<double> scores;
    scores.reserve(models.size());
    for (const auto& m : models) scores.push_back(row.at(m));
    const std::vector<double> ranks = rank_detail::tied_ranks_desc(scores);
    for (size_t i = 0; i < models.size(); ++i) ranks_of[models[i]].push_back(ranks[i]);
  }
  for (const auto& m : models) {
    RankRow r;
    r.model = m;
    r.per_task = ranks_of[m];
    r.mean_rank = rank_detail::mean(r.per_task);
    r.sem = rank_detail::sem(r.per_task);
    table.rows.push_back(std::move(r));
  }
  std::stable_sort(table.rows.begin(), table.rows.end(),
                   [](const RankRow& a, const RankRow& b) { return a.mean_rank < b.mean_rank; });
  return table;
}

// ---------------------------------------------------------------------------
// Two-stage group ranking: within each dataset-size bin, a group's per-task
// score is its best member's R²; groups are rank-averaged over the bin.
// ---------------------------------------------------------------------------
struct SizeBin {
  std::string label;
  int lo = 0;             // inclusive
  int hi = 0;             // inclusive; <=0 means unbounded
  bool contains(int n) const { return n >= lo && (hi <= 0 || n <= hi); }
};

inline std::vector<SizeBin> default_size_bins() {
  return {{"n<=50", 0, 50}, {"51-120", 51, 120}, {"n>120", 121, 0}};
}

struct GroupRankRow {
  std::string group;
  double mean_rank = 0.0;
  double sem = 0.0;
};

struct GroupRankTable {
  struct Bin {
    std::string label;
    int n_tasks = 0;
    bool empty = false;
    std::vector<GroupRankRow> rows;
  };
  std::vector<Bin> bins;
};

inline GroupRankTable two_stage_rank(const ScoreGrid& grid,
                                     const std::map<std::string, std::string>& group_of_model,
                                     const std::map<std::string, int>& task_size,
                                     const std::vector<SizeBin>& bins = default_size_bins()) {
  require(!grid.empty(), ErrorKind::IncompleteGrid, "no results to rank");
  const std::vector<std::string> models = rank_detail::model_list(grid);
  rank_detail::check_complete(grid, models);
  for (const auto& m : models)
    require(group_of_model.count(m), ErrorKind::InvalidConfig, "model without group: " + m);

  std::set<std::string> group_set;
  for (const auto& [m, g] : group_of_model) group_set.insert(g);
  const std::vector<std::string> groups(group_set.begin(), group_set.end());

  GroupRankTable table;
  for (const auto& bin : bins) {
    GroupRankTable::Bin out;
    out.label = bin.label;
    std::map<std::string, std::vector<double>> ranks_of;
    for (const auto& [task, row] : grid) {
      auto it = task_size.find(task);
      require(it != task_size.end(), ErrorKind::InvalidConfig, "task without size: " + task);
      if (!bin.contains(it->second)) continue;
      ++out.n_tasks;
      // Stage 1: best member per group. Stage 2: rank groups.
      std::vector<double> scores;
      scores.reserve(groups.size());
      for (const auto& g : groups) {
        double best = -std::numeric_limits<double>::infinity();
        for (const auto& m : models)
          if (group_of_model.at(m) == g) best = std::max(best, row.at(m));
        scores.push_back(best);
      }
      const std::vector<double> ranks = rank_detail::tied_ranks_desc(scores);
      for (size_t i = 0; i < groups.size(); ++i) ranks_of[groups[i]].push_back(ranks[i]);
    }
    if (out.n_tasks == 0) {
      out.empty = true;  // reported, not fatal
    } else {
      for (const auto& g : groups) {
        GroupRankRow r;
        r.group = g;
        r.mean_rank = rank_detail::mean(ranks_of[g]);
        r.sem = rank_detail::sem(ranks_of[g]);
        out.rows.push_back(std::move(r));
      }
      std::stable_sort(out.rows.begin(), out.rows.end(), [](const auto& a, const auto& b) {
        return a.mean_rank < b.mean_rank;
      });
    }
    table.bins.push_back(std::move(out));
  }
  return table;
}

// ---------------------------------------------------------------------------
// Head-to-head win/loss/tie counts against a per-group baseline model
// (e.g. Random Forest for low-dimensional tasks, Ridge for high-dimensional).
// ---------------------------------------------------------------------------
struct HeadToHeadRow {
  std::string model;
  int wins = 0, losses = 0, ties = 0;
  double win_rate = 0.0;  // wins / tasks
};

inline std::vector<HeadToHeadRow> head_to_head(
    const ScoreGrid& grid, const std::map<std::string, std::string>& task_group,
    const std::map<std::string, std::string>& baseline_of_group) {
  require(!grid.empty(), ErrorKind::IncompleteGrid, "no results to compare");
  const std::vector<std::string> models = rank_detail::model_list(grid);
  rank_detail::check_complete(grid, models);

  std::vector<HeadToHeadRow> rows;
  for (const auto& m : models) {
    HeadToHeadRow r;
    r.model = m;
    for (const auto& [task, row] : grid) {
      auto git = task_group.find(task);
      require(git != task_group.end(), ErrorKind::InvalidConfig, "task without group: " + task);
      auto bit = baseline_of_group.find(git->second);
      require(bit != baseline_of_group.end(), ErrorKind::InvalidConfig,
              "group without baseline: " + git->second);
      auto base_it = row.find(bit->second);
      require(base_it != row.end(), ErrorKind::IncompleteGrid,
              "baseline " + bit->second + " missing on task " + task);
      const double mine = row.at(m);
      const double base = base_it->second;
      if (mine > base)
        ++r.wins;
      else if (mine < base)
        ++r.losses;
      else
        ++r.ties;
    }
    const int total = r.wins + r.losses + r.ties;
    r.win_rate = total > 0 ? static_cast<double>(r.wins) / total : 0.0;
    rows.push_back(std::move(r));
  }
  return rows;
}

}  // namespace tabbench
