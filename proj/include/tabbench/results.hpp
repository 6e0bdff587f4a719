#pragma once

#include <algorithm>
#include <cctype>
#include <filesystem>
#include <fstream>
#include <json.hpp>
#include <string>
#include <vector>

#include "tabbench/common.hpp"
#include "tabbench/engine.hpp"

namespace tabbench {

// Append-only persistence: one flat JSON file per (task, model, seed, config
// hash), written atomically. Records carry no timestamps so identical runs
// are byte-identical. Keys already on disk are skipped unless forced.
class ResultsStore {
 public:
  using json = nlohmann::ordered_json;
  static constexpr int kSchemaVersion = 1;

  explicit ResultsStore(std::string root) : root_(std::move(root)) {
    std::filesystem::create_directories(records_dir());
  }

  std::string records_dir() const { return root_ + "/records"; }

  static std::string sanitize(const std::string& s) {
    std::string o;
    o.reserve(s.size());
    for (char c : s) o += (std::isalnum(static_cast<unsigned char>(c)) || c == '-' || c == '.')
                              ? c
                              : '_';
    return o;
  }

  std::string key(const std::string& task_id, const std::string& model, uint64_t seed,
                  const std::string& config_hash, const std::string& kind = "task") const {
    return kind + "__" + sanitize(task_id) + "__" + sanitize(model) + "__s" +
           std::to_string(seed) + "__" + config_hash;
  }

  std::string path_for(const std::string& k) const { return records_dir() + "/" + k + ".json"; }

  bool has(const std::string& k) const { return std::filesystem::exists(path_for(k)); }

  // ---- task results ----
  static json to_json(const TaskRunResult& r, const std::string& config_hash) {
    json folds = json::array();
    for (const auto& f : r.folds) {
      json best = json::object();
      for (const auto& [k, v] : f.best) best[k] = v;
      folds.push_back(json{{"fold", f.fold},
                           {"best", best},
                           {"best_objective", f.best_objective},
                           {"failed_trials", f.failed_trials},
                           {"ensemble_members", f.ensemble_members_used},
                           {"test_indices", f.test_indices},
                           {"predictions", f.predictions},
                           {"rmse", f.fold_rmse}});
    }
    return json{{"schema_version", kSchemaVersion},
                {"kind", "task_result"},
                {"task", r.task_id},
                {"dataset", r.dataset},
                {"property", r.property},
                {"model", r.model},
                {"group", r.group},
                {"n_samples", r.n_samples},
                {"n_features", r.n_features},
                {"seed", r.seed},
                {"config_hash", config_hash},
                {"folds", folds},
                {"pooled", json{{"rmse", r.rmse}, {"r2", r.r2}}}};
  }

  static TaskRunResult task_from_json(const json& j) {
    TaskRunResult r;
    r.task_id = j.at("task").get<std::string>();
    r.dataset = j.at("dataset").get<std::string>();
    r.property = j.at("property").get<std::string>();
    r.model = j.at("model").get<std::string>();
    r.group = j.at("group").get<std::string>();
    r.n_samples = j.at("n_samples").get<int>();
    r.n_features = j.at("n_features").get<int>();
    r.seed = j.at("seed").get<uint64_t>();
    for (const auto& fj : j.at("folds")) {
      FoldOutcome f;
      f.fold = fj.at("fold").get<int>();
      for (const auto& [k, v] : fj.at("best").items()) f.best[k] = v.get<double>();
      f.best_objective = fj.at("best_objective").get<double>();
      f.failed_trials = fj.at("failed_trials").get<int>();
      f.ensemble_members_used = fj.at("ensemble_members").get<int>();
      f.test_indices = fj.at("test_indices").get<std::vector<int>>();
      f.predictions = fj.at("predictions").get<std::vector<double>>();
      f.fold_rmse = fj.at("rmse").get<double>();
      r.folds.push_back(std::move(f));
    }
    r.rmse = j.at("pooled").at("rmse").get<double>();
    r.r2 = j.at("pooled").at("r2").get<double>();
    r.pooled_pred.assign(static_cast<size_t>(r.n_samples), 0.0);
    for (const auto& f : r.folds)
      for (size_t i = 0; i < f.test_indices.size(); ++i)
        r.pooled_pred[static_cast<size_t>(f.test_indices[i])] = f.predictions[i];
    return r;
  }

  // Returns false when the key already existed and force was off.
  bool write_task(const TaskRunResult& r, const std::string& config_hash, bool force) {
    const std::string k = key(r.task_id, r.model, r.seed, config_hash);
    if (!force && has(k)) return false;
    write_file(path_for(k), to_json(r, config_hash).dump(2) + "\n");
    return true;
  }

  // ---- ablation results ----
  static json to_json(const AblationResult& r, uint64_t seed, const std::string& config_hash) {
    return json{{"schema_version", kSchemaVersion},
                {"kind", "ensemble_ablation"},
                {"task", r.task_id},
                {"model", r.model},
                {"seed", seed},
                {"config_hash", config_hash},
                {"sizes", r.sizes},
                {"rmse", r.rmse_by_size},
                {"marginal", r.marginal}};
  }

  bool write_ablation(const AblationResult& r, uint64_t seed, const std::string& config_hash,
                      bool force) {
    const std::string k = key(r.task_id, r.model, seed, config_hash, "ablation");
    if (!force && has(k)) return false;
    write_file(path_for(k), to_json(r, seed, config_hash).dump(2) + "\n");
    return true;
  }

  // ---- loading ----
  struct Loaded {
    std::vector<TaskRunResult> tasks;
    std::vector<json> ablations;
  };

  // config_hash empty = load everything.
  Loaded load(const std::string& config_hash = "") const {
    Loaded out;
    std::vector<std::filesystem::path> files;
    if (std::filesystem::exists(records_dir()))
      for (const auto& e : std::filesystem::directory_iterator(records_dir()))
        if (e.path().extension() == ".json") files.push_back(e.path());
    std::sort(files.begin(), files.end());  // deterministic order
    for (const auto& p : files) {
      std::ifstream in(p);
      require(in.good(), ErrorKind::MalformedFile, "cannot read record " + p.string());
      json j = json::parse(in, nullptr, false);
      require(!j.is_discarded(), ErrorKind::MalformedFile, "bad JSON in " + p.string());
      if (!config_hash.empty() && j.value("config_hash", "") != config_hash) continue;
      const std::string kind = j.value("kind", "");
      if (kind == "task_result")
        out.tasks.push_back(task_from_json(j));
      else if (kind == "ensemble_ablation")
        out.ablations.push_back(std::move(j));
    }
    return out;
  }

  static void write_file(const std::string& path, const std::string& content) {
    const std::string tmp = path + ".tmp";
    {
      std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
      require(out.good(), ErrorKind::MalformedFile, "cannot write " + tmp);
      out << content;
    }
    std::filesystem::rename(tmp, path);
  }

 private:
  std::string root_;
};

}  // namespace tabbench
