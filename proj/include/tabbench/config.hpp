#pragma once

#include <yaml-cpp/yaml.h>

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <json.hpp>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "tabbench/common.hpp"
#include "tabbench/dataset.hpp"
#include "tabbench/engine.hpp"
#include "tabbench/rng.hpp"

namespace tabbench {

struct RunConfig {
  std::string corpus;                  // manifest path
  std::vector<std::string> models;     // family names
  std::vector<std::string> groups;     // {"low","high"}; empty = both
  std::vector<std::string> datasets;   // name filter; empty = all
  std::vector<std::string> properties; // {"SOC","pH","Clay"}; empty = all
  uint64_t seed = 0;
  int tpe_trials = 100;
  int tpe_warmup = 20;
  int tpe_candidates = 24;
  int ensemble_members = 16;
  int inner_epochs = 256;
  int final_epochs = 256;
  int patience = 40;
  int max_bins = 48;
  int pca_budget = 32;
  bool use_ple = true;
  std::vector<int> ablation_sizes;     // empty = 1..64
  // Cosmetic (excluded from the config hash):
  std::string out = "out";
  int jobs = 1;
};

inline EngineConfig to_engine_config(const RunConfig& c) {
  EngineConfig e;
  e.tpe_trials = c.tpe_trials;
  e.tpe_warmup = c.tpe_warmup;
  e.tpe_candidates = c.tpe_candidates;
  e.ensemble_members = c.ensemble_members;
  e.inner_max_epochs = c.inner_epochs;
  e.final_max_epochs = c.final_epochs;
  e.patience = c.patience;
  e.max_bins = c.max_bins;
  e.pca_budget = c.pca_budget;
  e.use_ple = c.use_ple;
  e.seed = c.seed;
  return e;
}

namespace config_detail {

inline std::vector<std::string> str_list(const YAML::Node& n, const char* what) {
  std::vector<std::string> out;
  if (!n) return out;
  require(n.IsSequence(), ErrorKind::InvalidConfig, std::string(what) + " must be a list");
  for (const auto& e : n) out.push_back(e.as<std::string>());
  return out;
}

}  // namespace config_detail

inline RunConfig load_run_config(const std::string& path) {
  require(std::filesystem::exists(path), ErrorKind::InvalidConfig, "config not found: " + path);
  YAML::Node root;
  try {
    root = YAML::LoadFile(path);
  } catch (const YAML::Exception& e) {
    fail(ErrorKind::InvalidConfig, "cannot parse config: " + std::string(e.what()));
  }
  require(root.IsMap(), ErrorKind::InvalidConfig, "config root must be a mapping");

  static const std::set<std::string> known = {
      "corpus",      "models",        "groups",       "datasets",   "properties",
      "seed",        "tpe_trials",    "tpe_warmup",   "tpe_candidates",
      "ensemble_members", "inner_epochs", "final_epochs", "patience", "max_bins",
      "pca_budget",  "use_ple",       "ablation_sizes", "out",      "jobs"};
  for (const auto& kv : root) {
    const std::string k = kv.first.as<std::string>();
    require(known.count(k) != 0, ErrorKind::InvalidConfig, "unknown config key: " + k);
  }

  RunConfig c;
  require(root["corpus"].IsDefined(), ErrorKind::InvalidConfig, "config needs a corpus path");
  c.corpus = root["corpus"].as<std::string>();
  c.models = config_detail::str_list(root["models"], "models");
  require(!c.models.empty(), ErrorKind::InvalidConfig, "config needs at least one model");
  for (const auto& m : c.models) (void)family_from_string(m);  // validates
  c.groups = config_detail::str_list(root["groups"], "groups");
  for (const auto& g : c.groups)
    require(g == "low" || g == "high", ErrorKind::InvalidConfig, "group must be low|high: " + g);
  c.datasets = config_detail::str_list(root["datasets"], "datasets");
  c.properties = config_detail::str_list(root["properties"], "properties");
  for (const auto& p : c.properties)
    require(property_from_string(p).has_value(), ErrorKind::InvalidConfig,
            "unknown property: " + p);

  if (root["seed"]) c.seed = root["seed"].as<uint64_t>();
  if (root["tpe_trials"]) c.tpe_trials = root["tpe_trials"].as<int>();
  if (root["tpe_warmup"]) c.tpe_warmup = root["tpe_warmup"].as<int>();
  if (root["tpe_candidates"]) c.tpe_candidates = root["tpe_candidates"].as<int>();
  if (root["ensemble_members"]) c.ensemble_members = root["ensemble_members"].as<int>();
  if (root["inner_epochs"]) c.inner_epochs = root["inner_epochs"].as<int>();
  if (root["final_epochs"]) c.final_epochs = root["final_epochs"].as<int>();
  if (root["patience"]) c.patience = root["patience"].as<int>();
  if (root["max_bins"]) c.max_bins = root["max_bins"].as<int>();
  if (root["pca_budget"]) c.pca_budget = root["pca_budget"].as<int>();
  if (root["use_ple"]) c.use_ple = root["use_ple"].as<bool>();
  if (root["ablation_sizes"]) {
    require(root["ablation_sizes"].IsSequence(), ErrorKind::InvalidConfig,
            "ablation_sizes must be a list");
    for (const auto& e : root["ablation_sizes"]) c.ablation_sizes.push_back(e.as<int>());
  }
  if (root["out"]) c.out = root["out"].as<std::string>();
  if (root["jobs"]) c.jobs = root["jobs"].as<int>();

  require(c.tpe_trials >= 1, ErrorKind::InvalidConfig, "tpe_trials must be >= 1");
  require(c.ensemble_members >= 1, ErrorKind::InvalidConfig, "ensemble_members must be >= 1");

  // Paths inside the config are relative to the config file's directory.
  const std::filesystem::path base = std::filesystem::path(path).parent_path();
  if (!c.corpus.empty() && std::filesystem::path(c.corpus).is_relative())
    c.corpus = (base / c.corpus).string();
  if (!c.out.empty() && std::filesystem::path(c.out).is_relative())
    c.out = (base / c.out).string();
  return c;
}

// Canonical config hash: semantic fields in sorted-key JSON plus content
// hashes of the manifest and every dataset file, so any data change moves the
// hash. Cosmetic fields (out, jobs) are excluded; list order is normalized.
inline std::string config_hash(const RunConfig& c) {
  nlohmann::json j;  // plain json sorts object keys canonically
  auto sorted = [](std::vector<std::string> v) {
    std::sort(v.begin(), v.end());
    return v;
  };
  j["models"] = sorted(c.models);
  j["groups"] = sorted(c.groups);
  j["datasets"] = sorted(c.datasets);
  j["properties"] = sorted(c.properties);
  j["seed"] = c.seed;
  j["tpe_trials"] = c.tpe_trials;
  j["tpe_warmup"] = c.tpe_warmup;
  j["tpe_candidates"] = c.tpe_candidates;
  j["ensemble_members"] = c.ensemble_members;
  j["inner_epochs"] = c.inner_epochs;
  j["final_epochs"] = c.final_epochs;
  j["patience"] = c.patience;
  j["max_bins"] = c.max_bins;
  j["pca_budget"] = c.pca_budget;
  j["use_ple"] = c.use_ple;
  std::vector<int> sizes = c.ablation_sizes;
  std::sort(sizes.begin(), sizes.end());
  j["ablation_sizes"] = sizes;

  // Fold in corpus content: manifest bytes plus every referenced file.
  uint64_t data_hash = 0xA5A5A5A5DEADBEEFull;
  auto hash_file = [&](const std::string& p) {
    std::ifstream in(p, std::ios::binary);
    require(in.good(), ErrorKind::InvalidConfig, "cannot hash missing file: " + p);
    std::ostringstream ss;
    ss << in.rdbuf();
    data_hash = splitmix64(data_hash ^ fnv1a(ss.str()));
  };
  hash_file(c.corpus);
  YAML::Node mroot = YAML::LoadFile(c.corpus);
  const std::filesystem::path base = std::filesystem::path(c.corpus).parent_path();
  if (mroot["datasets"])
    for (const auto& e : mroot["datasets"]) {
      std::filesystem::path p = e["path"].as<std::string>();
      if (p.is_relative()) p = base / p;
      hash_file(p.string());
    }
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%016llx",
                static_cast<unsigned long long>(splitmix64(fnv1a(j.dump()) ^ data_hash)));
  return buf;
}

}  // namespace tabbench
