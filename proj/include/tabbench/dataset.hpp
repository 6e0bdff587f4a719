#pragma once

#include <algorithm>
#include <charconv>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <yaml-cpp/yaml.h>

#include "tabbench/common.hpp"
#include "tabbench/quantile.hpp"
#include "tabbench/tensor.hpp"

namespace tabbench {

enum class Property { SOC_or_SOM, pH, Clay };

inline const char* to_string(Property p) {
  switch (p) {
    case Property::SOC_or_SOM: return "SOC";
    case Property::pH: return "pH";
    case Property::Clay: return "Clay";
  }
  return "?";
}

inline std::optional<Property> property_from_string(const std::string& s) {
  std::string t;
  for (char c : s) t.push_back(static_cast<char>(std::tolower(static_cast<unsigned char>(c))));
  if (t == "soc" || t == "som" || t == "soc_or_som") return Property::SOC_or_SOM;
  if (t == "ph") return Property::pH;
  if (t == "clay") return Property::Clay;
  return std::nullopt;
}

enum class SensorKind { spectral, non_spectral };
enum class DimGroup { LowDimensional, HighDimensional };

inline const char* to_string(DimGroup g) {
  return g == DimGroup::LowDimensional ? "LowDimensional" : "HighDimensional";
}

// Column-name patterns for target detection: a column named `<stem>_target`
// (case-insensitive) maps to the stem's property.
struct TargetSchema {
  std::vector<std::pair<std::string, Property>> stems = {
      {"soc", Property::SOC_or_SOM},
      {"som", Property::SOC_or_SOM},
      {"ph", Property::pH},
      {"clay", Property::Clay},
  };
  std::string suffix = "_target";

  std::optional<Property> match(const std::string& column) const {
    std::string t;
    for (char c : column) t.push_back(static_cast<char>(std::tolower(static_cast<unsigned char>(c))));
    if (t.size() <= suffix.size() || t.substr(t.size() - suffix.size()) != suffix)
      return std::nullopt;
    std::string stem = t.substr(0, t.size() - suffix.size());
    for (const auto& [s, p] : stems)
      if (stem == s) return p;
    return std::nullopt;
  }
};

struct Dataset {
  std::string name;
  std::vector<std::string> feature_names;
  Mat features;  // n_samples x n_features
  std::map<Property, std::vector<double>> targets;
  SensorKind sensor_kind = SensorKind::non_spectral;

  int n_samples() const { return static_cast<int>(features.rows()); }
  int n_features() const { return static_cast<int>(features.cols()); }
  double ratio() const { return static_cast<double>(n_features()) / n_samples(); }
};

struct Task {
  const Dataset* dataset = nullptr;
  Property property = Property::SOC_or_SOM;

  std::string id() const { return dataset->name + "/" + to_string(property); }
  const std::vector<double>& targets() const { return dataset->targets.at(property); }
};

namespace detail {

inline std::string trim(const std::string& s) {
  size_t a = s.find_first_not_of(" \t\r\n");
  if (a == std::string::npos) return "";
  size_t b = s.find_last_not_of(" \t\r\n");
  return s.substr(a, b - a + 1);
}

inline std::vector<std::string> split_csv_line(const std::string& line) {
  std::vector<std::string> out;
  std::string cur;
  for (char c : line) {
    if (c == ',') {
      out.push_back(trim(cur));
      cur.clear();
    } else {
      cur.push_back(c);
    }
  }
  out.push_back(trim(cur));
  return out;
}

inline double parse_cell(const std::string& tok, const std::string& file, size_t line_no,
                         const std::string& col) {
  double v = 0.0;
  const char* b = tok.data();
  const char* e = b + tok.size();
  auto res = std::from_chars(b, e, v);
  if (res.ec != std::errc() || res.ptr != e || tok.empty() || !std::isfinite(v)) {
    fail(ErrorKind::MalformedFile, file + ":" + std::to_string(line_no) + " column '" + col +
                                       "' has unparseable or non-finite value '" + tok + "'");
  }
  return v;
}

}  // namespace detail

// Load one CSV dataset. All non-target numeric columns become features; any
// missing or unparseable cell in a used column aborts ingestion (the corpus
// is curated; silent imputation would corrupt comparability).
inline Dataset load_dataset(const std::string& path, const TargetSchema& schema = {},
                            const std::string& name = "") {
  std::ifstream in(path);
  require(in.good(), ErrorKind::MalformedFile, "cannot open " + path);

  std::string header;
  require(static_cast<bool>(std::getline(in, header)), ErrorKind::MalformedFile,
          path + ": empty file");
  std::vector<std::string> cols = detail::split_csv_line(header);
  require(!cols.empty(), ErrorKind::MalformedFile, path + ": empty header");

  std::vector<std::optional<Property>> col_prop(cols.size());
  std::vector<size_t> feature_cols;
  bool any_target = false;
  for (size_t j = 0; j < cols.size(); ++j) {
    col_prop[j] = schema.match(cols[j]);
    if (col_prop[j]) any_target = true;
    else feature_cols.push_back(j);
  }
  require(any_target, ErrorKind::MissingTargets, path + ": no target column matched");

  std::vector<std::vector<double>> rows;
  std::map<Property, std::vector<double>> targets;
  std::string line;
  size_t line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (detail::trim(line).empty()) continue;
    std::vector<std::string> toks = detail::split_csv_line(line);
    require(toks.size() == cols.size(), ErrorKind::MalformedFile,
            path + ":" + std::to_string(line_no) + " has " + std::to_string(toks.size()) +
                " cells, header has " + std::to_string(cols.size()));
    std::vector<double> frow;
    frow.reserve(feature_cols.size());
    for (size_t j = 0; j < cols.size(); ++j) {
      double v = detail::parse_cell(toks[j], path, line_no, cols[j]);
      if (col_prop[j])
        targets[*col_prop[j]].push_back(v);
      else
        frow.push_back(v);
    }
    rows.push_back(std::move(frow));
  }
  require(!rows.empty(), ErrorKind::EmptyDataset, path + ": no data rows");

  Dataset d;
  d.name = name.empty() ? std::filesystem::path(path).stem().string() : name;
  for (size_t j : feature_cols) d.feature_names.push_back(cols[j]);
  d.features.resize(static_cast<Eigen::Index>(rows.size()),
                    static_cast<Eigen::Index>(feature_cols.size()));
  for (size_t i = 0; i < rows.size(); ++i)
    for (size_t j = 0; j < rows[i].size(); ++j)
      d.features(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = rows[i][j];
  d.targets = std::move(targets);
  return d;
}

inline DimGroup classify_group(const Dataset& d) {
  return (d.ratio() > 1.0 && d.sensor_kind == SensorKind::spectral) ? DimGroup::HighDimensional
                                                                    : DimGroup::LowDimensional;
}

// Manifest: YAML list of {path, sensor_kind} records; paths resolve relative
// to the manifest's directory.
inline std::vector<Dataset> load_corpus(const std::string& manifest_path,
                                        const TargetSchema& schema = {}) {
  YAML::Node root;
  try {
    root = YAML::LoadFile(manifest_path);
  } catch (const YAML::Exception& e) {
    fail(ErrorKind::MalformedFile, manifest_path + ": " + e.what());
  }
  const YAML::Node list = root["datasets"];
  require(list && list.IsSequence() && list.size() > 0, ErrorKind::EmptyDataset,
          manifest_path + ": no datasets");
  std::filesystem::path base = std::filesystem::path(manifest_path).parent_path();

  std::vector<Dataset> corpus;
  for (const YAML::Node& entry : list) {
    require(entry["path"] && entry["sensor_kind"], ErrorKind::MalformedFile,
            manifest_path + ": each dataset needs `path` and `sensor_kind`");
    std::filesystem::path p = entry["path"].as<std::string>();
    if (p.is_relative()) p = base / p;
    Dataset d = load_dataset(p.string(), schema);
    std::string sk = entry["sensor_kind"].as<std::string>();
    require(sk == "spectral" || sk == "non_spectral", ErrorKind::MalformedFile,
            manifest_path + ": sensor_kind must be spectral|non_spectral, got " + sk);
    d.sensor_kind = sk == "spectral" ? SensorKind::spectral : SensorKind::non_spectral;
    corpus.push_back(std::move(d));
  }
  return corpus;
}

// One task per (dataset, present target), ordered by dataset name then
// property. Pointers reference the input corpus.
inline std::vector<Task> enumerate_tasks(const std::vector<Dataset>& corpus) {
  require(!corpus.empty(), ErrorKind::EmptyDataset, "task enumeration over empty corpus");
  std::vector<const Dataset*> sorted;
  for (const Dataset& d : corpus) sorted.push_back(&d);
  std::sort(sorted.begin(), sorted.end(),
            [](const Dataset* a, const Dataset* b) { return a->name < b->name; });
  std::vector<Task> tasks;
  for (const Dataset* d : sorted)
    for (Property p : {Property::SOC_or_SOM, Property::pH, Property::Clay})
      if (d->targets.count(p)) tasks.push_back(Task{d, p});
  return tasks;
}

struct GroupStats {
  int n_datasets = 0;
  int n_tasks = 0;
  double samples_min = 0, samples_median = 0, samples_max = 0;
  double features_min = 0, features_median = 0, features_max = 0;
  double ratio_min = 0, ratio_median = 0, ratio_max = 0;
};

struct CorpusStats {
  GroupStats low;
  GroupStats high;
  int n_datasets = 0;
  int n_tasks = 0;
};

inline CorpusStats corpus_stats(const std::vector<Dataset>& corpus) {
  require(!corpus.empty(), ErrorKind::EmptyDataset, "stats over empty corpus");
  CorpusStats cs;
  cs.n_datasets = static_cast<int>(corpus.size());
  for (const Dataset& d : corpus) cs.n_tasks += static_cast<int>(d.targets.size());

  for (DimGroup g : {DimGroup::LowDimensional, DimGroup::HighDimensional}) {
    std::vector<double> samples, features, ratios;
    GroupStats& out = g == DimGroup::LowDimensional ? cs.low : cs.high;
    for (const Dataset& d : corpus) {
      if (classify_group(d) != g) continue;
      ++out.n_datasets;
      out.n_tasks += static_cast<int>(d.targets.size());
      samples.push_back(d.n_samples());
      features.push_back(d.n_features());
      ratios.push_back(d.ratio());
    }
    if (samples.empty()) continue;
    auto fill = [](const std::vector<double>& v, double& mn, double& md, double& mx) {
      mn = *std::min_element(v.begin(), v.end());
      mx = *std::max_element(v.begin(), v.end());
      md = median(v);
    };
    fill(samples, out.samples_min, out.samples_median, out.samples_max);
    fill(features, out.features_min, out.features_median, out.features_max);
    fill(ratios, out.ratio_min, out.ratio_median, out.ratio_max);
  }
  return cs;
}

}  // namespace tabbench
