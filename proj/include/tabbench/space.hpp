#pragma once

#include <cmath>
#include <map>
#include <string>
#include <vector>

#include "tabbench/common.hpp"
#include "tabbench/forest.hpp"
#include "tabbench/gbdt.hpp"
#include "tabbench/nn.hpp"
#include "tabbench/rng.hpp"

namespace tabbench {

enum class DimKind { uniform, loguniform, integer_range, categorical };

struct Dimension {
  std::string name;
  DimKind kind = DimKind::uniform;
  double lo = 0.0, hi = 0.0;     // bounds (inclusive for integer_range)
  std::vector<double> choices;   // categorical only
};

// Hyperparameter assignments are flat name -> value maps; integers and
// categorical choices are stored as their numeric value. std::map keeps the
// serialization order canonical.
using Assignment = std::map<std::string, double>;

struct SearchSpace {
  std::vector<Dimension> dims;

  SearchSpace& uniform(const std::string& name, double lo, double hi) {
    require(lo < hi, ErrorKind::InvalidSpec, "uniform bounds must satisfy lo < hi");
    dims.push_back({name, DimKind::uniform, lo, hi, {}});
    return *this;
  }
  SearchSpace& loguniform(const std::string& name, double lo, double hi) {
    require(lo < hi && lo > 0.0, ErrorKind::InvalidSpec, "log bounds must satisfy 0 < lo < hi");
    dims.push_back({name, DimKind::loguniform, lo, hi, {}});
    return *this;
  }
  SearchSpace& integer(const std::string& name, int lo, int hi) {
    require(lo < hi || lo == hi, ErrorKind::InvalidSpec, "integer bounds must satisfy lo <= hi");
    dims.push_back({name, DimKind::integer_range, double(lo), double(hi), {}});
    return *this;
  }
  SearchSpace& categorical(const std::string& name, std::vector<double> choices) {
    require(!choices.empty(), ErrorKind::InvalidSpec, "categorical set must be non-empty");
    dims.push_back({name, DimKind::categorical, 0, 0, std::move(choices)});
    return *this;
  }

  const Dimension* find(const std::string& name) const {
    for (const auto& d : dims)
      if (d.name == name) return &d;
    return nullptr;
  }
};

inline double sample_dimension(const Dimension& d, Rng& rng) {
  switch (d.kind) {
    case DimKind::uniform: return rng.uniform(d.lo, d.hi);
    case DimKind::loguniform: return rng.log_uniform(d.lo, d.hi);
    case DimKind::integer_range:
      return static_cast<double>(rng.uniform_int(static_cast<int64_t>(d.lo),
                                                 static_cast<int64_t>(d.hi)));
    case DimKind::categorical: return d.choices[rng.index(d.choices.size())];
  }
  return d.lo;
}

inline Assignment sample_assignment(const SearchSpace& space, Rng& rng) {
  Assignment a;
  for (const auto& d : space.dims) a[d.name] = sample_dimension(d, rng);
  return a;
}

// Deterministic mid-point assignment, used when a caller wants a fixed
// configuration without running a study.
inline Assignment default_assignment(const SearchSpace& space) {
  Assignment a;
  for (const auto& d : space.dims) {
    switch (d.kind) {
      case DimKind::uniform: a[d.name] = 0.5 * (d.lo + d.hi); break;
      case DimKind::loguniform: a[d.name] = std::sqrt(d.lo * d.hi); break;
      case DimKind::integer_range:
        a[d.name] = std::floor(0.5 * (d.lo + d.hi));
        break;
      case DimKind::categorical: a[d.name] = d.choices.front(); break;
    }
  }
  return a;
}

// ---------------------------------------------------------------------------
// Per-family spaces. High-dimensional tasks add the joint PCA component
// search (integer 2..32) for every family.
// ---------------------------------------------------------------------------
inline SearchSpace make_search_space(ModelFamily f, bool high_dimensional) {
  SearchSpace s;
  auto neural_common = [&] {
    s.loguniform("learning_rate", 1e-4, 5e-3);
    s.loguniform("weight_decay", 1e-6, 1e-2);
    s.categorical("batch", {4, 8, 16, 32});
    s.uniform("dropout", 0.0, 0.3);
  };
  switch (f) {
    case ModelFamily::mlr:
      break;  // no algorithm hyperparameters
    case ModelFamily::ridge:
    case ModelFamily::lasso:
      s.loguniform("alpha", 1e-4, 100.0);
      break;
    case ModelFamily::plsr:
      s.integer("n_components", 2, 32);
      break;
    case ModelFamily::random_forest:
      s.integer("max_depth", 3, 30);
      s.integer("min_samples_split", 2, 10);
      s.integer("min_samples_leaf", 1, 10);
      s.uniform("max_features", 0.6, 1.0);
      break;
    case ModelFamily::gbdt:
      s.loguniform("learning_rate", 0.001, 0.3);
      s.integer("max_depth", 3, 10);
      s.integer("min_child_weight", 1, 10);
      s.uniform("subsample", 0.5, 1.0);
      s.uniform("colsample_bytree", 0.5, 1.0);
      s.uniform("gamma", 0.0, 5.0);
      s.loguniform("reg_alpha", 1e-6, 10.0);
      s.loguniform("reg_lambda", 0.1, 10.0);
      break;
    case ModelFamily::mlp:
    case ModelFamily::tabm:
      neural_common();
      s.integer("layers", 2, 4);
      s.integer("width", 64, 512);
      break;
    case ModelFamily::nca:
      neural_common();
      s.integer("layers", 2, 4);
      s.integer("width", 64, 512);
      s.integer("emb_dim", 64, 256);
      s.loguniform("temperature", 0.1, 5.0);
      break;
    case ModelFamily::ftt:
      neural_common();
      s.integer("blocks", 1, 4);
      s.integer("d_token", 16, 64);
      s.categorical("heads", {2, 4});
      break;
  }
  if (high_dimensional) s.integer("pca_components", 2, 32);
  return s;
}

// ---------------------------------------------------------------------------
// ModelSpec: a family plus one concrete assignment; conversion helpers pull
// typed views out of the flat map.
// ---------------------------------------------------------------------------
struct ModelSpec {
  ModelFamily family = ModelFamily::ridge;
  Assignment values;

  double get(const std::string& name, double fallback) const {
    auto it = values.find(name);
    return it == values.end() ? fallback : it->second;
  }
  int get_int(const std::string& name, int fallback) const {
    auto it = values.find(name);
    return it == values.end() ? fallback : static_cast<int>(std::llround(it->second));
  }
  bool has(const std::string& name) const { return values.count(name) != 0; }

  int pca_components() const { return get_int("pca_components", 0); }  // 0: PCA off
};

inline NeuralSpec to_neural_spec(const ModelSpec& m, bool use_ple) {
  NeuralSpec s;
  s.family = m.family;
  s.layers = m.get_int("layers", 2);
  s.width = m.get_int("width", 64);
  s.dropout = m.get("dropout", 0.0);
  s.emb_dim = m.get_int("emb_dim", 64);
  s.temperature = m.get("temperature", 1.0);
  s.blocks = m.get_int("blocks", 1);
  s.d_token = m.get_int("d_token", 16);
  s.heads = m.get_int("heads", 2);
  s.use_ple = use_ple;
  return s;
}

inline ForestSpec to_forest_spec(const ModelSpec& m) {
  ForestSpec s;
  s.max_depth = m.get_int("max_depth", 30);
  s.min_samples_split = m.get_int("min_samples_split", 2);
  s.min_samples_leaf = m.get_int("min_samples_leaf", 1);
  s.max_features = m.get("max_features", 1.0);
  return s;
}

inline GbdtSpec to_gbdt_spec(const ModelSpec& m) {
  GbdtSpec s;
  s.learning_rate = m.get("learning_rate", 0.1);
  s.max_depth = m.get_int("max_depth", 6);
  s.min_child_weight = m.get("min_child_weight", 1.0);
  s.subsample = m.get("subsample", 1.0);
  s.colsample_bytree = m.get("colsample_bytree", 1.0);
  s.gamma = m.get("gamma", 0.0);
  s.reg_alpha = m.get("reg_alpha", 0.0);
  s.reg_lambda = m.get("reg_lambda", 1.0);
  return s;
}

}  // namespace tabbench
