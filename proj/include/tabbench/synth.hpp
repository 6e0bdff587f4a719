#pragma once

#include <cstdio>
#include <filesystem>
#include <sstream>
#include <string>
#include <vector>

#include "tabbench/common.hpp"
#include "tabbench/results.hpp"
#include "tabbench/rng.hpp"
#include "tabbench/tensor.hpp"

// Synthetic corpus generator. Shapes are frozen so that the generated
// collection reproduces the published per-group summary statistics exactly:
// 31 datasets, 93 tasks, and the min/median/max sample, feature, and
// feature-to-sample-ratio values of both dimensionality groups.

namespace tabbench::synth {

struct Shape {
  int n, d;
};

// 16 low-dimensional dataset shapes (proximal/remote sensing covariates).
inline const std::vector<Shape>& low_shapes() {
  static const std::vector<Shape> v = {{250, 15}, {30, 13}, {46, 3},  {52, 4},
                                       {52, 16},  {111, 14}, {95, 12}, {44, 17},
                                       {40, 14},  {38, 11},  {48, 15}, {51, 6},
                                       {56, 16},  {80, 9},   {150, 17}, {200, 17}};
  return v;
}

// 15 high-dimensional dataset shapes (lab spectroscopy).
inline const std::vector<Shape>& high_shapes() {
  static const std::vector<Shape> v = {{32, 1637}, {42, 1176}, {42, 1375}, {42, 2047},
                                       {57, 2311}, {70, 272},  {94, 653},  {98, 1011},
                                       {109, 2056}, {111, 2154}, {140, 1445}, {140, 2429},
                                       {311, 2489}, {341, 431}, {460, 542}};
  return v;
}

// Covariate name pool for the low-dimensional group.
inline const std::vector<std::string>& covariate_names() {
  static const std::vector<std::string> v = {
      "ec25",   "ph_insitu", "ndvi",     "ndre",      "dem",      "slope",
      "twi",    "gamma_k",   "gamma_th", "gamma_u",   "vis_b",    "vis_g",
      "vis_r",  "nir_mean",  "swir_mean", "curvature", "aspect_sin"};
  return v;
}

struct SynthTargets {
  std::vector<double> soc, ph, clay;
};

// Low-dimensional dataset: latent terrain/sensor factors drive both the
// covariates and the three soil properties, with moderate noise so that the
// tasks are learnable but not trivial.
inline std::pair<Mat, SynthTargets> make_low(int n, int d, Rng& rng) {
  const int k = 4;  // latent factors
  Mat z(n, k);
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < k; ++j) z(i, j) = rng.normal();

  Mat load(k, d);
  for (int r = 0; r < k; ++r)
    for (int c = 0; c < d; ++c) load(r, c) = rng.normal(0.0, 1.0);
  Mat X = z * load;
  for (int c = 0; c < d; ++c) {
    const double scale = rng.log_uniform(0.5, 20.0);
    const double shift = rng.uniform(-5.0, 50.0);
    for (int i = 0; i < n; ++i) X(i, c) = shift + scale * (X(i, c) + 0.35 * rng.normal());
  }

  SynthTargets t;
  t.soc.resize(n);
  t.ph.resize(n);
  t.clay.resize(n);
  Vec w_soc(k), w_ph(k), w_clay(k);
  for (int j = 0; j < k; ++j) {
    w_soc(j) = rng.normal();
    w_ph(j) = rng.normal();
    w_clay(j) = rng.normal();
  }
  for (int i = 0; i < n; ++i) {
    const double s = z.row(i).dot(w_soc);
    const double p = z.row(i).dot(w_ph);
    const double c = z.row(i).dot(w_clay);
    t.soc[i] = 2.5 + 1.1 * s + 0.25 * s * s + 0.45 * rng.normal();
    t.ph[i] = 6.2 + 0.6 * p + 0.18 * rng.normal();
    t.clay[i] = 24.0 + 7.5 * c + 1.2 * c * c + 2.5 * rng.normal();
  }
  return {X, t};
}

// High-dimensional dataset: each sample is a smooth mixture of Gaussian
// absorption bands over a wavelength grid; the targets are linear in the
// mixture coefficients, so a handful of principal components carries the
// signal — the property that makes PCA preprocessing effective.
inline std::pair<Mat, SynthTargets> make_high(int n, int d, Rng& rng) {
  const int k = 6;  // spectral components
  std::vector<double> centers(k), widths(k);
  for (int j = 0; j < k; ++j) {
    centers[j] = rng.uniform(0.08, 0.92);
    widths[j] = rng.uniform(0.03, 0.12);
  }
  Mat bands(k, d);
  for (int j = 0; j < k; ++j)
    for (int c = 0; c < d; ++c) {
      const double x = static_cast<double>(c) / (d - 1);
      const double u = (x - centers[j]) / widths[j];
      bands(j, c) = std::exp(-0.5 * u * u);
    }

  Mat coeff(n, k);
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < k; ++j) coeff(i, j) = std::abs(rng.normal(0.6, 0.4));
  Mat X = coeff * bands;
  for (int i = 0; i < n; ++i) {
    const double base = rng.uniform(0.05, 0.25);
    const double tilt = rng.uniform(-0.1, 0.1);
    for (int c = 0; c < d; ++c) {
      const double x = static_cast<double>(c) / (d - 1);
      X(i, c) += base + tilt * x + 0.004 * rng.normal();
    }
  }

  SynthTargets t;
  t.soc.resize(n);
  t.ph.resize(n);
  t.clay.resize(n);
  Vec w_soc(k), w_ph(k), w_clay(k);
  for (int j = 0; j < k; ++j) {
    w_soc(j) = rng.normal();
    w_ph(j) = rng.normal();
    w_clay(j) = rng.normal();
  }
  for (int i = 0; i < n; ++i) {
    t.soc[i] = 1.8 + 1.4 * coeff.row(i).dot(w_soc) + 0.3 * rng.normal();
    t.ph[i] = 6.0 + 0.5 * coeff.row(i).dot(w_ph) + 0.12 * rng.normal();
    t.clay[i] = 22.0 + 6.0 * coeff.row(i).dot(w_clay) + 1.5 * rng.normal();
  }
  return {X, t};
}

inline std::string num(double v) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

// Write one dataset CSV: covariates first, the three `<stem>_target` columns
// last. Every fourth dataset reports organic matter instead of organic carbon.
inline void write_dataset_csv(const std::string& path, const Mat& X, const SynthTargets& t,
                              bool spectral, bool som_stem) {
  const int n = static_cast<int>(X.rows()), d = static_cast<int>(X.cols());
  std::ostringstream out;
  for (int c = 0; c < d; ++c) {
    if (spectral) {
      char buf[24];
      std::snprintf(buf, sizeof(buf), "wl_%04d", 400 + c);
      out << buf << ",";
    } else {
      out << covariate_names()[static_cast<size_t>(c)] << ",";
    }
  }
  out << (som_stem ? "som_target" : "soc_target") << ",ph_target,clay_target\n";
  for (int i = 0; i < n; ++i) {
    for (int c = 0; c < d; ++c) out << num(X(i, c)) << ",";
    out << num(t.soc[i]) << "," << num(t.ph[i]) << "," << num(t.clay[i]) << "\n";
  }
  ResultsStore::write_file(path, out.str());
}

// Generate the full 31-dataset corpus plus manifest.yaml under out_dir.
inline void generate_corpus(const std::string& out_dir, uint64_t seed) {
  std::filesystem::create_directories(out_dir);
  std::ostringstream manifest;
  manifest << "datasets:\n";

  auto emit = [&](const Shape& s, int idx, bool high) {
    char name[16];
    std::snprintf(name, sizeof(name), "%c%02d", high ? 'H' : 'L', idx + 1);
    Rng rng(derive_seed(seed, fnv1a(name)));
    auto [X, t] = high ? make_high(s.n, s.d, rng) : make_low(s.n, s.d, rng);
    const std::string file = std::string(name) + ".csv";
    write_dataset_csv((std::filesystem::path(out_dir) / file).string(), X, t, high,
                      idx % 4 == 1);
    manifest << "  - {path: " << file << ", sensor_kind: "
             << (high ? "spectral" : "non_spectral") << "}\n";
  };

  for (size_t i = 0; i < low_shapes().size(); ++i)
    emit(low_shapes()[i], static_cast<int>(i), false);
  for (size_t i = 0; i < high_shapes().size(); ++i)
    emit(high_shapes()[i], static_cast<int>(i), true);
  ResultsStore::write_file((std::filesystem::path(out_dir) / "manifest.yaml").string(),
                           manifest.str());
}

}  // namespace tabbench::synth
