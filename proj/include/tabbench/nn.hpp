#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <deque>
#include <memory>
#include <numeric>
#include <string>
#include <vector>

#include "tabbench/autodiff.hpp"
#include "tabbench/common.hpp"
#include "tabbench/metrics.hpp"
#include "tabbench/optim.hpp"
#include "tabbench/ple.hpp"
#include "tabbench/preprocess.hpp"
#include "tabbench/rng.hpp"
#include "tabbench/tensor.hpp"

namespace tabbench {

enum class ModelFamily { mlr, ridge, lasso, plsr, random_forest, gbdt, mlp, tabm, nca, ftt };

inline const char* to_string(ModelFamily f) {
  switch (f) {
    case ModelFamily::mlr: return "mlr";
    case ModelFamily::ridge: return "ridge";
    case ModelFamily::lasso: return "lasso";
    case ModelFamily::plsr: return "plsr";
    case ModelFamily::random_forest: return "random_forest";
    case ModelFamily::gbdt: return "gbdt";
    case ModelFamily::mlp: return "mlp";
    case ModelFamily::tabm: return "tabm";
    case ModelFamily::nca: return "nca";
    case ModelFamily::ftt: return "ftt";
  }
  return "?";
}

inline ModelFamily family_from_string(const std::string& s) {
  for (ModelFamily f : {ModelFamily::mlr, ModelFamily::ridge, ModelFamily::lasso,
                        ModelFamily::plsr, ModelFamily::random_forest, ModelFamily::gbdt,
                        ModelFamily::mlp, ModelFamily::tabm, ModelFamily::nca, ModelFamily::ftt})
    if (s == to_string(f)) return f;
  fail(ErrorKind::InvalidConfig, "unknown model family: " + s);
}

inline bool is_neural(ModelFamily f) {
  return f == ModelFamily::mlp || f == ModelFamily::tabm || f == ModelFamily::nca ||
         f == ModelFamily::ftt;
}

// Architecture hyperparameters for the neural families. Bounds are checked at
// build time; the search spaces draw from the same ranges.
struct NeuralSpec {
  ModelFamily family = ModelFamily::mlp;
  int layers = 2;            // hidden layers of the MLP-style body
  int width = 64;            // body width
  double dropout = 0.0;
  int emb_dim = 64;          // retrieval embedding dimension
  double temperature = 1.0;  // retrieval softmax temperature
  int blocks = 1;            // transformer blocks
  int d_token = 16;          // token width (rounded up to a heads multiple)
  int heads = 2;
  bool use_ple = true;
  int ple_dim = 16;          // embedding width of each per-feature bin table
  int tabm_heads = 32;       // fixed, excluded from search
};

inline void validate_neural_spec(const NeuralSpec& s) {
  auto chk = [](bool ok, const char* what) { require(ok, ErrorKind::InvalidSpec, what); };
  switch (s.family) {
    case ModelFamily::mlp:
    case ModelFamily::tabm:
      chk(s.layers >= 2 && s.layers <= 4, "layers must be 2..4");
      chk(s.width >= 64 && s.width <= 512, "width must be 64..512");
      break;
    case ModelFamily::nca:
      chk(s.layers >= 2 && s.layers <= 4, "layers must be 2..4");
      chk(s.width >= 64 && s.width <= 512, "width must be 64..512");
      chk(s.emb_dim >= 64 && s.emb_dim <= 256, "embedding dim must be 64..256");
      chk(s.temperature >= 0.1 && s.temperature <= 5.0, "temperature must be 0.1..5.0");
      break;
    case ModelFamily::ftt:
      chk(s.blocks >= 1 && s.blocks <= 4, "blocks must be 1..4");
      chk(s.d_token >= 16 && s.d_token <= 64, "token width must be 16..64");
      chk(s.heads == 2 || s.heads == 4, "heads must be 2 or 4");
      break;
    default:
      fail(ErrorKind::InvalidSpec, "not a neural family");
  }
  chk(s.dropout >= 0.0 && s.dropout <= 0.3, "dropout must be 0..0.3");
  chk(s.ple_dim >= 1, "ple_dim must be positive");
  chk(s.tabm_heads >= 1, "tabm_heads must be positive");
}

namespace nn_detail {

// Fan-in uniform init: U(-sqrt(1/fan_in), sqrt(1/fan_in)). Elements are drawn
// row-major so the consumption order of the seed stream is fixed.
inline void init_uniform(Param& p, Rng& rng, int fan_in) {
  const double b = std::sqrt(1.0 / static_cast<double>(fan_in));
  for (Eigen::Index i = 0; i < p.value.rows(); ++i)
    for (Eigen::Index j = 0; j < p.value.cols(); ++j) p.value(i, j) = rng.uniform(-b, b);
}

}  // namespace nn_detail

// ---------------------------------------------------------------------------
// Base class. Parameters live in a deque so pointers stay stable; encode()
// applies the parameter-free PLE activation (or identity) so callers can
// encode each data block once up front.
// ---------------------------------------------------------------------------
class NeuralModel {
 public:
  explicit NeuralModel(NeuralSpec spec) : spec_(std::move(spec)) {}
  virtual ~NeuralModel() = default;

  const NeuralSpec& spec() const { return spec_; }

  std::vector<Param*> params() {
    std::vector<Param*> out;
    out.reserve(store_.size());
    for (Param& p : store_) out.push_back(&p);
    return out;
  }

  Mat encode(const Mat& X_raw) const {
    return spec_.use_ple ? ple_activations(bins_, X_raw) : X_raw;
  }

  virtual int head_count() const { return 1; }

  // Training/eval graph. Output is B x head_count. `batch_idx` holds each
  // batch row's position inside the training reference (used by retrieval
  // models for self-exclusion); `drop_rng` null means evaluation mode.
  virtual Tape::Id forward(Tape& t, const Mat& X_enc, const std::vector<int>* batch_idx,
                           Rng* drop_rng) = 0;

  virtual void set_training_reference(const Mat& /*X_enc*/, const Vec& /*y*/) {}

  virtual Vec predict_encoded(const Mat& X_enc) {
    Tape t;
    Tape::Id out = forward(t, X_enc, nullptr, nullptr);
    Mat v = t.val(out);
    if (v.cols() > 1) v = v.rowwise().mean();  // aggregate heads
    return Vec(v.col(0));
  }

  Vec predict(const Mat& X_raw) { return predict_encoded(encode(X_raw)); }

  std::vector<Mat> snapshot() const {
    std::vector<Mat> s;
    s.reserve(store_.size());
    for (const Param& p : store_) s.push_back(p.value);
    return s;
  }
  void restore(const std::vector<Mat>& s) {
    size_t i = 0;
    for (Param& p : store_) p.value = s[i++];
  }

 protected:
  Param& add_param(int rows, int cols) {
    store_.emplace_back();
    store_.back().resize(rows, cols);
    return store_.back();
  }
  Param& add_uniform(int rows, int cols, Rng& rng, int fan_in) {
    Param& p = add_param(rows, cols);
    nn_detail::init_uniform(p, rng, fan_in);
    return p;
  }
  Param& add_const(int rows, int cols, double v) {
    Param& p = add_param(rows, cols);
    p.value.setConstant(v);
    return p;
  }

  // --- PLE front end: a trainable (bins_f x ple_dim) projection per feature
  // applied to the fixed activation pattern. Consumes RNG before the body.
  void build_ple(const QuantileBins* bins, Rng& rng) {
    if (!spec_.use_ple) return;
    require(bins != nullptr, ErrorKind::InvalidSpec, "PLE requested without fitted bins");
    bins_ = *bins;
    int off = 0;
    for (int f = 0; f < bins_.n_features(); ++f) {
      const int w = bins_.bin_count(f);
      ple_off_.push_back(off);
      ple_w_.push_back(w);
      ple_W_.push_back(&add_uniform(w, spec_.ple_dim, rng, w));
      ple_b_.push_back(&add_uniform(1, spec_.ple_dim, rng, w));
      off += w;
    }
  }

  int encoded_width(int n_features) const {
    return spec_.use_ple ? bins_.total_bins() : n_features;
  }
  int body_input_width(int n_features) const {
    return spec_.use_ple ? static_cast<int>(bins_.edges.size()) * spec_.ple_dim : n_features;
  }

  // Per-feature linear embeddings concatenated; identity when PLE is off.
  Tape::Id ple_forward(Tape& t, Tape::Id x) const {
    if (!spec_.use_ple) return x;
    std::vector<Tape::Id> parts;
    parts.reserve(ple_W_.size());
    for (size_t f = 0; f < ple_W_.size(); ++f) {
      Tape::Id a = t.slice_cols(x, ple_off_[f], ple_w_[f]);
      parts.push_back(t.add(t.matmul(a, t.leaf(*ple_W_[f])), t.leaf(*ple_b_[f])));
    }
    return parts.size() == 1 ? parts[0] : t.concat_cols(parts);
  }

  // --- plain ReLU body shared by mlp / tabm / nca ---------------------------
  void build_body(int in_dim, Rng& rng) {
    int d = in_dim;
    for (int l = 0; l < spec_.layers; ++l) {
      body_W_.push_back(&add_uniform(d, spec_.width, rng, d));
      body_b_.push_back(&add_uniform(1, spec_.width, rng, d));
      d = spec_.width;
    }
  }
  Tape::Id body_forward(Tape& t, Tape::Id x, Rng* drop_rng) const {
    for (size_t l = 0; l < body_W_.size(); ++l) {
      x = t.relu(t.add(t.matmul(x, t.leaf(*body_W_[l])), t.leaf(*body_b_[l])));
      if (drop_rng && spec_.dropout > 0.0) x = t.dropout(x, spec_.dropout, *drop_rng);
    }
    return x;
  }

  NeuralSpec spec_;
  QuantileBins bins_;
  std::deque<Param> store_;

  std::vector<Param*> ple_W_, ple_b_;
  std::vector<int> ple_off_, ple_w_;
  std::vector<Param*> body_W_, body_b_;
};

// ---------------------------------------------------------------------------
// MLP: [PLE] -> L x (Linear, ReLU, Dropout) -> Linear head.
// ---------------------------------------------------------------------------
class MlpModel final : public NeuralModel {
 public:
  MlpModel(NeuralSpec spec, int n_features, uint64_t seed, const QuantileBins* bins)
      : NeuralModel(std::move(spec)) {
    validate_neural_spec(spec_);
    Rng rng(derive_seed(seed, 0x11A3));
    build_ple(bins, rng);
    build_body(body_input_width(n_features), rng);
    head_W_ = &add_uniform(spec_.width, 1, rng, spec_.width);
    head_b_ = &add_uniform(1, 1, rng, spec_.width);
  }

  Tape::Id forward(Tape& t, const Mat& X_enc, const std::vector<int>*, Rng* drop_rng) override {
    Tape::Id x = body_forward(t, ple_forward(t, t.constant(X_enc)), drop_rng);
    return t.add(t.matmul(x, t.leaf(*head_W_)), t.leaf(*head_b_));
  }

 private:
  Param* head_W_ = nullptr;
  Param* head_b_ = nullptr;
};

// ---------------------------------------------------------------------------
// TabM: k parameter-efficient ensemble members share the body. Member h owns
// rank-1 multiplicative adapters r_h (input) and s_h (output), both
// initialised to ones without consuming seed draws, plus a linear head column.
// With k = 1 the initial model is bit-identical to MlpModel on the same seed.
// ---------------------------------------------------------------------------
class TabmModel final : public NeuralModel {
 public:
  TabmModel(NeuralSpec spec, int n_features, uint64_t seed, const QuantileBins* bins)
      : NeuralModel(std::move(spec)) {
    validate_neural_spec(spec_);
    Rng rng(derive_seed(seed, 0x11A3));
    build_ple(bins, rng);
    const int in_dim = body_input_width(n_features);
    build_body(in_dim, rng);
    head_W_ = &add_uniform(spec_.width, spec_.tabm_heads, rng, spec_.width);
    head_b_ = &add_uniform(1, spec_.tabm_heads, rng, spec_.width);
    adapt_in_ = &add_const(spec_.tabm_heads, in_dim, 1.0);
    adapt_out_ = &add_const(spec_.tabm_heads, spec_.width, 1.0);
  }

  int head_count() const override { return spec_.tabm_heads; }

  Tape::Id forward(Tape& t, const Mat& X_enc, const std::vector<int>*, Rng* drop_rng) override {
    const int k = spec_.tabm_heads;
    Tape::Id x = ple_forward(t, t.constant(X_enc));
    Tape::Id rin = t.leaf(*adapt_in_);
    Tape::Id rout = t.leaf(*adapt_out_);

    // Virtual batch: stack the k adapted copies, run the shared body once.
    std::vector<Tape::Id> stacked;
    stacked.reserve(k);
    for (int h = 0; h < k; ++h) stacked.push_back(t.mul(x, t.slice_rows(rin, h, 1)));
    Tape::Id z = body_forward(t, k == 1 ? stacked[0] : t.concat_rows(stacked), drop_rng);

    const int B = static_cast<int>(X_enc.rows());
    std::vector<Tape::Id> heads;
    heads.reserve(k);
    for (int h = 0; h < k; ++h) {
      Tape::Id zh = t.mul(t.slice_rows(z, h * B, B), t.slice_rows(rout, h, 1));
      Tape::Id wh = t.slice_cols(t.leaf(*head_W_), h, 1);
      Tape::Id bh = t.slice_cols(t.leaf(*head_b_), h, 1);
      heads.push_back(t.add(t.matmul(zh, wh), bh));
    }
    return k == 1 ? heads[0] : t.concat_cols(heads);
  }

 private:
  Param* head_W_ = nullptr;
  Param* head_b_ = nullptr;
  Param* adapt_in_ = nullptr;
  Param* adapt_out_ = nullptr;
};

// ---------------------------------------------------------------------------
// Retrieval model: an MLP embeds rows into R^emb_dim; a query's prediction is
// the softmax(-d^2 / tau)-weighted mean of candidate labels over the full
// training partition. During training the query itself is masked out of its
// candidate row.
// ---------------------------------------------------------------------------
class NcaModel final : public NeuralModel {
 public:
  NcaModel(NeuralSpec spec, int n_features, uint64_t seed, const QuantileBins* bins)
      : NeuralModel(std::move(spec)) {
    validate_neural_spec(spec_);
    Rng rng(derive_seed(seed, 0x11A3));
    build_ple(bins, rng);
    build_body(body_input_width(n_features), rng);
    out_W_ = &add_uniform(spec_.width, spec_.emb_dim, rng, spec_.width);
    out_b_ = &add_uniform(1, spec_.emb_dim, rng, spec_.width);
  }

  void set_training_reference(const Mat& X_enc, const Vec& y) override {
    ref_X_ = X_enc;
    ref_y_ = y;
  }

  Tape::Id forward(Tape& t, const Mat& X_enc, const std::vector<int>* batch_idx,
                   Rng* drop_rng) override {
    require(ref_X_.rows() > 0, ErrorKind::InvalidSpec, "retrieval model has no reference set");
    Tape::Id zq = embed(t, t.constant(X_enc), drop_rng);
    Tape::Id zc = embed(t, t.constant(ref_X_), drop_rng);
    Tape::Id logits = t.scale(t.pairwise_sqdist(zq, zc), -1.0 / spec_.temperature);
    if (batch_idx) {
      Mat mask = Mat::Zero(X_enc.rows(), ref_X_.rows());
      for (size_t i = 0; i < batch_idx->size(); ++i) mask(static_cast<int>(i), (*batch_idx)[i]) = -1e30;
      logits = t.add(logits, t.constant(mask));
    }
    Mat ycol(ref_y_.size(), 1);
    ycol.col(0) = ref_y_;
    return t.matmul(t.softmax_rows(logits), t.constant(ycol));
  }

 private:
  Tape::Id embed(Tape& t, Tape::Id x, Rng* drop_rng) const {
    Tape::Id h = body_forward(t, ple_forward(t, x), drop_rng);
    return t.add(t.matmul(h, t.leaf(*out_W_)), t.leaf(*out_b_));
  }

  Param* out_W_ = nullptr;
  Param* out_b_ = nullptr;
  Mat ref_X_;
  Vec ref_y_;
};

// ---------------------------------------------------------------------------
// Feature-tokens transformer: per-feature linear tokenizer plus a CLS token,
// pre-norm blocks (LN -> MHA -> residual, LN -> FFN(GELU) -> residual), then
// LN -> ReLU -> Linear on the final CLS row. Token width is rounded up to a
// multiple of the head count. Attention runs per sample on a row-stacked
// (B * tokens) x d layout.
// ---------------------------------------------------------------------------
class FttModel final : public NeuralModel {
 public:
  FttModel(NeuralSpec spec, int n_features, uint64_t seed, const QuantileBins* bins)
      : NeuralModel(std::move(spec)), n_features_(n_features) {
    validate_neural_spec(spec_);
    spec_.d_token = ((spec_.d_token + spec_.heads - 1) / spec_.heads) * spec_.heads;
    const int d = spec_.d_token;
    Rng rng(derive_seed(seed, 0x11A3));
    build_ple(bins, rng);

    for (int f = 0; f < n_features; ++f) {
      const int w = spec_.use_ple ? ple_w_static(f) : 1;
      tok_W_.push_back(&add_uniform(w, d, rng, w));
      tok_b_.push_back(&add_uniform(1, d, rng, w));
    }
    cls_ = &add_uniform(1, d, rng, d);

    for (int blk = 0; blk < spec_.blocks; ++blk) {
      Block b;
      b.Wq = &add_uniform(d, d, rng, d);
      b.bq = &add_uniform(1, d, rng, d);
      b.Wk = &add_uniform(d, d, rng, d);
      b.bk = &add_uniform(1, d, rng, d);
      b.Wv = &add_uniform(d, d, rng, d);
      b.bv = &add_uniform(1, d, rng, d);
      b.Wo = &add_uniform(d, d, rng, d);
      b.bo = &add_uniform(1, d, rng, d);
      b.W1 = &add_uniform(d, 2 * d, rng, d);
      b.b1 = &add_uniform(1, 2 * d, rng, d);
      b.W2 = &add_uniform(2 * d, d, rng, 2 * d);
      b.b2 = &add_uniform(1, d, rng, 2 * d);
      blocks_.push_back(b);
    }
    head_W_ = &add_uniform(d, 1, rng, d);
    head_b_ = &add_uniform(1, 1, rng, d);
  }

  Tape::Id forward(Tape& t, const Mat& X_enc, const std::vector<int>*, Rng* drop_rng) override {
    const int B = static_cast<int>(X_enc.rows());
    const int F = n_features_;
    const int T = F + 1;  // CLS + one token per feature
    const int d = spec_.d_token;

    Tape::Id x = t.constant(X_enc);
    std::vector<Tape::Id> blocks;
    blocks.reserve(T);
    Mat ones_col = Mat::Ones(B, 1);
    blocks.push_back(t.mul(t.constant(ones_col), t.leaf(*cls_)));  // broadcast CLS to B rows
    for (int f = 0; f < F; ++f) {
      Tape::Id a = spec_.use_ple ? t.slice_cols(x, ple_off_[f], ple_w_[f]) : t.slice_cols(x, f, 1);
      blocks.push_back(t.add(t.matmul(a, t.leaf(*tok_W_[f])), t.leaf(*tok_b_[f])));
    }
    // Feature-major stack -> sample-major token rows.
    std::vector<int> order(static_cast<size_t>(B) * T);
    for (int s = 0; s < B; ++s)
      for (int tok = 0; tok < T; ++tok) order[static_cast<size_t>(s) * T + tok] = tok * B + s;
    Tape::Id h = t.gather_rows(t.concat_rows(blocks), order);

    for (const Block& b : blocks_) {
      Tape::Id a = attention(t, t.layer_norm_rows(h), b, B, T, drop_rng);
      h = t.add(h, a);
      Tape::Id f1 = t.gelu(t.add(t.matmul(t.layer_norm_rows(h), t.leaf(*b.W1)), t.leaf(*b.b1)));
      if (drop_rng && spec_.dropout > 0.0) f1 = t.dropout(f1, spec_.dropout, *drop_rng);
      Tape::Id f2 = t.add(t.matmul(f1, t.leaf(*b.W2)), t.leaf(*b.b2));
      h = t.add(h, f2);
    }

    std::vector<int> cls_rows(B);
    for (int s = 0; s < B; ++s) cls_rows[s] = s * T;
    Tape::Id c = t.relu(t.layer_norm_rows(t.gather_rows(h, cls_rows)));
    (void)d;
    return t.add(t.matmul(c, t.leaf(*head_W_)), t.leaf(*head_b_));
  }

 private:
  struct Block {
    Param *Wq, *bq, *Wk, *bk, *Wv, *bv, *Wo, *bo, *W1, *b1, *W2, *b2;
  };

  int ple_w_static(int f) const { return ple_w_[f]; }

  Tape::Id attention(Tape& t, Tape::Id x, const Block& b, int B, int T, Rng* drop_rng) const {
    const int d = spec_.d_token;
    const int H = spec_.heads;
    const int dh = d / H;
    Tape::Id q = t.add(t.matmul(x, t.leaf(*b.Wq)), t.leaf(*b.bq));
    Tape::Id k = t.add(t.matmul(x, t.leaf(*b.Wk)), t.leaf(*b.bk));
    Tape::Id v = t.add(t.matmul(x, t.leaf(*b.Wv)), t.leaf(*b.bv));
    const double sc = 1.0 / std::sqrt(static_cast<double>(dh));

    std::vector<Tape::Id> samples;
    samples.reserve(B);
    for (int s = 0; s < B; ++s) {
      Tape::Id qs = t.slice_rows(q, s * T, T);
      Tape::Id ks = t.slice_rows(k, s * T, T);
      Tape::Id vs = t.slice_rows(v, s * T, T);
      std::vector<Tape::Id> heads;
      heads.reserve(H);
      for (int hh = 0; hh < H; ++hh) {
        Tape::Id qh = t.slice_cols(qs, hh * dh, dh);
        Tape::Id kh = t.slice_cols(ks, hh * dh, dh);
        Tape::Id vh = t.slice_cols(vs, hh * dh, dh);
        Tape::Id att = t.softmax_rows(t.scale(t.matmul(qh, t.transpose(kh)), sc));
        heads.push_back(t.matmul(att, vh));
      }
      samples.push_back(H == 1 ? heads[0] : t.concat_cols(heads));
    }
    Tape::Id merged = B == 1 ? samples[0] : t.concat_rows(samples);
    Tape::Id out = t.add(t.matmul(merged, t.leaf(*b.Wo)), t.leaf(*b.bo));
    if (drop_rng && spec_.dropout > 0.0) out = t.dropout(out, spec_.dropout, *drop_rng);
    return out;
  }

  int n_features_;
  std::vector<Param*> tok_W_, tok_b_;
  Param* cls_ = nullptr;
  std::vector<Block> blocks_;
  Param* head_W_ = nullptr;
  Param* head_b_ = nullptr;
};

// ---------------------------------------------------------------------------
// Factory. `bins` may be null when spec.use_ple is false.
// ---------------------------------------------------------------------------
inline std::unique_ptr<NeuralModel> build_model(const NeuralSpec& spec, int n_features,
                                                uint64_t seed, const QuantileBins* bins) {
  require(n_features >= 1, ErrorKind::InvalidSpec, "model needs at least one feature");
  switch (spec.family) {
    case ModelFamily::mlp: return std::make_unique<MlpModel>(spec, n_features, seed, bins);
    case ModelFamily::tabm: return std::make_unique<TabmModel>(spec, n_features, seed, bins);
    case ModelFamily::nca: return std::make_unique<NcaModel>(spec, n_features, seed, bins);
    case ModelFamily::ftt: return std::make_unique<FttModel>(spec, n_features, seed, bins);
    default: fail(ErrorKind::InvalidSpec, "not a neural family");
  }
}

// ---------------------------------------------------------------------------
// Trainer
// ---------------------------------------------------------------------------
enum class TrainMode {
  patience,           // stop after `patience` epochs without strict improvement
  fixed_epochs_best,  // run exactly max_epochs, keep earliest best weights
};

struct TrainConfig {
  double lr = 1e-3;
  double weight_decay = 0.0;
  int batch = 32;
  int max_epochs = 256;
  int patience = 40;
  uint64_t seed = 0;
};

struct TrainOutcome {
  std::vector<double> val_curve;  // one validation RMSE per completed epoch
  int best_epoch = 0;             // 1-based epoch whose weights were restored
  double best_val = 0.0;
};

// Trains in place on pre-encoded features; validation RMSE is measured in the
// same (scaled) target space the labels arrive in. Non-finite losses or
// validation scores raise NumericalFailure.
inline TrainOutcome train_model(NeuralModel& model, const Mat& Xtr_enc, const Vec& ytr,
                                const Mat& Xval_enc, const Vec& yval, const TrainConfig& cfg,
                                TrainMode mode) {
  const int n = static_cast<int>(Xtr_enc.rows());
  require(n >= 1 && yval.size() >= 1, ErrorKind::InvalidSpec, "empty training or validation set");
  require(cfg.batch >= 1 && cfg.max_epochs >= 1 && cfg.patience >= 1, ErrorKind::InvalidSpec,
          "invalid training configuration");

  model.set_training_reference(Xtr_enc, ytr);
  auto ps = model.params();
  AdamW opt(ps, cfg.lr, cfg.weight_decay);
  Rng drop_rng(derive_seed(cfg.seed, 0xD120));
  const int k = model.head_count();

  TrainOutcome out;
  double best = std::numeric_limits<double>::infinity();
  std::vector<Mat> best_params = model.snapshot();
  int since_best = 0;

  std::vector<int> perm(n);
  for (int epoch = 1; epoch <= cfg.max_epochs; ++epoch) {
    std::iota(perm.begin(), perm.end(), 0);
    Rng shuffle_rng(derive_seed(cfg.seed, 0xE90C, static_cast<uint64_t>(epoch)));
    shuffle_rng.shuffle(perm);

    for (int start = 0; start < n; start += cfg.batch) {
      const int bsz = std::min(cfg.batch, n - start);
      Mat xb(bsz, Xtr_enc.cols());
      Mat yb(bsz, k);
      std::vector<int> batch_idx(bsz);
      for (int i = 0; i < bsz; ++i) {
        const int row = perm[start + i];
        xb.row(i) = Xtr_enc.row(row);
        yb.row(i).setConstant(ytr(row));
        batch_idx[i] = row;
      }
      Tape t;
      Tape::Id pred = model.forward(t, xb, &batch_idx, &drop_rng);
      Tape::Id loss = t.mse(pred, t.constant(yb));
      opt.zero_grad();
      t.backward(loss);
      opt.step();
    }

    Vec vp = model.predict_encoded(Xval_enc);
    const double v = rmse(yval, vp);
    require(std::isfinite(v), ErrorKind::NumericalFailure, "validation score diverged");
    out.val_curve.push_back(v);

    if (v < best) {
      best = v;
      out.best_epoch = epoch;
      best_params = model.snapshot();
      since_best = 0;
    } else {
      ++since_best;
    }
    if (mode == TrainMode::patience && since_best >= cfg.patience) break;
  }

  model.restore(best_params);
  out.best_val = best;
  return out;
}

}  // namespace tabbench
