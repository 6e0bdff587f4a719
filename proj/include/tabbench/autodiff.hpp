#pragma once

#include <cmath>
#include <functional>
#include <numbers>
#include <utility>
#include <vector>

#include "tabbench/common.hpp"
#include "tabbench/rng.hpp"
#include "tabbench/tensor.hpp"

namespace tabbench {

// Define-by-run reverse-mode tape over 2-D tensors. Nodes are appended in
// execution order (which is a topological order), backward walks the tape in
// reverse exactly once. Leaf nodes view external Param buffers; computed
// nodes own their value. Gradients are accumulated, never overwritten, so a
// node feeding several consumers sums its contributions.
class Tape {
 public:
  using Id = int;

  void clear() {
    nodes_.clear();
  }

  Id leaf(Param& p) {
    Node n;
    n.leaf = &p;
    n.requires_grad = true;
    nodes_.push_back(std::move(n));
    return static_cast<Id>(nodes_.size() - 1);
  }

  Id constant(Mat v) {
    Node n;
    n.val = std::move(v);
    n.requires_grad = false;
    nodes_.push_back(std::move(n));
    return static_cast<Id>(nodes_.size() - 1);
  }

  Id constant_scalar(double v) {
    Mat m(1, 1);
    m(0, 0) = v;
    return constant(std::move(m));
  }

  const Mat& val(Id id) const {
    const Node& n = nodes_[id];
    return n.leaf ? n.leaf->value : n.val;
  }

  int rows(Id id) const { return static_cast<int>(val(id).rows()); }
  int cols(Id id) const { return static_cast<int>(val(id).cols()); }

  // ---- ops ----

  Id matmul(Id a, Id b) {
    const Mat& av = val(a);
    const Mat& bv = val(b);
    require(av.cols() == bv.rows(), ErrorKind::ShapeMismatch, "matmul inner dims");
    Mat out(av.rows(), bv.cols());
    out.noalias() = av * bv;
    return emit(std::move(out), {a, b}, [this, a, b](const Mat& g) {
      if (wants(a)) grad_ref(a).noalias() += g * val(b).transpose();
      if (wants(b)) grad_ref(b).noalias() += val(a).transpose() * g;
    });
  }

  Id add(Id a, Id b) { return binary_broadcast(a, b, /*is_mul=*/false); }
  Id mul(Id a, Id b) { return binary_broadcast(a, b, /*is_mul=*/true); }

  Id sub(Id a, Id b) { return add(a, scale(b, -1.0)); }

  Id scale(Id a, double c) {
    Mat out = val(a) * c;
    return emit(std::move(out), {a}, [this, a, c](const Mat& g) {
      if (wants(a)) grad_ref(a) += g * c;
    });
  }

  Id add_scalar(Id a, double c) {
    Mat out = val(a).array() + c;
    return emit(std::move(out), {a}, [this, a](const Mat& g) {
      if (wants(a)) grad_ref(a) += g;
    });
  }

  Id relu(Id a) {
    Mat out = val(a).cwiseMax(0.0);
    return emit(std::move(out), {a}, [this, a](const Mat& g) {
      if (wants(a)) grad_ref(a).array() += g.array() * (val(a).array() > 0.0).cast<double>();
    });
  }

  Id gelu(Id a) {
    constexpr double inv_sqrt2 = 0.7071067811865475244;
    Mat out = val(a).unaryExpr([](double x) { return 0.5 * x * (1.0 + std::erf(x * inv_sqrt2)); });
    return emit(std::move(out), {a}, [this, a](const Mat& g) {
      if (!wants(a)) return;
      constexpr double inv_sqrt2pi = 0.3989422804014326779;
      grad_ref(a).array() += g.array() * val(a).unaryExpr([](double x) {
        double phi = 0.5 * (1.0 + std::erf(x * inv_sqrt2));
        double dens = inv_sqrt2pi * std::exp(-0.5 * x * x);
        return phi + x * dens;
      }).array();
    });
  }

  Id softmax_rows(Id a) {
    const Mat& av = val(a);
    Mat out(av.rows(), av.cols());
    for (Eigen::Index i = 0; i < av.rows(); ++i) {
      double mx = av.row(i).maxCoeff();
      out.row(i) = (av.row(i).array() - mx).exp();
      out.row(i) /= out.row(i).sum();
    }
    Id id = emit(std::move(out), {a}, nullptr);
    nodes_[id].back = [this, a, id](const Mat& g) {
      if (!wants(a)) return;
      const Mat& y = nodes_[id].val;
      Mat& ga = grad_ref(a);
      for (Eigen::Index i = 0; i < y.rows(); ++i) {
        double dot = g.row(i).dot(y.row(i));
        ga.row(i).array() += y.row(i).array() * (g.row(i).array() - dot);
      }
    };
    return id;
  }

  // Row-wise normalization without affine terms; models attach their own
  // gain/bias through mul/add so the parameters stay visible to the tape.
  Id layer_norm_rows(Id a, double eps = 1e-5) {
    const Mat& av = val(a);
    const Eigen::Index c = av.cols();
    Mat out(av.rows(), c);
    Mat inv_sd(av.rows(), 1);
    for (Eigen::Index i = 0; i < av.rows(); ++i) {
      double mu = av.row(i).mean();
      double var = (av.row(i).array() - mu).square().sum() / static_cast<double>(c);
      double isd = 1.0 / std::sqrt(var + eps);
      inv_sd(i, 0) = isd;
      out.row(i) = (av.row(i).array() - mu) * isd;
    }
    Id id = emit(std::move(out), {a}, nullptr);
    nodes_[id].back = [this, a, id, inv_sd = std::move(inv_sd), c](const Mat& g) {
      if (!wants(a)) return;
      const Mat& xhat = nodes_[id].val;
      Mat& ga = grad_ref(a);
      const double n = static_cast<double>(c);
      for (Eigen::Index i = 0; i < xhat.rows(); ++i) {
        double gsum = g.row(i).sum();
        double gdot = g.row(i).dot(xhat.row(i));
        ga.row(i).array() +=
            (inv_sd(i, 0) / n) * (n * g.row(i).array() - gsum - xhat.row(i).array() * gdot);
      }
    };
    return id;
  }

  // Inverted-scaling dropout; expectation of the output equals the input.
  // Evaluation mode is the identity (callers simply skip the op).
  Id dropout(Id a, double p, Rng& rng) {
    const Mat& av = val(a);
    Mat mask(av.rows(), av.cols());
    const double keep = 1.0 - p;
    for (Eigen::Index i = 0; i < mask.rows(); ++i)
      for (Eigen::Index j = 0; j < mask.cols(); ++j)
        mask(i, j) = (rng.uniform() < keep) ? 1.0 / keep : 0.0;
    Mat out = av.cwiseProduct(mask);
    return emit(std::move(out), {a}, [this, a, mask = std::move(mask)](const Mat& g) {
      if (wants(a)) grad_ref(a) += g.cwiseProduct(mask);
    });
  }

  Id concat_cols(const std::vector<Id>& parts) {
    require(!parts.empty(), ErrorKind::ShapeMismatch, "concat of nothing");
    Eigen::Index r = val(parts[0]).rows(), c = 0;
    for (Id p : parts) {
      require(val(p).rows() == r, ErrorKind::ShapeMismatch, "concat_cols row mismatch");
      c += val(p).cols();
    }
    Mat out(r, c);
    Eigen::Index off = 0;
    for (Id p : parts) {
      out.middleCols(off, val(p).cols()) = val(p);
      off += val(p).cols();
    }
    return emit(std::move(out), parts, [this, parts](const Mat& g) {
      Eigen::Index off = 0;
      for (Id p : parts) {
        Eigen::Index w = val(p).cols();
        if (wants(p)) grad_ref(p) += g.middleCols(off, w);
        off += w;
      }
    });
  }

  Id concat_rows(const std::vector<Id>& parts) {
    require(!parts.empty(), ErrorKind::ShapeMismatch, "concat of nothing");
    Eigen::Index c = val(parts[0]).cols(), r = 0;
    for (Id p : parts) {
      require(val(p).cols() == c, ErrorKind::ShapeMismatch, "concat_rows col mismatch");
      r += val(p).rows();
    }
    Mat out(r, c);
    Eigen::Index off = 0;
    for (Id p : parts) {
      out.middleRows(off, val(p).rows()) = val(p);
      off += val(p).rows();
    }
    return emit(std::move(out), parts, [this, parts](const Mat& g) {
      Eigen::Index off = 0;
      for (Id p : parts) {
        Eigen::Index h = val(p).rows();
        if (wants(p)) grad_ref(p) += g.middleRows(off, h);
        off += h;
      }
    });
  }

  Id slice_cols(Id a, int c0, int n) {
    require(c0 >= 0 && n >= 1 && c0 + n <= cols(a), ErrorKind::ShapeMismatch, "slice_cols range");
    Mat out = val(a).middleCols(c0, n);
    return emit(std::move(out), {a}, [this, a, c0, n](const Mat& g) {
      if (wants(a)) grad_ref(a).middleCols(c0, n) += g;
    });
  }

  Id slice_rows(Id a, int r0, int n) {
    require(r0 >= 0 && n >= 1 && r0 + n <= rows(a), ErrorKind::ShapeMismatch, "slice_rows range");
    Mat out = val(a).middleRows(r0, n);
    return emit(std::move(out), {a}, [this, a, r0, n](const Mat& g) {
      if (wants(a)) grad_ref(a).middleRows(r0, n) += g;
    });
  }

  Id transpose(Id a) {
    Mat out = val(a).transpose();
    return emit(std::move(out), {a}, [this, a](const Mat& g) {
      if (wants(a)) grad_ref(a) += g.transpose();
    });
  }

  Id gather_rows(Id a, std::vector<int> idx) {
    const Mat& av = val(a);
    Mat out(static_cast<Eigen::Index>(idx.size()), av.cols());
    for (size_t i = 0; i < idx.size(); ++i) out.row(static_cast<Eigen::Index>(i)) = av.row(idx[i]);
    return emit(std::move(out), {a}, [this, a, idx = std::move(idx)](const Mat& g) {
      if (!wants(a)) return;
      Mat& ga = grad_ref(a);
      for (size_t i = 0; i < idx.size(); ++i) ga.row(idx[i]) += g.row(static_cast<Eigen::Index>(i));
    });
  }

  // D(i,j) = ||a_i - b_j||^2 for row vectors a_i, b_j.
  Id pairwise_sqdist(Id a, Id b) {
    const Mat& av = val(a);
    const Mat& bv = val(b);
    require(av.cols() == bv.cols(), ErrorKind::ShapeMismatch, "pairwise_sqdist feature dims");
    Vec an = av.rowwise().squaredNorm();
    Vec bn = bv.rowwise().squaredNorm();
    Mat out(av.rows(), bv.rows());
    out.noalias() = -2.0 * (av * bv.transpose());
    out.colwise() += an;
    out.rowwise() += bn.transpose();
    out = out.cwiseMax(0.0);  // guard tiny negative round-off
    return emit(std::move(out), {a, b}, [this, a, b](const Mat& g) {
      const Mat& A = val(a);
      const Mat& B = val(b);
      if (wants(a)) {
        Vec rs = g.rowwise().sum();
        grad_ref(a).noalias() += 2.0 * (rs.asDiagonal() * A - g * B);
      }
      if (wants(b)) {
        Vec cs = g.colwise().sum();
        grad_ref(b).noalias() += 2.0 * (cs.asDiagonal() * B - g.transpose() * A);
      }
    });
  }

  Id sum_all(Id a) {
    Mat out(1, 1);
    out(0, 0) = val(a).sum();
    return emit(std::move(out), {a}, [this, a](const Mat& g) {
      if (wants(a)) grad_ref(a).array() += g(0, 0);
    });
  }

  Id mean_all(Id a) {
    const double n = static_cast<double>(val(a).size());
    Mat out(1, 1);
    out(0, 0) = val(a).sum() / n;
    return emit(std::move(out), {a}, [this, a, n](const Mat& g) {
      if (wants(a)) grad_ref(a).array() += g(0, 0) / n;
    });
  }

  // Mean over columns: (r×c) -> (r×1). Used for head aggregation.
  Id mean_cols(Id a) {
    const double c = static_cast<double>(val(a).cols());
    Mat out = val(a).rowwise().mean();
    return emit(std::move(out), {a}, [this, a, c](const Mat& g) {
      if (wants(a)) grad_ref(a).colwise() += Vec(g.col(0) / c);
    });
  }

  Id square(Id a) {
    Mat out = val(a).array().square();
    return emit(std::move(out), {a}, [this, a](const Mat& g) {
      if (wants(a)) grad_ref(a).array() += 2.0 * g.array() * val(a).array();
    });
  }

  // Mean squared error as one fused node (cheaper than the composite).
  Id mse(Id pred, Id target) {
    const Mat& p = val(pred);
    const Mat& t = val(target);
    require(p.rows() == t.rows() && p.cols() == t.cols(), ErrorKind::ShapeMismatch,
            "mse operand shapes");
    require(p.size() >= 1, ErrorKind::ShapeMismatch, "mse of empty tensors");
    const double n = static_cast<double>(p.size());
    Mat out(1, 1);
    out(0, 0) = (p - t).array().square().sum() / n;
    return emit(std::move(out), {pred, target}, [this, pred, target, n](const Mat& g) {
      Mat diff = val(pred) - val(target);
      if (wants(pred)) grad_ref(pred) += (2.0 * g(0, 0) / n) * diff;
      if (wants(target)) grad_ref(target) -= (2.0 * g(0, 0) / n) * diff;
    });
  }

  // ---- backward ----

  // Seeds the root gradient with ones (for a 1×1 loss this is d(loss)=1) and
  // sweeps the tape once in reverse topological order.
  void backward(Id root) {
    require(root >= 0 && root < static_cast<Id>(nodes_.size()), ErrorKind::ShapeMismatch,
            "backward root out of range");
    grads_.assign(nodes_.size(), Mat());
    grad_ref(root).setOnes();
    for (Id i = root; i >= 0; --i) {
      Node& n = nodes_[i];
      if (!n.requires_grad || grads_[i].size() == 0) continue;
      if (n.leaf) {
        n.leaf->grad += grads_[i];
      } else if (n.back) {
        n.back(grads_[i]);
      }
    }
    grads_.clear();
  }

 private:
  struct Node {
    Mat val;
    Param* leaf = nullptr;
    bool requires_grad = false;
    std::function<void(const Mat&)> back;
  };

  bool wants(Id id) const { return nodes_[id].requires_grad; }

  Mat& grad_ref(Id id) {
    Mat& g = grads_[id];
    if (g.size() == 0) g = Mat::Zero(val(id).rows(), val(id).cols());
    return g;
  }

  Id emit(Mat&& out, const std::vector<Id>& inputs, std::function<void(const Mat&)> back) {
    require(out.allFinite(), ErrorKind::NumericalFailure, "non-finite op output");
    Node n;
    n.val = std::move(out);
    for (Id i : inputs)
      if (nodes_[i].requires_grad) n.requires_grad = true;
    if (n.requires_grad) n.back = std::move(back);
    nodes_.push_back(std::move(n));
    return static_cast<Id>(nodes_.size() - 1);
  }

  // Elementwise add/mul with broadcasting over full, row-vector (1×c),
  // column-vector (r×1) and scalar (1×1) operands.
  Id binary_broadcast(Id a, Id b, bool is_mul) {
    const Mat& av = val(a);
    const Mat& bv = val(b);
    Eigen::Index r = std::max(av.rows(), bv.rows());
    Eigen::Index c = std::max(av.cols(), bv.cols());
    auto compatible = [&](const Mat& m) {
      return (m.rows() == r || m.rows() == 1) && (m.cols() == c || m.cols() == 1);
    };
    require(compatible(av) && compatible(bv), ErrorKind::ShapeMismatch, "broadcast shapes");
    Mat ae = broadcast_to(av, r, c);
    Mat be = broadcast_to(bv, r, c);
    Mat out = is_mul ? Mat(ae.cwiseProduct(be)) : Mat(ae + be);
    return emit(std::move(out), {a, b}, [this, a, b, is_mul, r, c](const Mat& g) {
      if (wants(a)) {
        Mat ga = is_mul ? Mat(g.cwiseProduct(broadcast_to(val(b), r, c))) : g;
        grad_ref(a) += reduce_to(ga, val(a).rows(), val(a).cols());
      }
      if (wants(b)) {
        Mat gb = is_mul ? Mat(g.cwiseProduct(broadcast_to(val(a), r, c))) : g;
        grad_ref(b) += reduce_to(gb, val(b).rows(), val(b).cols());
      }
    });
  }

  static Mat broadcast_to(const Mat& m, Eigen::Index r, Eigen::Index c) {
    if (m.rows() == r && m.cols() == c) return m;
    Mat out(r, c);
    if (m.rows() == 1 && m.cols() == 1)
      out.setConstant(m(0, 0));
    else if (m.rows() == 1)
      out.rowwise() = m.row(0);
    else
      out.colwise() = m.col(0);
    return out;
  }

  static Mat reduce_to(const Mat& g, Eigen::Index r, Eigen::Index c) {
    if (g.rows() == r && g.cols() == c) return g;
    if (r == 1 && c == 1) {
      Mat out(1, 1);
      out(0, 0) = g.sum();
      return out;
    }
    if (r == 1) return g.colwise().sum();
    return g.rowwise().sum();
  }

  std::vector<Node> nodes_;
  std::vector<Mat> grads_;
};

}  // namespace tabbench
