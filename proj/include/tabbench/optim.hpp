#pragma once

#include <cmath>
#include <vector>

#include "tabbench/common.hpp"
#include "tabbench/tensor.hpp"

namespace tabbench {

// AdamW with decoupled weight decay: decay scales the parameter directly
// (p *= 1 - lr*wd) instead of entering the gradient, so a zero-gradient step
// with wd > 0 shrinks parameters by exactly (1 - lr*wd). Constant learning
// rate, bias-corrected moments.
class AdamW {
 public:
  AdamW(std::vector<Param*> params, double lr, double weight_decay, double beta1 = 0.9,
        double beta2 = 0.999, double eps = 1e-8)
      : params_(std::move(params)), lr_(lr), wd_(weight_decay), b1_(beta1), b2_(beta2), eps_(eps) {
    require(lr_ > 0.0, ErrorKind::InvalidSpec, "AdamW learning rate must be positive");
    m_.reserve(params_.size());
    v_.reserve(params_.size());
    for (Param* p : params_) {
      m_.emplace_back(Mat::Zero(p->value.rows(), p->value.cols()));
      v_.emplace_back(Mat::Zero(p->value.rows(), p->value.cols()));
    }
  }

  void step() {
    ++t_;
    const double bc1 = 1.0 - std::pow(b1_, t_);
    const double bc2 = 1.0 - std::pow(b2_, t_);
    for (size_t i = 0; i < params_.size(); ++i) {
      Param& p = *params_[i];
      m_[i] = b1_ * m_[i] + (1.0 - b1_) * p.grad;
      v_[i] = b2_ * v_[i] + (1.0 - b2_) * p.grad.cwiseProduct(p.grad);
      if (wd_ != 0.0) p.value *= (1.0 - lr_ * wd_);
      p.value.array() -= lr_ * (m_[i].array() / bc1) / ((v_[i].array() / bc2).sqrt() + eps_);
    }
  }

  void zero_grad() {
    for (Param* p : params_) p->zero_grad();
  }

  int64_t steps() const { return t_; }

 private:
  std::vector<Param*> params_;
  std::vector<Mat> m_, v_;
  double lr_, wd_, b1_, b2_, eps_;
  int64_t t_ = 0;
};

}  // namespace tabbench
