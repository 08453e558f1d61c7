#pragma once

#include <cmath>
#include <vector>

#include "antic/nn/layers.hpp"

namespace antic::nn {

struct AdamConfig {
  double learning_rate = 0.001;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;
};

// Adam with bias-corrected moment estimates, over a fixed parameter list.
class Adam {
 public:
  Adam(std::vector<Param> params, AdamConfig cfg) : params_(std::move(params)), cfg_(cfg) {
    m_.reserve(params_.size());
    v_.reserve(params_.size());
    for (const auto& p : params_) {
      m_.emplace_back(p.var->val.rows(), p.var->val.cols());
      v_.emplace_back(p.var->val.rows(), p.var->val.cols());
    }
  }

  void step() {
    ++t_;
    const double c1 = 1.0 - std::pow(cfg_.beta1, static_cast<double>(t_));
    const double c2 = 1.0 - std::pow(cfg_.beta2, static_cast<double>(t_));
    for (std::size_t p = 0; p < params_.size(); ++p) {
      auto& theta = params_[p].var->val;
      const auto& g = params_[p].var->grad;
      auto& m = m_[p];
      auto& v = v_[p];
      for (std::size_t i = 0; i < theta.size(); ++i) {
        m[i] = cfg_.beta1 * m[i] + (1.0 - cfg_.beta1) * g[i];
        v[i] = cfg_.beta2 * v[i] + (1.0 - cfg_.beta2) * g[i] * g[i];
        theta[i] -= cfg_.learning_rate * (m[i] / c1) / (std::sqrt(v[i] / c2) + cfg_.epsilon);
      }
    }
  }

  void zero_grads() {
    for (auto& p : params_) p.var->grad.fill(0.0);
  }

  // Global-norm gradient clipping; no-op when max_norm <= 0.
  void clip_gradients(double max_norm) {
    if (max_norm <= 0.0) return;
    double sq = 0.0;
    for (const auto& p : params_)
      for (std::size_t i = 0; i < p.var->grad.size(); ++i) sq += p.var->grad[i] * p.var->grad[i];
    double norm = std::sqrt(sq);
    if (norm <= max_norm) return;
    double s = max_norm / norm;
    for (auto& p : params_)
      for (std::size_t i = 0; i < p.var->grad.size(); ++i) p.var->grad[i] *= s;
  }

  long step_count() const { return t_; }

 private:
  std::vector<Param> params_;
  AdamConfig cfg_;
  std::vector<Matrix> m_, v_;
  long t_ = 0;
};

}  // namespace antic::nn
