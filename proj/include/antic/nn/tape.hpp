#pragma once

#include <cmath>
#include <functional>
#include <memory>
#include <vector>

#include "antic/nn/matrix.hpp"

namespace antic::nn {

// A value in the computation record, with its gradient accumulator.
struct Var {
  Matrix val;
  Matrix grad;

  explicit Var(Matrix v) : val(std::move(v)), grad(val.rows(), val.cols()) {}
};

using VarPtr = std::shared_ptr<Var>;

inline VarPtr make_var(Matrix v) { return std::make_shared<Var>(std::move(v)); }

// Reverse-mode computation record over matrix-level operations. Each op
// appends a closure that pushes the output gradient into its inputs;
// backward() replays them in reverse.
class Tape {
 public:
  VarPtr matmul(const VarPtr& a, const VarPtr& b) {
    auto out = make_var(nn::matmul(a->val, b->val));
    record([a, b, out] {
      add_a_bt(a->grad, out->grad, b->val);
      add_at_b(b->grad, a->val, out->grad);
    });
    return out;
  }

  // W*x + b, bias broadcast over columns
  VarPtr affine(const VarPtr& W, const VarPtr& x, const VarPtr& b) {
    Matrix v = nn::matmul(W->val, x->val);
    add_bias_inplace(v, b->val);
    auto out = make_var(std::move(v));
    record([W, x, b, out] {
      add_a_bt(W->grad, out->grad, x->val);
      add_at_b(x->grad, W->val, out->grad);
      add_row_sums(b->grad, out->grad);
    });
    return out;
  }

  // W*x + U*h + b, the recurrent pre-activation
  VarPtr affine2(const VarPtr& W, const VarPtr& x, const VarPtr& U, const VarPtr& h,
                 const VarPtr& b) {
    Matrix v = nn::matmul(W->val, x->val);
    Matrix uh = nn::matmul(U->val, h->val);
    for (std::size_t i = 0; i < v.size(); ++i) v[i] += uh[i];
    add_bias_inplace(v, b->val);
    auto out = make_var(std::move(v));
    record([W, x, U, h, b, out] {
      add_a_bt(W->grad, out->grad, x->val);
      add_at_b(x->grad, W->val, out->grad);
      add_a_bt(U->grad, out->grad, h->val);
      add_at_b(h->grad, U->val, out->grad);
      add_row_sums(b->grad, out->grad);
    });
    return out;
  }

  VarPtr add(const VarPtr& a, const VarPtr& b) {
    if (!a->val.same_shape(b->val)) throw ContractViolation("add: shape mismatch");
    Matrix v = a->val;
    for (std::size_t i = 0; i < v.size(); ++i) v[i] += b->val[i];
    auto out = make_var(std::move(v));
    record([a, b, out] {
      for (std::size_t i = 0; i < out->grad.size(); ++i) {
        a->grad[i] += out->grad[i];
        b->grad[i] += out->grad[i];
      }
    });
    return out;
  }

  VarPtr hadamard(const VarPtr& a, const VarPtr& b) {
    if (!a->val.same_shape(b->val)) throw ContractViolation("hadamard: shape mismatch");
    Matrix v = a->val;
    for (std::size_t i = 0; i < v.size(); ++i) v[i] *= b->val[i];
    auto out = make_var(std::move(v));
    record([a, b, out] {
      for (std::size_t i = 0; i < out->grad.size(); ++i) {
        a->grad[i] += out->grad[i] * b->val[i];
        b->grad[i] += out->grad[i] * a->val[i];
      }
    });
    return out;
  }

  VarPtr one_minus(const VarPtr& a) {
    Matrix v = a->val;
    for (std::size_t i = 0; i < v.size(); ++i) v[i] = 1.0 - v[i];
    auto out = make_var(std::move(v));
    record([a, out] {
      for (std::size_t i = 0; i < out->grad.size(); ++i) a->grad[i] -= out->grad[i];
    });
    return out;
  }

  VarPtr sigmoid(const VarPtr& a) {
    Matrix v = a->val;
    for (std::size_t i = 0; i < v.size(); ++i) v[i] = 1.0 / (1.0 + std::exp(-v[i]));
    auto out = make_var(std::move(v));
    record([a, out] {
      for (std::size_t i = 0; i < out->grad.size(); ++i) {
        double y = out->val[i];
        a->grad[i] += out->grad[i] * y * (1.0 - y);
      }
    });
    return out;
  }

  VarPtr tanh(const VarPtr& a) {
    Matrix v = a->val;
    for (std::size_t i = 0; i < v.size(); ++i) v[i] = std::tanh(v[i]);
    auto out = make_var(std::move(v));
    record([a, out] {
      for (std::size_t i = 0; i < out->grad.size(); ++i) {
        double y = out->val[i];
        a->grad[i] += out->grad[i] * (1.0 - y * y);
      }
    });
    return out;
  }

  VarPtr relu(const VarPtr& a) {
    Matrix v = a->val;
    for (std::size_t i = 0; i < v.size(); ++i) v[i] = v[i] > 0.0 ? v[i] : 0.0;
    auto out = make_var(std::move(v));
    record([a, out] {
      for (std::size_t i = 0; i < out->grad.size(); ++i)
        if (a->val[i] > 0.0) a->grad[i] += out->grad[i];
    });
    return out;
  }

  VarPtr exp(const VarPtr& a) {
    Matrix v = a->val;
    for (std::size_t i = 0; i < v.size(); ++i) v[i] = std::exp(v[i]);
    auto out = make_var(std::move(v));
    record([a, out] {
      for (std::size_t i = 0; i < out->grad.size(); ++i)
        a->grad[i] += out->grad[i] * out->val[i];
    });
    return out;
  }

  // column-wise softmax
  VarPtr softmax(const VarPtr& a) {
    auto out = make_var(softmax_columns(a->val));
    record([a, out] {
      const std::size_t rows = out->val.rows(), cols = out->val.cols();
      for (std::size_t j = 0; j < cols; ++j) {
        double dot = 0.0;
        for (std::size_t i = 0; i < rows; ++i) dot += out->grad(i, j) * out->val(i, j);
        for (std::size_t i = 0; i < rows; ++i)
          a->grad(i, j) += out->val(i, j) * (out->grad(i, j) - dot);
      }
    });
    return out;
  }

  // out[:,j] = mask[j] ? a[:,j] : b[:,j]; keeps padded batch entries untouched
  VarPtr col_select(const VarPtr& a, const VarPtr& b, std::vector<double> mask) {
    if (!a->val.same_shape(b->val) || mask.size() != a->val.cols())
      throw ContractViolation("col_select: shape mismatch");
    Matrix v = a->val;
    const std::size_t rows = v.rows(), cols = v.cols();
    for (std::size_t j = 0; j < cols; ++j)
      if (mask[j] == 0.0)
        for (std::size_t i = 0; i < rows; ++i) v(i, j) = b->val(i, j);
    auto out = make_var(std::move(v));
    record([a, b, out, mask = std::move(mask)] {
      const std::size_t rows = out->val.rows(), cols = out->val.cols();
      for (std::size_t j = 0; j < cols; ++j) {
        auto& dst = mask[j] != 0.0 ? a->grad : b->grad;
        for (std::size_t i = 0; i < rows; ++i) dst(i, j) += out->grad(i, j);
      }
    });
    return out;
  }

  // inverted dropout: out = a .* keep * scale
  VarPtr dropout(const VarPtr& a, std::vector<char> keep, double scale) {
    if (keep.size() != a->val.size()) throw ContractViolation("dropout: mask size mismatch");
    Matrix v = a->val;
    for (std::size_t i = 0; i < v.size(); ++i) v[i] = keep[i] ? v[i] * scale : 0.0;
    auto out = make_var(std::move(v));
    record([a, out, keep = std::move(keep), scale] {
      for (std::size_t i = 0; i < out->grad.size(); ++i)
        if (keep[i]) a->grad[i] += out->grad[i] * scale;
    });
    return out;
  }

  VarPtr concat_rows(const VarPtr& a, const VarPtr& b) {
    if (a->val.cols() != b->val.cols()) throw ContractViolation("concat_rows: column mismatch");
    const std::size_t ra = a->val.rows(), rb = b->val.rows(), cols = a->val.cols();
    Matrix v(ra + rb, cols);
    for (std::size_t i = 0; i < ra; ++i)
      for (std::size_t j = 0; j < cols; ++j) v(i, j) = a->val(i, j);
    for (std::size_t i = 0; i < rb; ++i)
      for (std::size_t j = 0; j < cols; ++j) v(ra + i, j) = b->val(i, j);
    auto out = make_var(std::move(v));
    record([a, b, out, ra, rb] {
      const std::size_t cols = out->val.cols();
      for (std::size_t i = 0; i < ra; ++i)
        for (std::size_t j = 0; j < cols; ++j) a->grad(i, j) += out->grad(i, j);
      for (std::size_t i = 0; i < rb; ++i)
        for (std::size_t j = 0; j < cols; ++j) b->grad(i, j) += out->grad(ra + i, j);
    });
    return out;
  }

  VarPtr scale(const VarPtr& a, double s) {
    Matrix v = a->val;
    for (std::size_t i = 0; i < v.size(); ++i) v[i] *= s;
    auto out = make_var(std::move(v));
    record([a, out, s] {
      for (std::size_t i = 0; i < out->grad.size(); ++i) a->grad[i] += out->grad[i] * s;
    });
    return out;
  }

  VarPtr sum_all(const VarPtr& a) {
    double s = 0.0;
    for (std::size_t i = 0; i < a->val.size(); ++i) s += a->val[i];
    auto out = make_var(Matrix(1, 1, s));
    record([a, out] {
      double g = out->grad(0, 0);
      for (std::size_t i = 0; i < a->grad.size(); ++i) a->grad[i] += g;
    });
    return out;
  }

  // mean over the batch of -log softmax(scores)[label]; Eq. of the
  // cross-entropy over predicted action scores
  VarPtr cross_entropy_from_scores(const VarPtr& scores, std::vector<int> labels) {
    const std::size_t k = scores->val.rows(), batch = scores->val.cols();
    if (labels.size() != batch)
      throw ContractViolation("cross_entropy_from_scores: label count != batch");
    Matrix probs = softmax_columns(scores->val);
    double loss = 0.0;
    for (std::size_t j = 0; j < batch; ++j) {
      int c = labels[j];
      if (c < 0 || static_cast<std::size_t>(c) >= k)
        throw ContractViolation("cross_entropy_from_scores: label out of range");
      loss -= std::log(probs(static_cast<std::size_t>(c), j));
    }
    loss /= static_cast<double>(batch);
    auto out = make_var(Matrix(1, 1, loss));
    record([scores, out, probs = std::move(probs), labels = std::move(labels)] {
      const double g = out->grad(0, 0) / static_cast<double>(labels.size());
      const std::size_t k = probs.rows();
      for (std::size_t j = 0; j < labels.size(); ++j)
        for (std::size_t i = 0; i < k; ++i) {
          double p = probs(i, j);
          if (static_cast<int>(i) == labels[j]) p -= 1.0;
          scores->grad(i, j) += g * p;
        }
    });
    return out;
  }

  // mean over the batch of log(sigma) + (target - mu)^2 / (2 sigma^2);
  // the constant 0.5*log(2*pi) of the full negative log likelihood is dropped
  VarPtr gaussian_nll(const VarPtr& mu, const VarPtr& sigma, std::vector<double> targets) {
    const std::size_t batch = mu->val.cols();
    if (mu->val.rows() != 1 || sigma->val.rows() != 1 || sigma->val.cols() != batch ||
        targets.size() != batch)
      throw ContractViolation("gaussian_nll: shape mismatch");
    double loss = 0.0;
    for (std::size_t j = 0; j < batch; ++j) {
      double sg = sigma->val(0, j);
      if (sg <= 0.0) throw ContractViolation("gaussian_nll: sigma must be > 0");
      double d = targets[j] - mu->val(0, j);
      loss += std::log(sg) + d * d / (2.0 * sg * sg);
    }
    loss /= static_cast<double>(batch);
    auto out = make_var(Matrix(1, 1, loss));
    record([mu, sigma, out, targets = std::move(targets)] {
      const double g = out->grad(0, 0) / static_cast<double>(targets.size());
      for (std::size_t j = 0; j < targets.size(); ++j) {
        double sg = sigma->val(0, j);
        double d = targets[j] - mu->val(0, j);
        mu->grad(0, j) += g * (-d) / (sg * sg);
        sigma->grad(0, j) += g * (1.0 / sg - d * d / (sg * sg * sg));
      }
    });
    return out;
  }

  // Seeds the output gradient and propagates through the record in reverse.
  void backward(const VarPtr& out, const Matrix* seed = nullptr) {
    if (!out) throw ContractViolation("backward: null output");
    if (ops_.empty()) throw ContractViolation("backward: no recorded forward computation");
    if (seed) {
      if (!seed->same_shape(out->grad)) throw ContractViolation("backward: bad seed shape");
      out->grad = *seed;
    } else {
      out->grad.fill(1.0);
    }
    for (auto it = ops_.rbegin(); it != ops_.rend(); ++it) (*it)();
  }

  std::size_t num_ops() const { return ops_.size(); }

  static Matrix softmax_columns(const Matrix& scores) {
    Matrix probs = scores;
    const std::size_t rows = scores.rows(), cols = scores.cols();
    for (std::size_t j = 0; j < cols; ++j) {
      double mx = scores(0, j);
      for (std::size_t i = 1; i < rows; ++i) mx = std::max(mx, scores(i, j));
      double sum = 0.0;
      for (std::size_t i = 0; i < rows; ++i) {
        double e = std::exp(scores(i, j) - mx);
        probs(i, j) = e;
        sum += e;
      }
      for (std::size_t i = 0; i < rows; ++i) probs(i, j) /= sum;
    }
    return probs;
  }

 private:
  static void add_bias_inplace(Matrix& v, const Matrix& b) {
    if (b.cols() != 1 || b.rows() != v.rows()) throw ContractViolation("bias shape mismatch");
    for (std::size_t i = 0; i < v.rows(); ++i)
      for (std::size_t j = 0; j < v.cols(); ++j) v(i, j) += b[i];
  }

  static void add_row_sums(Matrix& dst, const Matrix& g) {
    for (std::size_t i = 0; i < g.rows(); ++i) {
      double s = 0.0;
      for (std::size_t j = 0; j < g.cols(); ++j) s += g(i, j);
      dst[i] += s;
    }
  }

  void record(std::function<void()> f) { ops_.push_back(std::move(f)); }

  std::vector<std::function<void()>> ops_;
};

}  // namespace antic::nn
