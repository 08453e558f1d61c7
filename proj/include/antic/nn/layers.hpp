#pragma once

#include <cmath>
#include <string>
#include <vector>

#include "antic/nn/tape.hpp"
#include "antic/rng.hpp"

namespace antic::nn {

enum class Activation { Identity, Relu, Exponential, Softmax };

inline Matrix apply_activation(Matrix m, Activation act) {
  switch (act) {
    case Activation::Identity:
      return m;
    case Activation::Relu:
      for (std::size_t i = 0; i < m.size(); ++i) m[i] = m[i] > 0.0 ? m[i] : 0.0;
      return m;
    case Activation::Exponential:
      for (std::size_t i = 0; i < m.size(); ++i) m[i] = std::exp(m[i]);
      return m;
    case Activation::Softmax:
      return Tape::softmax_columns(m);
  }
  throw ContractViolation("unknown activation");
}

// Named parameter handle for optimizers and checkpoints.
struct Param {
  std::string name;
  VarPtr var;
};

inline Matrix uniform_init(std::size_t rows, std::size_t cols, std::size_t fan_in, Rng& rng) {
  double bound = std::sqrt(1.0 / static_cast<double>(fan_in));
  Matrix m(rows, cols);
  for (std::size_t i = 0; i < m.size(); ++i) m[i] = rng.uniform(-bound, bound);
  return m;
}

// Dropout sampling context; a null rng means inference (identity).
struct Dropout {
  double rate = 0.0;
  Rng* rng = nullptr;

  VarPtr apply(Tape& tape, const VarPtr& x) const {
    if (!rng || rate <= 0.0) return x;
    if (rate >= 1.0) throw ContractViolation("dropout rate must be < 1");
    std::vector<char> keep(x->val.size());
    for (auto& k : keep) k = rng->uniform() >= rate ? 1 : 0;
    return tape.dropout(x, std::move(keep), 1.0 / (1.0 - rate));
  }
};

// y = act(W x + b)
struct Dense {
  VarPtr W, b;
  Activation act = Activation::Identity;

  Dense() = default;
  Dense(std::size_t out, std::size_t in, Activation act, Rng& rng)
      : W(make_var(uniform_init(out, in, in, rng))), b(make_var(Matrix(out, 1))), act(act) {}

  std::size_t out_dim() const { return W->val.rows(); }
  std::size_t in_dim() const { return W->val.cols(); }

  VarPtr forward(Tape& tape, const VarPtr& x) const {
    auto y = tape.affine(W, x, b);
    switch (act) {
      case Activation::Identity:
        return y;
      case Activation::Relu:
        return tape.relu(y);
      case Activation::Exponential:
        return tape.exp(y);
      case Activation::Softmax:
        return tape.softmax(y);
    }
    throw ContractViolation("unknown activation");
  }

  Matrix forward_plain(const Matrix& x) const {
    Matrix y = nn::matmul(W->val, x);
    for (std::size_t i = 0; i < y.rows(); ++i)
      for (std::size_t j = 0; j < y.cols(); ++j) y(i, j) += b->val[i];
    return apply_activation(std::move(y), act);
  }

  void collect(const std::string& prefix, std::vector<Param>& out) const {
    out.push_back({prefix + ".W", W});
    out.push_back({prefix + ".b", b});
  }
};

// Free-function form, mirroring the layer contract directly.
inline Matrix dense_forward(const Matrix& W, const Matrix& b, const Matrix& x, Activation act) {
  if (W.cols() != x.rows() || b.rows() != W.rows() || b.cols() != 1)
    throw ContractViolation("dense_forward: shape mismatch");
  Matrix y = nn::matmul(W, x);
  for (std::size_t i = 0; i < y.rows(); ++i)
    for (std::size_t j = 0; j < y.cols(); ++j) y(i, j) += b[i];
  return apply_activation(std::move(y), act);
}

// Gated recurrent unit:
//   z = sig(Wz x + Uz h + bz)
//   r = sig(Wr x + Ur h + br)
//   hc = tanh(Wh x + Uh (r.h) + bh)
//   h' = (1-z).h + z.hc
struct GruCell {
  VarPtr Wz, Uz, bz, Wr, Ur, br, Wh, Uh, bh;

  GruCell() = default;
  GruCell(std::size_t hidden, std::size_t input, Rng& rng) {
    Wz = make_var(uniform_init(hidden, input, input, rng));
    Uz = make_var(uniform_init(hidden, hidden, hidden, rng));
    bz = make_var(Matrix(hidden, 1));
    Wr = make_var(uniform_init(hidden, input, input, rng));
    Ur = make_var(uniform_init(hidden, hidden, hidden, rng));
    br = make_var(Matrix(hidden, 1));
    Wh = make_var(uniform_init(hidden, input, input, rng));
    Uh = make_var(uniform_init(hidden, hidden, hidden, rng));
    bh = make_var(Matrix(hidden, 1));
  }

  std::size_t hidden_dim() const { return Wz->val.rows(); }
  std::size_t input_dim() const { return Wz->val.cols(); }

  VarPtr step(Tape& tape, const VarPtr& x, const VarPtr& h) const {
    auto z = tape.sigmoid(tape.affine2(Wz, x, Uz, h, bz));
    auto r = tape.sigmoid(tape.affine2(Wr, x, Ur, h, br));
    auto rh = tape.hadamard(r, h);
    auto hc = tape.tanh(tape.affine2(Wh, x, Uh, rh, bh));
    return tape.add(tape.hadamard(tape.one_minus(z), h), tape.hadamard(z, hc));
  }

  Matrix step_plain(const Matrix& x, const Matrix& h) const {
    auto gate = [&](const VarPtr& W, const VarPtr& U, const VarPtr& b, const Matrix& hh) {
      Matrix g = nn::matmul(W->val, x);
      Matrix uh = nn::matmul(U->val, hh);
      for (std::size_t i = 0; i < g.rows(); ++i)
        for (std::size_t j = 0; j < g.cols(); ++j) g(i, j) += uh(i, j) + b->val[i];
      return g;
    };
    Matrix z = gate(Wz, Uz, bz, h);
    for (std::size_t i = 0; i < z.size(); ++i) z[i] = 1.0 / (1.0 + std::exp(-z[i]));
    Matrix r = gate(Wr, Ur, br, h);
    for (std::size_t i = 0; i < r.size(); ++i) r[i] = 1.0 / (1.0 + std::exp(-r[i]));
    Matrix rh = h;
    for (std::size_t i = 0; i < rh.size(); ++i) rh[i] *= r[i];
    Matrix hc = gate(Wh, Uh, bh, rh);
    for (std::size_t i = 0; i < hc.size(); ++i) hc[i] = std::tanh(hc[i]);
    Matrix out = h;
    for (std::size_t i = 0; i < out.size(); ++i)
      out[i] = (1.0 - z[i]) * h[i] + z[i] * hc[i];
    return out;
  }

  void collect(const std::string& prefix, std::vector<Param>& out) const {
    out.push_back({prefix + ".Wz", Wz});
    out.push_back({prefix + ".Uz", Uz});
    out.push_back({prefix + ".bz", bz});
    out.push_back({prefix + ".Wr", Wr});
    out.push_back({prefix + ".Ur", Ur});
    out.push_back({prefix + ".br", br});
    out.push_back({prefix + ".Wh", Wh});
    out.push_back({prefix + ".Uh", Uh});
    out.push_back({prefix + ".bh", bh});
  }
};

// The recurrent trunk both models share: FC -> GRU -> GRU -> FC, reading the
// final hidden state of the second GRU. Dropout sits after every layer.
struct SequenceEncoder {
  Dense input_fc;
  GruCell gru1, gru2;
  Dense hidden_fc;

  SequenceEncoder() = default;
  SequenceEncoder(std::size_t input_dim, std::size_t hidden, Rng& rng)
      : input_fc(hidden, input_dim, Activation::Relu, rng),
        gru1(hidden, hidden, rng),
        gru2(hidden, hidden, rng),
        hidden_fc(hidden, hidden, Activation::Relu, rng) {}

  std::size_t hidden_dim() const { return input_fc.out_dim(); }
  std::size_t input_dim() const { return input_fc.in_dim(); }

  // Batched forward over left-padded sequences. step_inputs[t] is D x B;
  // step_mask[t][j] == 1 when step t is real for column j. Masked steps leave
  // the hidden states of both GRU layers unchanged.
  VarPtr forward(Tape& tape, const std::vector<Matrix>& step_inputs,
                 const std::vector<std::vector<double>>& step_mask, const Dropout& drop) const {
    if (step_inputs.empty()) throw ContractViolation("encoder: empty input sequence");
    const std::size_t hidden = hidden_dim();
    const std::size_t batch = step_inputs.front().cols();
    VarPtr h1 = make_var(Matrix(hidden, batch));
    VarPtr h2 = make_var(Matrix(hidden, batch));
    for (std::size_t t = 0; t < step_inputs.size(); ++t) {
      auto x = make_var(step_inputs[t]);
      auto e = drop.apply(tape, input_fc.forward(tape, x));
      auto h1n = gru1.step(tape, e, h1);
      auto h2n = gru2.step(tape, drop.apply(tape, h1n), h2);
      const auto& mask = step_mask[t];
      bool all_real = true;
      for (double m : mask) all_real &= (m != 0.0);
      if (all_real) {
        h1 = h1n;
        h2 = h2n;
      } else {
        h1 = tape.col_select(h1n, h1, mask);
        h2 = tape.col_select(h2n, h2, mask);
      }
    }
    return drop.apply(tape, hidden_fc.forward(tape, drop.apply(tape, h2)));
  }

  // Single-sequence inference path (no record, no dropout).
  Matrix forward_plain(const std::vector<Matrix>& inputs) const {
    if (inputs.empty()) throw ContractViolation("encoder: empty input sequence");
    const std::size_t hidden = hidden_dim();
    Matrix h1(hidden, 1), h2(hidden, 1);
    for (const auto& x : inputs) {
      Matrix e = input_fc.forward_plain(x);
      h1 = gru1.step_plain(e, h1);
      h2 = gru2.step_plain(h1, h2);
    }
    return hidden_fc.forward_plain(h2);
  }

  void collect(const std::string& prefix, std::vector<Param>& out) const {
    input_fc.collect(prefix + ".input_fc", out);
    gru1.collect(prefix + ".gru1", out);
    gru2.collect(prefix + ".gru2", out);
    hidden_fc.collect(prefix + ".hidden_fc", out);
  }
};

}  // namespace antic::nn
