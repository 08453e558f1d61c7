#pragma once

#include <cstddef>
#include <string>
#include <vector>

#include "antic/errors.hpp"

namespace antic::nn {

// Dense row-major matrix of doubles. Activations are stored as
// (features x batch); weights as (out x in). A vector is a one-column matrix.
class Matrix {
 public:
  Matrix() = default;
  Matrix(std::size_t rows, std::size_t cols, double fill = 0.0)
      : rows_(rows), cols_(cols), data_(rows * cols, fill) {}

  static Matrix from(std::size_t rows, std::size_t cols, std::vector<double> data) {
    if (data.size() != rows * cols) throw ContractViolation("Matrix::from: size mismatch");
    Matrix m;
    m.rows_ = rows;
    m.cols_ = cols;
    m.data_ = std::move(data);
    return m;
  }

  std::size_t rows() const { return rows_; }
  std::size_t cols() const { return cols_; }
  std::size_t size() const { return data_.size(); }

  double& operator()(std::size_t r, std::size_t c) { return data_[r * cols_ + c]; }
  double operator()(std::size_t r, std::size_t c) const { return data_[r * cols_ + c]; }
  double& operator[](std::size_t i) { return data_[i]; }
  double operator[](std::size_t i) const { return data_[i]; }

  double* data() { return data_.data(); }
  const double* data() const { return data_.data(); }

  bool same_shape(const Matrix& o) const { return rows_ == o.rows_ && cols_ == o.cols_; }

  void fill(double v) { data_.assign(data_.size(), v); }

  std::string shape_str() const {
    return std::to_string(rows_) + "x" + std::to_string(cols_);
  }

 private:
  std::size_t rows_ = 0, cols_ = 0;
  std::vector<double> data_;
};

inline void require_shape(const Matrix& m, std::size_t rows, std::size_t cols,
                          const char* what) {
  if (m.rows() != rows || m.cols() != cols)
    throw ContractViolation(std::string(what) + ": expected " + std::to_string(rows) + "x" +
                            std::to_string(cols) + ", got " + m.shape_str());
}

// out = a * b
inline Matrix matmul(const Matrix& a, const Matrix& b) {
  if (a.cols() != b.rows()) throw ContractViolation("matmul: inner dimensions disagree");
  Matrix out(a.rows(), b.cols());
  const std::size_t m = a.rows(), k = a.cols(), n = b.cols();
  for (std::size_t i = 0; i < m; ++i) {
    double* orow = out.data() + i * n;
    const double* arow = a.data() + i * k;
    for (std::size_t l = 0; l < k; ++l) {
      const double av = arow[l];
      if (av == 0.0) continue;
      const double* brow = b.data() + l * n;
      for (std::size_t j = 0; j < n; ++j) orow[j] += av * brow[j];
    }
  }
  return out;
}

// out += a^T * b  (used by backward passes)
inline void add_at_b(Matrix& out, const Matrix& a, const Matrix& b) {
  if (a.rows() != b.rows() || out.rows() != a.cols() || out.cols() != b.cols())
    throw ContractViolation("add_at_b: shape mismatch");
  const std::size_t m = a.cols(), k = a.rows(), n = b.cols();
  for (std::size_t l = 0; l < k; ++l) {
    const double* arow = a.data() + l * m;
    const double* brow = b.data() + l * n;
    for (std::size_t i = 0; i < m; ++i) {
      const double av = arow[i];
      if (av == 0.0) continue;
      double* orow = out.data() + i * n;
      for (std::size_t j = 0; j < n; ++j) orow[j] += av * brow[j];
    }
  }
}

// out += a * b^T  (used by backward passes)
inline void add_a_bt(Matrix& out, const Matrix& a, const Matrix& b) {
  if (a.cols() != b.cols() || out.rows() != a.rows() || out.cols() != b.rows())
    throw ContractViolation("add_a_bt: shape mismatch");
  const std::size_t m = a.rows(), k = a.cols(), n = b.rows();
  for (std::size_t i = 0; i < m; ++i) {
    const double* arow = a.data() + i * k;
    double* orow = out.data() + i * n;
    for (std::size_t j = 0; j < n; ++j) {
      const double* brow = b.data() + j * k;
      double acc = 0.0;
      for (std::size_t l = 0; l < k; ++l) acc += arow[l] * brow[l];
      orow[j] += acc;
    }
  }
}

}  // namespace antic::nn
