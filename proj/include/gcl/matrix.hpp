#pragma once

#include <cmath>
#include <cstddef>
#include <vector>

#include "gcl/errors.hpp"

namespace gcl {

using DenseVector = std::vector<double>;

/// Row-major dense matrix of doubles. Small and deliberately plain: the
/// training problems here are desk scale, so clarity and determinism win
/// over BLAS throughput.
class DenseMatrix {
 public:
  DenseMatrix() = default;
  DenseMatrix(std::size_t rows, std::size_t cols, double fill = 0.0)
      : rows_(rows), cols_(cols), data_(rows * cols, fill) {}

  std::size_t rows() const { return rows_; }
  std::size_t cols() const { return cols_; }
  std::size_t size() const { return data_.size(); }
  bool empty() const { return data_.empty(); }

  double& operator()(std::size_t r, std::size_t c) { return data_[r * cols_ + c]; }
  double operator()(std::size_t r, std::size_t c) const { return data_[r * cols_ + c]; }

  double* row_ptr(std::size_t r) { return data_.data() + r * cols_; }
  const double* row_ptr(std::size_t r) const { return data_.data() + r * cols_; }

  std::vector<double>& data() { return data_; }
  const std::vector<double>& data() const { return data_; }

  bool same_shape(const DenseMatrix& other) const {
    return rows_ == other.rows_ && cols_ == other.cols_;
  }

  bool all_finite() const {
    for (double v : data_)
      if (!std::isfinite(v)) return false;
    return true;
  }

 private:
  std::size_t rows_ = 0;
  std::size_t cols_ = 0;
  std::vector<double> data_;
};

inline void check_shape(bool ok, const char* what) {
  if (!ok) throw InvalidArgument(std::string("shape mismatch: ") + what);
}

/// out = a * b
inline DenseMatrix matmul(const DenseMatrix& a, const DenseMatrix& b) {
  check_shape(a.cols() == b.rows(), "matmul inner dimensions");
  DenseMatrix out(a.rows(), b.cols(), 0.0);
  for (std::size_t i = 0; i < a.rows(); ++i) {
    double* oi = out.row_ptr(i);
    const double* ai = a.row_ptr(i);
    for (std::size_t k = 0; k < a.cols(); ++k) {
      const double aik = ai[k];
      const double* bk = b.row_ptr(k);
      for (std::size_t j = 0; j < b.cols(); ++j) oi[j] += aik * bk[j];
    }
  }
  return out;
}

/// out = a * b^T
inline DenseMatrix matmul_transB(const DenseMatrix& a, const DenseMatrix& b) {
  check_shape(a.cols() == b.cols(), "matmul_transB inner dimensions");
  DenseMatrix out(a.rows(), b.rows(), 0.0);
  for (std::size_t i = 0; i < a.rows(); ++i) {
    const double* ai = a.row_ptr(i);
    for (std::size_t j = 0; j < b.rows(); ++j) {
      const double* bj = b.row_ptr(j);
      double acc = 0.0;
      for (std::size_t k = 0; k < a.cols(); ++k) acc += ai[k] * bj[k];
      out(i, j) = acc;
    }
  }
  return out;
}

/// out = a^T * b
inline DenseMatrix matmul_transA(const DenseMatrix& a, const DenseMatrix& b) {
  check_shape(a.rows() == b.rows(), "matmul_transA inner dimensions");
  DenseMatrix out(a.cols(), b.cols(), 0.0);
  for (std::size_t i = 0; i < a.rows(); ++i) {
    const double* ai = a.row_ptr(i);
    const double* bi = b.row_ptr(i);
    for (std::size_t p = 0; p < a.cols(); ++p) {
      const double aip = ai[p];
      double* op = out.row_ptr(p);
      for (std::size_t q = 0; q < b.cols(); ++q) op[q] += aip * bi[q];
    }
  }
  return out;
}

inline double l2_norm(const double* v, std::size_t n) {
  double acc = 0.0;
  for (std::size_t i = 0; i < n; ++i) acc += v[i] * v[i];
  return std::sqrt(acc);
}

inline double l2_norm(const DenseVector& v) { return l2_norm(v.data(), v.size()); }

/// Unit-norm copy of v. Throws on the zero vector.
inline DenseVector l2_normalize(const DenseVector& v) {
  const double n = l2_norm(v);
  if (n == 0.0) throw InvalidArgument("l2_normalize: zero vector");
  DenseVector out(v.size());
  for (std::size_t i = 0; i < v.size(); ++i) out[i] = v[i] / n;
  return out;
}

}  // namespace gcl
