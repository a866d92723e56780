#pragma once

#include <cmath>
#include <cstddef>
#include <string>
#include <vector>

#include "dgcn/error.hpp"

namespace dgcn {

/// Row-major dense real matrix. Holds features, activations, parameters and
/// gradients; all arithmetic is 64-bit.
struct DenseMatrix {
  std::size_t n_rows = 0;
  std::size_t n_cols = 0;
  std::vector<double> data;  // row-major, length n_rows * n_cols

  DenseMatrix() = default;
  DenseMatrix(std::size_t rows, std::size_t cols, double fill = 0.0)
      : n_rows(rows), n_cols(cols), data(rows * cols, fill) {}

  double& operator()(std::size_t i, std::size_t j) { return data[i * n_cols + j]; }
  double operator()(std::size_t i, std::size_t j) const { return data[i * n_cols + j]; }

  double* row(std::size_t i) { return data.data() + i * n_cols; }
  const double* row(std::size_t i) const { return data.data() + i * n_cols; }

  bool same_shape(const DenseMatrix& o) const {
    return n_rows == o.n_rows && n_cols == o.n_cols;
  }

  bool all_finite() const {
    for (double v : data)
      if (!std::isfinite(v)) return false;
    return true;
  }

  static DenseMatrix identity(std::size_t n) {
    DenseMatrix m(n, n);
    for (std::size_t i = 0; i < n; ++i) m(i, i) = 1.0;
    return m;
  }
};

inline void check_shapes(std::size_t a, std::size_t b, const char* what) {
  if (a != b)
    throw DomainError(std::string("shape mismatch in ") + what + ": " +
                      std::to_string(a) + " vs " + std::to_string(b));
}

/// a (m x k) times b (k x n).
inline DenseMatrix matmul(const DenseMatrix& a, const DenseMatrix& b) {
  check_shapes(a.n_cols, b.n_rows, "matmul");
  DenseMatrix c(a.n_rows, b.n_cols);
  for (std::size_t i = 0; i < a.n_rows; ++i) {
    double* ci = c.row(i);
    const double* ai = a.row(i);
    for (std::size_t k = 0; k < a.n_cols; ++k) {
      const double aik = ai[k];
      if (aik == 0.0) continue;
      const double* bk = b.row(k);
      for (std::size_t j = 0; j < b.n_cols; ++j) ci[j] += aik * bk[j];
    }
  }
  return c;
}

/// a^T (k x m) times b (k x n); a passed untransposed.
inline DenseMatrix matmul_tn(const DenseMatrix& a, const DenseMatrix& b) {
  check_shapes(a.n_rows, b.n_rows, "matmul_tn");
  DenseMatrix c(a.n_cols, b.n_cols);
  for (std::size_t k = 0; k < a.n_rows; ++k) {
    const double* ak = a.row(k);
    const double* bk = b.row(k);
    for (std::size_t i = 0; i < a.n_cols; ++i) {
      const double aki = ak[i];
      if (aki == 0.0) continue;
      double* ci = c.row(i);
      for (std::size_t j = 0; j < b.n_cols; ++j) ci[j] += aki * bk[j];
    }
  }
  return c;
}

/// a (m x k) times b^T (n x k); b passed untransposed.
inline DenseMatrix matmul_nt(const DenseMatrix& a, const DenseMatrix& b) {
  check_shapes(a.n_cols, b.n_cols, "matmul_nt");
  DenseMatrix c(a.n_rows, b.n_rows);
  for (std::size_t i = 0; i < a.n_rows; ++i) {
    const double* ai = a.row(i);
    double* ci = c.row(i);
    for (std::size_t j = 0; j < b.n_rows; ++j) {
      const double* bj = b.row(j);
      double s = 0.0;
      for (std::size_t k = 0; k < a.n_cols; ++k) s += ai[k] * bj[k];
      ci[j] = s;
    }
  }
  return c;
}

inline DenseMatrix transpose(const DenseMatrix& a) {
  DenseMatrix t(a.n_cols, a.n_rows);
  for (std::size_t i = 0; i < a.n_rows; ++i)
    for (std::size_t j = 0; j < a.n_cols; ++j) t(j, i) = a(i, j);
  return t;
}

inline double max_abs_diff(const DenseMatrix& a, const DenseMatrix& b) {
  if (!a.same_shape(b)) throw DomainError("max_abs_diff: shape mismatch");
  double m = 0.0;
  for (std::size_t i = 0; i < a.data.size(); ++i)
    m = std::max(m, std::fabs(a.data[i] - b.data[i]));
  return m;
}

}  // namespace dgcn
