#pragma once

#include <algorithm>
#include <cstddef>
#include <cstdint>
#include <limits>
#include <string>
#include <tuple>
#include <vector>

#include "dgcn/dense.hpp"
#include "dgcn/error.hpp"

namespace dgcn {

struct Triplet {
  std::size_t row;
  std::size_t col;
  double value;
};

/// Compressed-row sparse matrix with nonnegative weights. Canonical form:
/// strictly increasing column indices per row, no duplicates, no explicit
/// zeros. The adjacency matrix A, A-tilde = A + I and every proximity matrix
/// live in this type.
struct SparseMatrix {
  std::size_t n_rows = 0;
  std::size_t n_cols = 0;
  std::vector<std::size_t> row_offsets;  // length n_rows + 1
  std::vector<std::size_t> col_indices;
  std::vector<double> values;

  SparseMatrix() : row_offsets(1, 0) {}
  SparseMatrix(std::size_t rows, std::size_t cols)
      : n_rows(rows), n_cols(cols), row_offsets(rows + 1, 0) {}

  std::size_t nnz() const { return values.size(); }

  std::size_t row_begin(std::size_t i) const { return row_offsets[i]; }
  std::size_t row_end(std::size_t i) const { return row_offsets[i + 1]; }

  /// Entry lookup by binary search; absent entries read as 0.
  double at(std::size_t i, std::size_t j) const {
    const auto first = col_indices.begin() + static_cast<std::ptrdiff_t>(row_begin(i));
    const auto last = col_indices.begin() + static_cast<std::ptrdiff_t>(row_end(i));
    auto it = std::lower_bound(first, last, j);
    if (it == last || *it != j) return 0.0;
    return values[static_cast<std::size_t>(it - col_indices.begin())];
  }

  bool is_canonical() const {
    if (row_offsets.size() != n_rows + 1 || row_offsets.front() != 0 ||
        row_offsets.back() != nnz())
      return false;
    for (std::size_t i = 0; i < n_rows; ++i) {
      if (row_offsets[i] > row_offsets[i + 1]) return false;
      for (std::size_t k = row_begin(i); k < row_end(i); ++k) {
        if (col_indices[k] >= n_cols) return false;
        if (k > row_begin(i) && col_indices[k] <= col_indices[k - 1]) return false;
        if (values[k] == 0.0 || values[k] < 0.0) return false;
      }
    }
    return true;
  }

  std::vector<Triplet> to_triplets() const {
    std::vector<Triplet> t;
    t.reserve(nnz());
    for (std::size_t i = 0; i < n_rows; ++i)
      for (std::size_t k = row_begin(i); k < row_end(i); ++k)
        t.push_back({i, col_indices[k], values[k]});
    return t;
  }

  /// Canonicalizing constructor: sums duplicate coordinates, drops zeros,
  /// rejects negative values and out-of-range indices.
  static SparseMatrix from_triplets(std::size_t rows, std::size_t cols,
                                    std::vector<Triplet> triplets) {
    for (const Triplet& t : triplets) {
      if (t.row >= rows || t.col >= cols)
        throw BoundsError("triplet index (" + std::to_string(t.row) + "," +
                          std::to_string(t.col) + ") outside " + std::to_string(rows) +
                          "x" + std::to_string(cols));
      if (t.value < 0.0)
        throw DomainError("negative value " + std::to_string(t.value) + " at (" +
                          std::to_string(t.row) + "," + std::to_string(t.col) + ")");
    }
    std::sort(triplets.begin(), triplets.end(), [](const Triplet& a, const Triplet& b) {
      return std::tie(a.row, a.col) < std::tie(b.row, b.col);
    });
    SparseMatrix m(rows, cols);
    m.col_indices.reserve(triplets.size());
    m.values.reserve(triplets.size());
    std::size_t i = 0;
    for (std::size_t r = 0; r < rows; ++r) {
      while (i < triplets.size() && triplets[i].row == r) {
        const std::size_t c = triplets[i].col;
        double v = 0.0;
        while (i < triplets.size() && triplets[i].row == r && triplets[i].col == c)
          v += triplets[i++].value;
        if (v != 0.0) {
          m.col_indices.push_back(c);
          m.values.push_back(v);
        }
      }
      m.row_offsets[r + 1] = m.col_indices.size();
    }
    return m;
  }

  static SparseMatrix identity(std::size_t n) {
    SparseMatrix m(n, n);
    m.col_indices.resize(n);
    m.values.assign(n, 1.0);
    for (std::size_t i = 0; i < n; ++i) {
      m.col_indices[i] = i;
      m.row_offsets[i + 1] = i + 1;
    }
    return m;
  }
};

inline SparseMatrix transpose(const SparseMatrix& s) {
  SparseMatrix t(s.n_cols, s.n_rows);
  std::vector<std::size_t> count(s.n_cols, 0);
  for (std::size_t c : s.col_indices) ++count[c];
  for (std::size_t i = 0; i < s.n_cols; ++i) t.row_offsets[i + 1] = t.row_offsets[i] + count[i];
  t.col_indices.resize(s.nnz());
  t.values.resize(s.nnz());
  std::vector<std::size_t> next(t.row_offsets.begin(), t.row_offsets.end() - 1);
  for (std::size_t i = 0; i < s.n_rows; ++i) {
    for (std::size_t k = s.row_begin(i); k < s.row_end(i); ++k) {
      const std::size_t pos = next[s.col_indices[k]]++;
      t.col_indices[pos] = i;  // rows visited in order, so columns stay sorted
      t.values[pos] = s.values[k];
    }
  }
  return t;
}

/// Entrywise sum by per-row two-pointer merge.
inline SparseMatrix add(const SparseMatrix& a, const SparseMatrix& b) {
  check_shapes(a.n_rows, b.n_rows, "add rows");
  check_shapes(a.n_cols, b.n_cols, "add cols");
  SparseMatrix c(a.n_rows, a.n_cols);
  c.col_indices.reserve(a.nnz() + b.nnz());
  c.values.reserve(a.nnz() + b.nnz());
  for (std::size_t i = 0; i < a.n_rows; ++i) {
    std::size_t ka = a.row_begin(i), kb = b.row_begin(i);
    while (ka < a.row_end(i) || kb < b.row_end(i)) {
      std::size_t ca = ka < a.row_end(i) ? a.col_indices[ka] : SIZE_MAX;
      std::size_t cb = kb < b.row_end(i) ? b.col_indices[kb] : SIZE_MAX;
      if (ca < cb) {
        c.col_indices.push_back(ca);
        c.values.push_back(a.values[ka++]);
      } else if (cb < ca) {
        c.col_indices.push_back(cb);
        c.values.push_back(b.values[kb++]);
      } else {
        const double v = a.values[ka++] + b.values[kb++];
        if (v != 0.0) {
          c.col_indices.push_back(ca);
          c.values.push_back(v);
        }
      }
    }
    c.row_offsets[i + 1] = c.col_indices.size();
  }
  return c;
}

inline SparseMatrix scaled(const SparseMatrix& s, double factor) {
  SparseMatrix r = s;
  for (double& v : r.values) v *= factor;
  return r;
}

/// diag(f) * s: row i scaled by f[i].
inline SparseMatrix scale_rows(const SparseMatrix& s, const std::vector<double>& f) {
  check_shapes(s.n_rows, f.size(), "scale_rows");
  SparseMatrix r = s;
  for (std::size_t i = 0; i < s.n_rows; ++i)
    for (std::size_t k = s.row_begin(i); k < s.row_end(i); ++k) r.values[k] *= f[i];
  return r;
}

/// s * diag(f): column j scaled by f[j].
inline SparseMatrix scale_cols(const SparseMatrix& s, const std::vector<double>& f) {
  check_shapes(s.n_cols, f.size(), "scale_cols");
  SparseMatrix r = s;
  for (std::size_t k = 0; k < r.nnz(); ++k) r.values[k] *= f[r.col_indices[k]];
  return r;
}

inline std::vector<double> row_sums(const SparseMatrix& s) {
  std::vector<double> sums(s.n_rows, 0.0);
  for (std::size_t i = 0; i < s.n_rows; ++i)
    for (std::size_t k = s.row_begin(i); k < s.row_end(i); ++k) sums[i] += s.values[k];
  return sums;
}

inline std::vector<double> col_sums(const SparseMatrix& s) {
  std::vector<double> sums(s.n_cols, 0.0);
  for (std::size_t k = 0; k < s.nnz(); ++k) sums[s.col_indices[k]] += s.values[k];
  return sums;
}

/// Sparse times dense. Accumulation order is fixed: output rows in order,
/// within a row the sparse entries in ascending column. Deterministic.
inline DenseMatrix spmm(const SparseMatrix& s, const DenseMatrix& d) {
  check_shapes(s.n_cols, d.n_rows, "spmm");
  DenseMatrix out(s.n_rows, d.n_cols);
  for (std::size_t i = 0; i < s.n_rows; ++i) {
    double* oi = out.row(i);
    for (std::size_t k = s.row_begin(i); k < s.row_end(i); ++k) {
      const double v = s.values[k];
      const double* dr = d.row(s.col_indices[k]);
      for (std::size_t j = 0; j < d.n_cols; ++j) oi[j] += v * dr[j];
    }
  }
  return out;
}

/// s^T times dense, without materializing the transpose: scatter row k of s
/// into output rows, k ascending. Deterministic.
inline DenseMatrix spmm_t(const SparseMatrix& s, const DenseMatrix& d) {
  check_shapes(s.n_rows, d.n_rows, "spmm_t");
  DenseMatrix out(s.n_cols, d.n_cols);
  for (std::size_t k = 0; k < s.n_rows; ++k) {
    const double* dk = d.row(k);
    for (std::size_t p = s.row_begin(k); p < s.row_end(k); ++p) {
      const double v = s.values[p];
      double* oc = out.row(s.col_indices[p]);
      for (std::size_t j = 0; j < d.n_cols; ++j) oc[j] += v * dk[j];
    }
  }
  return out;
}

/// Sparse-sparse product (Gustavson). For output row i, contributions are
/// accumulated over a's row entries in ascending column order; output columns
/// sorted afterwards.
inline SparseMatrix spgemm(const SparseMatrix& a, const SparseMatrix& b) {
  check_shapes(a.n_cols, b.n_rows, "spgemm");
  SparseMatrix c(a.n_rows, b.n_cols);
  std::vector<double> acc(b.n_cols, 0.0);
  std::vector<std::uint8_t> seen(b.n_cols, 0);
  std::vector<std::size_t> touched;
  for (std::size_t i = 0; i < a.n_rows; ++i) {
    touched.clear();
    for (std::size_t ka = a.row_begin(i); ka < a.row_end(i); ++ka) {
      const std::size_t k = a.col_indices[ka];
      const double av = a.values[ka];
      for (std::size_t kb = b.row_begin(k); kb < b.row_end(k); ++kb) {
        const std::size_t j = b.col_indices[kb];
        if (!seen[j]) {
          seen[j] = 1;
          touched.push_back(j);
        }
        acc[j] += av * b.values[kb];
      }
    }
    std::sort(touched.begin(), touched.end());
    for (std::size_t j : touched) {
      if (acc[j] != 0.0) {
        c.col_indices.push_back(j);
        c.values.push_back(acc[j]);
      }
      acc[j] = 0.0;
      seen[j] = 0;
    }
    c.row_offsets[i + 1] = c.col_indices.size();
  }
  return c;
}

inline DenseMatrix to_dense(const SparseMatrix& s) {
  DenseMatrix d(s.n_rows, s.n_cols);
  for (std::size_t i = 0; i < s.n_rows; ++i)
    for (std::size_t k = s.row_begin(i); k < s.row_end(i); ++k)
      d(i, s.col_indices[k]) = s.values[k];
  return d;
}

}  // namespace dgcn
