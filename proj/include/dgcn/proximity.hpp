#pragma once

#include <cmath>
#include <string>
#include <vector>

#include "dgcn/error.hpp"
#include "dgcn/graph.hpp"
#include "dgcn/sparse.hpp"

namespace dgcn {

/// The three directed-graph proximity operators, raw and renormalized.
/// Built once per graph; every matrix is symmetric and nonnegative, and the
/// normalized ones have spectrum inside [-1, 1].
struct ProximitySet {
  SparseMatrix a_f_hat;     // normalized first-order proximity
  SparseMatrix a_sin_hat;   // normalized second-order in-degree proximity
  SparseMatrix a_sout_hat;  // normalized second-order out-degree proximity
  SparseMatrix raw_f;
  SparseMatrix raw_sin;
  SparseMatrix raw_sout;
};

/// First-order proximity: the symmetrization (M + M^T) / 2. Keeps total
/// weight and is the identity map on undirected inputs.
inline SparseMatrix first_order(const SparseMatrix& a_tilde) {
  if (a_tilde.n_rows != a_tilde.n_cols) throw DomainError("first_order: matrix not square");
  return add(scaled(a_tilde, 0.5), scaled(transpose(a_tilde), 0.5));
}

namespace detail {

/// Reciprocal row sums; rows that are entirely zero map to 0 (they cannot
/// contribute any term). A nonempty row with zero sum is impossible for
/// nonnegative canonical storage and flags a bug.
inline std::vector<double> inverse_sums(const SparseMatrix& m, const std::vector<double>& sums,
                                        bool rows) {
  std::vector<double> inv(sums.size(), 0.0);
  std::vector<bool> nonempty(sums.size(), false);
  if (rows) {
    for (std::size_t i = 0; i < m.n_rows; ++i) nonempty[i] = m.row_end(i) > m.row_begin(i);
  } else {
    for (std::size_t k = 0; k < m.nnz(); ++k) nonempty[m.col_indices[k]] = true;
  }
  for (std::size_t i = 0; i < sums.size(); ++i) {
    if (sums[i] > 0.0)
      inv[i] = 1.0 / sums[i];
    else if (nonempty[i])
      throw InternalError("nonempty " + std::string(rows ? "row " : "column ") +
                          std::to_string(i) + " has zero sum");
  }
  return inv;
}

}  // namespace detail

/// Second-order in-degree proximity of M:
///   S_in(i,j) = sum_k M(k,i) * M(k,j) / (sum_v M(k,v))
/// i.e. similarity through shared predecessors, each predecessor's
/// contribution normalized by its total out-weight. Computed as the sparse
/// product M^T * D_row^{-1} * M.
inline SparseMatrix second_order_in(const SparseMatrix& a_tilde) {
  if (a_tilde.n_rows != a_tilde.n_cols) throw DomainError("second_order_in: matrix not square");
  const auto inv = detail::inverse_sums(a_tilde, row_sums(a_tilde), true);
  return spgemm(transpose(a_tilde), scale_rows(a_tilde, inv));
}

/// Second-order out-degree proximity of M:
///   S_out(i,j) = sum_k M(i,k) * M(j,k) / (sum_v M(v,k))
/// similarity through shared successors, normalized by each successor's
/// total in-weight. Computed as M * D_col^{-1} * M^T.
inline SparseMatrix second_order_out(const SparseMatrix& a_tilde) {
  if (a_tilde.n_rows != a_tilde.n_cols) throw DomainError("second_order_out: matrix not square");
  const auto inv = detail::inverse_sums(a_tilde, col_sums(a_tilde), false);
  return spgemm(a_tilde, transpose(scale_cols(a_tilde, inv)));
}

/// Symmetric renormalization D^{-1/2} M D^{-1/2} with D = diag(row sums).
/// Requires every row sum positive; on proximity matrices built from
/// A-tilde the diagonal guarantees it.
inline SparseMatrix sym_normalize(const SparseMatrix& m) {
  if (m.n_rows != m.n_cols) throw DomainError("sym_normalize: matrix not square");
  const auto sums = row_sums(m);
  for (std::size_t i = 0; i < m.n_rows; ++i)
    if (sums[i] <= 0.0)
      throw DomainError("sym_normalize: node " + std::to_string(i) +
                        " is isolated (zero row sum)");
  SparseMatrix out = m;
  // v / sqrt(d_i d_j) rounds once per entry and is exact whenever d_i d_j
  // is a perfect square
  for (std::size_t i = 0; i < m.n_rows; ++i)
    for (std::size_t k = m.row_begin(i); k < m.row_end(i); ++k)
      out.values[k] = m.values[k] / std::sqrt(sums[i] * sums[m.col_indices[k]]);
  return out;
}

/// Opt-in sparsity control: drop entries strictly below eps.
inline SparseMatrix drop_small_entries(const SparseMatrix& m, double eps) {
  if (eps <= 0.0) return m;
  SparseMatrix out(m.n_rows, m.n_cols);
  for (std::size_t i = 0; i < m.n_rows; ++i) {
    for (std::size_t k = m.row_begin(i); k < m.row_end(i); ++k) {
      if (m.values[k] >= eps) {
        out.col_indices.push_back(m.col_indices[k]);
        out.values.push_back(m.values[k]);
      }
    }
    out.row_offsets[i + 1] = out.col_indices.size();
  }
  return out;
}

/// Full pipeline: A-tilde = A + I, the three proximity matrices, then the
/// symmetric renormalization of each. prox_eps > 0 prunes the normalized
/// matrices only.
inline ProximitySet build_proximity_set(const DirectedGraph& g, double prox_eps = 0.0) {
  const SparseMatrix a_tilde = add_self_loops(g);
  ProximitySet p;
  p.raw_f = first_order(a_tilde);
  p.raw_sin = second_order_in(a_tilde);
  p.raw_sout = second_order_out(a_tilde);
  p.a_f_hat = drop_small_entries(sym_normalize(p.raw_f), prox_eps);
  p.a_sin_hat = drop_small_entries(sym_normalize(p.raw_sin), prox_eps);
  p.a_sout_hat = drop_small_entries(sym_normalize(p.raw_sout), prox_eps);
  return p;
}

}  // namespace dgcn
