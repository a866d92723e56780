#pragma once

#include <algorithm>
#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include "dgcn/dense.hpp"
#include "dgcn/error.hpp"
#include "dgcn/graph.hpp"
#include "dgcn/sparse.hpp"

namespace dgcn {

/// The combined first-and-second-order edge set E'. Ordered pairs (i,j),
/// i != j: every directed edge of E, plus both orientations of every pair
/// sharing a predecessor or a successor. Defined on the original graph,
/// before self-loops are added.
struct EdgeSetPrime {
  std::vector<std::pair<std::size_t, std::size_t>> pairs;  // sorted, unique

  std::size_t size() const { return pairs.size(); }
};

namespace detail {

inline void add_shared_neighbor_pairs(const SparseMatrix& m,
                                      std::vector<std::pair<std::size_t, std::size_t>>& pairs) {
  // every pair of distinct entries within one row shares that row's node
  for (std::size_t k = 0; k < m.n_rows; ++k) {
    for (std::size_t p = m.row_begin(k); p < m.row_end(k); ++p) {
      for (std::size_t q = m.row_begin(k); q < m.row_end(k); ++q) {
        if (p == q) continue;
        pairs.emplace_back(m.col_indices[p], m.col_indices[q]);
      }
    }
  }
}

inline void sort_unique(std::vector<std::pair<std::size_t, std::size_t>>& pairs) {
  std::sort(pairs.begin(), pairs.end());
  pairs.erase(std::unique(pairs.begin(), pairs.end()), pairs.end());
}

}  // namespace detail

/// First-order edges only (the restricted set used for the two-row
/// smoothness comparison).
inline EdgeSetPrime build_edge_set_first_order(const DirectedGraph& g) {
  EdgeSetPrime ep;
  const SparseMatrix& a = g.adjacency;
  for (std::size_t i = 0; i < a.n_rows; ++i)
    for (std::size_t k = a.row_begin(i); k < a.row_end(i); ++k)
      if (i != a.col_indices[k]) ep.pairs.emplace_back(i, a.col_indices[k]);
  detail::sort_unique(ep.pairs);
  return ep;
}

/// E': (i,j) is a member iff (i,j) is an edge, or some k links to both i and
/// j, or both i and j link to some k. Second-order membership is symmetric,
/// so both orientations enter; self-pairs never do.
inline EdgeSetPrime build_edge_set_prime(const DirectedGraph& g) {
  EdgeSetPrime ep = build_edge_set_first_order(g);
  detail::add_shared_neighbor_pairs(transpose(g.adjacency), ep.pairs);  // shared predecessor k
  detail::add_shared_neighbor_pairs(g.adjacency, ep.pairs);             // shared successor k
  detail::sort_unique(ep.pairs);
  return ep;
}

/// Per-dimension min-max scaling into [0,1]; constant dimensions map to 0.
inline DenseMatrix normalize_features(const DenseMatrix& x) {
  DenseMatrix out(x.n_rows, x.n_cols);
  for (std::size_t j = 0; j < x.n_cols; ++j) {
    double lo = x.n_rows ? x(0, j) : 0.0;
    double hi = lo;
    for (std::size_t i = 1; i < x.n_rows; ++i) {
      lo = std::min(lo, x(i, j));
      hi = std::max(hi, x(i, j));
    }
    if (hi > lo) {
      const double inv = 1.0 / (hi - lo);
      for (std::size_t i = 0; i < x.n_rows; ++i) out(i, j) = (x(i, j) - lo) * inv;
    }
    // constant dimension: stays 0
  }
  return out;
}

/// Feature smoothness: per node, accumulate the entrywise squared feature
/// difference to each E'-neighbor; Manhattan norm of the node-summed vector,
/// divided by |E'| * d. Measures how much information the edge set exposes.
inline double feature_smoothness(const DenseMatrix& x, const EdgeSetPrime& ep) {
  if (ep.pairs.empty()) throw DomainError("feature_smoothness: empty edge set E'");
  const std::size_t d = x.n_cols;
  std::vector<double> node_vec(d, 0.0);
  double total = 0.0;
  std::size_t at = 0;
  for (std::size_t i = 0; i < x.n_rows; ++i) {
    std::fill(node_vec.begin(), node_vec.end(), 0.0);
    for (; at < ep.pairs.size() && ep.pairs[at].first == i; ++at) {
      const double* xi = x.row(i);
      const double* xj = x.row(ep.pairs[at].second);
      for (std::size_t f = 0; f < d; ++f) {
        const double diff = xi[f] - xj[f];
        node_vec[f] += diff * diff;
      }
    }
    for (double v : node_vec) total += v;  // all terms >= 0, so L1 = plain sum
  }
  return total / (static_cast<double>(ep.size()) * static_cast<double>(d));
}

/// Label smoothness: the fraction of E' pairs whose endpoints agree.
/// Diagnostic over the full ground-truth labeling.
inline double label_smoothness(const LabelVector& y, const EdgeSetPrime& ep) {
  if (ep.pairs.empty()) throw DomainError("label_smoothness: empty edge set E'");
  std::vector<std::size_t> unlabeled;
  std::size_t same = 0;
  for (const auto& [i, j] : ep.pairs) {
    if (!y.is_labeled(i)) unlabeled.push_back(i);
    if (!y.is_labeled(j)) unlabeled.push_back(j);
    if (y.is_labeled(i) && y.is_labeled(j) && y.labels[i] == y.labels[j]) ++same;
  }
  if (!unlabeled.empty()) {
    std::sort(unlabeled.begin(), unlabeled.end());
    unlabeled.erase(std::unique(unlabeled.begin(), unlabeled.end()), unlabeled.end());
    std::string msg = "label_smoothness: unlabeled nodes incident to E':";
    for (std::size_t n : unlabeled) msg += " " + std::to_string(n);
    throw DomainError(msg);
  }
  return static_cast<double>(same) / static_cast<double>(ep.size());
}

}  // namespace dgcn
