#pragma once

#include <optional>
#include <string>
#include <vector>

#include "dgcn/error.hpp"
#include "dgcn/sparse.hpp"

namespace dgcn {

/// Weighted directed graph over dense integer node ids 0..n-1. An optional
/// sidecar vocabulary can carry external string ids; the numeric core never
/// consults it.
struct DirectedGraph {
  std::size_t n_nodes = 0;
  SparseMatrix adjacency;  // n_nodes x n_nodes, weights > 0
  std::optional<std::vector<std::string>> node_ids;

  DirectedGraph() = default;
  DirectedGraph(std::size_t n, SparseMatrix adj) : n_nodes(n), adjacency(std::move(adj)) {
    if (adjacency.n_rows != n || adjacency.n_cols != n)
      throw DomainError("adjacency must be square of size n_nodes");
  }
};

constexpr int kUnlabeled = -1;

/// Per-node class ids in [0, n_classes), or kUnlabeled.
struct LabelVector {
  std::vector<int> labels;
  int n_classes = 0;

  bool is_labeled(std::size_t node) const { return labels[node] != kUnlabeled; }

  std::size_t n_labeled() const {
    std::size_t c = 0;
    for (int l : labels)
      if (l != kUnlabeled) ++c;
    return c;
  }
};

/// A-tilde = A + I. A preexisting self-loop of weight w becomes w + 1.
inline SparseMatrix add_self_loops(const DirectedGraph& g) {
  return add(g.adjacency, SparseMatrix::identity(g.n_nodes));
}

}  // namespace dgcn
