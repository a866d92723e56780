#pragma once

#include <cstdint>
#include <vector>

#include "dgcn/dense.hpp"
#include "dgcn/error.hpp"
#include "dgcn/graph.hpp"
#include "dgcn/rng.hpp"
#include "dgcn/sparse.hpp"

namespace dgcn {

struct SbmParams {
  std::size_t n_per_class = 100;
  std::size_t n_classes = 3;
  double p_in = 0.2;
  double p_out = 0.02;
  std::size_t feat_dim = 16;
  double noise = 0.3;
  std::uint64_t seed = 0;
};

struct SbmData {
  DirectedGraph graph;
  DenseMatrix features;
  LabelVector labels;
};

/// Directed stochastic block model. Every ordered pair (i,j), i != j, draws
/// an independent unit-weight edge with probability p_in (same block) or
/// p_out; nodes are labeled in contiguous class blocks. Features are the
/// one-hot class mean at dim (class mod feat_dim) plus per-dim uniform noise
/// in [-noise, noise]. Deterministic per seed.
inline SbmData generate_sbm(const SbmParams& prm) {
  if (prm.n_per_class == 0 || prm.n_classes == 0) throw DomainError("sbm: empty block");
  if (prm.p_in < 0.0 || prm.p_in > 1.0 || prm.p_out < 0.0 || prm.p_out > 1.0)
    throw DomainError("sbm: probabilities must lie in [0,1]");
  if (prm.feat_dim == 0) throw DomainError("sbm: feat_dim must be > 0");
  if (prm.noise < 0.0) throw DomainError("sbm: noise must be >= 0");

  const std::size_t n = prm.n_per_class * prm.n_classes;
  Rng rng(prm.seed);

  std::vector<Triplet> edges;
  for (std::size_t i = 0; i < n; ++i) {
    const std::size_t ci = i / prm.n_per_class;
    for (std::size_t j = 0; j < n; ++j) {
      if (i == j) continue;
      const double p = (j / prm.n_per_class == ci) ? prm.p_in : prm.p_out;
      if (rng.uniform() < p) edges.push_back(Triplet{i, j, 1.0});
    }
  }

  SbmData data;
  data.graph = DirectedGraph(n, SparseMatrix::from_triplets(n, n, edges));
  data.features = DenseMatrix(n, prm.feat_dim);
  for (std::size_t i = 0; i < n; ++i) {
    const std::size_t ci = i / prm.n_per_class;
    for (std::size_t d = 0; d < prm.feat_dim; ++d) {
      const double mean = d == ci % prm.feat_dim ? 1.0 : 0.0;
      data.features(i, d) = mean + prm.noise * (2.0 * rng.uniform() - 1.0);
    }
  }
  data.labels.labels.resize(n);
  for (std::size_t i = 0; i < n; ++i)
    data.labels.labels[i] = static_cast<int>(i / prm.n_per_class);
  data.labels.n_classes = static_cast<int>(prm.n_classes);
  return data;
}

}  // namespace dgcn
