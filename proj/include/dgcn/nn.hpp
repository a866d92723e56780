#pragma once

#include <cmath>
#include <cstdint>
#include <string>
#include <vector>

#include "dgcn/dense.hpp"
#include "dgcn/error.hpp"
#include "dgcn/graph.hpp"
#include "dgcn/proximity.hpp"
#include "dgcn/rng.hpp"

namespace dgcn {

/// Uniform Glorot initialization: entries i.i.d. in
/// [-sqrt(6/(rows+cols)), +sqrt(6/(rows+cols))], reproducible per seed.
inline DenseMatrix glorot_init(std::size_t rows, std::size_t cols, std::uint64_t seed) {
  if (rows == 0 || cols == 0) throw DomainError("glorot_init: empty shape");
  const double limit = std::sqrt(6.0 / static_cast<double>(rows + cols));
  DenseMatrix m(rows, cols);
  Rng rng(seed);
  for (double& v : m.data) v = limit * (2.0 * rng.uniform() - 1.0);
  return m;
}

/// Numerically stabilized row-wise softmax (subtracts the row max).
inline DenseMatrix softmax_rows(const DenseMatrix& logits) {
  DenseMatrix out(logits.n_rows, logits.n_cols);
  for (std::size_t i = 0; i < logits.n_rows; ++i) {
    const double* li = logits.row(i);
    double* oi = out.row(i);
    double m = li[0];
    for (std::size_t j = 1; j < logits.n_cols; ++j) m = std::max(m, li[j]);
    double sum = 0.0;
    for (std::size_t j = 0; j < logits.n_cols; ++j) {
      oi[j] = std::exp(li[j] - m);
      sum += oi[j];
    }
    const double inv = 1.0 / sum;
    for (std::size_t j = 0; j < logits.n_cols; ++j) oi[j] *= inv;
  }
  return out;
}

inline DenseMatrix relu(const DenseMatrix& m) {
  DenseMatrix out = m;
  for (double& v : out.data)
    if (v < 0.0) v = 0.0;
  return out;
}

// ---------------------------------------------------------------------------
// Dropout (inverted): kept entries scale by 1/(1-rate) at train time so
// evaluation applies no rescale. An empty mask is the identity.
// ---------------------------------------------------------------------------

struct DropoutMask {
  std::vector<std::uint8_t> keep;  // empty means identity
  double keep_prob = 1.0;

  bool active() const { return !keep.empty(); }
};

inline DropoutMask make_dropout_mask(std::size_t n_entries, double rate, Rng& rng) {
  if (rate < 0.0 || rate >= 1.0) throw DomainError("dropout rate must be in [0,1)");
  DropoutMask m;
  if (rate == 0.0) return m;
  m.keep_prob = 1.0 - rate;
  m.keep.resize(n_entries);
  for (std::size_t i = 0; i < n_entries; ++i) m.keep[i] = rng.uniform() >= rate ? 1 : 0;
  return m;
}

inline DenseMatrix apply_dropout(const DenseMatrix& x, const DropoutMask& m) {
  if (!m.active()) return x;
  if (m.keep.size() != x.data.size()) throw InternalError("dropout mask size mismatch");
  DenseMatrix out(x.n_rows, x.n_cols);
  const double scale = 1.0 / m.keep_prob;
  for (std::size_t i = 0; i < x.data.size(); ++i)
    out.data[i] = m.keep[i] ? x.data[i] * scale : 0.0;
  return out;
}

inline void apply_dropout_backward(DenseMatrix& grad, const DropoutMask& m) {
  if (!m.active()) return;
  const double scale = 1.0 / m.keep_prob;
  for (std::size_t i = 0; i < grad.data.size(); ++i)
    grad.data[i] = m.keep[i] ? grad.data[i] * scale : 0.0;
}

// ---------------------------------------------------------------------------
// Model
// ---------------------------------------------------------------------------

/// Layer parameters and fusion weights. Layer l maps in_dim_l -> hidden with
/// a single Theta shared by the three proximity branches (in_dim_0 = C, and
/// 3*hidden for every deeper layer); the dense head maps 3*hidden -> classes.
struct DgcnModel {
  std::vector<DenseMatrix> conv_thetas;
  DenseMatrix head_theta;
  double alpha = 1.0;
  double beta = 1.0;
  std::size_t in_dim = 0;     // C
  std::size_t hidden = 0;     // H
  std::size_t n_classes = 0;  // F
  std::size_t n_layers = 0;   // L

  static DgcnModel init(std::size_t in_dim, std::size_t hidden, std::size_t n_classes,
                        std::size_t n_layers, double alpha, double beta, std::uint64_t seed) {
    if (n_layers == 0) throw DomainError("model needs at least one conv layer");
    if (alpha < 0.0 || beta < 0.0) throw DomainError("alpha and beta must be >= 0");
    DgcnModel m;
    m.in_dim = in_dim;
    m.hidden = hidden;
    m.n_classes = n_classes;
    m.n_layers = n_layers;
    m.alpha = alpha;
    m.beta = beta;
    m.conv_thetas.reserve(n_layers);
    for (std::size_t l = 0; l < n_layers; ++l)
      m.conv_thetas.push_back(glorot_init(l == 0 ? in_dim : 3 * hidden, hidden, seed + l));
    m.head_theta = glorot_init(3 * hidden, n_classes, seed + n_layers);
    return m;
  }

  std::size_t parameter_count() const {
    std::size_t n = head_theta.data.size();
    for (const DenseMatrix& t : conv_thetas) n += t.data.size();
    return n;
  }

  std::vector<DenseMatrix*> parameters() {
    std::vector<DenseMatrix*> p;
    for (DenseMatrix& t : conv_thetas) p.push_back(&t);
    p.push_back(&head_theta);
    return p;
  }
};

struct ConvLayerTrace {
  DropoutMask mask;    // dropout applied to the layer input
  DenseMatrix input;   // post-dropout input (N x in_dim)
  DenseMatrix pre_f;   // branch pre-activations (N x H)
  DenseMatrix pre_in;
  DenseMatrix pre_out;
  DenseMatrix output;  // fused post-ReLU concat (N x 3H)
};

struct ForwardTrace {
  std::vector<ConvLayerTrace> conv;
  DropoutMask head_mask;
  DenseMatrix head_input;  // post-dropout concat feeding the head
  DenseMatrix logits;      // N x F
  DenseMatrix probs;       // row-softmax of logits
};

namespace detail {

/// [a | alpha*b | beta*c]; scaling after ReLU, which for alpha,beta >= 0
/// matches scaling before it.
inline DenseMatrix fuse_concat(const DenseMatrix& relu_f, const DenseMatrix& relu_in,
                               const DenseMatrix& relu_out, double alpha, double beta) {
  const std::size_t n = relu_f.n_rows, h = relu_f.n_cols;
  DenseMatrix z(n, 3 * h);
  for (std::size_t i = 0; i < n; ++i) {
    double* zi = z.row(i);
    const double* f = relu_f.row(i);
    const double* in = relu_in.row(i);
    const double* out = relu_out.row(i);
    for (std::size_t j = 0; j < h; ++j) {
      zi[j] = f[j];
      zi[h + j] = alpha * in[j];
      zi[2 * h + j] = beta * out[j];
    }
  }
  return z;
}

}  // namespace detail

/// One directed-convolution layer: shared Theta, three proximity branches,
/// ReLU, weighted concat. The dropout mask applies to the input.
inline ConvLayerTrace conv_layer_forward(const ProximitySet& p, const DenseMatrix& h,
                                         const DenseMatrix& theta, double alpha, double beta,
                                         const DropoutMask& mask) {
  if (alpha < 0.0 || beta < 0.0) throw DomainError("alpha and beta must be >= 0");
  check_shapes(h.n_cols, theta.n_rows, "conv_layer_forward");
  check_shapes(p.a_f_hat.n_cols, h.n_rows, "conv_layer_forward operators");
  ConvLayerTrace t;
  t.mask = mask;
  t.input = apply_dropout(h, mask);
  const DenseMatrix projected = matmul(t.input, theta);
  t.pre_f = spmm(p.a_f_hat, projected);
  t.pre_in = spmm(p.a_sin_hat, projected);
  t.pre_out = spmm(p.a_sout_hat, projected);
  t.output = detail::fuse_concat(relu(t.pre_f), relu(t.pre_in), relu(t.pre_out), alpha, beta);
  return t;
}

/// Full forward pass: L conv layers, dense head, row softmax. In train mode
/// dropout hits every conv-layer input and the concat feeding the head; rng
/// must then be provided.
inline ForwardTrace model_forward(const ProximitySet& p, const DenseMatrix& x,
                                  const DgcnModel& m, bool train_mode, double dropout_rate,
                                  Rng* rng = nullptr) {
  check_shapes(x.n_cols, m.in_dim, "model_forward input dim");
  if (train_mode && dropout_rate > 0.0 && rng == nullptr)
    throw InternalError("train-mode forward needs an rng for dropout");
  ForwardTrace trace;
  const DenseMatrix* h = &x;
  for (std::size_t l = 0; l < m.n_layers; ++l) {
    DropoutMask mask;
    if (train_mode && dropout_rate > 0.0)
      mask = make_dropout_mask(h->data.size(), dropout_rate, *rng);
    trace.conv.push_back(
        conv_layer_forward(p, *h, m.conv_thetas[l], m.alpha, m.beta, mask));
    h = &trace.conv.back().output;
  }
  if (train_mode && dropout_rate > 0.0)
    trace.head_mask = make_dropout_mask(h->data.size(), dropout_rate, *rng);
  trace.head_input = apply_dropout(*h, trace.head_mask);
  trace.logits = matmul(trace.head_input, m.head_theta);
  trace.probs = softmax_rows(trace.logits);
  return trace;
}

// ---------------------------------------------------------------------------
// Loss
// ---------------------------------------------------------------------------

/// Cross-entropy summed (not averaged) over the masked nodes, from an
/// already-softmaxed prediction matrix.
inline double masked_cross_entropy(const DenseMatrix& y_hat, const LabelVector& y,
                                   const std::vector<std::size_t>& mask) {
  double loss = 0.0;
  for (std::size_t node : mask) {
    if (!y.is_labeled(node))
      throw DomainError("masked_cross_entropy: node " + std::to_string(node) + " is unlabeled");
    loss -= std::log(y_hat(node, static_cast<std::size_t>(y.labels[node])));
  }
  return loss;
}

/// Same quantity computed from logits via log-sum-exp; immune to softmax
/// underflow. This is the path the trainer differentiates.
inline double masked_cross_entropy_logits(const DenseMatrix& logits, const LabelVector& y,
                                          const std::vector<std::size_t>& mask) {
  double loss = 0.0;
  for (std::size_t node : mask) {
    if (!y.is_labeled(node))
      throw DomainError("masked_cross_entropy: node " + std::to_string(node) + " is unlabeled");
    const double* row = logits.row(node);
    double m = row[0];
    for (std::size_t j = 1; j < logits.n_cols; ++j) m = std::max(m, row[j]);
    double sum = 0.0;
    for (std::size_t j = 0; j < logits.n_cols; ++j) sum += std::exp(row[j] - m);
    loss += m + std::log(sum) - row[static_cast<std::size_t>(y.labels[node])];
  }
  return loss;
}

/// l2_factor * sum of squared Frobenius norms of the conv-layer Thetas.
/// The head is not regularized.
inline double l2_penalty(const DgcnModel& m, double l2_factor) {
  if (l2_factor == 0.0) return 0.0;
  double sq = 0.0;
  for (const DenseMatrix& t : m.conv_thetas)
    for (double v : t.data) sq += v * v;
  return l2_factor * sq;
}

struct Gradients {
  std::vector<DenseMatrix> conv_thetas;
  DenseMatrix head_theta;

  std::vector<const DenseMatrix*> list() const {
    std::vector<const DenseMatrix*> g;
    for (const DenseMatrix& t : conv_thetas) g.push_back(&t);
    g.push_back(&head_theta);
    return g;
  }
};

/// Exact reverse-mode gradients of masked cross-entropy plus the conv-layer
/// L2 penalty, replaying the dropout masks cached in the trace.
inline Gradients model_backward(const ForwardTrace& trace, const LabelVector& y,
                                const std::vector<std::size_t>& mask, const DgcnModel& m,
                                const ProximitySet& p, double l2_factor) {
  if (trace.conv.size() != m.n_layers) throw InternalError("trace/model layer count mismatch");
  const std::size_t n = trace.probs.n_rows;
  const std::size_t h = m.hidden;

  // d loss / d logits = softmax - onehot on masked rows, 0 elsewhere
  DenseMatrix dlogits(n, m.n_classes);
  for (std::size_t node : mask) {
    if (!y.is_labeled(node))
      throw DomainError("model_backward: node " + std::to_string(node) + " is unlabeled");
    const double* pr = trace.probs.row(node);
    double* dr = dlogits.row(node);
    for (std::size_t j = 0; j < m.n_classes; ++j) dr[j] = pr[j];
    dr[static_cast<std::size_t>(y.labels[node])] -= 1.0;
  }

  Gradients g;
  g.head_theta = matmul_tn(trace.head_input, dlogits);
  DenseMatrix d_h = matmul_nt(dlogits, m.head_theta);  // N x 3H
  apply_dropout_backward(d_h, trace.head_mask);

  g.conv_thetas.resize(m.n_layers);
  for (std::size_t li = m.n_layers; li-- > 0;) {
    const ConvLayerTrace& t = trace.conv[li];
    // unfuse: dZ_f | alpha*dZ_in | beta*dZ_out, then ReLU gates
    DenseMatrix d_bf(n, h), d_bin(n, h), d_bout(n, h);
    for (std::size_t i = 0; i < n; ++i) {
      const double* dz = d_h.row(i);
      for (std::size_t j = 0; j < h; ++j) {
        d_bf(i, j) = t.pre_f(i, j) > 0.0 ? dz[j] : 0.0;
        d_bin(i, j) = t.pre_in(i, j) > 0.0 ? m.alpha * dz[h + j] : 0.0;
        d_bout(i, j) = t.pre_out(i, j) > 0.0 ? m.beta * dz[2 * h + j] : 0.0;
      }
    }
    DenseMatrix d_proj = spmm_t(p.a_f_hat, d_bf);
    {
      const DenseMatrix d_in = spmm_t(p.a_sin_hat, d_bin);
      const DenseMatrix d_out = spmm_t(p.a_sout_hat, d_bout);
      for (std::size_t i = 0; i < d_proj.data.size(); ++i)
        d_proj.data[i] += d_in.data[i] + d_out.data[i];
    }
    g.conv_thetas[li] = matmul_tn(t.input, d_proj);
    if (l2_factor != 0.0)
      for (std::size_t i = 0; i < g.conv_thetas[li].data.size(); ++i)
        g.conv_thetas[li].data[i] += 2.0 * l2_factor * m.conv_thetas[li].data[i];
    if (li > 0) {
      d_h = matmul_nt(d_proj, m.conv_thetas[li]);
      apply_dropout_backward(d_h, t.mask);
    }
  }
  return g;
}

// ---------------------------------------------------------------------------
// SGC generalization: softmax([A_F X | alpha A_Sin X | beta A_Sout X] Theta),
// no nonlinearity and no hidden layer. Theta is (3C x F).
// ---------------------------------------------------------------------------

struct SgcModel {
  DenseMatrix theta;  // 3C x F
  double alpha = 1.0;
  double beta = 1.0;

  static SgcModel init(std::size_t in_dim, std::size_t n_classes, double alpha, double beta,
                       std::uint64_t seed) {
    if (alpha < 0.0 || beta < 0.0) throw DomainError("alpha and beta must be >= 0");
    return SgcModel{glorot_init(3 * in_dim, n_classes, seed), alpha, beta};
  }
};

namespace detail {

inline DenseMatrix theta_block(const DenseMatrix& theta, std::size_t block, std::size_t c) {
  DenseMatrix b(c, theta.n_cols);
  for (std::size_t i = 0; i < c; ++i)
    for (std::size_t j = 0; j < theta.n_cols; ++j) b(i, j) = theta(block * c + i, j);
  return b;
}

}  // namespace detail

/// Logits of the generalized SGC model, computed blockwise so the N x 3C
/// concatenation is never materialized.
inline DenseMatrix sgc_logits(const ProximitySet& p, const DenseMatrix& x,
                              const DenseMatrix& theta, double alpha, double beta) {
  if (alpha < 0.0 || beta < 0.0) throw DomainError("alpha and beta must be >= 0");
  const std::size_t c = x.n_cols;
  check_shapes(theta.n_rows, 3 * c, "sgc theta rows");
  DenseMatrix logits = spmm(p.a_f_hat, matmul(x, detail::theta_block(theta, 0, c)));
  const DenseMatrix zin = spmm(p.a_sin_hat, matmul(x, detail::theta_block(theta, 1, c)));
  const DenseMatrix zout = spmm(p.a_sout_hat, matmul(x, detail::theta_block(theta, 2, c)));
  for (std::size_t i = 0; i < logits.data.size(); ++i)
    logits.data[i] += alpha * zin.data[i] + beta * zout.data[i];
  return logits;
}

inline DenseMatrix sgc_dgcn_forward(const ProximitySet& p, const DenseMatrix& x,
                                    const DenseMatrix& theta, double alpha, double beta) {
  return softmax_rows(sgc_logits(p, x, theta, alpha, beta));
}

/// Gradient of masked cross-entropy + l2_factor*||Theta||_F^2 for the SGC
/// model. probs must come from sgc_dgcn_forward on the same inputs.
inline DenseMatrix sgc_backward(const ProximitySet& p, const DenseMatrix& x,
                                const DenseMatrix& probs, const LabelVector& y,
                                const std::vector<std::size_t>& mask, const DenseMatrix& theta,
                                double alpha, double beta, double l2_factor) {
  const std::size_t c = x.n_cols;
  const std::size_t f = theta.n_cols;
  DenseMatrix dlogits(probs.n_rows, f);
  for (std::size_t node : mask) {
    if (!y.is_labeled(node))
      throw DomainError("sgc_backward: node " + std::to_string(node) + " is unlabeled");
    const double* pr = probs.row(node);
    double* dr = dlogits.row(node);
    for (std::size_t j = 0; j < f; ++j) dr[j] = pr[j];
    dr[static_cast<std::size_t>(y.labels[node])] -= 1.0;
  }
  const DenseMatrix g1 = matmul_tn(x, spmm_t(p.a_f_hat, dlogits));
  const DenseMatrix g2 = matmul_tn(x, spmm_t(p.a_sin_hat, dlogits));
  const DenseMatrix g3 = matmul_tn(x, spmm_t(p.a_sout_hat, dlogits));
  DenseMatrix g(3 * c, f);
  for (std::size_t i = 0; i < c; ++i) {
    for (std::size_t j = 0; j < f; ++j) {
      g(i, j) = g1(i, j);
      g(c + i, j) = alpha * g2(i, j);
      g(2 * c + i, j) = beta * g3(i, j);
    }
  }
  if (l2_factor != 0.0)
    for (std::size_t i = 0; i < g.data.size(); ++i) g.data[i] += 2.0 * l2_factor * theta.data[i];
  return g;
}

}  // namespace dgcn
