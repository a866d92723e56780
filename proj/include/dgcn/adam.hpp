#pragma once

#include <cmath>
#include <cstddef>
#include <vector>

#include "dgcn/dense.hpp"
#include "dgcn/error.hpp"

namespace dgcn {

struct AdamConfig {
  double lr = 0.01;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;  // added outside the square root
};

/// Adam with bias correction. One (m, v) pair per parameter matrix; the
/// parameter list order must stay fixed across steps.
class Adam {
 public:
  Adam(const std::vector<DenseMatrix*>& params, AdamConfig cfg = {}) : cfg_(cfg) {
    m_.reserve(params.size());
    v_.reserve(params.size());
    for (const DenseMatrix* p : params) {
      m_.emplace_back(p->n_rows, p->n_cols);
      v_.emplace_back(p->n_rows, p->n_cols);
    }
  }

  void step(const std::vector<DenseMatrix*>& params,
            const std::vector<const DenseMatrix*>& grads) {
    if (params.size() != m_.size() || grads.size() != m_.size())
      throw InternalError("adam: parameter list changed size");
    ++t_;
    const double bc1 = 1.0 - std::pow(cfg_.beta1, static_cast<double>(t_));
    const double bc2 = 1.0 - std::pow(cfg_.beta2, static_cast<double>(t_));
    for (std::size_t k = 0; k < params.size(); ++k) {
      DenseMatrix& p = *params[k];
      const DenseMatrix& g = *grads[k];
      if (!p.same_shape(g)) throw InternalError("adam: gradient shape mismatch");
      DenseMatrix& m = m_[k];
      DenseMatrix& v = v_[k];
      for (std::size_t i = 0; i < p.data.size(); ++i) {
        const double gi = g.data[i];
        m.data[i] = cfg_.beta1 * m.data[i] + (1.0 - cfg_.beta1) * gi;
        v.data[i] = cfg_.beta2 * v.data[i] + (1.0 - cfg_.beta2) * gi * gi;
        const double m_hat = m.data[i] / bc1;
        const double v_hat = v.data[i] / bc2;
        p.data[i] -= cfg_.lr * m_hat / (std::sqrt(v_hat) + cfg_.eps);
      }
    }
  }

  std::size_t steps_taken() const { return t_; }

 private:
  AdamConfig cfg_;
  std::vector<DenseMatrix> m_, v_;
  std::size_t t_ = 0;
};

}  // namespace dgcn
