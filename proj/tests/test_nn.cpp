#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <vector>

#include "dgcn/adam.hpp"
#include "dgcn/dense.hpp"
#include "dgcn/error.hpp"
#include "dgcn/nn.hpp"
#include "dgcn/proximity.hpp"
#include "dgcn/rng.hpp"
#include "dgcn/sparse.hpp"
#include "support/fdcheck.hpp"
#include "support/oracles.hpp"

using namespace dgcn;
using namespace testsupport;

namespace {

ProximitySet identity_prox(std::size_t n) {
  ProximitySet p;
  p.a_f_hat = SparseMatrix::identity(n);
  p.a_sin_hat = SparseMatrix::identity(n);
  p.a_sout_hat = SparseMatrix::identity(n);
  p.raw_f = p.a_f_hat;
  p.raw_sin = p.a_sin_hat;
  p.raw_sout = p.a_sout_hat;
  return p;
}

}  // namespace

TEST_CASE("glorot_init") {
  SECTION("entries bounded by sqrt(6/(rows+cols))") {
    const DenseMatrix m = glorot_init(2, 4, 5);
    for (double v : m.data) REQUIRE(std::fabs(v) <= 1.0);
  }
  SECTION("deterministic per seed") {
    const DenseMatrix a = glorot_init(7, 3, 123);
    const DenseMatrix b = glorot_init(7, 3, 123);
    REQUIRE(max_abs_diff(a, b) == 0.0);
    const DenseMatrix c = glorot_init(7, 3, 124);
    REQUIRE(max_abs_diff(a, c) > 0.0);
  }
  SECTION("sample mean near zero at 1000x1000") {
    const DenseMatrix m = glorot_init(1000, 1000, 7);
    double mean = 0.0;
    for (double v : m.data) mean += v;
    mean /= static_cast<double>(m.data.size());
    const double limit = std::sqrt(6.0 / 2000.0);
    const double sigma = limit / std::sqrt(3.0);
    REQUIRE(std::fabs(mean) <= 3.0 * sigma / 1000.0);
  }
  SECTION("empty shapes rejected") {
    REQUIRE_THROWS_AS(glorot_init(0, 3, 1), DomainError);
  }
}

TEST_CASE("softmax_rows") {
  Rng rng(101);
  const DenseMatrix logits = random_dense(rng, 9, 5, -30.0, 30.0);
  const DenseMatrix p = softmax_rows(logits);
  SECTION("rows sum to one, entries in (0,1)") {
    for (std::size_t i = 0; i < p.n_rows; ++i) {
      double s = 0.0;
      for (std::size_t j = 0; j < p.n_cols; ++j) {
        s += p(i, j);
        REQUIRE(p(i, j) > 0.0);
        REQUIRE(p(i, j) < 1.0);
      }
      REQUIRE(std::fabs(s - 1.0) <= 1e-12);
    }
  }
  SECTION("invariant to per-row constant shifts") {
    DenseMatrix shifted = logits;
    for (std::size_t i = 0; i < shifted.n_rows; ++i)
      for (std::size_t j = 0; j < shifted.n_cols; ++j) shifted(i, j) += 100.0 + 3.0 * i;
    REQUIRE(max_abs_diff(softmax_rows(shifted), p) <= 1e-12);
  }
}

TEST_CASE("relu scaling commutes for nonnegative factors") {
  Rng rng(103);
  const DenseMatrix z = random_dense(rng, 6, 6, -2.0, 2.0);
  for (double a : {0.0, 0.5, 1.0, 2.0}) {
    DenseMatrix scaled_first = z;
    for (double& v : scaled_first.data) v *= a;
    DenseMatrix lhs = relu(scaled_first);
    DenseMatrix rhs = relu(z);
    for (double& v : rhs.data) v *= a;
    REQUIRE(max_abs_diff(lhs, rhs) <= 1e-12);
  }
}

TEST_CASE("dropout") {
  Rng rng(107);
  SECTION("rate 0 is the identity") {
    const DropoutMask m = make_dropout_mask(10, 0.0, rng);
    REQUIRE_FALSE(m.active());
    const DenseMatrix x = random_dense(rng, 2, 5, -1.0, 1.0);
    REQUIRE(max_abs_diff(apply_dropout(x, m), x) == 0.0);
  }
  SECTION("kept entries scale by 1/(1-r), dropped are zero") {
    const double rate = 0.4;
    const DropoutMask m = make_dropout_mask(2000, rate, rng);
    const DenseMatrix ones(40, 50, 1.0);
    const DenseMatrix d = apply_dropout(ones, m);
    std::size_t kept = 0;
    for (double v : d.data) {
      if (v != 0.0) {
        REQUIRE(v == 1.0 / (1.0 - rate));
        ++kept;
      }
    }
    // binomial(2000, 0.6): mean 1200, sd ~21.9; allow 5 sigma
    REQUIRE(kept > 1090);
    REQUIRE(kept < 1310);
  }
  SECTION("backward replays the same mask") {
    const DropoutMask m = make_dropout_mask(12, 0.5, rng);
    const DenseMatrix x(3, 4, 2.0);
    const DenseMatrix fwd = apply_dropout(x, m);
    DenseMatrix grad(3, 4, 1.0);
    apply_dropout_backward(grad, m);
    for (std::size_t i = 0; i < grad.data.size(); ++i)
      REQUIRE(grad.data[i] == (fwd.data[i] == 0.0 ? 0.0 : 2.0));
  }
  SECTION("invalid rates rejected") {
    REQUIRE_THROWS_AS(make_dropout_mask(4, 1.0, rng), DomainError);
    REQUIRE_THROWS_AS(make_dropout_mask(4, -0.1, rng), DomainError);
  }
}

TEST_CASE("conv_layer_forward") {
  const std::size_t n = 3;
  const ProximitySet p = identity_prox(n);
  DenseMatrix x(n, 2);
  x(0, 0) = 1.0;
  x(1, 1) = 2.0;
  x(2, 0) = 0.5;
  const DenseMatrix theta = DenseMatrix::identity(2);
  SECTION("identity operators and weights reproduce [X|X|X]") {
    const ConvLayerTrace t = conv_layer_forward(p, x, theta, 1.0, 1.0, DropoutMask{});
    REQUIRE(t.output.n_cols == 6);
    for (std::size_t i = 0; i < n; ++i)
      for (std::size_t j = 0; j < 2; ++j) {
        REQUIRE(t.output(i, j) == x(i, j));
        REQUIRE(t.output(i, 2 + j) == x(i, j));
        REQUIRE(t.output(i, 4 + j) == x(i, j));
      }
  }
  SECTION("alpha=beta=0 zeroes the second and third blocks") {
    const ConvLayerTrace t = conv_layer_forward(p, x, theta, 0.0, 0.0, DropoutMask{});
    for (std::size_t i = 0; i < n; ++i)
      for (std::size_t j = 2; j < 6; ++j) REQUIRE(t.output(i, j) == 0.0);
  }
  SECTION("ReLU zeroes negative entries in every block") {
    DenseMatrix neg = x;
    neg(0, 0) = -3.0;
    const ConvLayerTrace t = conv_layer_forward(p, neg, theta, 1.0, 1.0, DropoutMask{});
    REQUIRE(t.output(0, 0) == 0.0);
    REQUIRE(t.output(0, 2) == 0.0);
    REQUIRE(t.output(0, 4) == 0.0);
  }
  SECTION("negative fusion weights rejected") {
    REQUIRE_THROWS_AS(conv_layer_forward(p, x, theta, -1.0, 1.0, DropoutMask{}), DomainError);
  }
}

TEST_CASE("model_forward") {
  SECTION("zero weights give uniform predictions") {
    const std::size_t n = 4;
    Rng rng(109);
    const DirectedGraph g(n, random_graph(rng, n, 0.5, 1.0));
    const ProximitySet p = build_proximity_set(g);
    DgcnModel m = DgcnModel::init(3, 2, 5, 1, 1.0, 1.0, 1);
    for (DenseMatrix* t : m.parameters())
      for (double& v : t->data) v = 0.0;
    const DenseMatrix x = random_dense(rng, n, 3, -1.0, 1.0);
    const ForwardTrace tr = model_forward(p, x, m, false, 0.0);
    for (double v : tr.probs.data) REQUIRE(std::fabs(v - 0.2) <= 1e-12);
  }
  SECTION("hand-computed two-node forward pass") {
    const ProximitySet p = identity_prox(2);
    DgcnModel m;
    m.in_dim = 2;
    m.hidden = 2;
    m.n_classes = 2;
    m.n_layers = 1;
    m.alpha = 1.0;
    m.beta = 1.0;
    DenseMatrix theta0(2, 2);
    theta0(0, 0) = 1.0;
    theta0(0, 1) = 2.0;
    theta0(1, 0) = 3.0;
    theta0(1, 1) = 4.0;
    m.conv_thetas = {theta0};
    m.head_theta = DenseMatrix(6, 2);
    for (std::size_t i = 0; i < 6; ++i) m.head_theta(i, 0) = 1.0;  // second column zero
    const DenseMatrix x = DenseMatrix::identity(2);
    const ForwardTrace tr = model_forward(p, x, m, false, 0.0);
    // row 0: X theta = [1,2]; concat sums to 9 -> logits [9, 0]
    // row 1: [3,4] -> logits [21, 0]
    REQUIRE(std::fabs(tr.logits(0, 0) - 9.0) <= 1e-12);
    REQUIRE(std::fabs(tr.logits(1, 0) - 21.0) <= 1e-12);
    const double y00 = std::exp(9.0) / (std::exp(9.0) + 1.0);
    REQUIRE(std::fabs(tr.probs(0, 0) - y00) <= 1e-12);
    const double y11 = 1.0 / (std::exp(21.0) + 1.0);
    REQUIRE(std::fabs(tr.probs(1, 1) - y11) <= 1e-12);
  }
  SECTION("train mode with dropout needs an rng") {
    const ProximitySet p = identity_prox(2);
    DgcnModel m = DgcnModel::init(2, 2, 2, 1, 1.0, 1.0, 3);
    const DenseMatrix x(2, 2, 1.0);
    REQUIRE_THROWS_AS(model_forward(p, x, m, true, 0.5, nullptr), InternalError);
  }
  SECTION("deeper models chain 3H-wide layers") {
    Rng rng(113);
    const std::size_t n = 5;
    const DirectedGraph g(n, random_graph(rng, n, 0.4, 1.0));
    const ProximitySet p = build_proximity_set(g);
    const DgcnModel m = DgcnModel::init(4, 3, 2, 3, 0.7, 1.3, 11);
    REQUIRE(m.conv_thetas[0].n_rows == 4);
    REQUIRE(m.conv_thetas[1].n_rows == 9);
    REQUIRE(m.conv_thetas[2].n_rows == 9);
    const DenseMatrix x = random_dense(rng, n, 4, -1.0, 1.0);
    const ForwardTrace tr = model_forward(p, x, m, false, 0.0);
    REQUIRE(tr.probs.n_rows == n);
    REQUIRE(tr.probs.n_cols == 2);
    REQUIRE(tr.conv.size() == 3);
  }
}

TEST_CASE("masked cross-entropy") {
  LabelVector y;
  y.labels = {1, 0};
  y.n_classes = 2;
  SECTION("one-hot correct prediction costs nothing") {
    DenseMatrix p(1, 2);
    p(0, 0) = 0.0;
    p(0, 1) = 1.0;
    LabelVector y1;
    y1.labels = {1};
    y1.n_classes = 2;
    REQUIRE(masked_cross_entropy(p, y1, {0}) == 0.0);
  }
  SECTION("uniform predictions cost ln 2 per node") {
    const DenseMatrix p(2, 2, 0.5);
    REQUIRE(masked_cross_entropy(p, y, {0}) == Catch::Approx(std::log(2.0)));
    REQUIRE(masked_cross_entropy(p, y, {0, 1}) == Catch::Approx(2.0 * std::log(2.0)));
  }
  SECTION("masked unlabeled node is an error") {
    LabelVector yu;
    yu.labels = {kUnlabeled};
    yu.n_classes = 2;
    REQUIRE_THROWS_AS(masked_cross_entropy(DenseMatrix(1, 2, 0.5), yu, {0}), DomainError);
  }
  SECTION("probability and logit paths agree") {
    Rng rng(127);
    const DenseMatrix logits = random_dense(rng, 6, 4, -5.0, 5.0);
    LabelVector yr;
    yr.labels.resize(6);
    yr.n_classes = 4;
    for (std::size_t i = 0; i < 6; ++i) yr.labels[i] = static_cast<int>(rng.index(4));
    const std::vector<std::size_t> mask{0, 2, 3, 5};
    const double via_probs = masked_cross_entropy(softmax_rows(logits), yr, mask);
    const double via_logits = masked_cross_entropy_logits(logits, yr, mask);
    REQUIRE(via_probs == Catch::Approx(via_logits).epsilon(1e-10));
  }
}

TEST_CASE("l2_penalty covers conv layers only") {
  DgcnModel m = DgcnModel::init(2, 2, 2, 1, 1.0, 1.0, 17);
  for (double& v : m.conv_thetas[0].data) v = 2.0;
  for (double& v : m.head_theta.data) v = 100.0;
  REQUIRE(l2_penalty(m, 0.5) == Catch::Approx(0.5 * 4.0 * 4.0));  // 4 entries of 2^2
  REQUIRE(l2_penalty(m, 0.0) == 0.0);
}

TEST_CASE("model_backward matches finite differences") {
  Rng rng(131);
  SECTION("fixed instance: N=6, C=4, H=3, F=2") {
    dgcn::DirectedGraph g(6, random_graph(rng, 6, 0.4, 2.0));
    FdInstance inst;
    inst.prox = build_proximity_set(g);
    inst.x = random_dense(rng, 6, 4, -1.0, 1.0);
    inst.y.labels = {0, 1, 1, 0, 1, 0};
    inst.y.n_classes = 2;
    inst.mask = {0, 2, 4, 5};
    inst.l2 = 0.0;
    DgcnModel m = DgcnModel::init(4, 3, 2, 1, 1.0, 1.0, 77);
    REQUIRE(dgcn_fd_worst_error(inst, m) <= 1e-5);
  }
  SECTION("random instances with L2 and two layers") {
    for (int rep = 0; rep < 4; ++rep) {
      FdInstance inst = random_fd_instance(rng, rep % 2 ? 1e-3 : 0.0);
      const std::size_t layers = 1 + rng.index(2);
      DgcnModel m = DgcnModel::init(inst.x.n_cols, 2 + rng.index(3),
                                    static_cast<std::size_t>(inst.y.n_classes), layers, 0.8,
                                    1.2, 1000 + static_cast<std::uint64_t>(rep));
      REQUIRE(dgcn_fd_worst_error(inst, m) <= 1e-5);
    }
  }
}

TEST_CASE("model_backward properties") {
  Rng rng(137);
  FdInstance inst = random_fd_instance(rng, 0.0);
  DgcnModel m = DgcnModel::init(inst.x.n_cols, 3, static_cast<std::size_t>(inst.y.n_classes),
                                1, 1.0, 1.0, 999);
  const ForwardTrace tr = model_forward(inst.prox, inst.x, m, false, 0.0);
  SECTION("l2 shifts conv gradients by exactly 2*l2*theta") {
    const Gradients g0 = model_backward(tr, inst.y, inst.mask, m, inst.prox, 0.0);
    const double l2 = 0.25;
    const Gradients g1 = model_backward(tr, inst.y, inst.mask, m, inst.prox, l2);
    for (std::size_t i = 0; i < g0.conv_thetas[0].data.size(); ++i)
      REQUIRE(g1.conv_thetas[0].data[i] - g0.conv_thetas[0].data[i] ==
              Catch::Approx(2.0 * l2 * m.conv_thetas[0].data[i]).margin(1e-15));
    REQUIRE(max_abs_diff(g0.head_theta, g1.head_theta) == 0.0);
  }
  SECTION("loss additivity over the mask") {
    // summing per-node gradients over the mask equals the full-mask gradient
    Gradients sum;
    bool first = true;
    for (std::size_t node : inst.mask) {
      const Gradients g =
          model_backward(tr, inst.y, std::vector<std::size_t>{node}, m, inst.prox, 0.0);
      if (first) {
        sum = g;
        first = false;
      } else {
        for (std::size_t l = 0; l < sum.conv_thetas.size(); ++l)
          for (std::size_t i = 0; i < sum.conv_thetas[l].data.size(); ++i)
            sum.conv_thetas[l].data[i] += g.conv_thetas[l].data[i];
        for (std::size_t i = 0; i < sum.head_theta.data.size(); ++i)
          sum.head_theta.data[i] += g.head_theta.data[i];
      }
    }
    const Gradients full = model_backward(tr, inst.y, inst.mask, m, inst.prox, 0.0);
    REQUIRE(max_abs_diff(sum.head_theta, full.head_theta) <= 1e-12);
    REQUIRE(max_abs_diff(sum.conv_thetas[0], full.conv_thetas[0]) <= 1e-12);
  }
}

TEST_CASE("parameter bookkeeping") {
  DgcnModel m = DgcnModel::init(4, 3, 2, 2, 1.0, 1.0, 21);
  SECTION("count formula: sum in_dim*H + 3H*F") {
    REQUIRE(m.parameter_count() == 4 * 3 + 9 * 3 + 9 * 2);
    REQUIRE(m.parameters().size() == 3);  // two conv layers + head
  }
  SECTION("shared theta drives all three branches") {
    Rng rng(139);
    const DirectedGraph g(5, random_graph(rng, 5, 0.6, 1.0));
    const ProximitySet p = build_proximity_set(g);
    const DenseMatrix x = random_dense(rng, 5, 4, 0.5, 1.5);
    DgcnModel base = DgcnModel::init(4, 3, 2, 1, 1.0, 1.0, 22);
    const ForwardTrace t0 = model_forward(p, x, base, false, 0.0);
    base.conv_thetas[0](1, 1) += 0.5;
    const ForwardTrace t1 = model_forward(p, x, base, false, 0.0);
    REQUIRE(max_abs_diff(t0.conv[0].pre_f, t1.conv[0].pre_f) > 0.0);
    REQUIRE(max_abs_diff(t0.conv[0].pre_in, t1.conv[0].pre_in) > 0.0);
    REQUIRE(max_abs_diff(t0.conv[0].pre_out, t1.conv[0].pre_out) > 0.0);
  }
}

TEST_CASE("adam") {
  SECTION("zero gradient leaves parameters untouched") {
    DenseMatrix p(2, 2, 1.5);
    std::vector<DenseMatrix*> params{&p};
    Adam opt(params);
    const DenseMatrix g(2, 2, 0.0);
    opt.step(params, {&g});
    for (double v : p.data) REQUIRE(v == 1.5);
  }
  SECTION("first step is about -lr * sign(g)") {
    DenseMatrix p(1, 2);
    p(0, 0) = 1.0;
    p(0, 1) = -2.0;
    std::vector<DenseMatrix*> params{&p};
    Adam opt(params, AdamConfig{0.01, 0.9, 0.999, 1e-8});
    DenseMatrix g(1, 2);
    g(0, 0) = 3.7;
    g(0, 1) = -0.4;
    opt.step(params, {&g});
    REQUIRE(p(0, 0) == Catch::Approx(1.0 - 0.01).epsilon(1e-6));
    REQUIRE(p(0, 1) == Catch::Approx(-2.0 + 0.01).epsilon(1e-6));
  }
  SECTION("constant gradient settles at lr*sign(g) per step") {
    DenseMatrix p(1, 1, 10.0);
    std::vector<DenseMatrix*> params{&p};
    Adam opt(params, AdamConfig{0.01, 0.9, 0.999, 1e-8});
    const DenseMatrix g(1, 1, -2.5);
    double before = 0.0;
    for (int step = 0; step < 1000; ++step) {
      before = p(0, 0);
      opt.step(params, {&g});
    }
    REQUIRE(p(0, 0) - before == Catch::Approx(0.01).epsilon(1e-6));
    REQUIRE(opt.steps_taken() == 1000);
  }
  SECTION("shape mismatch rejected") {
    DenseMatrix p(2, 2, 1.0);
    std::vector<DenseMatrix*> params{&p};
    Adam opt(params);
    const DenseMatrix g(3, 2, 0.0);
    REQUIRE_THROWS_AS(opt.step(params, {&g}), InternalError);
  }
}

TEST_CASE("sgc head") {
  Rng rng(149);
  SECTION("zero theta gives uniform rows") {
    const ProximitySet p = identity_prox(3);
    const DenseMatrix x = random_dense(rng, 3, 2, -1.0, 1.0);
    const DenseMatrix theta(6, 4, 0.0);
    const DenseMatrix yhat = sgc_dgcn_forward(p, x, theta, 1.0, 1.0);
    for (double v : yhat.data) REQUIRE(std::fabs(v - 0.25) <= 1e-12);
  }
  SECTION("identity operators reduce to softmax([X|X|X] theta)") {
    const ProximitySet p = identity_prox(4);
    const DenseMatrix x = random_dense(rng, 4, 3, -1.0, 1.0);
    const DenseMatrix theta = random_dense(rng, 9, 2, -1.0, 1.0);
    DenseMatrix concat(4, 9);
    for (std::size_t i = 0; i < 4; ++i)
      for (std::size_t j = 0; j < 3; ++j) {
        concat(i, j) = x(i, j);
        concat(i, 3 + j) = x(i, j);
        concat(i, 6 + j) = x(i, j);
      }
    const DenseMatrix expected = softmax_rows(oracle_matmul(concat, theta));
    REQUIRE(max_abs_diff(sgc_dgcn_forward(p, x, theta, 1.0, 1.0), expected) <= 1e-12);
  }
  SECTION("gradient passes the finite-difference check") {
    for (int rep = 0; rep < 3; ++rep) {
      FdInstance inst = random_fd_instance(rng, rep == 1 ? 1e-3 : 0.0);
      SgcModel m = SgcModel::init(inst.x.n_cols, static_cast<std::size_t>(inst.y.n_classes),
                                  0.9, 1.1, 555 + static_cast<std::uint64_t>(rep));
      REQUIRE(sgc_fd_worst_error(inst, m) <= 1e-5);
    }
  }
  SECTION("theta shape is validated") {
    const ProximitySet p = identity_prox(2);
    const DenseMatrix x(2, 3, 1.0);
    REQUIRE_THROWS_AS(sgc_logits(p, x, DenseMatrix(5, 2), 1.0, 1.0), DomainError);
  }
}
