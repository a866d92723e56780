#pragma once

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <cstdint>
#include <exception>
#include <mutex>
#include <string>
#include <thread>
#include <vector>

#include "dgcn/adam.hpp"
#include "dgcn/dense.hpp"
#include "dgcn/error.hpp"
#include "dgcn/graph.hpp"
#include "dgcn/nn.hpp"
#include "dgcn/proximity.hpp"
#include "dgcn/rng.hpp"

namespace dgcn {

enum class ModelKind { kDgcn, kSgc };

struct TrainConfig {
  double lr = 0.01;
  std::size_t max_epochs = 500;
  std::size_t patience = 50;
  double dropout = 0.5;
  double l2 = 5e-4;
  std::size_t hidden = 64;
  double alpha = 1.0;
  double beta = 1.0;
  std::size_t layers = 1;
  std::size_t per_class = 20;
  std::size_t val_size = 500;
  std::size_t n_splits = 10;
  std::size_t n_inits = 5;
  std::uint64_t seed = 0;
  bool restore_best = true;
  ModelKind model = ModelKind::kDgcn;

  void validate() const {
    if (lr <= 0.0) throw DomainError("lr must be > 0");
    if (max_epochs == 0) throw DomainError("max-epochs must be > 0");
    if (patience == 0 || patience > max_epochs)
      throw DomainError("patience must be in [1, max-epochs]");
    if (dropout < 0.0 || dropout >= 1.0) throw DomainError("dropout must be in [0,1)");
    if (l2 < 0.0) throw DomainError("l2 must be >= 0");
    if (hidden == 0) throw DomainError("hidden must be > 0");
    if (alpha < 0.0 || beta < 0.0) throw DomainError("alpha and beta must be >= 0");
    if (layers == 0) throw DomainError("layers must be > 0");
    if (per_class == 0) throw DomainError("per-class must be > 0");
    if (val_size == 0) throw DomainError("val-size must be > 0");
    if (n_splits == 0 || n_inits == 0) throw DomainError("splits and inits must be > 0");
  }
};

// ---------------------------------------------------------------------------
// Splits
// ---------------------------------------------------------------------------

struct SplitAssignment {
  std::vector<std::size_t> train, val, test;  // each sorted ascending
  std::uint64_t seed = 0;
};

/// Stratified split: per_class labeled nodes of every class into train, then
/// val_size sampled uniformly from the remaining labeled nodes, rest to test.
inline SplitAssignment make_split(const LabelVector& y, const TrainConfig& cfg,
                                  std::uint64_t seed) {
  const std::size_t f = static_cast<std::size_t>(y.n_classes);
  if (f == 0) throw ProtocolError("make_split: no labeled classes");
  std::vector<std::vector<std::size_t>> by_class(f);
  for (std::size_t i = 0; i < y.labels.size(); ++i)
    if (y.is_labeled(i)) by_class[static_cast<std::size_t>(y.labels[i])].push_back(i);
  for (std::size_t c = 0; c < f; ++c)
    if (by_class[c].size() < cfg.per_class)
      throw ProtocolError("class " + std::to_string(c) + " has " +
                          std::to_string(by_class[c].size()) + " labeled nodes, need " +
                          std::to_string(cfg.per_class));
  const std::size_t n_labeled = y.n_labeled();
  if (n_labeled < cfg.per_class * f + cfg.val_size + 1)
    throw ProtocolError("labeled pool " + std::to_string(n_labeled) +
                        " too small for per-class=" + std::to_string(cfg.per_class) +
                        ", val-size=" + std::to_string(cfg.val_size));

  Rng rng(seed);
  SplitAssignment s;
  s.seed = seed;
  std::vector<char> in_train(y.labels.size(), 0);
  for (std::size_t c = 0; c < f; ++c) {
    std::vector<std::size_t> pool = by_class[c];
    rng.shuffle(pool);
    for (std::size_t k = 0; k < cfg.per_class; ++k) {
      s.train.push_back(pool[k]);
      in_train[pool[k]] = 1;
    }
  }
  std::vector<std::size_t> rest;
  for (std::size_t i = 0; i < y.labels.size(); ++i)
    if (y.is_labeled(i) && !in_train[i]) rest.push_back(i);
  rng.shuffle(rest);
  s.val.assign(rest.begin(), rest.begin() + static_cast<std::ptrdiff_t>(cfg.val_size));
  s.test.assign(rest.begin() + static_cast<std::ptrdiff_t>(cfg.val_size), rest.end());
  std::sort(s.train.begin(), s.train.end());
  std::sort(s.val.begin(), s.val.end());
  std::sort(s.test.begin(), s.test.end());
  return s;
}

// ---------------------------------------------------------------------------
// Evaluation
// ---------------------------------------------------------------------------

/// Fraction of nodes whose argmax prediction (ties: lowest class id) matches
/// the ground-truth label.
inline double accuracy(const DenseMatrix& probs, const LabelVector& y,
                       const std::vector<std::size_t>& nodes) {
  if (nodes.empty()) throw DomainError("accuracy: empty node set");
  std::size_t correct = 0;
  for (std::size_t node : nodes) {
    if (!y.is_labeled(node))
      throw DomainError("accuracy: node " + std::to_string(node) + " is unlabeled");
    const double* row = probs.row(node);
    std::size_t best = 0;
    for (std::size_t j = 1; j < probs.n_cols; ++j)
      if (row[j] > row[best]) best = j;
    if (best == static_cast<std::size_t>(y.labels[node])) ++correct;
  }
  return static_cast<double>(correct) / static_cast<double>(nodes.size());
}

inline double evaluate(const DgcnModel& m, const ProximitySet& p, const DenseMatrix& x,
                       const LabelVector& y, const std::vector<std::size_t>& nodes) {
  return accuracy(model_forward(p, x, m, false, 0.0).probs, y, nodes);
}

// ---------------------------------------------------------------------------
// Single run
// ---------------------------------------------------------------------------

struct RunEntry {
  std::size_t run_id = 0;
  std::uint64_t split_seed = 0;
  std::uint64_t init_seed = 0;
  std::size_t stop_epoch = 0;  // last epoch executed (1-based)
  double val_acc = 0.0;        // validation accuracy of the returned model
  double test_acc = 0.0;
};

/// Trained weights of one run; `kind` selects which member is meaningful.
struct TrainResult {
  ModelKind kind = ModelKind::kDgcn;
  DgcnModel dgcn;
  SgcModel sgc;
  RunEntry entry;
};

namespace detail {

inline void check_finite_loss(double loss, std::size_t epoch) {
  if (!std::isfinite(loss))
    throw TrainingError("non-finite loss at epoch " + std::to_string(epoch));
}

inline TrainResult train_once_dgcn(const ProximitySet& p, const DenseMatrix& x,
                                   const LabelVector& y, const SplitAssignment& split,
                                   const TrainConfig& cfg, std::uint64_t init_seed) {
  TrainResult r;
  r.kind = ModelKind::kDgcn;
  r.dgcn = DgcnModel::init(x.n_cols, cfg.hidden, static_cast<std::size_t>(y.n_classes),
                           cfg.layers, cfg.alpha, cfg.beta, init_seed);
  DgcnModel& m = r.dgcn;
  Adam opt(m.parameters(), AdamConfig{cfg.lr, 0.9, 0.999, 1e-8});
  Rng dropout_rng(init_seed + 9000);

  double best_val = -1.0;
  std::size_t since_improve = 0;
  std::vector<DenseMatrix> best_conv;
  DenseMatrix best_head;
  for (std::size_t epoch = 1; epoch <= cfg.max_epochs; ++epoch) {
    ForwardTrace trace = model_forward(p, x, m, true, cfg.dropout, &dropout_rng);
    const double loss =
        masked_cross_entropy_logits(trace.logits, y, split.train) + l2_penalty(m, cfg.l2);
    check_finite_loss(loss, epoch);
    const Gradients g = model_backward(trace, y, split.train, m, p, cfg.l2);
    opt.step(m.parameters(), g.list());

    const double val_acc = evaluate(m, p, x, y, split.val);
    r.entry.stop_epoch = epoch;
    r.entry.val_acc = val_acc;
    if (val_acc > best_val) {
      best_val = val_acc;
      since_improve = 0;
      if (cfg.restore_best) {
        best_conv = m.conv_thetas;
        best_head = m.head_theta;
      }
    } else if (++since_improve >= cfg.patience) {
      break;
    }
  }
  if (cfg.restore_best) {
    m.conv_thetas = std::move(best_conv);
    m.head_theta = std::move(best_head);
    r.entry.val_acc = best_val;
  }
  r.entry.test_acc = evaluate(m, p, x, y, split.test);
  return r;
}

inline TrainResult train_once_sgc(const ProximitySet& p, const DenseMatrix& x,
                                  const LabelVector& y, const SplitAssignment& split,
                                  const TrainConfig& cfg, std::uint64_t init_seed) {
  TrainResult r;
  r.kind = ModelKind::kSgc;
  r.sgc = SgcModel::init(x.n_cols, static_cast<std::size_t>(y.n_classes), cfg.alpha, cfg.beta,
                         init_seed);
  DenseMatrix& theta = r.sgc.theta;
  std::vector<DenseMatrix*> params{&theta};
  Adam opt(params, AdamConfig{cfg.lr, 0.9, 0.999, 1e-8});

  double best_val = -1.0;
  std::size_t since_improve = 0;
  DenseMatrix best_theta;
  for (std::size_t epoch = 1; epoch <= cfg.max_epochs; ++epoch) {
    const DenseMatrix logits = sgc_logits(p, x, theta, cfg.alpha, cfg.beta);
    double l2_term = 0.0;
    if (cfg.l2 != 0.0)
      for (double v : theta.data) l2_term += v * v;
    const double loss =
        masked_cross_entropy_logits(logits, y, split.train) + cfg.l2 * l2_term;
    check_finite_loss(loss, epoch);
    const DenseMatrix probs = softmax_rows(logits);
    const DenseMatrix g =
        sgc_backward(p, x, probs, y, split.train, theta, cfg.alpha, cfg.beta, cfg.l2);
    std::vector<const DenseMatrix*> grads{&g};
    opt.step(params, grads);

    const DenseMatrix eval_probs = sgc_dgcn_forward(p, x, theta, cfg.alpha, cfg.beta);
    const double val_acc = accuracy(eval_probs, y, split.val);
    r.entry.stop_epoch = epoch;
    r.entry.val_acc = val_acc;
    if (val_acc > best_val) {
      best_val = val_acc;
      since_improve = 0;
      if (cfg.restore_best) best_theta = theta;
    } else if (++since_improve >= cfg.patience) {
      break;
    }
  }
  if (cfg.restore_best) {
    theta = std::move(best_theta);
    r.entry.val_acc = best_val;
  }
  r.entry.test_acc = accuracy(sgc_dgcn_forward(p, x, theta, cfg.alpha, cfg.beta), y, split.test);
  return r;
}

}  // namespace detail

/// Full-batch training with early stopping: after each epoch the validation
/// accuracy is evaluated; a strict improvement resets patience. With
/// restore_best the weights of the best validation epoch (ties: earliest)
/// are returned, otherwise the final ones.
inline TrainResult train_once(const ProximitySet& p, const DenseMatrix& x, const LabelVector& y,
                              const SplitAssignment& split, const TrainConfig& cfg,
                              std::uint64_t init_seed) {
  TrainResult r = cfg.model == ModelKind::kDgcn
                      ? detail::train_once_dgcn(p, x, y, split, cfg, init_seed)
                      : detail::train_once_sgc(p, x, y, split, cfg, init_seed);
  r.entry.split_seed = split.seed;
  r.entry.init_seed = init_seed;
  return r;
}

// ---------------------------------------------------------------------------
// Repeated runs
// ---------------------------------------------------------------------------

struct RunReport {
  std::vector<RunEntry> entries;  // ordered by run_id
  double mean_test_acc = 0.0;
  double std_test_acc = 0.0;  // population standard deviation
  double mean_val_acc = 0.0;
  double wall_seconds = 0.0;  // informational; never serialized
};

inline void aggregate_report(RunReport& report) {
  const double n = static_cast<double>(report.entries.size());
  double sum = 0.0, val_sum = 0.0;
  for (const RunEntry& e : report.entries) {
    sum += e.test_acc;
    val_sum += e.val_acc;
  }
  report.mean_test_acc = sum / n;
  report.mean_val_acc = val_sum / n;
  double sq = 0.0;
  for (const RunEntry& e : report.entries) {
    const double d = e.test_acc - report.mean_test_acc;
    sq += d * d;
  }
  report.std_test_acc = std::sqrt(sq / n);
}

/// n_splits x n_inits runs with seeds split_seed = seed + 1000*i and
/// init_seed = seed + 2000*j, run_id = i*n_inits + j. Runs are independent
/// and may execute on `jobs` worker threads; entries are aggregated in
/// run_id order so the report does not depend on scheduling. When
/// `final_run` is given it receives the trained model of the last run.
inline RunReport run_experiment(const ProximitySet& p, const DenseMatrix& x,
                                const LabelVector& y, const TrainConfig& cfg,
                                std::size_t jobs = 1, TrainResult* final_run = nullptr) {
  cfg.validate();
  const auto t0 = std::chrono::steady_clock::now();
  const std::size_t n_runs = cfg.n_splits * cfg.n_inits;
  RunReport report;
  report.entries.resize(n_runs);

  std::atomic<std::size_t> next{0};
  std::exception_ptr first_error = nullptr;
  std::mutex error_mu;
  auto worker = [&]() {
    for (;;) {
      const std::size_t r = next.fetch_add(1);
      if (r >= n_runs) return;
      try {
        const std::size_t i = r / cfg.n_inits;
        const std::size_t j = r % cfg.n_inits;
        const std::uint64_t split_seed = cfg.seed + 1000 * i;
        const std::uint64_t init_seed = cfg.seed + 2000 * j;
        const SplitAssignment split = make_split(y, cfg, split_seed);
        TrainResult res = train_once(p, x, y, split, cfg, init_seed);
        res.entry.run_id = r;
        report.entries[r] = res.entry;
        if (final_run != nullptr && r == n_runs - 1) *final_run = std::move(res);
      } catch (...) {
        std::lock_guard<std::mutex> lock(error_mu);
        if (!first_error) first_error = std::current_exception();
        next.store(n_runs);
        return;
      }
    }
  };

  const std::size_t n_threads = std::max<std::size_t>(1, std::min(jobs, n_runs));
  if (n_threads == 1) {
    worker();
  } else {
    std::vector<std::thread> pool;
    pool.reserve(n_threads);
    for (std::size_t t = 0; t < n_threads; ++t) pool.emplace_back(worker);
    for (std::thread& t : pool) t.join();
  }
  if (first_error) std::rethrow_exception(first_error);

  aggregate_report(report);
  report.wall_seconds =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  return report;
}

// ---------------------------------------------------------------------------
// Alpha/beta sweep
// ---------------------------------------------------------------------------

struct SweepRow {
  double alpha = 0.0;
  double beta = 0.0;
  double val_acc = 0.0;
  double test_acc = 0.0;
};

/// One run_experiment per (alpha, beta) grid point; rows sorted by (alpha,
/// beta). Grid values must lie in (0, 2].
inline std::vector<SweepRow> sweep_alpha_beta(const ProximitySet& p, const DenseMatrix& x,
                                              const LabelVector& y, const TrainConfig& cfg,
                                              std::vector<double> alphas,
                                              std::vector<double> betas, std::size_t jobs = 1) {
  for (double v : alphas)
    if (!(v > 0.0 && v <= 2.0)) throw DomainError("sweep alpha values must lie in (0,2]");
  for (double v : betas)
    if (!(v > 0.0 && v <= 2.0)) throw DomainError("sweep beta values must lie in (0,2]");
  std::sort(alphas.begin(), alphas.end());
  std::sort(betas.begin(), betas.end());
  std::vector<SweepRow> rows;
  rows.reserve(alphas.size() * betas.size());
  for (double a : alphas) {
    for (double b : betas) {
      TrainConfig point = cfg;
      point.alpha = a;
      point.beta = b;
      const RunReport rep = run_experiment(p, x, y, point, jobs);
      rows.push_back(SweepRow{a, b, rep.mean_val_acc, rep.mean_test_acc});
    }
  }
  return rows;
}

}  // namespace dgcn
