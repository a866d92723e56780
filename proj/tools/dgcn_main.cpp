// dgcn: proximity export, smoothness diagnostics, training, sweeps and
// synthetic data generation for directed-graph convolutional networks.
//
// Exit codes: 0 success, 1 usage, 2 domain/data error, 3 internal error.

#include <cstdint>
#include <filesystem>
#include <iostream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "dgcn/dense.hpp"
#include "dgcn/error.hpp"
#include "dgcn/graph.hpp"
#include "dgcn/io.hpp"
#include "dgcn/nn.hpp"
#include "dgcn/proximity.hpp"
#include "dgcn/sbm.hpp"
#include "dgcn/smoothness.hpp"
#include "dgcn/sparse.hpp"
#include "dgcn/train.hpp"
#include "dgcn/version.hpp"

namespace {

using namespace dgcn;

std::string artifact_header(const std::string& subcommand, std::uint64_t seed) {
  return std::string("# dgcn ") + kVersion + " " + subcommand + " seed=" + std::to_string(seed);
}

void ensure_dir(const std::string& dir) {
  std::error_code ec;
  std::filesystem::create_directories(dir, ec);
  if (ec) throw Error("cannot create output directory '" + dir + "': " + ec.message());
}

std::string join_path(const std::string& dir, const std::string& name) {
  return (std::filesystem::path(dir) / name).string();
}

struct DatasetArgs {
  std::string graph_path;
  std::string features_path;
  std::string labels_path;

  void add_to(CLI::App* cmd, bool with_features = true) {
    cmd->add_option("--graph", graph_path, "graph edge-list file")
        ->required()
        ->check(CLI::ExistingFile);
    if (with_features) {
      cmd->add_option("--features", features_path, "sparse-triplet feature file")
          ->required()
          ->check(CLI::ExistingFile);
      cmd->add_option("--labels", labels_path, "node label file")
          ->required()
          ->check(CLI::ExistingFile);
    }
  }
};

struct LoadedDataset {
  DirectedGraph graph;
  DenseMatrix features;
  LabelVector labels;
};

LoadedDataset load_dataset(const DatasetArgs& args) {
  LoadedDataset d;
  d.graph = load_graph(args.graph_path);
  d.features = load_features(args.features_path, d.graph.n_nodes);
  d.labels = load_labels(args.labels_path, d.graph.n_nodes);
  return d;
}

struct TrainArgs {
  DatasetArgs data;
  TrainConfig cfg;
  std::string model_name = "dgcn";
  std::string restore_best = "on";
  double prox_eps = 0.0;
  bool emit_embeddings = false;
  std::size_t jobs = 1;
  std::string out_dir;

  // Sub-struct shared by train and sweep; sweep adds its grids on top.
  void add_to(CLI::App* cmd) {
    data.add_to(cmd);
    cmd->add_option("--hidden", cfg.hidden, "hidden width H");
    cmd->add_option("--layers", cfg.layers, "number of conv layers L");
    cmd->add_option("--alpha", cfg.alpha, "second-order-in fusion weight");
    cmd->add_option("--beta", cfg.beta, "second-order-out fusion weight");
    cmd->add_option("--lr", cfg.lr, "Adam learning rate");
    cmd->add_option("--dropout", cfg.dropout, "dropout rate in [0,1)");
    cmd->add_option("--l2", cfg.l2, "L2 factor on conv-layer weights");
    cmd->add_option("--max-epochs", cfg.max_epochs, "epoch cap");
    cmd->add_option("--patience", cfg.patience, "early-stopping patience");
    cmd->add_option("--per-class", cfg.per_class, "training nodes per class");
    cmd->add_option("--val-size", cfg.val_size, "validation set size");
    cmd->add_option("--splits", cfg.n_splits, "number of random splits");
    cmd->add_option("--inits", cfg.n_inits, "weight initializations per split");
    cmd->add_option("--seed", cfg.seed, "master seed");
    cmd->add_option("--model", model_name, "model head")
        ->check(CLI::IsMember({"dgcn", "sgc"}));
    cmd->add_option("--restore-best", restore_best,
                    "restore best-validation-epoch weights")
        ->check(CLI::IsMember({"on", "off"}));
    cmd->add_option("--prox-eps", prox_eps, "drop normalized proximity entries < eps");
    cmd->add_flag("--emit-embeddings", emit_embeddings,
                  "export first-layer embeddings of the final run");
    cmd->add_option("--jobs", jobs, "parallel training runs");
    cmd->add_option("--out", out_dir, "output directory")->required();
  }

  TrainConfig resolved() const {
    TrainConfig c = cfg;
    c.model = model_name == "sgc" ? ModelKind::kSgc : ModelKind::kDgcn;
    c.restore_best = restore_best == "on";
    return c;
  }

  std::string config_line(const std::string& subcommand) const {
    const TrainConfig c = resolved();
    std::string s = "# config " + subcommand + " graph=" + data.graph_path +
                    " features=" + data.features_path + " labels=" + data.labels_path;
    s += " hidden=" + std::to_string(c.hidden);
    s += " layers=" + std::to_string(c.layers);
    s += " alpha=" + format_double(c.alpha);
    s += " beta=" + format_double(c.beta);
    s += " lr=" + format_double(c.lr);
    s += " dropout=" + format_double(c.dropout);
    s += " l2=" + format_double(c.l2);
    s += " max-epochs=" + std::to_string(c.max_epochs);
    s += " patience=" + std::to_string(c.patience);
    s += " per-class=" + std::to_string(c.per_class);
    s += " val-size=" + std::to_string(c.val_size);
    s += " splits=" + std::to_string(c.n_splits);
    s += " inits=" + std::to_string(c.n_inits);
    s += " seed=" + std::to_string(c.seed);
    s += std::string(" model=") + (c.model == ModelKind::kSgc ? "sgc" : "dgcn");
    s += std::string(" restore-best=") + (c.restore_best ? "on" : "off");
    s += " prox-eps=" + format_double(prox_eps);
    s += std::string(" emit-embeddings=") + (emit_embeddings ? "1" : "0");
    s += " jobs=" + std::to_string(jobs);
    s += " out=" + out_dir;
    return s;
  }
};

void write_report(const RunReport& report, const std::string& path,
                  const std::string& header) {
  auto out = detail::open_out(path);
  out << header << "\n";
  for (const RunEntry& e : report.entries) {
    out << e.run_id << '\t' << e.split_seed << '\t' << e.init_seed << '\t' << e.stop_epoch
        << '\t' << format_double(e.test_acc) << "\n";
  }
  out << "# mean=" << format_double(report.mean_test_acc)
      << " std=" << format_double(report.std_test_acc) << "\n";
}

void write_checkpoint(const TrainResult& run, const std::string& path,
                      const std::string& header) {
  std::vector<NamedMatrix> blocks;
  std::string meta;
  if (run.kind == ModelKind::kDgcn) {
    const DgcnModel& m = run.dgcn;
    meta = "model=dgcn alpha=" + format_double(m.alpha) + " beta=" + format_double(m.beta) +
           " in_dim=" + std::to_string(m.in_dim) + " hidden=" + std::to_string(m.hidden) +
           " classes=" + std::to_string(m.n_classes) + " layers=" + std::to_string(m.n_layers);
    for (std::size_t l = 0; l < m.conv_thetas.size(); ++l)
      blocks.push_back(NamedMatrix{"conv" + std::to_string(l), m.conv_thetas[l]});
    blocks.push_back(NamedMatrix{"head", m.head_theta});
  } else {
    const SgcModel& m = run.sgc;
    meta = "model=sgc alpha=" + format_double(m.alpha) + " beta=" + format_double(m.beta) +
           " in_dim=" + std::to_string(m.theta.n_rows / 3) +
           " classes=" + std::to_string(m.theta.n_cols);
    blocks.push_back(NamedMatrix{"theta", m.theta});
  }
  save_checkpoint(meta, blocks, path, {header});
}

/// First-layer representation of the trained model in eval mode: the fused
/// N x 3H conv output for the DGCN head, the N x 3C operator concat for SGC.
DenseMatrix final_embeddings(const TrainResult& run, const ProximitySet& p,
                             const DenseMatrix& x) {
  if (run.kind == ModelKind::kDgcn) {
    ForwardTrace trace = model_forward(p, x, run.dgcn, false, 0.0);
    return trace.conv.front().output;
  }
  const SgcModel& m = run.sgc;
  const DenseMatrix zf = spmm(p.a_f_hat, x);
  const DenseMatrix zin = spmm(p.a_sin_hat, x);
  const DenseMatrix zout = spmm(p.a_sout_hat, x);
  const std::size_t c = x.n_cols;
  DenseMatrix out(x.n_rows, 3 * c);
  for (std::size_t i = 0; i < x.n_rows; ++i)
    for (std::size_t j = 0; j < c; ++j) {
      out(i, j) = zf(i, j);
      out(i, c + j) = m.alpha * zin(i, j);
      out(i, 2 * c + j) = m.beta * zout(i, j);
    }
  return out;
}

int cmd_prox(const std::string& graph_path, const std::string& out_dir, double prox_eps,
             std::uint64_t seed) {
  std::cerr << "# config prox graph=" << graph_path << " prox-eps=" << format_double(prox_eps)
            << " seed=" << seed << " out=" << out_dir << "\n";
  const DirectedGraph g = load_graph(graph_path);
  const ProximitySet p = build_proximity_set(g, prox_eps);
  ensure_dir(out_dir);
  const std::vector<std::string> header{artifact_header("prox", seed)};
  save_graph(p.raw_f, join_path(out_dir, "raw_f.tsv"), header);
  save_graph(p.raw_sin, join_path(out_dir, "raw_sin.tsv"), header);
  save_graph(p.raw_sout, join_path(out_dir, "raw_sout.tsv"), header);
  save_graph(p.a_f_hat, join_path(out_dir, "a_f_hat.tsv"), header);
  save_graph(p.a_sin_hat, join_path(out_dir, "a_sin_hat.tsv"), header);
  save_graph(p.a_sout_hat, join_path(out_dir, "a_sout_hat.tsv"), header);
  return 0;
}

int cmd_smooth(const DatasetArgs& args) {
  std::cerr << "# config smooth graph=" << args.graph_path
            << " features=" << args.features_path << " labels=" << args.labels_path << "\n";
  const LoadedDataset d = load_dataset(args);
  const DenseMatrix x = normalize_features(d.features);
  const EdgeSetPrime first = build_edge_set_first_order(d.graph);
  const EdgeSetPrime prime = build_edge_set_prime(d.graph);
  std::cout << "edge_set\tlambda_f\tlambda_l\n";
  std::cout << "first\t" << format_double(feature_smoothness(x, first)) << '\t'
            << format_double(label_smoothness(d.labels, first)) << "\n";
  std::cout << "first+second\t" << format_double(feature_smoothness(x, prime)) << '\t'
            << format_double(label_smoothness(d.labels, prime)) << "\n";
  return 0;
}

int cmd_train(const TrainArgs& args) {
  std::cerr << args.config_line("train") << "\n";
  const TrainConfig cfg = args.resolved();
  const LoadedDataset d = load_dataset(args.data);
  const ProximitySet p = build_proximity_set(d.graph, args.prox_eps);
  TrainResult final_run;
  const RunReport report = run_experiment(p, d.features, d.labels, cfg, args.jobs, &final_run);
  ensure_dir(args.out_dir);
  const std::string header = artifact_header("train", cfg.seed);
  write_report(report, join_path(args.out_dir, "report.tsv"), header);
  write_checkpoint(final_run, join_path(args.out_dir, "checkpoint.tsv"), header);
  if (args.emit_embeddings)
    save_dense(final_embeddings(final_run, p, d.features),
               join_path(args.out_dir, "embeddings.tsv"), {header});
  std::cerr << "# done runs=" << report.entries.size()
            << " mean=" << format_double(report.mean_test_acc)
            << " std=" << format_double(report.std_test_acc)
            << " wall_s=" << format_double(report.wall_seconds) << "\n";
  std::cout << "mean_test_acc\t" << format_double(report.mean_test_acc) << "\n";
  std::cout << "std_test_acc\t" << format_double(report.std_test_acc) << "\n";
  return 0;
}

int cmd_sweep(const TrainArgs& args, const std::vector<double>& alphas,
              const std::vector<double>& betas) {
  std::cerr << args.config_line("sweep") << "\n";
  const TrainConfig cfg = args.resolved();
  const LoadedDataset d = load_dataset(args.data);
  const ProximitySet p = build_proximity_set(d.graph, args.prox_eps);
  const std::vector<SweepRow> rows =
      sweep_alpha_beta(p, d.features, d.labels, cfg, alphas, betas, args.jobs);
  ensure_dir(args.out_dir);
  auto out = detail::open_out(join_path(args.out_dir, "sweep.tsv"));
  out << artifact_header("sweep", cfg.seed) << "\n";
  out << "alpha\tbeta\tval_acc\ttest_acc\n";
  for (const SweepRow& r : rows)
    out << format_double(r.alpha) << '\t' << format_double(r.beta) << '\t'
        << format_double(r.val_acc) << '\t' << format_double(r.test_acc) << "\n";
  return 0;
}

int cmd_gen_sbm(const SbmParams& prm, const std::string& out_dir) {
  std::cerr << "# config gen-sbm per-class=" << prm.n_per_class
            << " classes=" << prm.n_classes << " p-in=" << format_double(prm.p_in)
            << " p-out=" << format_double(prm.p_out) << " feat-dim=" << prm.feat_dim
            << " noise=" << format_double(prm.noise) << " seed=" << prm.seed
            << " out=" << out_dir << "\n";
  const SbmData data = generate_sbm(prm);
  ensure_dir(out_dir);
  const std::vector<std::string> header{artifact_header("gen-sbm", prm.seed)};
  save_graph(data.graph, join_path(out_dir, "graph.tsv"), header);
  save_features(data.features, join_path(out_dir, "features.tsv"), header);
  save_labels(data.labels, join_path(out_dir, "labels.tsv"), header);
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"directed-graph convolutional network toolkit"};
  app.require_subcommand(1);
  app.set_version_flag("--version", std::string("dgcn ") + dgcn::kVersion);

  // prox
  auto* prox = app.add_subcommand("prox", "export proximity matrices");
  std::string prox_graph, prox_out;
  double prox_eps = 0.0;
  std::uint64_t prox_seed = 0;
  prox->add_option("--graph", prox_graph, "graph edge-list file")
      ->required()
      ->check(CLI::ExistingFile);
  prox->add_option("--prox-eps", prox_eps, "drop normalized entries < eps");
  prox->add_option("--seed", prox_seed, "seed recorded in artifact headers");
  prox->add_option("--out", prox_out, "output directory")->required();

  // smooth
  auto* smooth = app.add_subcommand("smooth", "feature/label smoothness diagnostics");
  DatasetArgs smooth_args;
  smooth_args.add_to(smooth);

  // train
  auto* train = app.add_subcommand("train", "run the training protocol");
  TrainArgs train_args;
  train_args.add_to(train);

  // sweep
  auto* sweep = app.add_subcommand("sweep", "alpha/beta grid study");
  TrainArgs sweep_args;
  sweep_args.cfg.n_splits = 3;
  sweep_args.cfg.n_inits = 2;
  sweep_args.add_to(sweep);
  std::vector<double> alphas{1.0}, betas{1.0};
  sweep->add_option("--alphas", alphas, "alpha grid values in (0,2]")->delimiter(',');
  sweep->add_option("--betas", betas, "beta grid values in (0,2]")->delimiter(',');

  // gen-sbm
  auto* gen = app.add_subcommand("gen-sbm", "generate a directed SBM dataset");
  dgcn::SbmParams sbm;
  std::string gen_out;
  gen->add_option("--per-class", sbm.n_per_class, "nodes per class");
  gen->add_option("--classes", sbm.n_classes, "number of classes");
  gen->add_option("--p-in", sbm.p_in, "intra-class edge probability");
  gen->add_option("--p-out", sbm.p_out, "inter-class edge probability");
  gen->add_option("--feat-dim", sbm.feat_dim, "feature dimensionality");
  gen->add_option("--noise", sbm.noise, "uniform feature noise amplitude");
  gen->add_option("--seed", sbm.seed, "generator seed");
  gen->add_option("--out", gen_out, "output directory")->required();

  try {
    app.parse(argc, argv);
    if (prox->parsed()) return cmd_prox(prox_graph, prox_out, prox_eps, prox_seed);
    if (smooth->parsed()) return cmd_smooth(smooth_args);
    if (train->parsed()) return cmd_train(train_args);
    if (sweep->parsed()) return cmd_sweep(sweep_args, alphas, betas);
    if (gen->parsed()) return cmd_gen_sbm(sbm, gen_out);
    return 1;
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 1;
  } catch (const dgcn::InternalError& e) {
    std::cerr << "internal error: " << e.what() << "\n";
    return 3;
  } catch (const dgcn::Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "internal error: " << e.what() << "\n";
    return 3;
  }
}
