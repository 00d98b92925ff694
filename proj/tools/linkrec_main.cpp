#include <cstdio>
#include <exception>
#include <iostream>
#include <string>
#include <vector>

#if defined(__GLIBC__)
#include <malloc.h>
#endif

#include "CLI11.hpp"
#include "linkrec/error.hpp"
#include "linkrec/experiment.hpp"

namespace {

constexpr int kOk = 0;
constexpr int kConfigError = 2;
constexpr int kDataError = 3;
constexpr int kNumericError = 4;

void print_report(const linkrec::MetricsReport& report) {
  std::printf("missing links:  auc=%.4f ap=%.4f precision@%lld=%.4f\n",
              report.auc, report.ap,
              static_cast<long long>(report.L_missing),
              report.precision_missing);
  std::printf("spurious links: auc=%.4f precision@%lld=%.4f\n",
              report.auc_spurious, static_cast<long long>(report.L_spurious),
              report.precision_spurious);
}

int run(int argc, char** argv) {
  CLI::App app{"Graph reconstruction pipeline: split, augment, train, "
               "evaluate, and compare against heuristic baselines"};
  app.require_subcommand(1);

  // split
  linkrec::SplitArgs split_args;
  auto* split = app.add_subcommand("split", "Split an edge list into observed "
                                            "and holdout graphs");
  split->add_option("--input", split_args.input, "original edge list")
      ->required();
  split->add_option("--keep", split_args.keep_fraction,
                    "fraction of edges kept in the observed graph");
  split->add_option("--seed", split_args.seed, "sampling seed");
  split->add_option("--out", split_args.output_dir, "output directory")
      ->required();

  // train
  auto* train = app.add_subcommand("train", "Build the augmented dataset and "
                                            "train a model");
  std::string train_config_path;
  linkrec::RunConfig flag_overrides;
  bool relu_flag = false;
  bool no_augmented = false;
  train->add_option("--config", train_config_path, "run config JSON");
  auto* opt_dataset =
      train->add_option("--dataset", flag_overrides.dataset, "original edge list");
  auto* opt_out =
      train->add_option("--out", flag_overrides.output_dir, "output directory");
  auto* opt_keep = train->add_option("--keep", flag_overrides.keep_fraction);
  auto* opt_del = train->add_option("--del", flag_overrides.del_fraction);
  auto* opt_add = train->add_option("--add", flag_overrides.add_fraction);
  auto* opt_t = train->add_option("--t", flag_overrides.t, "augmented graphs");
  auto* opt_lr = train->add_option("--lr", flag_overrides.train.learning_rate);
  auto* opt_wd = train->add_option("--weight-decay", flag_overrides.train.weight_decay);
  auto* opt_epochs = train->add_option("--epochs", flag_overrides.train.epochs);
  auto* opt_dropout = train->add_option("--dropout", flag_overrides.train.dropout_rate);
  auto* opt_lambda = train->add_option("--lambda", flag_overrides.train.lambda);
  auto* opt_layers = train->add_option("--layers", flag_overrides.train.layers);
  auto* opt_hidden = train->add_option("--hidden", flag_overrides.train.hidden);
  auto* opt_batch = train->add_option("--batch", flag_overrides.train.batch);
  auto* opt_seed = train->add_option("--seed", flag_overrides.train.seed);
  train->add_flag("--relu", relu_flag, "ReLU after each propagation layer");
  train->add_flag("--no-augmented", no_augmented,
                  "skip writing augmented edge lists");

  // eval
  linkrec::EvalArgs eval_args;
  auto* eval = app.add_subcommand("eval", "Evaluate a checkpoint on a dataset "
                                          "manifest");
  eval->add_option("--checkpoint", eval_args.checkpoint)->required();
  eval->add_option("--manifest", eval_args.manifest)->required();
  eval->add_option("--out", eval_args.output_dir)->required();

  // baseline
  linkrec::BaselineArgs baseline_args;
  auto* baseline = app.add_subcommand("baseline", "Run a heuristic baseline "
                                                  "(CN, RA, LP) on a manifest");
  baseline->add_option("--kind", baseline_args.kind, "CN, RA, or LP")
      ->required();
  baseline->add_option("--manifest", baseline_args.manifest)->required();
  baseline->add_option("--out", baseline_args.output_dir)->required();
  baseline->add_option("--epsilon", baseline_args.epsilon,
                       "LP three-hop weight");

  // sweep
  linkrec::SweepArgs sweep_args;
  std::string sweep_config_path;
  auto* sweep = app.add_subcommand("sweep", "Train one model per value of "
                                            "lambda or depth");
  sweep->add_option("--param", sweep_args.param, "lambda or depth")->required();
  sweep->add_option("--values", sweep_args.values, "parameter values")
      ->required()
      ->expected(-1);
  sweep->add_option("--config", sweep_config_path, "base run config JSON")
      ->required();
  sweep->add_option("--out", sweep_args.output_dir)->required();
  sweep->add_option("--jobs", sweep_args.jobs, "concurrent trainings");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kOk : kConfigError;
  }

  if (split->parsed()) {
    const auto manifest = linkrec::cmd_split(split_args);
    std::printf("observed graph: %lld nodes, %zu edges kept\n",
                static_cast<long long>(manifest.n),
                linkrec::load_edge_list(manifest.observed).edge_count());
    return kOk;
  }

  if (train->parsed()) {
    linkrec::RunConfig cfg;
    if (!train_config_path.empty())
      cfg = linkrec::RunConfig::from_file(train_config_path);
    if (*opt_dataset) cfg.dataset = flag_overrides.dataset;
    if (*opt_out) cfg.output_dir = flag_overrides.output_dir;
    if (*opt_keep) cfg.keep_fraction = flag_overrides.keep_fraction;
    if (*opt_del) cfg.del_fraction = flag_overrides.del_fraction;
    if (*opt_add) cfg.add_fraction = flag_overrides.add_fraction;
    if (*opt_t) cfg.t = flag_overrides.t;
    if (*opt_lr) cfg.train.learning_rate = flag_overrides.train.learning_rate;
    if (*opt_wd) cfg.train.weight_decay = flag_overrides.train.weight_decay;
    if (*opt_epochs) cfg.train.epochs = flag_overrides.train.epochs;
    if (*opt_dropout) cfg.train.dropout_rate = flag_overrides.train.dropout_rate;
    if (*opt_lambda) cfg.train.lambda = flag_overrides.train.lambda;
    if (*opt_layers) cfg.train.layers = flag_overrides.train.layers;
    if (*opt_hidden) cfg.train.hidden = flag_overrides.train.hidden;
    if (*opt_batch) cfg.train.batch = flag_overrides.train.batch;
    if (*opt_seed) cfg.train.seed = flag_overrides.train.seed;
    if (relu_flag) cfg.train.layer_relu = true;
    if (no_augmented) cfg.write_augmented = false;

    const auto out = linkrec::cmd_train(cfg);
    std::printf("best epoch %d (val auc %.4f); checkpoint at %s\n",
                out.best_epoch, out.best_val_auc, out.checkpoint.c_str());
    return kOk;
  }

  if (eval->parsed()) {
    print_report(linkrec::cmd_eval(eval_args));
    return kOk;
  }

  if (baseline->parsed()) {
    print_report(linkrec::cmd_baseline(baseline_args));
    return kOk;
  }

  if (sweep->parsed()) {
    if (!sweep_config_path.empty())
      sweep_args.base = linkrec::RunConfig::from_file(sweep_config_path);
    linkrec::cmd_sweep(sweep_args);
    std::printf("summary at %s\n",
                (sweep_args.output_dir / "summary.csv").c_str());
    return kOk;
  }

  return kConfigError;
}

}  // namespace

int main(int argc, char** argv) {
#if defined(__GLIBC__)
  // Tape tensors exceed glibc's mmap threshold and would fault in fresh
  // pages every training step; keep large blocks reusable on the heap.
  mallopt(M_MMAP_THRESHOLD, 512 * 1024 * 1024);
#endif
  try {
    return run(argc, argv);
  } catch (const linkrec::ConfigError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return kConfigError;
  } catch (const linkrec::NumericError& e) {
    std::cerr << "numerical error: " << e.what() << "\n";
    return kNumericError;
  } catch (const linkrec::DataError& e) {
    std::cerr << "data error: " << e.what() << "\n";
    return kDataError;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
}
