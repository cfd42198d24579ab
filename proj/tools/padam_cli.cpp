// Command-line experiment runner: single trials, the p grid search, the
// learning-rate sensitivity sweep, optimizer comparison, and plot-data
// extraction from finished sweeps.

#include <cstdio>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "padam/harness.hpp"

namespace {

using padam::SweepCell;
using padam::SweepResult;
using padam::TrialConfig;

// Flags whose "unset" state matters get staged here and applied only when
// the option was actually passed.
struct StagedOptions {
  double lr_base = 0.0;
  double p = 0.0, beta1 = 0.0, beta2 = 0.0, epsilon = 0.0, weight_decay = 0.0, momentum = 0.0;
  double p_start = 0.0;
  double init_scale = 0.0;
  std::size_t p_total = 0;
  bool no_standardize = false;
  bool skip_header = false;
  bool drop_last = false;
};

struct TrialCli {
  TrialConfig* cfg;
  StagedOptions staged;
  CLI::Option* lr_base_opt = nullptr;
  CLI::Option* p_opt = nullptr;
  CLI::Option* beta1_opt = nullptr;
  CLI::Option* beta2_opt = nullptr;
  CLI::Option* eps_opt = nullptr;
  CLI::Option* wd_opt = nullptr;
  CLI::Option* momentum_opt = nullptr;
  CLI::Option* p_start_opt = nullptr;
  CLI::Option* p_total_opt = nullptr;
  CLI::Option* init_scale_opt = nullptr;
  CLI::Option* epochs_opt = nullptr;

  void apply() {
    TrialConfig& c = *cfg;
    if (lr_base_opt->count()) c.lr.base = staged.lr_base;
    if (p_opt->count()) c.hp.p = staged.p;
    if (beta1_opt->count()) c.hp.beta1 = staged.beta1;
    if (beta2_opt->count()) c.hp.beta2 = staged.beta2;
    if (eps_opt->count()) c.hp.epsilon = staged.epsilon;
    if (wd_opt->count()) c.hp.weight_decay = staged.weight_decay;
    if (momentum_opt->count()) c.hp.momentum = staged.momentum;
    if (p_start_opt->count()) c.p_schedule.p_start = staged.p_start;
    if (p_total_opt->count()) c.p_schedule.total_epochs = staged.p_total;
    if (init_scale_opt->count()) c.model.init_scale = staged.init_scale;
    if (staged.no_standardize) c.standardize_features = false;
    if (staged.skip_header) c.dataset.skip_header = true;
    if (staged.drop_last) c.drop_last = true;
  }
};

void add_trial_options(CLI::App* app, TrialCli& t) {
  TrialConfig& c = *t.cfg;
  app->add_option("-o,--optimizer", c.optimizer, "padam | adam | amsgrad | sgd");
  t.epochs_opt = app->add_option("--epochs", c.epochs, "epoch budget");
  app->add_option("--batch-size", c.batch_size, "mini-batch size");
  app->add_flag("--drop-last", t.staged.drop_last, "drop the truncated final batch");
  app->add_option("--seed", c.seed, "master seed (data, split, init, shuffle derive from it)");
  app->add_option("--test-fraction", c.test_fraction, "held-out fraction in (0,1)");
  app->add_flag("--no-standardize", t.staged.no_standardize,
                "skip train-statistics feature standardization");
  app->add_option("--topk", c.eval_topk, "k for the top-k error column (0 = auto)");
  app->add_option("--checkpoints", c.checkpoints, "checkpoint epochs for compare tables");
  app->add_option("--outdir", c.outdir, "output directory");
  app->add_option("--run-id", c.run_id, "run directory name (default derived)");

  t.lr_base_opt = app->add_option("--lr", t.staged.lr_base,
                                  "base learning rate (default: optimizer preset)");
  app->add_option("--lr-factor", c.lr.factor, "decay factor at each milestone");
  app->add_option("--lr-milestones", c.lr.milestones,
                  "decay epochs (default: quarters of the budget)");

  t.p_opt = app->add_option("--p", t.staged.p, "partial adaptivity in [0, 0.5] (padam)");
  t.beta1_opt = app->add_option("--beta1", t.staged.beta1, "first-moment decay");
  t.beta2_opt = app->add_option("--beta2", t.staged.beta2, "second-moment decay");
  t.eps_opt = app->add_option("--eps", t.staged.epsilon, "stability constant");
  t.wd_opt = app->add_option("--weight-decay", t.staged.weight_decay, "coupled L2 coefficient");
  t.momentum_opt = app->add_option("--momentum", t.staged.momentum, "sgd momentum");

  app->add_option("--p-mode", c.p_schedule.mode, "constant | step | linear");
  t.p_start_opt = app->add_option("--p-start", t.staged.p_start, "initial p (default: --p)");
  app->add_option("--p-end", c.p_schedule.p_end, "final p for step/linear modes");
  app->add_option("--p-factor", c.p_schedule.factor, "step mode decay factor");
  app->add_option("--p-milestones", c.p_schedule.milestones, "step mode milestones");
  t.p_total_opt =
      app->add_option("--p-total", t.staged.p_total, "linear mode span (default: epochs)");

  app->add_option("--model", c.model.kind, "mlp | logreg");
  app->add_option("--hidden", c.model.hidden_dim, "mlp hidden width");
  t.init_scale_opt = app->add_option("--init-scale", t.staged.init_scale,
                                     "std of the Gaussian weight init (default: 0 for "
                                     "logreg, 1 for mlp)");

  app->add_option("--dataset", c.dataset.kind, "two_moons | blobs | file");
  app->add_option("--n", c.dataset.n, "two_moons sample count");
  app->add_option("--noise", c.dataset.noise, "two_moons noise std");
  app->add_option("--classes", c.dataset.num_classes, "blobs class count");
  app->add_option("--per-class", c.dataset.per_class, "blobs samples per class");
  app->add_option("--dim", c.dataset.dim, "blobs feature dimension");
  app->add_option("--separation", c.dataset.separation, "blobs center separation");
  app->add_option("--data-file", c.dataset.path, "delimited text file (kind=file)");
  app->add_option("--delimiter", c.dataset.delimiter, "field delimiter (default ,)");
  app->add_option("--label-column", c.dataset.label_column,
                  "label column index, negative counts from the right");
  app->add_flag("--skip-header", t.staged.skip_header, "skip the first line of the data file");
}

void print_cell_table(const SweepResult& sweep) {
  const bool has_lr = sweep.kind == "sweep-lr";
  const bool compare = sweep.kind == "compare";
  std::printf("%-18s %-10s %-14s %-14s\n", compare ? "optimizer" : (has_lr ? "p / lr" : "p"),
              "status", "train_loss", "test_error");
  for (const SweepCell& cell : sweep.cells) {
    std::string key;
    if (compare) {
      key = cell.coords.at("optimizer");
    } else if (has_lr) {
      key = cell.coords.at("p") + " / " + cell.coords.at("lr");
    } else {
      key = cell.coords.at("p");
    }
    if (cell.final_row) {
      std::printf("%-18s %-10s %-14.6g %-14.6g\n", key.c_str(), cell.status.c_str(),
                  cell.final_row->train_loss, cell.final_row->test_error_top1);
    } else {
      std::printf("%-18s %-10s %-14s %-14s\n", key.c_str(), cell.status.c_str(), "-", "-");
    }
  }
}

void print_checkpoint_table(const SweepResult& sweep) {
  if (sweep.cells.empty() || sweep.cells.front().checkpoint_accuracy.empty()) return;
  std::printf("\ntest accuracy at checkpoint epochs\n%-12s", "optimizer");
  for (const auto& [epoch, acc] : sweep.cells.front().checkpoint_accuracy)
    std::printf(" %9s", ("ep" + std::to_string(epoch)).c_str());
  std::printf("\n");
  for (const SweepCell& cell : sweep.cells) {
    std::printf("%-12s", cell.coords.at("optimizer").c_str());
    for (const auto& [epoch, acc] : cell.checkpoint_accuracy) std::printf(" %9.4f", acc);
    std::printf("\n");
  }
}

int exit_code_for(const std::exception& e) {
  if (dynamic_cast<const padam::DivergedError*>(&e)) return 3;
  if (dynamic_cast<const padam::ConfigError*>(&e) ||
      dynamic_cast<const padam::InvalidArgumentError*>(&e) ||
      dynamic_cast<const padam::IoError*>(&e) || dynamic_cast<const padam::ParseError*>(&e))
    return 2;
  return 1;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"padam: partially adaptive momentum optimizers and experiment harness"};
  app.require_subcommand(1);

  // --config is applied before flag overrides, so scan for it first.
  TrialConfig cfg;
  bool config_had_epochs = false;
  try {
    for (int i = 1; i + 1 < argc; ++i) {
      if (std::string(argv[i]) == "--config") {
        cfg = padam::load_trial_config(argv[i + 1]);
        std::ifstream raw(argv[i + 1]);
        nlohmann::json j;
        raw >> j;
        config_had_epochs = j.contains("epochs");
      }
    }
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 2;
  }

  std::string config_path;
  std::vector<double> p_values = {0.25, 0.125, 0.0625};
  std::vector<double> lr_values = {0.1, 0.01, 0.001};
  std::vector<std::string> optimizers = {"padam", "adam", "amsgrad", "sgd"};
  std::string sweep_dir, metric;

  TrialCli train_cli{&cfg, {}}, grid_cli{&cfg, {}}, sweep_cli{&cfg, {}}, compare_cli{&cfg, {}};

  CLI::App* train = app.add_subcommand("train", "run one training trial");
  train->add_option("--config", config_path, "JSON config file (flags override)");
  add_trial_options(train, train_cli);

  CLI::App* grid = app.add_subcommand("grid-p", "grid search over p");
  grid->add_option("--config", config_path, "JSON config file (flags override)");
  add_trial_options(grid, grid_cli);
  grid->add_option("--p-values", p_values, "p grid (default 0.25 0.125 0.0625)");

  CLI::App* sweep = app.add_subcommand("sweep-lr", "p x learning-rate sensitivity sweep");
  sweep->add_option("--config", config_path, "JSON config file (flags override)");
  add_trial_options(sweep, sweep_cli);
  sweep->add_option("--p-values", p_values, "p grid (default 0.25 0.125 0.0625)");
  sweep->add_option("--lr-values", lr_values, "learning-rate grid (default 0.1 0.01 0.001)");

  CLI::App* compare = app.add_subcommand("compare", "compare optimizers on one task");
  compare->add_option("--config", config_path, "JSON config file (flags override)");
  add_trial_options(compare, compare_cli);
  compare->add_option("--optimizers", optimizers, "optimizer names (default all four)");

  CLI::App* plot = app.add_subcommand("plot-data", "emit per-cell series from a sweep");
  plot->add_option("--sweep-dir", sweep_dir, "directory containing summary.json")->required();
  plot->add_option("--metric", metric, "metrics.csv column to extract")->required();

  CLI11_PARSE(app, argc, argv);

  try {
    if (train->parsed()) {
      train_cli.apply();
      const padam::TrialResult result = padam::run_trial(cfg);
      const padam::MetricsRow& last = result.rows.back();
      std::printf("run %s: %zu epochs, final train_loss %.6g, test_error_top1 %.6g\n",
                  result.run_dir.string().c_str(), result.rows.size(), last.train_loss,
                  last.test_error_top1);
      std::printf("metrics: %s\n", (result.run_dir / "metrics.csv").string().c_str());
    } else if (grid->parsed()) {
      grid_cli.apply();
      const SweepResult result = padam::grid_search_p(cfg, p_values);
      print_cell_table(result);
      std::printf("summary: %s\n", (padam::fs::path(result.outdir) / "summary.json").c_str());
    } else if (sweep->parsed()) {
      sweep_cli.apply();
      if (!sweep_cli.epochs_opt->count() && !config_had_epochs) cfg.epochs = 30;
      const SweepResult result = padam::lr_sensitivity_sweep(cfg, p_values, lr_values);
      print_cell_table(result);
      std::printf("summary: %s\n", (padam::fs::path(result.outdir) / "summary.json").c_str());
    } else if (compare->parsed()) {
      compare_cli.apply();
      const SweepResult result = padam::compare_optimizers(cfg, optimizers);
      print_cell_table(result);
      print_checkpoint_table(result);
      std::printf("summary: %s\n", (padam::fs::path(result.outdir) / "summary.json").c_str());
    } else if (plot->parsed()) {
      const SweepResult loaded =
          padam::load_sweep_summary(padam::fs::path(sweep_dir) / "summary.json");
      const padam::PlotSeries series = padam::emit_plot_series(loaded, metric);
      std::printf("wrote %zu series under %s\n", series.files.size(),
                  series.dir.string().c_str());
      std::printf("index: %s\n", series.index_file.string().c_str());
    }
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return exit_code_for(e);
  }
  return 0;
}
