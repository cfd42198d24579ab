#include "padam/harness.hpp"

#include <gtest/gtest.h>

#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>

using namespace padam;

namespace {

namespace fs = std::filesystem;

fs::path test_root() {
  static const fs::path root = [] {
    const fs::path p = fs::temp_directory_path() / "padam_harness_tests";
    fs::remove_all(p);
    fs::create_directories(p);
    return p;
  }();
  return root;
}

// Small, fast trial: two-moons MLP with stock padam settings.
TrialConfig small_trial(const std::string& outdir_leaf) {
  TrialConfig cfg;
  cfg.optimizer = "padam";
  cfg.dataset.kind = "two_moons";
  cfg.dataset.n = 160;
  cfg.dataset.noise = 0.1;
  cfg.model.kind = "mlp";
  cfg.model.hidden_dim = 8;
  cfg.epochs = 6;
  cfg.batch_size = 32;
  cfg.seed = 42;
  cfg.outdir = (test_root() / outdir_leaf).string();
  return cfg;
}

// metrics.csv minus the wall_time column (the only nondeterministic field).
std::string metrics_without_wall_time(const fs::path& path) {
  std::ifstream in(path);
  EXPECT_TRUE(in.good()) << path;
  std::string line, out;
  while (std::getline(in, line)) {
    const auto cut = line.rfind(',');
    out += line.substr(0, cut);
    out += '\n';
  }
  return out;
}

}  // namespace

TEST(RunTrial, ProducesRowsAndFiles) {
  TrialConfig cfg = small_trial("basic");
  const TrialResult result = run_trial(cfg);

  ASSERT_EQ(result.rows.size(), 6u);
  for (std::size_t e = 0; e < result.rows.size(); ++e) {
    const MetricsRow& r = result.rows[e];
    EXPECT_EQ(r.epoch, e);
    EXPECT_GE(r.train_loss, 0.0);
    EXPECT_GE(r.test_loss, 0.0);
    EXPECT_GE(r.test_error_top1, 0.0);
    EXPECT_LE(r.test_error_top1, 1.0);
    EXPECT_GE(r.test_error_topk, 0.0);
    EXPECT_LE(r.test_error_topk, 1.0);
    EXPECT_GT(r.lr, 0.0);
    EXPECT_DOUBLE_EQ(r.p, 0.125);
  }
  EXPECT_TRUE(fs::exists(result.run_dir / "config.json"));
  EXPECT_TRUE(fs::exists(result.run_dir / "metrics.csv"));

  // csv round-trips to the exact same rows
  const auto reread = read_metrics_csv(result.run_dir / "metrics.csv");
  ASSERT_EQ(reread.size(), result.rows.size());
  for (std::size_t i = 0; i < reread.size(); ++i) {
    EXPECT_EQ(reread[i].epoch, result.rows[i].epoch);
    EXPECT_EQ(reread[i].train_loss, result.rows[i].train_loss);
    EXPECT_EQ(reread[i].test_error_top1, result.rows[i].test_error_top1);
    EXPECT_EQ(reread[i].lr, result.rows[i].lr);
  }

  // config.json carries the resolved defaults
  std::ifstream cj(result.run_dir / "config.json");
  json j;
  cj >> j;
  EXPECT_EQ(j.at("optimizer"), "padam");
  EXPECT_DOUBLE_EQ(j.at("hyperparams").at("alpha0").get<double>(), 0.1);
  EXPECT_DOUBLE_EQ(j.at("lr_schedule").at("base").get<double>(), 0.1);
  EXPECT_EQ(j.at("model").at("input_dim"), 2);
  EXPECT_EQ(j.at("model").at("num_classes"), 2);
}

TEST(RunTrial, SingleEpochGivesSingleRow) {
  TrialConfig cfg = small_trial("one_epoch");
  cfg.epochs = 1;
  EXPECT_EQ(run_trial(cfg).rows.size(), 1u);
}

TEST(RunTrial, DeterministicRerunByteIdenticalExceptWallTime) {
  TrialConfig cfg = small_trial("det_a");
  const TrialResult a = run_trial(cfg);
  cfg.outdir = (test_root() / "det_b").string();
  const TrialResult b = run_trial(cfg);

  ASSERT_EQ(a.rows.size(), b.rows.size());
  for (std::size_t i = 0; i < a.rows.size(); ++i) {
    EXPECT_EQ(a.rows[i].train_loss, b.rows[i].train_loss);
    EXPECT_EQ(a.rows[i].test_loss, b.rows[i].test_loss);
    EXPECT_EQ(a.rows[i].test_error_top1, b.rows[i].test_error_top1);
  }
  EXPECT_EQ(metrics_without_wall_time(a.run_dir / "metrics.csv"),
            metrics_without_wall_time(b.run_dir / "metrics.csv"));
}

TEST(RunTrial, ScheduleResolutionScalesQuarters) {
  TrialConfig cfg = small_trial("quarters");
  cfg.epochs = 60;
  const PreparedTrial prep = prepare_trial(cfg);
  EXPECT_EQ(prep.resolved.lr.milestones, (std::vector<std::size_t>{15, 30, 45}));
  EXPECT_EQ(prep.resolved.checkpoints, (std::vector<std::size_t>{15, 30, 45, 60}));

  cfg.epochs = 30;
  const PreparedTrial prep30 = prepare_trial(cfg);
  EXPECT_EQ(prep30.resolved.lr.milestones, (std::vector<std::size_t>{8, 15, 23}));
}

TEST(RunTrial, PScheduleDrivesLoggedP) {
  TrialConfig cfg = small_trial("psched");
  cfg.epochs = 4;
  cfg.p_schedule.mode = "linear";
  cfg.p_schedule.p_start = 0.5;
  cfg.p_schedule.p_end = 0.0;
  cfg.p_schedule.total_epochs = 4;
  const TrialResult result = run_trial(cfg);
  ASSERT_EQ(result.rows.size(), 4u);
  EXPECT_DOUBLE_EQ(result.rows[0].p, 0.5);
  EXPECT_DOUBLE_EQ(result.rows[1].p, 0.375);
  EXPECT_DOUBLE_EQ(result.rows[2].p, 0.25);
  EXPECT_DOUBLE_EQ(result.rows[3].p, 0.125);
  double prev = result.rows[0].p;
  for (const MetricsRow& r : result.rows) {
    EXPECT_LE(r.p, prev);
    prev = r.p;
  }
}

TEST(RunTrial, DivergesOnInsaneLearningRate) {
  TrialConfig cfg = small_trial("diverge");
  cfg.optimizer = "adam";
  cfg.dataset.kind = "blobs";
  cfg.model.kind = "logreg";
  cfg.epochs = 5;
  cfg.lr.base = 1e6;
  try {
    run_trial(cfg);
    FAIL() << "expected DivergedError";
  } catch (const DivergedError& e) {
    EXPECT_LT(e.epoch, 5u);
    // rows persisted before the divergence survive
    const auto rows =
        read_metrics_csv(fs::path(cfg.outdir) / "adam-blobs-seed42" / "metrics.csv");
    EXPECT_EQ(rows.size(), e.epoch);
  }
}

TEST(RunTrial, ConfigValidationErrors) {
  EXPECT_THROW(
      {
        TrialConfig cfg = small_trial("bad1");
        cfg.optimizer = "adamw";
        prepare_trial(cfg);
      },
      ConfigError);
  EXPECT_THROW(
      {
        TrialConfig cfg = small_trial("bad2");
        cfg.epochs = 0;
        prepare_trial(cfg);
      },
      ConfigError);
  EXPECT_THROW(
      {
        TrialConfig cfg = small_trial("bad3");
        cfg.test_fraction = 1.5;
        prepare_trial(cfg);
      },
      ConfigError);
  EXPECT_THROW(
      {
        TrialConfig cfg = small_trial("bad4");
        cfg.hp.p = 0.9;
        prepare_trial(cfg);
      },
      ConfigError);
  EXPECT_THROW(
      {
        TrialConfig cfg = small_trial("bad5");
        cfg.dataset.kind = "mnist";
        prepare_trial(cfg);
      },
      ConfigError);
  EXPECT_THROW(
      {
        TrialConfig cfg = small_trial("bad6");
        cfg.eval_topk = 3;  // two-class task
        prepare_trial(cfg);
      },
      ConfigError);
  EXPECT_THROW(
      {
        TrialConfig cfg = small_trial("bad7");
        cfg.model.kind = "resnet";
        prepare_trial(cfg);
      },
      ConfigError);
}

TEST(GridSearchP, DefaultGridHasThreeCells) {
  TrialConfig cfg = small_trial("grid_default");
  cfg.epochs = 3;
  const SweepResult sweep = grid_search_p(cfg);
  ASSERT_EQ(sweep.cells.size(), 3u);
  EXPECT_EQ(sweep.cells[0].coords.at("p"), "0.25");
  EXPECT_EQ(sweep.cells[1].coords.at("p"), "0.125");
  EXPECT_EQ(sweep.cells[2].coords.at("p"), "0.0625");
  for (const SweepCell& cell : sweep.cells) {
    EXPECT_EQ(cell.status, "ok");
    ASSERT_TRUE(cell.final_row.has_value());
    EXPECT_TRUE(fs::exists(fs::path(sweep.outdir) / cell.metrics_file));
  }
  EXPECT_TRUE(fs::exists(fs::path(sweep.outdir) / "summary.json"));

  const SweepResult loaded = load_sweep_summary(fs::path(sweep.outdir) / "summary.json");
  EXPECT_EQ(loaded.kind, "grid-p");
  ASSERT_EQ(loaded.cells.size(), 3u);
  EXPECT_EQ(loaded.cells[2].coords.at("p"), "0.0625");
}

TEST(GridSearchP, ValidatesInputs) {
  TrialConfig cfg = small_trial("grid_bad");
  EXPECT_THROW(grid_search_p(cfg, {0.7}), ConfigError);
  EXPECT_THROW(grid_search_p(cfg, {}), ConfigError);
  cfg.optimizer = "sgd";
  EXPECT_THROW(grid_search_p(cfg, {0.25}), ConfigError);
}

TEST(GridSearchP, HalfPointCellMatchesAmsgradEndToEnd) {
  // equal hyperparameters on both sides
  TrialConfig base = small_trial("grid_half");
  base.epochs = 4;
  base.lr.base = 0.01;
  base.hp.beta1 = 0.9;
  base.hp.beta2 = 0.99;
  base.hp.epsilon = 1e-8;
  base.hp.weight_decay = 1e-4;

  const SweepResult sweep = grid_search_p(base, {0.5});
  ASSERT_EQ(sweep.cells.size(), 1u);

  TrialConfig ams = base;
  ams.optimizer = "amsgrad";
  ams.outdir = (test_root() / "grid_half_ams").string();
  const TrialResult ams_run = run_trial(ams);

  EXPECT_EQ(
      metrics_without_wall_time(fs::path(sweep.outdir) / sweep.cells[0].metrics_file),
      metrics_without_wall_time(ams_run.run_dir / "metrics.csv"));
}

TEST(LrSensitivity, CartesianGridAndDegenerateCase) {
  TrialConfig cfg = small_trial("sens");
  cfg.epochs = 2;
  const SweepResult sweep = lr_sensitivity_sweep(cfg, {0.25, 0.125}, {0.1, 0.01});
  ASSERT_EQ(sweep.cells.size(), 4u);
  for (const SweepCell& cell : sweep.cells) {
    EXPECT_TRUE(cell.coords.count("p"));
    EXPECT_TRUE(cell.coords.count("lr"));
    EXPECT_TRUE(fs::exists(fs::path(sweep.outdir) / cell.metrics_file));
    // the sweep emits comparison series on its own
    EXPECT_TRUE(
        fs::exists(fs::path(sweep.outdir) / "series_train_loss" / (cell.run_id + ".dat")));
    EXPECT_TRUE(fs::exists(fs::path(sweep.outdir) / "series_test_error_top1" /
                           (cell.run_id + ".dat")));
  }

  // a 1x1 grid reproduces a plain run_trial with the same settings
  TrialConfig one = small_trial("sens_one");
  one.epochs = 2;
  const SweepResult single = lr_sensitivity_sweep(one, {0.125}, {0.01});
  ASSERT_EQ(single.cells.size(), 1u);

  TrialConfig direct = small_trial("sens_direct");
  direct.epochs = 2;
  direct.hp.p = 0.125;
  direct.lr.base = 0.01;
  const TrialResult direct_run = run_trial(direct);
  EXPECT_EQ(
      metrics_without_wall_time(fs::path(single.outdir) / single.cells[0].metrics_file),
      metrics_without_wall_time(direct_run.run_dir / "metrics.csv"));
}

TEST(Sweeps, CellFilesIndependentOfRunOrder) {
  TrialConfig a = small_trial("order_a");
  a.epochs = 3;
  TrialConfig b = a;
  b.outdir = (test_root() / "order_b").string();
  const SweepResult fwd = grid_search_p(a, {0.25, 0.125});
  const SweepResult rev = grid_search_p(b, {0.125, 0.25});
  EXPECT_EQ(metrics_without_wall_time(fs::path(fwd.outdir) / "p0.125" / "metrics.csv"),
            metrics_without_wall_time(fs::path(rev.outdir) / "p0.125" / "metrics.csv"));
  EXPECT_EQ(metrics_without_wall_time(fs::path(fwd.outdir) / "p0.25" / "metrics.csv"),
            metrics_without_wall_time(fs::path(rev.outdir) / "p0.25" / "metrics.csv"));
}

TEST(CompareOptimizers, FourRowsWithCheckpointColumns) {
  TrialConfig cfg = small_trial("compare");
  cfg.epochs = 8;
  cfg.checkpoints = {2, 4, 6, 8};
  const SweepResult sweep = compare_optimizers(cfg);
  ASSERT_EQ(sweep.cells.size(), 4u);
  EXPECT_EQ(sweep.cells[0].coords.at("optimizer"), "padam");
  EXPECT_EQ(sweep.cells[3].coords.at("optimizer"), "sgd");
  for (const SweepCell& cell : sweep.cells) {
    ASSERT_EQ(cell.checkpoint_accuracy.size(), 4u);
    EXPECT_EQ(cell.checkpoint_accuracy[0].first, 2u);
    EXPECT_EQ(cell.checkpoint_accuracy[3].first, 8u);
    for (const auto& [epoch, acc] : cell.checkpoint_accuracy) {
      EXPECT_GE(acc, 0.0);
      EXPECT_LE(acc, 1.0);
    }
  }
  EXPECT_THROW(compare_optimizers(cfg, {}), ConfigError);
  EXPECT_THROW(compare_optimizers(cfg, {"adamw"}), ConfigError);
}

TEST(CompareOptimizers, PadamAtHalfEqualsAmsgradUnderEqualHyperParams) {
  TrialConfig base = small_trial("cmp_half_padam");
  base.epochs = 4;
  base.lr.base = 0.01;
  base.hp.p = 0.5;
  base.hp.beta1 = 0.9;
  base.hp.beta2 = 0.99;
  base.hp.epsilon = 1e-8;
  base.hp.weight_decay = 1e-4;
  const SweepResult pad = compare_optimizers(base, {"padam"});

  base.outdir = (test_root() / "cmp_half_ams").string();
  const SweepResult ams = compare_optimizers(base, {"amsgrad"});

  EXPECT_EQ(metrics_without_wall_time(fs::path(pad.outdir) / pad.cells[0].metrics_file),
            metrics_without_wall_time(fs::path(ams.outdir) / ams.cells[0].metrics_file));
}

TEST(Sweeps, DivergedCellIsFlaggedAndSweepContinues) {
  TrialConfig cfg = small_trial("sweep_diverge");
  cfg.optimizer = "padam";
  cfg.dataset.kind = "blobs";
  cfg.model.kind = "logreg";
  cfg.epochs = 3;
  // lr grid with one insane cell
  const SweepResult sweep = lr_sensitivity_sweep(cfg, {0.125}, {1e7, 0.01});
  ASSERT_EQ(sweep.cells.size(), 2u);
  EXPECT_EQ(sweep.cells[0].status, "diverged");
  EXPECT_FALSE(sweep.cells[0].final_row.has_value());
  EXPECT_EQ(sweep.cells[1].status, "ok");
  ASSERT_TRUE(sweep.cells[1].final_row.has_value());
}

TEST(PlotSeries, EmitsSeriesFilesAndIndex) {
  TrialConfig cfg = small_trial("plots");
  cfg.epochs = 3;
  const SweepResult sweep = grid_search_p(cfg);
  const PlotSeries series = emit_plot_series(sweep, "train_loss");
  ASSERT_EQ(series.files.size(), 3u);
  for (const fs::path& f : series.files) {
    std::ifstream in(f);
    std::string line;
    std::size_t lines = 0;
    double prev_value = -1.0;
    while (std::getline(in, line)) {
      std::stringstream ss(line);
      std::size_t epoch;
      double value;
      ss >> epoch >> value;
      EXPECT_EQ(epoch, lines);
      ++lines;
      prev_value = value;
    }
    EXPECT_EQ(lines, 3u);  // series length equals the epoch budget
    EXPECT_GE(prev_value, 0.0);
  }
  std::ifstream idx(series.index_file);
  json j;
  idx >> j;
  EXPECT_EQ(j.at("metric"), "train_loss");
  ASSERT_EQ(j.at("series").size(), 3u);
  EXPECT_EQ(j.at("series")[0].at("rows"), 3);

  try {
    emit_plot_series(sweep, "banana");
    FAIL() << "expected InvalidArgumentError";
  } catch (const InvalidArgumentError& e) {
    EXPECT_NE(std::string(e.what()).find("train_loss"), std::string::npos);
    EXPECT_NE(std::string(e.what()).find("test_error_top1"), std::string::npos);
  }
}

TEST(PlotSeries, DivergedCellTruncatedAndFlagged) {
  TrialConfig cfg = small_trial("plots_diverged");
  cfg.optimizer = "padam";
  cfg.dataset.kind = "blobs";
  cfg.model.kind = "logreg";
  cfg.epochs = 3;
  const SweepResult sweep = lr_sensitivity_sweep(cfg, {0.125}, {1e7});
  ASSERT_EQ(sweep.cells.size(), 1u);
  ASSERT_EQ(sweep.cells[0].status, "diverged");

  const PlotSeries series = emit_plot_series(sweep, "test_error_top1");
  std::ifstream in(series.files[0]);
  std::string line;
  std::size_t lines = 0;
  while (std::getline(in, line)) ++lines;
  EXPECT_LT(lines, 3u);

  std::ifstream idx(series.index_file);
  json j;
  idx >> j;
  EXPECT_EQ(j.at("series")[0].at("status"), "diverged");
  EXPECT_TRUE(j.at("series")[0].contains("diverged_epoch"));
}

TEST(ConfigJson, RoundTripPreservesResolution) {
  TrialConfig cfg = small_trial("roundtrip");
  cfg.hp.p = 0.25;
  cfg.lr.base = 0.05;
  cfg.p_schedule.mode = "linear";
  cfg.p_schedule.p_start = 0.5;
  cfg.p_schedule.p_end = 0.1;
  cfg.epochs = 5;

  const json j = trial_config_to_json(cfg);
  const TrialConfig back = trial_config_from_json(j);
  const json resolved_a = resolved_trial_to_json(prepare_trial(cfg).resolved);
  const json resolved_b = resolved_trial_to_json(prepare_trial(back).resolved);
  EXPECT_EQ(resolved_a, resolved_b);
}

TEST(ConfigJson, ResolvedConfigFeedsBackIdentically) {
  TrialConfig cfg = small_trial("feedback");
  cfg.epochs = 3;
  const TrialResult result = run_trial(cfg);

  std::ifstream cj(result.run_dir / "config.json");
  json j;
  cj >> j;
  TrialConfig back = trial_config_from_json(j);
  back.outdir = (test_root() / "feedback_rerun").string();
  const TrialResult again = run_trial(back);
  EXPECT_EQ(metrics_without_wall_time(result.run_dir / "metrics.csv"),
            metrics_without_wall_time(again.run_dir / "metrics.csv"));
}

TEST(ConfigJson, LoadErrors) {
  EXPECT_THROW(load_trial_config("/nonexistent/config.json"), IoError);
  const fs::path bad = test_root() / "bad.json";
  std::ofstream(bad) << "{not json";
  EXPECT_THROW(load_trial_config(bad.string()), ParseError);
}

TEST(Smoke, ZeroSeparationBlobsHoverAtChance) {
  // Information-free task: mean test accuracy over 5 seeds stays near 1/2.
  double acc_sum = 0.0;
  for (std::uint64_t seed = 1; seed <= 5; ++seed) {
    TrialConfig cfg = small_trial("chance_seed" + std::to_string(seed));
    cfg.optimizer = "padam";
    cfg.dataset.kind = "blobs";
    cfg.dataset.separation = 0.0;
    cfg.dataset.per_class = 200;
    cfg.model.kind = "logreg";
    cfg.epochs = 10;
    cfg.seed = seed;
    const TrialResult result = run_trial(cfg);
    acc_sum += 1.0 - result.rows.back().test_error_top1;
  }
  const double mean_acc = acc_sum / 5.0;
  EXPECT_GE(mean_acc, 0.4);
  EXPECT_LE(mean_acc, 0.6);
}
