#pragma once

#include <charconv>
#include <chrono>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

#include <json.hpp>

#include "padam/data.hpp"
#include "padam/model.hpp"
#include "padam/optim.hpp"
#include "padam/schedule.hpp"
#include "padam/tensor.hpp"

// Experiment harness: single training trials plus the sweep protocols
// (p grid search, learning-rate sensitivity, optimizer comparison), logging
// per-epoch metrics to durable files.
//
// On-disk layout per trial: <outdir>/<run_id>/config.json holds the fully
// resolved configuration, <outdir>/<run_id>/metrics.csv grows by one row per
// epoch (flushed immediately, so a crash loses at most the current epoch).
// Sweeps add <outdir>/summary.json with one entry per cell.
//
// metrics.csv columns:
//   epoch,train_loss,test_loss,test_error_top1,test_error_topk,lr,p,wall_time_seconds
// Doubles are written in shortest round-trip form; a rerun of the same
// configuration reproduces the file byte for byte except the wall_time column.

namespace padam {

namespace fs = std::filesystem;
using json = nlohmann::json;

inline std::string fmt_double(double v) {
  char buf[40];
  const auto res = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, res.ptr);
}

// ---------------------------------------------------------------------------
// Configuration

struct DatasetConfig {
  std::string kind = "two_moons";  // two_moons | blobs | file
  // two_moons
  std::size_t n = 1000;
  double noise = 0.1;
  // blobs
  std::size_t num_classes = 2;
  std::size_t per_class = 256;
  std::size_t dim = 2;
  double separation = 10.0;
  // file
  std::string path;
  std::string delimiter = ",";
  int label_column = -1;
  bool skip_header = false;
};

struct ModelConfig {
  std::string kind = "mlp";  // mlp | logreg
  std::size_t hidden_dim = 16;
  std::optional<double> init_scale;  // unset -> 0 for logreg, 1.0 for mlp
};

struct LrScheduleConfig {
  std::optional<double> base;  // unset -> optimizer preset alpha0
  double factor = 0.1;
  std::vector<std::size_t> milestones;  // empty -> quarters of the epoch budget
};

struct PScheduleConfig {
  std::string mode = "constant";  // constant | step | linear
  std::optional<double> p_start;  // unset -> effective hyperparameter p
  double p_end = 0.0;
  double factor = 0.1;
  std::vector<std::size_t> milestones;       // step mode; empty -> lr milestones
  std::optional<std::size_t> total_epochs;   // linear mode; unset -> epoch budget
};

// One experiment, fully describing a run together with the master seed.
// Sub-seeds (data, split, init, shuffle) derive deterministically from `seed`.
struct TrialConfig {
  std::string optimizer = "padam";
  HyperParamOverrides hp;
  LrScheduleConfig lr;
  PScheduleConfig p_schedule;
  ModelConfig model;
  DatasetConfig dataset;
  double test_fraction = 0.2;
  bool standardize_features = true;
  std::size_t epochs = 60;
  std::size_t batch_size = 64;
  bool drop_last = false;
  std::uint64_t seed = 42;
  std::size_t eval_topk = 0;             // 0 -> min(5, num_classes)
  std::vector<std::size_t> checkpoints;  // empty -> quarters incl. final epoch
  std::string outdir = "runs";
  std::string run_id;  // empty -> "<optimizer>-<dataset>-seed<seed>"
};

struct MetricsRow {
  std::size_t epoch = 0;
  double train_loss = 0.0;
  double test_loss = 0.0;
  double test_error_top1 = 0.0;
  double test_error_topk = 0.0;
  double lr = 0.0;
  double p = 0.0;
  double wall_time_seconds = 0.0;
};

// Everything concrete; what config.json records.
struct ResolvedTrial {
  Optimizer optimizer;
  StepDecaySchedule lr;
  PSchedule p_schedule;
  ModelSpec model;
  DatasetConfig dataset;
  std::uint64_t data_seed = 0;
  std::uint64_t split_seed = 0;
  double test_fraction = 0.2;
  bool standardize_features = true;
  std::size_t epochs = 1;
  BatchPlan batch;
  std::uint64_t seed = 0;
  std::size_t eval_topk = 1;
  std::vector<std::size_t> checkpoints;
  std::string outdir;
  std::string run_id;
};

namespace detail {

inline std::vector<std::size_t> scaled_quarters(std::size_t epochs, bool include_end) {
  std::vector<std::size_t> out;
  const int parts = include_end ? 4 : 3;
  for (int i = 1; i <= parts; ++i) {
    const auto m = static_cast<std::size_t>(
        std::llround(static_cast<double>(epochs) * i / 4.0));
    if (m >= 1 && (out.empty() || m > out.back())) out.push_back(m);
  }
  return out;
}

}  // namespace detail

// ---------------------------------------------------------------------------
// JSON encoding of configs

inline json dataset_config_to_json(const DatasetConfig& d) {
  json j{{"kind", d.kind}};
  if (d.kind == "two_moons") {
    j["n"] = d.n;
    j["noise"] = d.noise;
  } else if (d.kind == "blobs") {
    j["num_classes"] = d.num_classes;
    j["per_class"] = d.per_class;
    j["dim"] = d.dim;
    j["separation"] = d.separation;
  } else if (d.kind == "file") {
    j["path"] = d.path;
    j["delimiter"] = d.delimiter;
    j["label_column"] = d.label_column;
    j["skip_header"] = d.skip_header;
  }
  return j;
}

inline DatasetConfig dataset_config_from_json(const json& j) {
  DatasetConfig d;
  d.kind = j.value("kind", d.kind);
  d.n = j.value("n", d.n);
  d.noise = j.value("noise", d.noise);
  d.num_classes = j.value("num_classes", d.num_classes);
  d.per_class = j.value("per_class", d.per_class);
  d.dim = j.value("dim", d.dim);
  d.separation = j.value("separation", d.separation);
  d.path = j.value("path", d.path);
  d.delimiter = j.value("delimiter", d.delimiter);
  d.label_column = j.value("label_column", d.label_column);
  d.skip_header = j.value("skip_header", d.skip_header);
  return d;
}

inline json trial_config_to_json(const TrialConfig& c) {
  json hp = json::object();
  auto put = [&](const char* key, const std::optional<double>& v) {
    if (v) hp[key] = *v;
  };
  put("alpha0", c.hp.alpha0);
  put("beta1", c.hp.beta1);
  put("beta2", c.hp.beta2);
  put("p", c.hp.p);
  put("epsilon", c.hp.epsilon);
  put("weight_decay", c.hp.weight_decay);
  put("momentum", c.hp.momentum);

  json lr{{"factor", c.lr.factor}, {"milestones", c.lr.milestones}};
  if (c.lr.base) lr["base"] = *c.lr.base;

  json ps{{"mode", c.p_schedule.mode},
          {"p_end", c.p_schedule.p_end},
          {"factor", c.p_schedule.factor},
          {"milestones", c.p_schedule.milestones}};
  if (c.p_schedule.p_start) ps["p_start"] = *c.p_schedule.p_start;
  if (c.p_schedule.total_epochs) ps["total_epochs"] = *c.p_schedule.total_epochs;

  return json{{"optimizer", c.optimizer},
              {"hyperparams", hp},
              {"lr_schedule", lr},
              {"p_schedule", ps},
              {"model", [&] {
                 json m{{"kind", c.model.kind}, {"hidden_dim", c.model.hidden_dim}};
                 if (c.model.init_scale) m["init_scale"] = *c.model.init_scale;
                 return m;
               }()},
              {"dataset", dataset_config_to_json(c.dataset)},
              {"test_fraction", c.test_fraction},
              {"standardize", c.standardize_features},
              {"epochs", c.epochs},
              {"batch", {{"batch_size", c.batch_size}, {"drop_last", c.drop_last}}},
              {"seed", c.seed},
              {"eval_topk", c.eval_topk},
              {"checkpoints", c.checkpoints},
              {"outdir", c.outdir},
              {"run_id", c.run_id}};
}

inline TrialConfig trial_config_from_json(const json& j) {
  TrialConfig c;
  c.optimizer = j.value("optimizer", c.optimizer);
  if (j.contains("hyperparams")) {
    const json& hp = j.at("hyperparams");
    auto get = [&](const char* key) -> std::optional<double> {
      if (hp.contains(key)) return hp.at(key).get<double>();
      return std::nullopt;
    };
    c.hp.alpha0 = get("alpha0");
    c.hp.beta1 = get("beta1");
    c.hp.beta2 = get("beta2");
    c.hp.p = get("p");
    c.hp.epsilon = get("epsilon");
    c.hp.weight_decay = get("weight_decay");
    c.hp.momentum = get("momentum");
  }
  if (j.contains("lr_schedule")) {
    const json& lr = j.at("lr_schedule");
    if (lr.contains("base")) c.lr.base = lr.at("base").get<double>();
    c.lr.factor = lr.value("factor", c.lr.factor);
    c.lr.milestones = lr.value("milestones", c.lr.milestones);
  }
  if (j.contains("p_schedule")) {
    const json& ps = j.at("p_schedule");
    c.p_schedule.mode = ps.value("mode", c.p_schedule.mode);
    if (ps.contains("p_start")) c.p_schedule.p_start = ps.at("p_start").get<double>();
    c.p_schedule.p_end = ps.value("p_end", c.p_schedule.p_end);
    c.p_schedule.factor = ps.value("factor", c.p_schedule.factor);
    c.p_schedule.milestones = ps.value("milestones", c.p_schedule.milestones);
    if (ps.contains("total_epochs"))
      c.p_schedule.total_epochs = ps.at("total_epochs").get<std::size_t>();
  }
  if (j.contains("model")) {
    const json& m = j.at("model");
    c.model.kind = m.value("kind", c.model.kind);
    c.model.hidden_dim = m.value("hidden_dim", c.model.hidden_dim);
    if (m.contains("init_scale")) c.model.init_scale = m.at("init_scale").get<double>();
  }
  if (j.contains("dataset")) c.dataset = dataset_config_from_json(j.at("dataset"));
  c.test_fraction = j.value("test_fraction", c.test_fraction);
  c.standardize_features = j.value("standardize", c.standardize_features);
  c.epochs = j.value("epochs", c.epochs);
  if (j.contains("batch")) {
    const json& b = j.at("batch");
    c.batch_size = b.value("batch_size", c.batch_size);
    c.drop_last = b.value("drop_last", c.drop_last);
  }
  c.seed = j.value("seed", c.seed);
  c.eval_topk = j.value("eval_topk", c.eval_topk);
  c.checkpoints = j.value("checkpoints", c.checkpoints);
  c.outdir = j.value("outdir", c.outdir);
  c.run_id = j.value("run_id", c.run_id);
  return c;
}

inline TrialConfig load_trial_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open config \"" + path + "\"");
  json j;
  try {
    in >> j;
  } catch (const json::exception& e) {
    throw ParseError("config \"" + path + "\": " + e.what());
  }
  return trial_config_from_json(j);
}

inline json resolved_trial_to_json(const ResolvedTrial& r) {
  const HyperParams& hp = r.optimizer.hp;
  return json{
      {"optimizer", r.optimizer.name()},
      {"hyperparams",
       {{"alpha0", hp.alpha0},
        {"beta1", hp.beta1},
        {"beta2", hp.beta2},
        {"p", hp.p},
        {"epsilon", hp.epsilon},
        {"weight_decay", hp.weight_decay},
        {"momentum", hp.momentum}}},
      {"lr_schedule",
       {{"base", r.lr.base}, {"factor", r.lr.factor}, {"milestones", r.lr.milestones}}},
      {"p_schedule",
       {{"mode", p_mode_name(r.p_schedule.mode)},
        {"p_start", r.p_schedule.p_start},
        {"p_end", r.p_schedule.p_end},
        {"factor", r.p_schedule.factor},
        {"milestones", r.p_schedule.milestones},
        {"total_epochs", r.p_schedule.total_epochs}}},
      {"model",
       {{"kind", model_kind_name(r.model.kind)},
        {"input_dim", r.model.input_dim},
        {"hidden_dim", r.model.hidden_dim},
        {"num_classes", r.model.num_classes},
        {"init_seed", r.model.init_seed},
        {"init_scale", r.model.init_scale}}},
      {"dataset", dataset_config_to_json(r.dataset)},
      {"data_seed", r.data_seed},
      {"split_seed", r.split_seed},
      {"test_fraction", r.test_fraction},
      {"standardize", r.standardize_features},
      {"epochs", r.epochs},
      {"batch",
       {{"batch_size", r.batch.batch_size},
        {"shuffle_seed", r.batch.shuffle_seed},
        {"drop_last", r.batch.drop_last}}},
      {"seed", r.seed},
      {"eval_topk", r.eval_topk},
      {"checkpoints", r.checkpoints},
      {"outdir", r.outdir},
      {"run_id", r.run_id}};
}

// ---------------------------------------------------------------------------
// Resolution

struct PreparedTrial {
  ResolvedTrial resolved;
  Dataset train;
  Dataset test;
};

namespace detail {

inline Dataset build_dataset(const DatasetConfig& d, std::uint64_t data_seed) {
  if (d.kind == "two_moons") return make_two_moons(d.n, d.noise, data_seed);
  if (d.kind == "blobs")
    return make_blobs(d.num_classes, d.per_class, d.dim, d.separation, data_seed);
  if (d.kind == "file") {
    if (d.delimiter.size() != 1)
      throw ConfigError("dataset: delimiter must be a single character");
    return load_delimited(d.path, d.delimiter[0], d.label_column, d.skip_header);
  }
  throw ConfigError("unknown dataset kind \"" + d.kind +
                    "\": valid kinds are two_moons, blobs, file");
}

}  // namespace detail

// Validates the configuration, builds the (standardized) splits and resolves
// every default. Throws ConfigError before touching any heavy compute.
inline PreparedTrial prepare_trial(const TrialConfig& cfg) {
  ResolvedTrial rt;
  try {
    rt.optimizer = make_optimizer(cfg.optimizer, cfg.hp);
  } catch (const InvalidArgumentError& e) {
    throw ConfigError(e.what());
  }
  if (cfg.epochs < 1) throw ConfigError("epochs must be >= 1");
  if (cfg.batch_size < 1) throw ConfigError("batch_size must be >= 1");
  if (!(cfg.test_fraction > 0.0 && cfg.test_fraction < 1.0))
    throw ConfigError("test_fraction must be in (0, 1)");

  rt.epochs = cfg.epochs;
  rt.seed = cfg.seed;
  rt.data_seed = mix_seed(cfg.seed, 1);
  rt.split_seed = mix_seed(cfg.seed, 2);
  rt.test_fraction = cfg.test_fraction;
  rt.standardize_features = cfg.standardize_features;
  rt.dataset = cfg.dataset;
  rt.outdir = cfg.outdir;

  // lr schedule
  rt.lr.base = cfg.lr.base.value_or(rt.optimizer.hp.alpha0);
  rt.lr.factor = cfg.lr.factor;
  rt.lr.milestones =
      cfg.lr.milestones.empty() ? detail::scaled_quarters(cfg.epochs, false) : cfg.lr.milestones;
  validate_schedule(rt.lr);

  // p schedule
  rt.p_schedule.mode = p_mode_from_name(cfg.p_schedule.mode);
  rt.p_schedule.p_start = cfg.p_schedule.p_start.value_or(rt.optimizer.hp.p);
  rt.p_schedule.p_end = rt.p_schedule.mode == PMode::Constant ? rt.p_schedule.p_start
                                                              : cfg.p_schedule.p_end;
  rt.p_schedule.factor = cfg.p_schedule.factor;
  rt.p_schedule.milestones =
      cfg.p_schedule.milestones.empty() && rt.p_schedule.mode == PMode::StepDecay
          ? rt.lr.milestones
          : cfg.p_schedule.milestones;
  rt.p_schedule.total_epochs = cfg.p_schedule.total_epochs.value_or(cfg.epochs);
  validate_pschedule(rt.p_schedule);

  // data
  Dataset all;
  try {
    all = detail::build_dataset(cfg.dataset, rt.data_seed);
    auto parts = split(all, cfg.test_fraction, rt.split_seed);
    if (cfg.standardize_features) parts = standardize(parts.first, parts.second);
    if (cfg.drop_last && cfg.batch_size > parts.first.size())
      throw ConfigError("batch_size exceeds the train split with drop_last");
    if (all.num_classes < 2)
      throw ConfigError("dataset has " + std::to_string(all.num_classes) +
                        " class(es); need at least 2");

    // model
    rt.model.kind = model_kind_from_name(cfg.model.kind);
    rt.model.input_dim = parts.first.dim();
    rt.model.hidden_dim = cfg.model.hidden_dim;
    rt.model.num_classes = all.num_classes;
    rt.model.init_seed = mix_seed(cfg.seed, 3);
    rt.model.init_scale =
        cfg.model.init_scale.value_or(rt.model.kind == ModelKind::LogReg ? 0.0 : 1.0);
    validate_model_spec(rt.model);

    rt.batch = BatchPlan{cfg.batch_size, mix_seed(cfg.seed, 4), cfg.drop_last};

    rt.eval_topk = cfg.eval_topk != 0 ? cfg.eval_topk
                                      : std::min<std::size_t>(5, rt.model.num_classes);
    if (rt.eval_topk < 1 || rt.eval_topk > rt.model.num_classes)
      throw ConfigError("eval_topk " + std::to_string(rt.eval_topk) + " out of range [1, " +
                        std::to_string(rt.model.num_classes) + "]");

    rt.checkpoints =
        cfg.checkpoints.empty() ? detail::scaled_quarters(cfg.epochs, true) : cfg.checkpoints;
    for (std::size_t c : rt.checkpoints)
      if (c < 1 || c > cfg.epochs)
        throw ConfigError("checkpoint epoch " + std::to_string(c) + " out of range [1, " +
                          std::to_string(cfg.epochs) + "]");

    rt.run_id = cfg.run_id.empty()
                    ? rt.optimizer.name() + "-" + cfg.dataset.kind + "-seed" +
                          std::to_string(cfg.seed)
                    : cfg.run_id;

    PreparedTrial prep;
    prep.resolved = std::move(rt);
    prep.train = std::move(parts.first);
    prep.test = std::move(parts.second);
    return prep;
  } catch (const InvalidArgumentError& e) {
    throw ConfigError(e.what());
  }
}

// ---------------------------------------------------------------------------
// Metrics persistence

inline constexpr const char* kMetricsHeader =
    "epoch,train_loss,test_loss,test_error_top1,test_error_topk,lr,p,wall_time_seconds";

inline void append_metrics_row(std::ostream& out, const MetricsRow& r) {
  out << r.epoch << ',' << fmt_double(r.train_loss) << ',' << fmt_double(r.test_loss) << ','
      << fmt_double(r.test_error_top1) << ',' << fmt_double(r.test_error_topk) << ','
      << fmt_double(r.lr) << ',' << fmt_double(r.p) << ',' << fmt_double(r.wall_time_seconds)
      << '\n';
  out.flush();
}

inline std::vector<MetricsRow> read_metrics_csv(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open metrics file \"" + path.string() + "\"");
  std::string line;
  if (!std::getline(in, line)) throw ParseError(path.string() + ": empty metrics file");
  if (line != kMetricsHeader)
    throw ParseError(path.string() + ": unexpected header \"" + line + "\"");
  std::vector<MetricsRow> rows;
  std::size_t line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    std::vector<double> vals;
    std::stringstream ss(line);
    std::string field;
    while (std::getline(ss, field, ',')) vals.push_back(std::stod(field));
    if (vals.size() != 8)
      throw ParseError(path.string() + ":" + std::to_string(line_no) + ": expected 8 fields");
    MetricsRow r;
    r.epoch = static_cast<std::size_t>(vals[0]);
    r.train_loss = vals[1];
    r.test_loss = vals[2];
    r.test_error_top1 = vals[3];
    r.test_error_topk = vals[4];
    r.lr = vals[5];
    r.p = vals[6];
    r.wall_time_seconds = vals[7];
    rows.push_back(r);
  }
  return rows;
}

inline json metrics_row_to_json(const MetricsRow& r) {
  return json{{"epoch", r.epoch},
              {"train_loss", r.train_loss},
              {"test_loss", r.test_loss},
              {"test_error_top1", r.test_error_top1},
              {"test_error_topk", r.test_error_topk},
              {"lr", r.lr},
              {"p", r.p},
              {"wall_time_seconds", r.wall_time_seconds}};
}

inline MetricsRow metrics_row_from_json(const json& j) {
  MetricsRow r;
  r.epoch = j.at("epoch").get<std::size_t>();
  r.train_loss = j.at("train_loss").get<double>();
  r.test_loss = j.at("test_loss").get<double>();
  r.test_error_top1 = j.at("test_error_top1").get<double>();
  r.test_error_topk = j.at("test_error_topk").get<double>();
  r.lr = j.at("lr").get<double>();
  r.p = j.at("p").get<double>();
  r.wall_time_seconds = j.at("wall_time_seconds").get<double>();
  return r;
}

// ---------------------------------------------------------------------------
// Single trial

struct TrialResult {
  ResolvedTrial resolved;
  std::vector<MetricsRow> rows;
  ModelParams final_params;
  Dataset train;
  Dataset test;
  fs::path run_dir;
};

inline TrialResult run_trial(const TrialConfig& cfg) {
  PreparedTrial prep = prepare_trial(cfg);
  const ResolvedTrial& rt = prep.resolved;

  const fs::path run_dir = fs::path(rt.outdir) / rt.run_id;
  fs::create_directories(run_dir);
  {
    std::ofstream cj(run_dir / "config.json");
    if (!cj) throw IoError("cannot write " + (run_dir / "config.json").string());
    cj << resolved_trial_to_json(rt).dump(2) << '\n';
  }
  std::ofstream csv(run_dir / "metrics.csv", std::ios::trunc);
  if (!csv) throw IoError("cannot write " + (run_dir / "metrics.csv").string());
  csv << kMetricsHeader << '\n';
  csv.flush();

  ModelParams params = init_params(rt.model);
  std::vector<OptState> states;
  states.reserve(params.blocks.size());
  for (const auto& b : params.blocks)
    states.push_back(init_opt_state(rt.optimizer.kind, b.value.shape));

  TrialResult result;
  const auto t0 = std::chrono::steady_clock::now();
  for (std::size_t epoch = 0; epoch < rt.epochs; ++epoch) {
    const double lr = lr_at(rt.lr, epoch);
    const double p = p_at(rt.p_schedule, epoch);
    Optimizer opt = rt.optimizer;
    opt.hp.p = p;

    const auto epoch_batches = batches(prep.train, rt.batch, epoch);
    double loss_sum = 0.0;
    for (std::size_t b = 0; b < epoch_batches.size(); ++b) {
      const Batch& batch = epoch_batches[b];
      const LossGrads lg = loss_and_grads(rt.model, params, batch.x, batch.labels);
      if (!std::isfinite(lg.loss))
        throw DivergedError("diverged run: non-finite training loss at epoch " +
                                std::to_string(epoch) + ", batch " + std::to_string(b),
                            epoch, b);
      loss_sum += lg.loss;
      for (std::size_t i = 0; i < params.blocks.size(); ++i) {
        const Tensor& g = lg.grads.blocks[i].value;
        if (!all_finite(g))
          throw NonFiniteError("non-finite gradient in block \"" + params.blocks[i].name +
                               "\" at epoch " + std::to_string(epoch) + ", batch " +
                               std::to_string(b));
        auto [new_params, new_state] = opt.step(params.blocks[i].value, g, states[i], lr);
        params.blocks[i].value = std::move(new_params);
        states[i] = std::move(new_state);
      }
    }

    const EvalResult ev =
        evaluate(rt.model, params, prep.test.x, prep.test.labels, {1, rt.eval_topk});
    MetricsRow row;
    row.epoch = epoch;
    row.train_loss = loss_sum / static_cast<double>(epoch_batches.size());
    row.test_loss = ev.loss;
    row.test_error_top1 = ev.error_at[0];
    row.test_error_topk = ev.error_at[1];
    row.lr = lr;
    row.p = p;
    row.wall_time_seconds =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    append_metrics_row(csv, row);
    result.rows.push_back(row);
  }

  result.resolved = rt;
  result.final_params = std::move(params);
  result.train = std::move(prep.train);
  result.test = std::move(prep.test);
  result.run_dir = run_dir;
  return result;
}

// ---------------------------------------------------------------------------
// Sweeps

struct SweepCell {
  std::map<std::string, std::string> coords;
  std::string run_id;
  std::string metrics_file;  // relative to the sweep outdir
  std::string status;        // "ok" | "diverged"
  std::size_t diverged_epoch = 0;
  std::size_t diverged_batch = 0;
  std::vector<MetricsRow> rows;
  std::optional<MetricsRow> final_row;
  std::vector<std::pair<std::size_t, double>> checkpoint_accuracy;  // compare only
};

struct SweepResult {
  std::string kind;
  std::string outdir;
  std::vector<SweepCell> cells;
};

struct PlotSeries {
  fs::path dir;
  fs::path index_file;
  std::vector<fs::path> files;
};

inline PlotSeries emit_plot_series(const SweepResult& sweep, const std::string& metric);

namespace detail {

inline SweepCell run_cell(const TrialConfig& cfg, std::map<std::string, std::string> coords) {
  SweepCell cell;
  cell.coords = std::move(coords);
  cell.run_id = cfg.run_id;
  cell.metrics_file = cfg.run_id + "/metrics.csv";
  try {
    TrialResult r = run_trial(cfg);
    cell.status = "ok";
    cell.rows = std::move(r.rows);
    cell.final_row = cell.rows.back();
  } catch (const DivergedError& e) {
    cell.status = "diverged";
    cell.diverged_epoch = e.epoch;
    cell.diverged_batch = e.batch;
    cell.rows = read_metrics_csv(fs::path(cfg.outdir) / cell.metrics_file);
  }
  return cell;
}

inline void write_summary(const SweepResult& sweep) {
  json cells = json::array();
  for (const SweepCell& c : sweep.cells) {
    json jc{{"run_id", c.run_id},
            {"coords", c.coords},
            {"metrics_file", c.metrics_file},
            {"status", c.status},
            {"epochs_completed", c.rows.size()}};
    if (c.status == "diverged") {
      jc["diverged_epoch"] = c.diverged_epoch;
      jc["diverged_batch"] = c.diverged_batch;
    }
    if (c.final_row) jc["final"] = metrics_row_to_json(*c.final_row);
    if (!c.checkpoint_accuracy.empty()) {
      json ca = json::object();
      for (const auto& [epoch, acc] : c.checkpoint_accuracy) ca[std::to_string(epoch)] = acc;
      jc["checkpoint_accuracy"] = ca;
    }
    cells.push_back(jc);
  }
  const json j{{"sweep", sweep.kind}, {"cells", cells}};
  fs::create_directories(sweep.outdir);
  std::ofstream out(fs::path(sweep.outdir) / "summary.json");
  if (!out) throw IoError("cannot write sweep summary in \"" + sweep.outdir + "\"");
  out << j.dump(2) << '\n';
}

inline void require_valid_p(double p) {
  if (!(p >= 0.0 && p <= 0.5))
    throw ConfigError("p value " + fmt_double(p) + " outside [0, 0.5]");
}

}  // namespace detail

// One trial per p, identical otherwise (same seed). The stock grid is
// {0.25, 0.125, 0.0625}.
inline SweepResult grid_search_p(const TrialConfig& base,
                                 const std::vector<double>& p_values = {0.25, 0.125, 0.0625}) {
  if (optimizer_kind_from_name(base.optimizer) != OptimizerKind::Padam)
    throw ConfigError("grid-p requires optimizer padam, got \"" + base.optimizer + "\"");
  if (p_values.empty()) throw ConfigError("grid-p: empty p grid");
  for (double p : p_values) detail::require_valid_p(p);

  SweepResult sweep{"grid-p", base.outdir, {}};
  for (double p : p_values) {
    TrialConfig cfg = base;
    cfg.hp.p = p;
    cfg.p_schedule = PScheduleConfig{};
    cfg.p_schedule.p_start = p;
    cfg.run_id = "p" + fmt_double(p);
    sweep.cells.push_back(detail::run_cell(cfg, {{"p", fmt_double(p)}}));
  }
  detail::write_summary(sweep);
  return sweep;
}

// Full cartesian product of p and base learning rate, shared seed. Stock
// grids: p in {0.25, 0.125, 0.0625}, lr in {0.1, 0.01, 0.001}. Also emits the
// per-cell train-loss and test-error series for cross-lr comparison plots.
inline SweepResult lr_sensitivity_sweep(const TrialConfig& base,
                                        const std::vector<double>& p_values = {0.25, 0.125,
                                                                               0.0625},
                                        const std::vector<double>& lr_values = {0.1, 0.01,
                                                                                0.001}) {
  if (optimizer_kind_from_name(base.optimizer) != OptimizerKind::Padam)
    throw ConfigError("sweep-lr requires optimizer padam, got \"" + base.optimizer + "\"");
  if (p_values.empty() || lr_values.empty()) throw ConfigError("sweep-lr: empty grid");
  for (double p : p_values) detail::require_valid_p(p);
  for (double lr : lr_values)
    if (!(lr > 0.0)) throw ConfigError("sweep-lr: learning rate must be > 0");

  SweepResult sweep{"sweep-lr", base.outdir, {}};
  for (double p : p_values) {
    for (double lr : lr_values) {
      TrialConfig cfg = base;
      cfg.hp.p = p;
      cfg.p_schedule = PScheduleConfig{};
      cfg.p_schedule.p_start = p;
      cfg.lr.base = lr;
      cfg.run_id = "p" + fmt_double(p) + "_lr" + fmt_double(lr);
      sweep.cells.push_back(
          detail::run_cell(cfg, {{"p", fmt_double(p)}, {"lr", fmt_double(lr)}}));
    }
  }
  detail::write_summary(sweep);
  emit_plot_series(sweep, "train_loss");
  emit_plot_series(sweep, "test_error_top1");
  return sweep;
}

// One trial per optimizer with its stock hyperparameters (explicit overrides
// in `base` win) and a shared model/data/seed; reports test accuracy at the
// checkpoint epochs (a checkpoint c reads the row after c completed epochs).
inline SweepResult compare_optimizers(const TrialConfig& base,
                                      const std::vector<std::string>& names = {
                                          "padam", "adam", "amsgrad", "sgd"}) {
  if (names.empty()) throw ConfigError("compare: at least one optimizer name required");
  for (const std::string& n : names) optimizer_kind_from_name(n);
  const std::vector<std::size_t> checkpoints =
      base.checkpoints.empty() ? detail::scaled_quarters(base.epochs, true) : base.checkpoints;

  SweepResult sweep{"compare", base.outdir, {}};
  for (const std::string& name : names) {
    TrialConfig cfg = base;
    cfg.optimizer = name;
    cfg.run_id = name;
    SweepCell cell = detail::run_cell(cfg, {{"optimizer", name}});
    for (std::size_t c : checkpoints) {
      if (c >= 1 && c <= cell.rows.size())
        cell.checkpoint_accuracy.emplace_back(c, 1.0 - cell.rows[c - 1].test_error_top1);
    }
    sweep.cells.push_back(std::move(cell));
  }
  detail::write_summary(sweep);
  return sweep;
}

inline SweepResult load_sweep_summary(const fs::path& summary_path) {
  std::ifstream in(summary_path);
  if (!in) throw IoError("cannot open sweep summary \"" + summary_path.string() + "\"");
  json j;
  try {
    in >> j;
  } catch (const json::exception& e) {
    throw ParseError(summary_path.string() + ": " + e.what());
  }
  SweepResult sweep;
  sweep.kind = j.value("sweep", "");
  sweep.outdir = summary_path.parent_path().string();
  for (const json& jc : j.at("cells")) {
    SweepCell cell;
    cell.run_id = jc.at("run_id").get<std::string>();
    cell.coords = jc.at("coords").get<std::map<std::string, std::string>>();
    cell.metrics_file = jc.at("metrics_file").get<std::string>();
    cell.status = jc.at("status").get<std::string>();
    cell.diverged_epoch = jc.value("diverged_epoch", std::size_t{0});
    cell.diverged_batch = jc.value("diverged_batch", std::size_t{0});
    if (jc.contains("final")) cell.final_row = metrics_row_from_json(jc.at("final"));
    sweep.cells.push_back(std::move(cell));
  }
  return sweep;
}

// ---------------------------------------------------------------------------
// Plot series

inline const std::vector<std::string>& metric_names() {
  static const std::vector<std::string> names = {
      "train_loss", "test_loss",        "test_error_top1",
      "test_error_topk", "lr", "p", "wall_time_seconds"};
  return names;
}

inline double metric_value(const MetricsRow& r, const std::string& metric) {
  if (metric == "train_loss") return r.train_loss;
  if (metric == "test_loss") return r.test_loss;
  if (metric == "test_error_top1") return r.test_error_top1;
  if (metric == "test_error_topk") return r.test_error_topk;
  if (metric == "lr") return r.lr;
  if (metric == "p") return r.p;
  if (metric == "wall_time_seconds") return r.wall_time_seconds;
  std::string valid;
  for (const auto& n : metric_names()) valid += (valid.empty() ? "" : ", ") + n;
  throw InvalidArgumentError("unknown metric \"" + metric + "\": valid metrics are " + valid);
}

// One two-column "epoch value" file per sweep cell, plus index.json mapping
// cells to files. Diverged cells carry their truncated series and are flagged.
inline PlotSeries emit_plot_series(const SweepResult& sweep, const std::string& metric) {
  metric_value(MetricsRow{}, metric);  // validates the name

  PlotSeries out;
  out.dir = fs::path(sweep.outdir) / ("series_" + metric);
  fs::create_directories(out.dir);

  json index_entries = json::array();
  for (const SweepCell& cell : sweep.cells) {
    const std::vector<MetricsRow> rows =
        cell.rows.empty() ? read_metrics_csv(fs::path(sweep.outdir) / cell.metrics_file)
                          : cell.rows;
    const fs::path series_path = out.dir / (cell.run_id + ".dat");
    std::ofstream series(series_path);
    if (!series) throw IoError("cannot write series file " + series_path.string());
    for (const MetricsRow& r : rows)
      series << r.epoch << ' ' << fmt_double(metric_value(r, metric)) << '\n';
    out.files.push_back(series_path);

    json entry{{"run_id", cell.run_id},
               {"coords", cell.coords},
               {"file", cell.run_id + ".dat"},
               {"status", cell.status},
               {"rows", rows.size()}};
    if (cell.status == "diverged") entry["diverged_epoch"] = cell.diverged_epoch;
    index_entries.push_back(entry);
  }

  out.index_file = out.dir / "index.json";
  std::ofstream index(out.index_file);
  if (!index) throw IoError("cannot write series index " + out.index_file.string());
  index << json{{"metric", metric}, {"series", index_entries}}.dump(2) << '\n';
  return out;
}

}  // namespace padam
