// mlet: command-line front end for the factorized-embedding laboratory.
//
// Exit codes: 0 success, 1 usage or configuration error, 2 runtime or
// numerical failure.

#include <cstdio>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "mlet/data/loader.hpp"
#include "mlet/data/synthetic.hpp"
#include "mlet/dynamics/linear_net.hpp"
#include "mlet/embedding/table_io.hpp"
#include "mlet/error.hpp"
#include "mlet/harness/bench.hpp"
#include "mlet/harness/experiment.hpp"
#include "mlet/harness/sweep.hpp"
#include "mlet/model/checkpoint.hpp"

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

constexpr int kExitUsage = 1;
constexpr int kExitRuntime = 2;

struct UsageError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct Globals {
  std::optional<std::uint64_t> seed;
  std::string out;
  std::optional<std::size_t> threads;
  std::string config;
};

mlet::ExperimentConfig load_config(const Globals& g) {
  mlet::ExperimentConfig config;
  try {
    if (!g.config.empty()) config = mlet::load_experiment_config(g.config);
    if (g.seed) config.base_seed = *g.seed;
    if (!g.out.empty()) config.out = g.out;
    if (g.threads) config.threads = *g.threads;
    mlet::validate(config);
  } catch (const mlet::Error& e) {
    if (e.kind() == mlet::ErrorKind::kIo) throw;
    throw UsageError(e.what());
  }
  return config;
}

void emit(const json& j, const std::string& out) {
  if (out.empty()) {
    std::cout << j.dump(2) << '\n';
    return;
  }
  const fs::path path(out);
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  std::ofstream f(path);
  if (!f) throw mlet::Error(mlet::ErrorKind::kIo, "cannot write " + out);
  f << j.dump(2) << '\n';
}

json spectrum_json(const mlet::SpectrumReport& r) {
  return json{{"singular_values", r.singular_values},
              {"rel_threshold", r.rel_threshold},
              {"effective_rank", r.effective_rank}};
}

// ---- gen-data ---------------------------------------------------------------

struct GenDataArgs {
  mlet::SyntheticParams params;
  std::size_t features = 8;
  std::size_t cardinality = 1000;
  std::vector<std::size_t> cardinalities;  // overrides features × cardinality when non-empty
};

int run_gen_data(const Globals& g, GenDataArgs a) {
  if (g.out.empty()) throw UsageError("gen-data needs --out <file.tsv>");
  if (a.cardinalities.empty())
    a.params.cardinalities.assign(a.features, a.cardinality);
  else
    a.params.cardinalities = a.cardinalities;
  if (g.seed) a.params.seed = *g.seed;
  try {
    mlet::validate(a.params);
  } catch (const mlet::Error& e) {
    throw UsageError(e.what());
  }
  const mlet::Dataset ds = mlet::generate_synthetic(a.params);
  mlet::write_criteo_tsv(ds, g.out);
  std::cerr << "wrote " << ds.size() << " examples (" << ds.num_dense() << " dense, " << ds.num_features
            << " categorical) to " << g.out << '\n';
  return 0;
}

// ---- train ------------------------------------------------------------------

struct TrainArgs {
  std::optional<std::size_t> k;
  std::optional<std::size_t> d;
  bool baseline = false;
};

int run_train(const Globals& g, const TrainArgs& a) {
  mlet::ExperimentConfig config = load_config(g);
  mlet::GridCell cell = config.grid.front();
  if (a.baseline) cell.k.reset();
  if (a.k) cell.k = *a.k;
  if (a.d) cell.d = *a.d;
  if (cell.k && *cell.k < cell.d) cell.zero_cost_probe = true;
  const std::uint64_t seed = config.replicate_seed(0);
  const mlet::PreparedData data = mlet::prepare_data(config);
  mlet::CtrModel trained;
  const mlet::RunMetrics metrics = mlet::run_training(config, data, cell, seed, &trained);
  json record = mlet::to_json(metrics);
  if (config.out.empty()) {
    std::cout << record.dump(2) << '\n';
    return 0;
  }
  fs::create_directories(config.out);
  emit(record, (config.out / "metrics.json").string());
  emit(mlet::timing_json(metrics), (config.out / "timing.json").string());
  mlet::save_checkpoint(trained, config.out / "checkpoint");
  std::cerr << cell.label() << " seed " << seed << ": val LogLoss " << metrics.val_logloss << ", val AUC "
            << metrics.val_auc << " -> " << config.out.string() << '\n';
  return 0;
}

// ---- sweep ------------------------------------------------------------------

int run_sweep_cmd(const Globals& g, std::optional<std::size_t> replicates) {
  mlet::ExperimentConfig config = load_config(g);
  if (replicates) {
    config.replicates = *replicates;
    try {
      mlet::validate(config);
    } catch (const mlet::Error& e) {
      throw UsageError(e.what());
    }
  }
  const mlet::SweepReport report = mlet::run_sweep(config);
  std::cout << mlet::summary_csv(report);
  std::size_t failed = 0;
  for (const mlet::CellSummary& c : report.cells) {
    for (const std::string& e : c.errors) std::cerr << c.cell.label() << ": " << e << '\n';
    failed += c.errors.size();
  }
  return failed == 0 ? 0 : kExitRuntime;
}

// ---- dynamics ---------------------------------------------------------------

struct DynamicsArgs {
  std::string mode = "eq6";
  std::size_t depth = 2;
  std::size_t size = 6;
  std::size_t width = 0;  // hidden width; 0 uses size
  double lr = 1e-3;
  std::size_t steps = 1000;
  std::string init = "balanced";
  std::size_t record_interval = 10;
  double threshold = mlet::kDefaultRankThreshold;
  std::size_t pairs = 10;
  double noise = 0.05;
  double loss_fraction = 0.5;
};

mlet::LinearNetSpec linear_spec(const DynamicsArgs& a, std::uint64_t seed) {
  mlet::LinearNetSpec spec;
  spec.dims.push_back(a.size);
  for (std::size_t i = 1; i < a.depth; ++i) spec.dims.push_back(a.width == 0 ? a.size : a.width);
  spec.dims.push_back(a.size);
  spec.target = mlet::gaussian_mat(a.size, a.size, 1.0, seed ^ 0x7A5C3ULL);
  spec.lr = a.lr;
  spec.steps = a.steps;
  spec.init = a.init == "gaussian" ? mlet::LinearInit::kGaussian : mlet::LinearInit::kBalanced;
  spec.seed = seed;
  spec.record_interval = a.record_interval;
  spec.rel_threshold = a.threshold;
  return spec;
}

json outcome_json(const mlet::DepthOutcome& o) {
  return json{{"depth", o.depth},         {"steps", o.steps},
              {"final_loss", o.final_loss}, {"sv_ratio", o.sv_ratio},
              {"effective_rank", o.effective_rank}, {"singular_values", o.singular_values}};
}

int run_dynamics(const Globals& g, const DynamicsArgs& a) {
  const std::uint64_t seed = g.seed.value_or(0);
  if (a.depth == 0 || a.size == 0) throw UsageError("dynamics needs --depth >= 1 and --size >= 1");
  json result;
  if (a.mode == "eq6") {
    const mlet::LinearNetSpec spec = linear_spec(a, seed);
    std::vector<std::size_t> steps;
    for (std::size_t s = 0; s < a.steps; s += std::max<std::size_t>(a.record_interval, 1)) steps.push_back(s);
    const mlet::Eq6Report report = mlet::verify_eq6(spec, steps);
    json checks = json::array();
    for (const mlet::Eq6Check& c : report.checks) {
      checks.push_back({{"step", c.step},
                        {"sigma", c.sigma},
                        {"empirical_delta", c.empirical_delta},
                        {"predicted_delta", c.predicted_delta},
                        {"max_deviation", c.max_deviation}});
    }
    result = json{{"mode", "eq6"},  {"depth", a.depth}, {"lr", a.lr},
                  {"max_deviation", report.max_deviation}, {"checks", checks}};
  } else if (a.mode == "trajectory") {
    const mlet::SvTrajectory traj = mlet::train_linear_net(linear_spec(a, seed));
    json points = json::array();
    for (const mlet::TrajectoryPoint& p : traj.points) {
      points.push_back({{"step", p.step},
                        {"loss", p.loss},
                        {"grad_norm", p.grad_norm},
                        {"singular_values", p.spectrum.singular_values},
                        {"effective_rank", p.spectrum.effective_rank}});
    }
    result = json{{"mode", "trajectory"}, {"depth", a.depth}, {"steps_run", traj.steps_run}, {"points", points}};
  } else if (a.mode == "polarization") {
    mlet::PolarizationConfig pc;
    pc.size = a.size;
    pc.noise = a.noise;
    pc.loss_fraction = a.loss_fraction;
    pc.rel_threshold = a.threshold;
    json pairs = json::array();
    std::size_t deep_wins = 0;
    for (std::size_t i = 0; i < a.pairs; ++i) {
      const mlet::PolarizationPair p = mlet::polarization_pair(pc, seed + i);
      deep_wins += p.deep.sv_ratio < p.shallow.sv_ratio ? 1 : 0;
      pairs.push_back({{"seed", p.seed},
                       {"stop_loss", p.stop_loss},
                       {"shallow", outcome_json(p.shallow)},
                       {"deep", outcome_json(p.deep)}});
    }
    result = json{{"mode", "polarization"}, {"deep_lower_ratio", deep_wins}, {"pairs", pairs}};
  } else {
    throw UsageError("unknown dynamics mode '" + a.mode + "' (eq6, trajectory, polarization)");
  }
  emit(result, g.out);
  return 0;
}

// ---- spectrum / export-table ------------------------------------------------

int run_spectrum(const Globals& g, const std::string& checkpoint, double threshold) {
  const std::vector<mlet::SpectrumReport> reports = mlet::spectrum_report(checkpoint, threshold);
  json tables = json::array();
  for (std::size_t f = 0; f < reports.size(); ++f) {
    json t = spectrum_json(reports[f]);
    t["feature"] = f;
    tables.push_back(std::move(t));
  }
  emit(json{{"checkpoint", checkpoint}, {"tables", tables}}, g.out);
  return 0;
}

int run_export(const Globals& g, const std::string& checkpoint) {
  if (g.out.empty()) throw UsageError("export-table needs --out <directory>");
  const mlet::CtrModel model = mlet::collapse_model(mlet::load_checkpoint(checkpoint));
  fs::create_directories(g.out);
  for (std::size_t f = 0; f < model.tables.size(); ++f) {
    const fs::path path = fs::path(g.out) / ("table_" + std::to_string(f) + ".mlet");
    mlet::write_table(path, std::get<mlet::EmbeddingTable>(model.tables[f]));
  }
  std::cerr << "exported " << model.tables.size() << " tables to " << g.out << '\n';
  return 0;
}

// ---- bench ------------------------------------------------------------------

struct BenchArgs {
  std::vector<std::size_t> ds{4, 8, 16, 32, 64};
  std::size_t k_multiplier = 1;
  std::size_t iterations = 200;
  std::size_t warmup = 20;
};

int run_bench_cmd(const Globals& g, const BenchArgs& a) {
  Globals without_out = g;
  without_out.out.clear();
  const mlet::ExperimentConfig config = load_config(without_out);
  if (a.iterations < mlet::kMinTimedIterations || a.warmup < mlet::kMinWarmupIterations) {
    throw UsageError("bench needs --iters >= 100 and --warmup >= 10");
  }
  const mlet::PreparedData data = mlet::prepare_data(config);
  const mlet::BenchReport report =
      mlet::run_bench(config, data, a.ds, a.k_multiplier, a.iterations, a.warmup, config.replicate_seed(0));
  for (const mlet::BenchRow& r : report.rows) {
    std::fprintf(stderr, "d=%zu baseline %.4f ms  mlet(k=%zu) %.4f ms  ratio %.3f\n", r.d, r.baseline.median_ms,
                 *r.mlet.cell.k, r.mlet.median_ms, r.ratio);
  }
  emit(mlet::to_json(report), g.out);
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Factorized embedding training laboratory"};
  app.require_subcommand(1);
  app.fallthrough();
  Globals g;
  app.add_option("--seed", g.seed, "Seed (base seed for replicates)");
  app.add_option("--out", g.out, "Output file or directory");
  app.add_option("--threads", g.threads, "Worker threads for sweeps")->check(CLI::PositiveNumber);
  app.add_option("--config", g.config, "Experiment config (JSON)")->check(CLI::ExistingFile);

  GenDataArgs gen;
  auto* gen_cmd = app.add_subcommand("gen-data", "Write a planted low-rank synthetic dataset as criteo-tsv "
                                      "(loading maps dense values through log1p(max(x, 0)))");
  gen_cmd->add_option("--examples", gen.params.examples);
  gen_cmd->add_option("--num-dense", gen.params.num_dense);
  gen_cmd->add_option("--features", gen.features, "Categorical features (with --cardinality)");
  gen_cmd->add_option("--cardinality", gen.cardinality, "Categories per feature");
  gen_cmd->add_option("--cardinalities", gen.cardinalities, "Per-feature categories (overrides)");
  gen_cmd->add_option("--rank", gen.params.true_rank);
  gen_cmd->add_option("--latent-dim", gen.params.latent_dim);
  gen_cmd->add_option("--noise", gen.params.noise);
  gen_cmd->add_option("--signal-scale", gen.params.signal_scale);
  gen_cmd->add_option("--dense-share", gen.params.dense_share);
  gen_cmd->add_option("--zipf", gen.params.zipf_exponent);

  TrainArgs train;
  auto* train_cmd = app.add_subcommand("train", "Train one model, write metrics and a checkpoint");
  train_cmd->add_option("--k", train.k, "Hidden width (MLET)");
  train_cmd->add_option("--d", train.d, "Embedding dimension");
  train_cmd->add_flag("--baseline", train.baseline, "Single-layer tables");

  std::optional<std::size_t> replicates;
  auto* sweep_cmd = app.add_subcommand("sweep", "Run the (k, d) grid with replicates");
  sweep_cmd->add_option("--replicates", replicates)->check(CLI::PositiveNumber);

  DynamicsArgs dyn;
  auto* dyn_cmd = app.add_subcommand("dynamics", "Deep linear network experiments");
  dyn_cmd->add_option("--mode", dyn.mode, "eq6 | trajectory | polarization")
      ->check(CLI::IsMember({"eq6", "trajectory", "polarization"}));
  dyn_cmd->add_option("--depth", dyn.depth);
  dyn_cmd->add_option("--size", dyn.size);
  dyn_cmd->add_option("--width", dyn.width, "Hidden width (default: size)");
  dyn_cmd->add_option("--lr", dyn.lr);
  dyn_cmd->add_option("--steps", dyn.steps);
  dyn_cmd->add_option("--init", dyn.init)->check(CLI::IsMember({"balanced", "gaussian"}));
  dyn_cmd->add_option("--record-interval", dyn.record_interval);
  dyn_cmd->add_option("--threshold", dyn.threshold);
  dyn_cmd->add_option("--pairs", dyn.pairs);
  dyn_cmd->add_option("--noise", dyn.noise);
  dyn_cmd->add_option("--loss-fraction", dyn.loss_fraction);

  std::string checkpoint;
  double threshold = mlet::kDefaultRankThreshold;
  auto* spec_cmd = app.add_subcommand("spectrum", "Singular values and effective rank of checkpoint tables");
  spec_cmd->add_option("checkpoint", checkpoint)->required()->check(CLI::ExistingDirectory);
  spec_cmd->add_option("--threshold", threshold);

  BenchArgs bench;
  auto* bench_cmd = app.add_subcommand("bench", "Per-iteration training time, baseline vs MLET");
  bench_cmd->add_option("--d", bench.ds, "Embedding dimensions");
  bench_cmd->add_option("--k-mult", bench.k_multiplier, "MLET k = k-mult * d");
  bench_cmd->add_option("--iters", bench.iterations);
  bench_cmd->add_option("--warmup", bench.warmup);

  std::string export_checkpoint;
  auto* export_cmd = app.add_subcommand("export-table", "Write collapsed tables of a checkpoint");
  export_cmd->add_option("checkpoint", export_checkpoint)->required()->check(CLI::ExistingDirectory);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : kExitUsage;
  }

  try {
    if (*gen_cmd) return run_gen_data(g, gen);
    if (*train_cmd) return run_train(g, train);
    if (*sweep_cmd) return run_sweep_cmd(g, replicates);
    if (*dyn_cmd) return run_dynamics(g, dyn);
    if (*spec_cmd) return run_spectrum(g, checkpoint, threshold);
    if (*bench_cmd) return run_bench_cmd(g, bench);
    if (*export_cmd) return run_export(g, export_checkpoint);
  } catch (const UsageError& e) {
    std::cerr << "usage error: " << e.what() << '\n';
    return kExitUsage;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitRuntime;
  }
  return kExitUsage;
}
