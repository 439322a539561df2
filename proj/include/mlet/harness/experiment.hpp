#pragma once

// Experiment configuration and single training runs.
//
// Config files are JSON:
//
//   {
//     "dataset": {"synthetic": {"examples": 50000, "cardinalities": [...], ...}}
//              | {"file": "train.tsv", "format": "criteo-tsv", "max_rows": 0, "hash_mod": [100000]},
//     "split":  {"train": 0.8, "val": 0.1, "test": 0.1, "mode": "random" | "sequential", "seed": 0},
//     "model":  {"bottom_hidden": [32, 16], "top_hidden": [64, 32], "concat_dense": true,
//                "embedding_init_std": 0.25, "embedding_depth": 2},
//     "train":  {"lr": 0.2, "batch": 128, "epochs": 1, "evals_per_epoch": 10},
//     "replicates": 5,
//     "seeds": [11, 12, 13, 14, 15],        // optional; default base_seed + r
//     "base_seed": 0,
//     "grid": [{"k": 32, "d": 4}, {"k": null, "d": 4}, {"k": 2, "d": 4, "zero_cost_probe": true}],
//     "out": "runs/example",
//     "threads": 1
//   }
//
// Every key is optional; omitted keys keep the defaults below. A grid cell
// with k null (or absent) is the single-layer baseline.

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "mlet/data/dataset.hpp"
#include "mlet/data/loader.hpp"
#include "mlet/data/synthetic.hpp"
#include "mlet/model/ctr_model.hpp"

namespace mlet {

struct DatasetSpec {
  std::optional<std::filesystem::path> file;  // unset: synthetic
  CtrFormat format = CtrFormat::kCriteoTsv;
  LoadOptions load;
  SyntheticParams synthetic;
};

// Model settings shared by every grid cell; (k, d) come from the cell.
struct ModelShape {
  std::vector<std::size_t> bottom_hidden{32, 16};
  std::vector<std::size_t> top_hidden{64, 32};
  bool concat_dense = true;
  double embedding_init_std = 0.25;
  std::size_t embedding_depth = 2;
};

struct GridCell {
  std::optional<std::size_t> k;  // unset: single-layer baseline
  std::size_t d = 4;
  // Allows k < d; such cells are reported as zero-cost probes.
  bool zero_cost_probe = false;

  bool is_baseline() const noexcept { return !k.has_value(); }
  // An MLET cell whose training footprint does not exceed the baseline's.
  bool zero_cost() const noexcept { return k.has_value() && *k <= d; }
  std::string label() const;
};

struct ExperimentConfig {
  DatasetSpec dataset;
  SplitSpec split;
  ModelShape model;
  double lr = 0.2;
  std::size_t batch = 128;
  std::size_t epochs = 1;
  std::size_t evals_per_epoch = 10;
  std::size_t replicates = 5;
  std::vector<std::uint64_t> seeds;
  std::uint64_t base_seed = 0;
  std::vector<GridCell> grid{GridCell{}};
  std::filesystem::path out;
  std::size_t threads = 1;

  // seeds[r] when listed, base_seed + r otherwise.
  std::uint64_t replicate_seed(std::size_t r) const;
};

// Throws ErrorKind::kInvalidArgument for replicates == 0, an empty grid,
// duplicate cells, k < d without the probe flag, negative or non-finite lr,
// or zero batch/epochs/evals_per_epoch/threads.
void validate(const ExperimentConfig& config);

ExperimentConfig parse_experiment_config(const nlohmann::json& j);
ExperimentConfig load_experiment_config(const std::filesystem::path& path);
nlohmann::json to_json(const ExperimentConfig& config);

// Train/val/test splits with dense features standardized by train statistics.
struct PreparedData {
  Dataset train;
  Dataset val;
  Dataset test;
  std::uint64_t content_hash = 0;  // of the full dataset before splitting
};

PreparedData prepare_data(const ExperimentConfig& config);

ModelConfig model_config_for(const ExperimentConfig& config, const PreparedData& data, const GridCell& cell,
                             std::uint64_t seed);

struct EvalPoint {
  std::size_t step = 0;
  std::string split;  // "val" or "test"
  double logloss = 0.0;
  double auc = 0.0;  // NaN when the split holds a single class
};

struct RunMetrics {
  GridCell cell;
  std::uint64_t seed = 0;
  std::size_t steps = 0;
  std::vector<EvalPoint> evals;
  double val_logloss = 0.0;  // final, from the collapsed (inference) model
  double val_auc = 0.0;
  double test_logloss = 0.0;
  double test_auc = 0.0;
  // |val LogLoss before collapse - after collapse|; 0 for baselines.
  double collapse_gap = 0.0;
  std::size_t embedding_train_params = 0;
  std::size_t embedding_inference_params = 0;
  std::size_t mlp_params = 0;
  // Timing, kept out of to_json so metric records stay byte-deterministic.
  double ms_per_iter = 0.0;
};

inline constexpr double kCollapseTolerance = 1e-9;

// Trains one model with SGD, evaluating on val every 1/evals_per_epoch of an
// epoch (and at step 0), then collapses, re-checks val LogLoss within 1e-9 and
// evaluates on test. Throws ErrorKind::kDivergence naming the step when the
// training loss turns non-finite (or any parameter does, checked at each
// evaluation), ErrorKind::kInvariant if collapse changes val LogLoss.
// `trained` receives the collapsed model when non-null.
RunMetrics run_training(const ExperimentConfig& config, const PreparedData& data, const GridCell& cell,
                        std::uint64_t seed, CtrModel* trained = nullptr);

nlohmann::json to_json(const RunMetrics& metrics);
nlohmann::json timing_json(const RunMetrics& metrics);

// Singular values and effective rank of every table of a checkpoint, with
// factorized tables collapsed first.
std::vector<SpectrumReport> spectrum_report(const std::filesystem::path& checkpoint, double rel_threshold);

// LogLoss and AUC of `model` on a whole split.
EvalPoint evaluate(const CtrModel& model, const Dataset& ds, const std::string& split, std::size_t step);

}  // namespace mlet
