#pragma once

// (k, d) sweeps with seeded replicates.
//
// Output directory contents:
//   runs.jsonl     one metric record per successful run, in grid × replicate order
//   summary.json   per-cell statistics, dominance matrix, failures
//   summary.csv    k,d,replicates,mean/std LogLoss,mean/std AUC,ms/iter,train/inference params
//   timing.jsonl   wall-clock per run
// runs.jsonl and summary.json carry no timing, so repeated sweeps with the
// same config reproduce them byte for byte.

#include <cstddef>
#include <string>
#include <vector>

#include <json.hpp>

#include "mlet/harness/experiment.hpp"

namespace mlet {

struct CellSummary {
  GridCell cell;
  std::size_t replicates = 0;  // successful runs
  double mean_logloss = 0.0;   // val, post-collapse
  double std_logloss = 0.0;    // sample standard deviation (n - 1); 0 for one run
  double mean_auc = 0.0;
  double std_auc = 0.0;
  double mean_ms_per_iter = 0.0;
  std::size_t train_params = 0;      // embedding parameters while training
  std::size_t inference_params = 0;  // embedding parameters after collapse
  std::vector<std::string> errors;   // "seed <s>: <message>" per failed replicate
};

struct SweepReport {
  std::vector<CellSummary> cells;
  std::vector<RunMetrics> runs;
  // dominates[a][b]: cell a's mean val LogLoss is strictly below cell b's.
  // Rows and columns of cells without successful runs are all false.
  std::vector<std::vector<bool>> dominates;
};

// NaN for an empty input.
double sample_mean(const std::vector<double>& v);
double sample_std(const std::vector<double>& v);

SweepReport summarize(const ExperimentConfig& config, std::vector<RunMetrics> runs,
                      const std::vector<std::pair<std::size_t, std::string>>& failures);

// Runs every grid cell × replicate on config.threads worker threads. Failed
// runs are recorded on their cell and do not stop the sweep. Writes the output
// files when config.out is non-empty.
SweepReport run_sweep(const ExperimentConfig& config);
SweepReport run_sweep(const ExperimentConfig& config, const PreparedData& data);

nlohmann::json summary_json(const SweepReport& report);
std::string summary_csv(const SweepReport& report);
void write_sweep_outputs(const SweepReport& report, const std::filesystem::path& dir);

}  // namespace mlet
