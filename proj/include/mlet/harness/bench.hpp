#pragma once

#include <cstddef>
#include <vector>

#include <json.hpp>

#include "mlet/harness/experiment.hpp"

namespace mlet {

// Reference factorized/baseline per-iteration cost ratio at GPU scale; shown
// next to the measured ratio for context only.
inline constexpr double kReferenceOverheadRatio = 1.24;

inline constexpr std::size_t kMinTimedIterations = 100;
inline constexpr std::size_t kMinWarmupIterations = 10;

struct TimingResult {
  GridCell cell;
  std::size_t iterations = 0;
  std::size_t warmup = 0;
  double median_ms = 0.0;
  std::vector<double> samples_ms;
};

// Median wall-clock of train_step over `iterations` steps after `warmup`
// untimed steps, cycling through shuffled training batches. Only train_step is
// inside the timed region. Throws ErrorKind::kInvalidArgument when iterations
// < 100 or warmup < 10.
TimingResult time_iterations(const ExperimentConfig& config, const PreparedData& data, const GridCell& cell,
                             std::size_t iterations, std::size_t warmup, std::uint64_t seed);

struct BenchRow {
  std::size_t d = 0;
  TimingResult baseline;
  TimingResult mlet;
  double ratio = 0.0;  // mlet / baseline median
};

struct BenchReport {
  std::size_t k_multiplier = 1;  // MLET k = k_multiplier · d
  std::vector<BenchRow> rows;
};

BenchReport run_bench(const ExperimentConfig& config, const PreparedData& data, const std::vector<std::size_t>& ds,
                      std::size_t k_multiplier, std::size_t iterations, std::size_t warmup, std::uint64_t seed);

nlohmann::json to_json(const BenchReport& report);

}  // namespace mlet
