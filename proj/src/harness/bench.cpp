#include "mlet/harness/bench.hpp"

#include <algorithm>
#include <chrono>

#include "mlet/error.hpp"
#include "mlet/linalg/rng.hpp"

namespace mlet {

using nlohmann::json;

TimingResult time_iterations(const ExperimentConfig& config, const PreparedData& data, const GridCell& cell,
                             std::size_t iterations, std::size_t warmup, std::uint64_t seed) {
  if (iterations < kMinTimedIterations) {
    throw Error(ErrorKind::kInvalidArgument, "bench needs >= " + std::to_string(kMinTimedIterations) +
                                                 " timed iterations, got " + std::to_string(iterations));
  }
  if (warmup < kMinWarmupIterations) {
    throw Error(ErrorKind::kInvalidArgument, "bench needs >= " + std::to_string(kMinWarmupIterations) +
                                                 " warmup iterations, got " + std::to_string(warmup));
  }
  CtrModel model = init_model(model_config_for(config, data, cell, seed));
  // Batches are materialized up front so loading stays outside the timed region.
  std::vector<MiniBatch> batches;
  {
    BatchIterator it(data.train, config.batch, Rng(seed).next_u64());
    MiniBatch b;
    while (batches.size() < iterations + warmup && it.next(b)) {
      if (b.size() == config.batch) batches.push_back(b);
    }
  }
  if (batches.empty()) throw Error(ErrorKind::kInvalidArgument, "training split smaller than one batch");

  TimingResult result;
  result.cell = cell;
  result.iterations = iterations;
  result.warmup = warmup;
  result.samples_ms.reserve(iterations);
  using Clock = std::chrono::steady_clock;
  for (std::size_t i = 0; i < warmup + iterations; ++i) {
    const MiniBatch& batch = batches[i % batches.size()];
    const auto t0 = Clock::now();
    train_step(model, batch, config.lr);
    const auto t1 = Clock::now();
    if (i >= warmup) result.samples_ms.push_back(std::chrono::duration<double, std::milli>(t1 - t0).count());
  }
  std::vector<double> sorted = result.samples_ms;
  std::sort(sorted.begin(), sorted.end());
  const std::size_t n = sorted.size();
  result.median_ms = n % 2 == 1 ? sorted[n / 2] : 0.5 * (sorted[n / 2 - 1] + sorted[n / 2]);
  return result;
}

BenchReport run_bench(const ExperimentConfig& config, const PreparedData& data, const std::vector<std::size_t>& ds,
                      std::size_t k_multiplier, std::size_t iterations, std::size_t warmup, std::uint64_t seed) {
  if (ds.empty()) throw Error(ErrorKind::kInvalidArgument, "bench needs at least one d");
  if (k_multiplier == 0) throw Error(ErrorKind::kInvalidArgument, "k multiplier must be >= 1");
  BenchReport report;
  report.k_multiplier = k_multiplier;
  for (std::size_t d : ds) {
    BenchRow row;
    row.d = d;
    row.baseline = time_iterations(config, data, GridCell{std::nullopt, d, false}, iterations, warmup, seed);
    row.mlet = time_iterations(config, data, GridCell{k_multiplier * d, d, false}, iterations, warmup, seed);
    row.ratio = row.mlet.median_ms / row.baseline.median_ms;
    report.rows.push_back(std::move(row));
  }
  return report;
}

json to_json(const BenchReport& report) {
  json rows = json::array();
  for (const BenchRow& r : report.rows) {
    rows.push_back({{"d", r.d},
                    {"k", *r.mlet.cell.k},
                    {"baseline_ms_per_iter", r.baseline.median_ms},
                    {"mlet_ms_per_iter", r.mlet.median_ms},
                    {"ratio", r.ratio},
                    {"iterations", r.baseline.iterations},
                    {"warmup", r.baseline.warmup}});
  }
  return json{{"k_multiplier", report.k_multiplier},
              {"rows", rows},
              {"reference_ratio", kReferenceOverheadRatio},
              {"reference_note", "ratio measured on a GPU with a full-size model; informational only"}};
}

}  // namespace mlet
