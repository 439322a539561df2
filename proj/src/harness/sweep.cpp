#include "mlet/harness/sweep.hpp"

#include <atomic>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <mutex>
#include <optional>
#include <thread>

#include "mlet/error.hpp"

namespace mlet {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

void write_text(const fs::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error(ErrorKind::kIo, "cannot write " + path.string());
  out << text;
  if (!out) throw Error(ErrorKind::kIo, "write failed for " + path.string());
}

std::string fmt(double v) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.10g", v);
  return buf;
}

}  // namespace

double sample_mean(const std::vector<double>& v) {
  if (v.empty()) return std::nan("");
  double sum = 0.0;
  for (double x : v) sum += x;
  return sum / static_cast<double>(v.size());
}

double sample_std(const std::vector<double>& v) {
  if (v.size() < 2) return 0.0;
  const double mean = sample_mean(v);
  double ss = 0.0;
  for (double x : v) ss += (x - mean) * (x - mean);
  return std::sqrt(ss / static_cast<double>(v.size() - 1));
}

SweepReport summarize(const ExperimentConfig& config, std::vector<RunMetrics> runs,
                      const std::vector<std::pair<std::size_t, std::string>>& failures) {
  SweepReport report;
  report.runs = std::move(runs);
  const std::size_t cells = config.grid.size();
  report.cells.resize(cells);
  for (std::size_t c = 0; c < cells; ++c) {
    CellSummary& s = report.cells[c];
    s.cell = config.grid[c];
    std::vector<double> ll, au, ms;
    for (const RunMetrics& r : report.runs) {
      if (r.cell.k != s.cell.k || r.cell.d != s.cell.d) continue;
      ll.push_back(r.val_logloss);
      au.push_back(r.val_auc);
      ms.push_back(r.ms_per_iter);
      s.train_params = r.embedding_train_params;
      s.inference_params = r.embedding_inference_params;
    }
    s.replicates = ll.size();
    s.mean_logloss = sample_mean(ll);
    s.std_logloss = sample_std(ll);
    s.mean_auc = sample_mean(au);
    s.std_auc = sample_std(au);
    s.mean_ms_per_iter = sample_mean(ms);
  }
  for (const auto& [cell, message] : failures) report.cells.at(cell).errors.push_back(message);

  report.dominates.assign(cells, std::vector<bool>(cells, false));
  for (std::size_t a = 0; a < cells; ++a) {
    for (std::size_t b = 0; b < cells; ++b) {
      const CellSummary& sa = report.cells[a];
      const CellSummary& sb = report.cells[b];
      report.dominates[a][b] = sa.replicates > 0 && sb.replicates > 0 && sa.mean_logloss < sb.mean_logloss;
    }
  }
  return report;
}

SweepReport run_sweep(const ExperimentConfig& config) {
  validate(config);
  const PreparedData data = prepare_data(config);
  return run_sweep(config, data);
}

SweepReport run_sweep(const ExperimentConfig& config, const PreparedData& data) {
  validate(config);
  struct Job {
    std::size_t cell;
    std::uint64_t seed;
  };
  std::vector<Job> jobs;
  for (std::size_t c = 0; c < config.grid.size(); ++c)
    for (std::size_t r = 0; r < config.replicates; ++r) jobs.push_back({c, config.replicate_seed(r)});

  // Each slot is written by exactly one worker; ordering is fixed by job index.
  std::vector<std::optional<RunMetrics>> results(jobs.size());
  std::vector<std::string> errors(jobs.size());
  std::atomic<std::size_t> next{0};
  auto worker = [&] {
    for (std::size_t j = next++; j < jobs.size(); j = next++) {
      try {
        results[j] = run_training(config, data, config.grid[jobs[j].cell], jobs[j].seed);
      } catch (const std::exception& e) {
        errors[j] = "seed " + std::to_string(jobs[j].seed) + ": " + e.what();
      }
    }
  };
  const std::size_t threads = std::min(config.threads, jobs.size());
  if (threads <= 1) {
    worker();
  } else {
    std::vector<std::thread> pool;
    for (std::size_t t = 0; t < threads; ++t) pool.emplace_back(worker);
    for (std::thread& t : pool) t.join();
  }

  std::vector<RunMetrics> runs;
  std::vector<std::pair<std::size_t, std::string>> failures;
  for (std::size_t j = 0; j < jobs.size(); ++j) {
    if (results[j]) {
      runs.push_back(std::move(*results[j]));
    } else {
      failures.emplace_back(jobs[j].cell, errors[j]);
    }
  }
  SweepReport report = summarize(config, std::move(runs), failures);
  if (!config.out.empty()) write_sweep_outputs(report, config.out);
  return report;
}

json summary_json(const SweepReport& report) {
  json cells = json::array();
  for (const CellSummary& s : report.cells) {
    cells.push_back({{"k", s.cell.k ? json(*s.cell.k) : json(nullptr)},
                     {"d", s.cell.d},
                     {"replicates", s.replicates},
                     {"mean_logloss", s.mean_logloss},
                     {"std_logloss", s.std_logloss},
                     {"mean_auc", s.mean_auc},
                     {"std_auc", s.std_auc},
                     {"train_params", s.train_params},
                     {"inference_params", s.inference_params},
                     {"zero_cost", s.cell.zero_cost()},
                     {"errors", s.errors}});
  }
  json dominance = json::array();
  for (std::size_t a = 0; a < report.dominates.size(); ++a)
    for (std::size_t b = 0; b < report.dominates[a].size(); ++b)
      if (report.dominates[a][b]) dominance.push_back({{"better", report.cells[a].cell.label()},
                                                       {"worse", report.cells[b].cell.label()}});
  // A zero-cost cell that beats a baseline with a larger d.
  json zero_cost_wins = json::array();
  for (std::size_t a = 0; a < report.cells.size(); ++a) {
    if (!report.cells[a].cell.zero_cost()) continue;
    for (std::size_t b = 0; b < report.cells.size(); ++b) {
      const GridCell& other = report.cells[b].cell;
      if (other.is_baseline() && other.d > report.cells[a].cell.d && report.dominates[a][b]) {
        zero_cost_wins.push_back({{"cell", report.cells[a].cell.label()}, {"beats", other.label()}});
      }
    }
  }
  return json{{"cells", cells}, {"dominance", dominance}, {"zero_cost_wins", zero_cost_wins}};
}

std::string summary_csv(const SweepReport& report) {
  std::string out =
      "k,d,replicates,mean_logloss,std_logloss,mean_auc,std_auc,ms_per_iter,train_params,inference_params\n";
  for (const CellSummary& s : report.cells) {
    out += (s.cell.k ? std::to_string(*s.cell.k) : std::string("baseline")) + "," + std::to_string(s.cell.d) + "," +
           std::to_string(s.replicates) + "," + fmt(s.mean_logloss) + "," + fmt(s.std_logloss) + "," +
           fmt(s.mean_auc) + "," + fmt(s.std_auc) + "," + fmt(s.mean_ms_per_iter) + "," +
           std::to_string(s.train_params) + "," + std::to_string(s.inference_params) + "\n";
  }
  return out;
}

void write_sweep_outputs(const SweepReport& report, const fs::path& dir) {
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec) throw Error(ErrorKind::kIo, "cannot create " + dir.string() + ": " + ec.message());
  std::string runs, timing;
  for (const RunMetrics& r : report.runs) {
    runs += to_json(r).dump() + "\n";
    timing += timing_json(r).dump() + "\n";
  }
  write_text(dir / "runs.jsonl", runs);
  write_text(dir / "timing.jsonl", timing);
  write_text(dir / "summary.json", summary_json(report).dump(2) + "\n");
  write_text(dir / "summary.csv", summary_csv(report));
}

}  // namespace mlet
