// Acceptance suite: eleven end-to-end criteria, one PASS/FAIL line each.
// Exit status is 0 only when every criterion passes. Wall-clock budgets are
// part of each criterion.
#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "mlet/dynamics/linear_net.hpp"
#include "mlet/embedding/table.hpp"
#include "mlet/harness/bench.hpp"
#include "mlet/harness/experiment.hpp"
#include "mlet/harness/metrics.hpp"
#include "mlet/harness/sweep.hpp"
#include "mlet/linalg/decompose.hpp"
#include "mlet/linalg/rng.hpp"
#include "mlet/model/ctr_model.hpp"

namespace {

using namespace mlet;
namespace fs = std::filesystem;

struct Outcome {
  bool pass = false;
  std::string detail;
};

std::string fmt(const char* f, auto... args) {
  char buf[512];
  std::snprintf(buf, sizeof buf, f, args...);
  return buf;
}

// ---- 1: exact factorization for k >= d ---------------------------------------

Outcome exact_factorization() {
  Rng rng(101);
  double worst = 0.0;
  std::size_t ok = 0;
  for (int trial = 0; trial < 100; ++trial) {
    const std::size_t n = 1 + rng.below(32);
    const std::size_t d = 1 + rng.below(8);
    const std::size_t k = d + rng.below(3 * d + 1);  // [d, 4d]
    const EmbeddingTable w{gaussian_mat(n, d, 1.0, rng)};
    const EmbeddingTable back = collapse(construct_factors(w, k));
    const double err = frobenius_norm(back.w - w.w) / frobenius_norm(w.w);
    worst = std::max(worst, err);
    if (err <= 1e-9) ++ok;
  }
  return {ok == 100, fmt("%zu/100 within 1e-9, worst relative error %.3g", ok, worst)};
}

// ---- 2: rank bound for k < d -------------------------------------------------

Outcome rank_bound() {
  Rng rng(202);
  double worst = 0.0;
  std::size_t ok = 0;
  for (int trial = 0; trial < 100; ++trial) {
    const std::size_t d = 2 + rng.below(7);      // [2, 8]
    const std::size_t k = 1 + rng.below(d - 1);  // [1, d-1]
    const std::size_t n = k + 1 + rng.below(32 - k);
    const Mat w = matmul(gaussian_mat(n, k, 1.0, rng), gaussian_mat(k, d, 1.0, rng));
    const std::vector<double> s = singular_values(w);
    const double ratio = s[k] / s[0];
    worst = std::max(worst, ratio);
    if (s[k] <= 1e-9 * s[0]) ++ok;
  }
  return {ok == 100, fmt("%zu/100 with s[k+1] <= 1e-9 s[1], worst ratio %.3g", ok, worst)};
}

// ---- 3: singular-value update law --------------------------------------------

LinearNetSpec law_spec(std::size_t depth, double lr) {
  LinearNetSpec s;
  s.dims.assign(depth + 1, 6);
  s.target = gaussian_mat(6, 6, 1.0, std::uint64_t{0} ^ 0x7A5C3);
  s.lr = lr;
  s.init = LinearInit::kBalanced;
  s.seed = 0;
  return s;
}

// Both step sizes are checked at the same physical times t = step · lr.
Outcome update_law() {
  std::vector<std::size_t> coarse;
  std::vector<std::size_t> fine;
  for (std::size_t t = 0; t <= 200; t += 20) {
    coarse.push_back(t);
    fine.push_back(10 * t);
  }
  bool pass = true;
  std::string detail;
  for (std::size_t depth = 1; depth <= 3; ++depth) {
    const double big = verify_eq6(law_spec(depth, 1e-3), coarse).max_deviation;
    const double small = verify_eq6(law_spec(depth, 1e-4), fine).max_deviation;
    const bool ok = big <= 0.05 && small <= 0.2 * big;
    pass = pass && ok;
    detail += fmt("%sN=%zu: %.4f at 1e-3, %.4f at 1e-4 (ratio %.3f)%s", depth == 1 ? "" : "; ", depth, big, small,
                  small / big, ok ? "" : " FAIL");
  }
  return {pass, detail};
}

// ---- 4: polarization ---------------------------------------------------------

Outcome polarization() {
  const PolarizationConfig config;
  std::size_t wins = 0;
  std::vector<double> shallow_rank;
  std::vector<double> deep_rank;
  for (std::uint64_t seed = 0; seed < 10; ++seed) {
    const PolarizationPair p = polarization_pair(config, seed);
    if (p.deep.sv_ratio < p.shallow.sv_ratio) ++wins;
    shallow_rank.push_back(static_cast<double>(p.shallow.effective_rank));
    deep_rank.push_back(static_cast<double>(p.deep.effective_rank));
  }
  const auto median = [](std::vector<double> v) {
    std::sort(v.begin(), v.end());
    return 0.5 * (v[(v.size() - 1) / 2] + v[v.size() / 2]);
  };
  const double ms = median(shallow_rank);
  const double md = median(deep_rank);
  return {wins >= 9 && md <= ms,
          fmt("N=2 has smaller s2/s1 in %zu/10 pairs; median effective rank N=1 %.1f, N=2 %.1f", wins, ms, md)};
}

// ---- 5, 6, 7: synthetic CTR sweep --------------------------------------------

ExperimentConfig ctr_config() {
  ExperimentConfig c;
  c.dataset.synthetic.examples = 500000;
  c.dataset.synthetic.seed = 7;
  c.dataset.synthetic.cardinalities = std::vector<std::size_t>(8, 100);
  c.lr = 0.2;
  c.batch = 128;
  c.epochs = 1;
  c.replicates = 5;
  c.base_seed = 1;
  c.grid = {GridCell{}, GridCell{4, 4}, GridCell{8, 4}, GridCell{16, 4}, GridCell{32, 4}};
  return c;
}

struct CtrSweep {
  PreparedData data;
  SweepReport report;
  double seconds = 0.0;
};

const RunMetrics* find_run(const SweepReport& r, std::optional<std::size_t> k, std::uint64_t seed) {
  for (const RunMetrics& m : r.runs)
    if (m.cell.k == k && m.seed == seed) return &m;
  return nullptr;
}

const CellSummary* find_cell(const SweepReport& r, std::optional<std::size_t> k) {
  for (const CellSummary& c : r.cells)
    if (c.cell.k == k) return &c;
  return nullptr;
}

Outcome beats_baseline(const CtrSweep& s) {
  const ExperimentConfig c = ctr_config();
  std::size_t wins = 0;
  std::string detail;
  for (std::size_t r = 0; r < c.replicates; ++r) {
    const std::uint64_t seed = c.replicate_seed(r);
    const RunMetrics* base = find_run(s.report, std::nullopt, seed);
    const RunMetrics* mlet = find_run(s.report, 32, seed);
    if (base == nullptr || mlet == nullptr) {
      detail += fmt(" seed %llu missing", static_cast<unsigned long long>(seed));
      continue;
    }
    if (mlet->val_logloss < base->val_logloss) ++wins;
    detail += fmt(" %.4f/%.4f", mlet->val_logloss, base->val_logloss);
  }
  return {wins >= 4 && s.seconds < 600.0,
          fmt("k=32 beats baseline in %zu/5 seeds (k32/baseline:", wins) + detail + ")"};
}

Outcome k_monotone(const CtrSweep& s) {
  bool pass = s.seconds < 1200.0;
  std::string detail = "mean (std):";
  const CellSummary* prev = nullptr;
  for (std::size_t k : {4, 8, 16, 32}) {
    const CellSummary* cur = find_cell(s.report, k);
    if (cur == nullptr || cur->replicates == 0) return {false, fmt("k=%zu has no successful runs", k)};
    // A step may rise by at most the larger of the two cells' deviations.
    if (prev != nullptr && cur->mean_logloss > prev->mean_logloss + std::max(prev->std_logloss, cur->std_logloss))
      pass = false;
    detail += fmt(" k=%zu %.4f (%.4f)", k, cur->mean_logloss, cur->std_logloss);
    prev = cur;
  }
  return {pass, detail};
}

Outcome collapse_equivalence(const CtrSweep& s) {
  std::size_t expected = 0;
  for (std::size_t n : s.data.train.cardinalities) expected += n * 4;
  std::size_t checked = 0;
  std::size_t ok = 0;
  double worst = 0.0;
  for (const RunMetrics& m : s.report.runs) {
    if (m.cell.is_baseline()) continue;
    ++checked;
    worst = std::max(worst, m.collapse_gap);
    if (m.collapse_gap <= 1e-9 && m.embedding_inference_params == expected) ++ok;
  }
  std::size_t failed = 0;
  for (const CellSummary& c : s.report.cells) failed += c.errors.size();
  return {checked > 0 && ok == checked && failed == 0,
          fmt("%zu/%zu MLET models collapse within 1e-9 with %zu inference params (worst gap %.3g, %zu failed runs)",
              ok, checked, expected, worst, failed)};
}

// ---- 8: gradient oracle ------------------------------------------------------

Outcome gradient_oracle() {
  ModelConfig c;
  c.num_dense = 3;
  c.cat_cardinalities = {7, 10, 5};
  c.d = 4;
  c.k = 8;
  c.bottom_layers = {6, 4};
  c.top_layers = {5, 1};
  c.seed = 3;
  CtrModel model = init_model(c);

  Rng rng(4);
  MiniBatch batch;
  batch.dense = gaussian_mat(4, c.num_dense, 1.0, rng);
  batch.cats.assign(c.num_features(), std::vector<CategoryIndex>(4));
  for (std::size_t f = 0; f < c.num_features(); ++f)
    for (auto& idx : batch.cats[f]) idx = static_cast<CategoryIndex>(rng.below(c.cat_cardinalities[f]));
  batch.labels = {1.0, 0.0, 0.0, 1.0};

  const auto analytic = named_gradients(model, backward(model, forward(model, batch), batch.labels));
  auto params = named_parameters(model);
  const double h = 1e-6;
  double worst = 0.0;
  std::string worst_name;
  for (std::size_t p = 0; p < params.size(); ++p) {
    Mat& w = *params[p].second;
    Mat numeric(w.rows(), w.cols());
    for (std::size_t i = 0; i < w.size(); ++i) {
      const double saved = w.data()[i];
      w.data()[i] = saved + h;
      const double up = logloss(predict(model, batch), batch.labels);
      w.data()[i] = saved - h;
      const double down = logloss(predict(model, batch), batch.labels);
      w.data()[i] = saved;
      numeric.data()[i] = (up - down) / (2.0 * h);
    }
    const double err = frobenius_norm(analytic[p].second - numeric) / std::max(frobenius_norm(numeric), 1e-8);
    if (err > worst) {
      worst = err;
      worst_name = params[p].first;
    }
  }
  return {worst <= 1e-5,
          fmt("%zu parameter groups, worst relative error %.3g (%s)", params.size(), worst, worst_name.c_str())};
}

// ---- 9: metric oracles -------------------------------------------------------

double brute_force_auc(const std::vector<double>& s, const std::vector<double>& y) {
  double wins = 0.0;
  double pairs = 0.0;
  for (std::size_t i = 0; i < s.size(); ++i) {
    if (y[i] != 1.0) continue;
    for (std::size_t j = 0; j < s.size(); ++j) {
      if (y[j] != 0.0) continue;
      pairs += 1.0;
      if (s[i] > s[j])
        wins += 1.0;
      else if (s[i] == s[j])
        wins += 0.5;
    }
  }
  return wins / pairs;
}

Outcome metric_oracles() {
  Rng rng(909);
  std::size_t exact = 0;
  for (int trial = 0; trial < 1000; ++trial) {
    const std::size_t n = 2 + rng.below(199);
    const std::uint64_t levels = 1 + rng.below(trial % 2 == 0 ? 5 : 1000);  // few levels force ties
    std::vector<double> s(n);
    std::vector<double> y(n);
    for (std::size_t i = 0; i < n; ++i) {
      s[i] = static_cast<double>(rng.below(levels)) / static_cast<double>(levels);
      y[i] = static_cast<double>(rng.below(2));
    }
    y[0] = 1.0;
    y[1] = 0.0;
    if (auc(s, y) == brute_force_auc(s, y)) ++exact;
  }
  const double uniform = logloss(std::vector<double>{0.5, 0.5, 0.5}, std::vector<double>{1.0, 0.0, 1.0});
  const double mixed = logloss(std::vector<double>{0.9, 0.2}, std::vector<double>{1.0, 0.0});
  const double perfect = logloss(std::vector<double>{1.0, 0.0}, std::vector<double>{1.0, 0.0});
  const bool hand = std::abs(uniform - 0.693147) <= 1e-6 && std::abs(mixed - 0.164252) <= 1e-6 && perfect <= 1e-11;
  return {exact == 1000 && hand,
          fmt("AUC exact on %zu/1000; logloss %.6f, %.6f, perfect %.3g", exact, uniform, mixed, perfect)};
}

// ---- 10: determinism ---------------------------------------------------------

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

Outcome determinism() {
  ExperimentConfig c;
  c.dataset.synthetic.examples = 20000;
  c.dataset.synthetic.seed = 3;
  c.dataset.synthetic.cardinalities = std::vector<std::size_t>(8, 100);
  c.replicates = 2;
  c.base_seed = 5;
  c.grid = {GridCell{}, GridCell{8, 4}, GridCell{2, 4, true}};
  const fs::path root = fs::temp_directory_path() / "mlet_acceptance_determinism";
  fs::remove_all(root);
  c.out = root / "first";
  run_sweep(c);
  c.out = root / "second";
  run_sweep(c);
  std::string detail;
  bool pass = true;
  for (const char* name : {"runs.jsonl", "summary.json"}) {
    const std::string a = slurp(root / "first" / name);
    const std::string b = slurp(root / "second" / name);
    const bool same = !a.empty() && a == b;
    pass = pass && same;
    detail += fmt("%s%s %s (%zu bytes)", detail.empty() ? "" : ", ", name, same ? "identical" : "DIFFERS", a.size());
  }
  fs::remove_all(root);
  return {pass, detail};
}

// ---- 11: overhead report -----------------------------------------------------

Outcome overhead() {
  ExperimentConfig c = ctr_config();
  c.dataset.synthetic.examples = 50000;
  const PreparedData data = prepare_data(c);
  // The k = 32, d = 4 shape of the sweep above.
  const BenchReport r = run_bench(c, data, {4}, 8, 400, 40, c.replicate_seed(0));
  const BenchRow& row = r.rows.front();
  return {std::isfinite(row.ratio) && row.ratio < 2.0,
          fmt("d=4: baseline %.4f ms, k=32 %.4f ms, ratio %.3f (reference %.2f)", row.baseline.median_ms,
              row.mlet.median_ms, row.ratio, kReferenceOverheadRatio)};
}

// ---- driver ------------------------------------------------------------------

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point start) {
  return std::chrono::duration<double>(Clock::now() - start).count();
}

struct Runner {
  int failures = 0;

  // budget_s <= 0 means no time limit.
  void run(int id, const char* name, double budget_s, const std::function<Outcome()>& fn) {
    const auto start = Clock::now();
    Outcome o;
    try {
      o = fn();
    } catch (const std::exception& e) {
      o = {false, std::string("threw: ") + e.what()};
    }
    const double s = seconds_since(start);
    if (budget_s > 0.0 && s >= budget_s) {
      o.pass = false;
      o.detail += fmt("; over the %.0f s budget", budget_s);
    }
    report(id, name, o, s);
  }

  void report(int id, const char* name, const Outcome& o, double s) {
    if (!o.pass) ++failures;
    std::printf("%s %2d %-28s %s [%.1f s]\n", o.pass ? "PASS" : "FAIL", id, name, o.detail.c_str(), s);
    std::fflush(stdout);
  }
};

}  // namespace

int main() {
  Runner r;
  r.run(1, "exact-factorization", 5.0, exact_factorization);
  r.run(2, "rank-bound", 5.0, rank_bound);
  r.run(3, "update-law", 30.0, update_law);
  r.run(4, "polarization", 120.0, polarization);

  // 5, 6 and 7 share one sweep; its time counts against 5 and 6.
  std::optional<CtrSweep> sweep;
  std::string sweep_error;
  try {
    const auto start = Clock::now();
    const ExperimentConfig c = ctr_config();
    CtrSweep s;
    s.data = prepare_data(c);
    s.report = run_sweep(c, s.data);
    s.seconds = seconds_since(start);
    sweep = std::move(s);
  } catch (const std::exception& e) {
    sweep_error = std::string("sweep threw: ") + e.what();
  }
  const auto with_sweep_time = [&](int id, const char* name, Outcome (*fn)(const CtrSweep&)) {
    const auto start = Clock::now();
    Outcome o{false, sweep_error};
    try {
      if (sweep) o = fn(*sweep);
    } catch (const std::exception& e) {
      o = {false, std::string("threw: ") + e.what()};
    }
    r.report(id, name, o, (sweep ? sweep->seconds : 0.0) + seconds_since(start));
  };
  with_sweep_time(5, "mlet-beats-baseline", beats_baseline);
  with_sweep_time(6, "k-monotone", k_monotone);
  with_sweep_time(7, "collapse-equivalence", collapse_equivalence);

  r.run(8, "gradient-oracle", 60.0, gradient_oracle);
  r.run(9, "metric-oracles", 0.0, metric_oracles);
  r.run(10, "determinism", 0.0, determinism);
  r.run(11, "overhead-report", 0.0, overhead);

  std::printf("%d of 11 criteria failed\n", r.failures);
  return r.failures == 0 ? 0 : 1;
}
