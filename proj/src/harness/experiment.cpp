#include "mlet/harness/experiment.hpp"

#include <chrono>
#include <cmath>
#include <fstream>
#include <limits>
#include <set>
#include <utility>

#include "mlet/error.hpp"
#include "mlet/harness/metrics.hpp"
#include "mlet/linalg/rng.hpp"
#include "mlet/model/checkpoint.hpp"

namespace mlet {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

constexpr std::size_t kEvalChunk = 4096;

template <typename T>
void read_key(const json& j, const char* key, T& field) {
  if (j.contains(key) && !j.at(key).is_null()) j.at(key).get_to(field);
}

void check_keys(const json& j, const char* where, std::initializer_list<const char*> allowed) {
  if (!j.is_object()) throw Error(ErrorKind::kFormat, std::string(where) + " must be an object");
  for (const auto& [key, value] : j.items()) {
    bool ok = false;
    for (const char* a : allowed) ok = ok || key == a;
    if (!ok) throw Error(ErrorKind::kFormat, std::string(where) + ": unknown key '" + key + "'");
  }
}

SyntheticParams parse_synthetic(const json& j) {
  check_keys(j, "dataset.synthetic",
             {"examples", "num_dense", "cardinalities", "true_rank", "latent_dim", "noise", "signal_scale",
              "dense_share", "zipf_exponent", "seed"});
  SyntheticParams p;
  read_key(j, "examples", p.examples);
  read_key(j, "num_dense", p.num_dense);
  read_key(j, "cardinalities", p.cardinalities);
  read_key(j, "true_rank", p.true_rank);
  read_key(j, "latent_dim", p.latent_dim);
  read_key(j, "noise", p.noise);
  read_key(j, "signal_scale", p.signal_scale);
  read_key(j, "dense_share", p.dense_share);
  read_key(j, "zipf_exponent", p.zipf_exponent);
  read_key(j, "seed", p.seed);
  return p;
}

json synthetic_json(const SyntheticParams& p) {
  return json{{"examples", p.examples},         {"num_dense", p.num_dense},
              {"cardinalities", p.cardinalities}, {"true_rank", p.true_rank},
              {"latent_dim", p.latent_dim},       {"noise", p.noise},
              {"signal_scale", p.signal_scale},   {"dense_share", p.dense_share},
              {"zipf_exponent", p.zipf_exponent}, {"seed", p.seed}};
}

json cell_json(const GridCell& c) {
  return json{{"k", c.k ? json(*c.k) : json(nullptr)}, {"d", c.d}, {"zero_cost_probe", c.zero_cost_probe}};
}

std::vector<std::size_t> eval_steps(std::size_t steps_per_epoch, std::size_t epochs, std::size_t per_epoch) {
  std::set<std::size_t> steps{0};
  for (std::size_t e = 0; e < epochs; ++e) {
    for (std::size_t i = 1; i <= per_epoch; ++i) {
      steps.insert(e * steps_per_epoch + (i * steps_per_epoch + per_epoch - 1) / per_epoch);
    }
  }
  steps.insert(epochs * steps_per_epoch);
  return {steps.begin(), steps.end()};
}

std::uint64_t shuffle_seed(std::uint64_t seed, std::size_t epoch) {
  return Rng(seed).split(0x5348554646000000ULL + epoch).next_u64();
}

}  // namespace

std::string GridCell::label() const {
  return (k ? "k=" + std::to_string(*k) : std::string("baseline")) + ",d=" + std::to_string(d);
}

std::uint64_t ExperimentConfig::replicate_seed(std::size_t r) const {
  return r < seeds.size() ? seeds[r] : base_seed + r;
}

void validate(const ExperimentConfig& c) {
  auto fail = [](const std::string& msg) { throw Error(ErrorKind::kInvalidArgument, "experiment config: " + msg); };
  if (c.replicates == 0) fail("replicates must be >= 1");
  if (!c.seeds.empty() && c.seeds.size() < c.replicates) fail("fewer seeds than replicates");
  if (c.grid.empty()) fail("grid must not be empty");
  if (!(c.lr >= 0.0) || !std::isfinite(c.lr)) fail("lr must be finite and >= 0");
  if (c.batch == 0) fail("batch must be >= 1");
  if (c.epochs == 0) fail("epochs must be >= 1");
  if (c.evals_per_epoch == 0) fail("evals_per_epoch must be >= 1");
  if (c.threads == 0) fail("threads must be >= 1");
  for (std::size_t i = 0; i < c.grid.size(); ++i) {
    const GridCell& cell = c.grid[i];
    for (std::size_t j = 0; j < i; ++j)
      if (c.grid[j].k == cell.k && c.grid[j].d == cell.d) fail("duplicate grid cell " + cell.label());
    if (cell.d == 0) fail("grid cell with d = 0");
    if (cell.k && *cell.k == 0) fail("grid cell with k = 0");
    if (cell.k && *cell.k < cell.d && !cell.zero_cost_probe) {
      fail("cell " + cell.label() + " has k < d; mark it \"zero_cost_probe\": true to run it");
    }
  }
}

ExperimentConfig parse_experiment_config(const json& j) {
  try {
    check_keys(j, "config",
               {"dataset", "split", "model", "train", "replicates", "seeds", "base_seed", "grid", "out", "threads"});
    ExperimentConfig c;
    if (j.contains("dataset")) {
      const json& ds = j["dataset"];
      check_keys(ds, "dataset", {"synthetic", "file", "format", "max_rows", "hash_mod", "criteo_dense",
                                 "criteo_categorical"});
      if (ds.contains("file") && ds.contains("synthetic")) {
        throw Error(ErrorKind::kFormat, "dataset: give either \"file\" or \"synthetic\", not both");
      }
      if (ds.contains("synthetic")) c.dataset.synthetic = parse_synthetic(ds["synthetic"]);
      if (ds.contains("file")) {
        c.dataset.file = ds["file"].get<std::string>();
        c.dataset.format = parse_format(ds.value("format", std::string("criteo-tsv")));
        read_key(ds, "max_rows", c.dataset.load.max_rows);
        read_key(ds, "hash_mod", c.dataset.load.hash_mod);
        read_key(ds, "criteo_dense", c.dataset.load.criteo_dense);
        read_key(ds, "criteo_categorical", c.dataset.load.criteo_categorical);
      }
    }
    if (j.contains("split")) {
      const json& s = j["split"];
      check_keys(s, "split", {"train", "val", "test", "mode", "seed"});
      read_key(s, "train", c.split.train);
      read_key(s, "val", c.split.val);
      read_key(s, "test", c.split.test);
      read_key(s, "seed", c.split.seed);
      const std::string mode = s.value("mode", std::string("random"));
      if (mode == "random") {
        c.split.mode = SplitMode::kRandom;
      } else if (mode == "sequential") {
        c.split.mode = SplitMode::kSequential;
      } else {
        throw Error(ErrorKind::kFormat, "split.mode must be \"random\" or \"sequential\", got \"" + mode + "\"");
      }
    }
    if (j.contains("model")) {
      const json& m = j["model"];
      check_keys(m, "model", {"bottom_hidden", "top_hidden", "concat_dense", "embedding_init_std", "embedding_depth"});
      read_key(m, "bottom_hidden", c.model.bottom_hidden);
      read_key(m, "top_hidden", c.model.top_hidden);
      read_key(m, "concat_dense", c.model.concat_dense);
      read_key(m, "embedding_init_std", c.model.embedding_init_std);
      read_key(m, "embedding_depth", c.model.embedding_depth);
    }
    if (j.contains("train")) {
      const json& t = j["train"];
      check_keys(t, "train", {"lr", "batch", "epochs", "evals_per_epoch"});
      read_key(t, "lr", c.lr);
      read_key(t, "batch", c.batch);
      read_key(t, "epochs", c.epochs);
      read_key(t, "evals_per_epoch", c.evals_per_epoch);
    }
    read_key(j, "replicates", c.replicates);
    read_key(j, "seeds", c.seeds);
    read_key(j, "base_seed", c.base_seed);
    read_key(j, "threads", c.threads);
    if (j.contains("out")) c.out = j["out"].get<std::string>();
    if (j.contains("grid")) {
      c.grid.clear();
      for (const json& cell : j["grid"]) {
        check_keys(cell, "grid cell", {"k", "d", "zero_cost_probe"});
        GridCell g;
        if (cell.contains("k") && !cell["k"].is_null()) g.k = cell["k"].get<std::size_t>();
        read_key(cell, "d", g.d);
        read_key(cell, "zero_cost_probe", g.zero_cost_probe);
        c.grid.push_back(g);
      }
    }
    validate(c);
    return c;
  } catch (const json::exception& e) {
    throw Error(ErrorKind::kFormat, std::string("config: ") + e.what());
  }
}

ExperimentConfig load_experiment_config(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorKind::kIo, "cannot open config " + path.string());
  json j;
  try {
    j = json::parse(in, nullptr, true, /*ignore_comments=*/true);
  } catch (const json::exception& e) {
    throw Error(ErrorKind::kFormat, path.string() + ": " + e.what());
  }
  return parse_experiment_config(j);
}

json to_json(const ExperimentConfig& c) {
  json dataset;
  if (c.dataset.file) {
    dataset = json{{"file", c.dataset.file->string()},
                   {"format", std::string(to_string(c.dataset.format))},
                   {"max_rows", c.dataset.load.max_rows},
                   {"hash_mod", c.dataset.load.hash_mod},
                   {"criteo_dense", c.dataset.load.criteo_dense},
                   {"criteo_categorical", c.dataset.load.criteo_categorical}};
  } else {
    dataset = json{{"synthetic", synthetic_json(c.dataset.synthetic)}};
  }
  json grid = json::array();
  for (const GridCell& cell : c.grid) grid.push_back(cell_json(cell));
  return json{{"dataset", dataset},
              {"split",
               {{"train", c.split.train},
                {"val", c.split.val},
                {"test", c.split.test},
                {"mode", c.split.mode == SplitMode::kRandom ? "random" : "sequential"},
                {"seed", c.split.seed}}},
              {"model",
               {{"bottom_hidden", c.model.bottom_hidden},
                {"top_hidden", c.model.top_hidden},
                {"concat_dense", c.model.concat_dense},
                {"embedding_init_std", c.model.embedding_init_std},
                {"embedding_depth", c.model.embedding_depth}}},
              {"train",
               {{"lr", c.lr}, {"batch", c.batch}, {"epochs", c.epochs}, {"evals_per_epoch", c.evals_per_epoch}}},
              {"replicates", c.replicates},
              {"seeds", c.seeds},
              {"base_seed", c.base_seed},
              {"grid", grid},
              {"out", c.out.string()},
              {"threads", c.threads}};
}

PreparedData prepare_data(const ExperimentConfig& config) {
  Dataset full;
  if (config.dataset.file) {
    LoadOptions options = config.dataset.load;
    options.standardize = false;
    full = load_ctr_file(*config.dataset.file, config.dataset.format, options);
  } else {
    full = generate_synthetic(config.dataset.synthetic);
  }
  PreparedData out;
  out.content_hash = content_hash(full);
  Splits parts = split(full, config.split);
  const Standardizer standardizer = Standardizer::fit(parts.train.dense);
  standardizer.apply(parts.train.dense);
  standardizer.apply(parts.val.dense);
  standardizer.apply(parts.test.dense);
  out.train = std::move(parts.train);
  out.val = std::move(parts.val);
  out.test = std::move(parts.test);
  return out;
}

ModelConfig model_config_for(const ExperimentConfig& config, const PreparedData& data, const GridCell& cell,
                             std::uint64_t seed) {
  ModelConfig m;
  m.num_dense = data.train.num_dense();
  m.cat_cardinalities = data.train.cardinalities;
  m.d = cell.d;
  m.k = cell.k;
  m.embedding_depth = config.model.embedding_depth;
  m.bottom_layers = config.model.bottom_hidden;
  m.bottom_layers.push_back(cell.d);
  m.top_layers = config.model.top_hidden;
  m.top_layers.push_back(1);
  m.concat_dense = config.model.concat_dense;
  m.embedding_init_std = config.model.embedding_init_std;
  m.seed = seed;
  return m;
}

EvalPoint evaluate(const CtrModel& model, const Dataset& ds, const std::string& split_name, std::size_t step) {
  if (ds.size() == 0) throw Error(ErrorKind::kInvalidArgument, "evaluate: empty " + split_name + " split");
  std::vector<double> probs;
  std::vector<double> labels;
  probs.reserve(ds.size());
  labels.reserve(ds.size());
  BatchIterator it(ds, kEvalChunk, std::nullopt);
  MiniBatch batch;
  while (it.next(batch)) {
    const std::vector<double> p = predict(model, batch);
    probs.insert(probs.end(), p.begin(), p.end());
    labels.insert(labels.end(), batch.labels.begin(), batch.labels.end());
  }
  EvalPoint point;
  point.step = step;
  point.split = split_name;
  point.logloss = logloss(probs, labels);
  try {
    point.auc = auc(probs, labels);
  } catch (const Error&) {
    point.auc = std::numeric_limits<double>::quiet_NaN();
  }
  return point;
}

RunMetrics run_training(const ExperimentConfig& config, const PreparedData& data, const GridCell& cell,
                        std::uint64_t seed, CtrModel* trained) {
  CtrModel model = init_model(model_config_for(config, data, cell, seed));
  RunMetrics metrics;
  metrics.cell = cell;
  metrics.seed = seed;

  const std::size_t steps_per_epoch = (data.train.size() + config.batch - 1) / config.batch;
  const std::vector<std::size_t> evals = eval_steps(steps_per_epoch, config.epochs, config.evals_per_epoch);
  std::size_t next_eval = 0;
  auto maybe_eval = [&](std::size_t step) {
    if (next_eval < evals.size() && evals[next_eval] == step) {
      // Saturated outputs can keep the clamped loss finite after weights overflow.
      for (const auto& [name, param] : named_parameters(std::as_const(model))) {
        if (!all_finite(*param)) {
          throw Error(ErrorKind::kDivergence, "parameter " + name + " is non-finite at step " + std::to_string(step) +
                                                  " (" + cell.label() + ", seed " + std::to_string(seed) + ")");
        }
      }
      metrics.evals.push_back(evaluate(model, data.val, "val", step));
      ++next_eval;
    }
  };

  using Clock = std::chrono::steady_clock;
  Clock::duration train_time{};
  std::size_t step = 0;
  maybe_eval(step);
  for (std::size_t epoch = 0; epoch < config.epochs; ++epoch) {
    BatchIterator it(data.train, config.batch, shuffle_seed(seed, epoch));
    MiniBatch batch;
    while (it.next(batch)) {
      const auto t0 = Clock::now();
      const double loss = train_step(model, batch, config.lr);
      train_time += Clock::now() - t0;
      ++step;
      if (!std::isfinite(loss)) {
        throw Error(ErrorKind::kDivergence, "training loss is " + std::to_string(loss) + " at step " +
                                                std::to_string(step) + " (" + cell.label() + ", seed " +
                                                std::to_string(seed) + ")");
      }
      maybe_eval(step);
    }
  }
  metrics.steps = step;
  metrics.ms_per_iter =
      step == 0 ? 0.0 : std::chrono::duration<double, std::milli>(train_time).count() / static_cast<double>(step);

  CtrModel inference = collapse_model(model);
  const EvalPoint trained_val = metrics.evals.back();
  const EvalPoint collapsed_val = evaluate(inference, data.val, "val", step);
  metrics.collapse_gap = std::abs(collapsed_val.logloss - trained_val.logloss);
  if (!(metrics.collapse_gap <= kCollapseTolerance)) {
    throw Error(ErrorKind::kInvariant, "collapse changed val LogLoss by " + std::to_string(metrics.collapse_gap) +
                                           " (" + cell.label() + ", seed " + std::to_string(seed) + ")");
  }
  metrics.val_logloss = collapsed_val.logloss;
  metrics.val_auc = collapsed_val.auc;
  const EvalPoint test = evaluate(inference, data.test, "test", step);
  metrics.evals.push_back(test);
  metrics.test_logloss = test.logloss;
  metrics.test_auc = test.auc;

  const ParameterCounts trained_counts = parameter_counts(model);
  const ParameterCounts inference_counts = parameter_counts(inference);
  metrics.embedding_train_params = trained_counts.embedding_train;
  metrics.embedding_inference_params = inference_counts.embedding_train;
  metrics.mlp_params = trained_counts.mlp;
  if (trained) *trained = std::move(inference);
  return metrics;
}

json to_json(const RunMetrics& m) {
  json evals = json::array();
  for (const EvalPoint& e : m.evals) {
    evals.push_back({{"step", e.step}, {"split", e.split}, {"logloss", e.logloss}, {"auc", e.auc}});
  }
  return json{{"k", m.cell.k ? json(*m.cell.k) : json(nullptr)},
              {"d", m.cell.d},
              {"seed", m.seed},
              {"steps", m.steps},
              {"val_logloss", m.val_logloss},
              {"val_auc", m.val_auc},
              {"test_logloss", m.test_logloss},
              {"test_auc", m.test_auc},
              {"collapse_gap", m.collapse_gap},
              {"embedding_train_params", m.embedding_train_params},
              {"embedding_inference_params", m.embedding_inference_params},
              {"mlp_params", m.mlp_params},
              {"zero_cost", m.cell.zero_cost()},
              {"evals", evals}};
}

json timing_json(const RunMetrics& m) {
  return json{{"k", m.cell.k ? json(*m.cell.k) : json(nullptr)},
              {"d", m.cell.d},
              {"seed", m.seed},
              {"ms_per_iter", m.ms_per_iter}};
}

std::vector<SpectrumReport> spectrum_report(const fs::path& checkpoint, double rel_threshold) {
  const CtrModel model = collapse_model(load_checkpoint(checkpoint));
  std::vector<SpectrumReport> out;
  for (const AnyTable& table : model.tables) out.push_back(spectrum(std::get<EmbeddingTable>(table), rel_threshold));
  return out;
}

}  // namespace mlet
