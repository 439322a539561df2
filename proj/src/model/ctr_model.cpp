#include "mlet/model/ctr_model.hpp"

#include <cmath>
#include <type_traits>

#include "mlet/error.hpp"
#include "mlet/harness/metrics.hpp"
#include "mlet/linalg/rng.hpp"
#include "mlet/simd/kernels.hpp"

namespace mlet {

namespace {

// Stream ids below kBottomStreamBase belong to embedding tables (one per feature).
constexpr std::uint64_t kBottomStreamBase = 1ULL << 32;
constexpr std::uint64_t kTopStreamBase = 2ULL << 32;

std::string layer_name(const char* block, std::size_t l, const char* what) {
  return std::string(block) + "." + std::to_string(l) + "." + what;
}

DenseLayer make_layer(std::size_t in, std::size_t out, Rng rng) {
  return DenseLayer{gaussian_mat(in, out, 1.0 / std::sqrt(static_cast<double>(in)), rng), Mat(1, out)};
}

Mat affine(const Mat& x, const DenseLayer& layer) {
  Mat out = matmul(x, layer.weight);
  for (std::size_t r = 0; r < out.rows(); ++r) simd::axpy(1.0, layer.bias.row(0), out.row(r));
  return out;
}

Mat relu(const Mat& x) {
  Mat out = x;
  for (double& v : out.data()) v = v > 0.0 ? v : 0.0;
  return out;
}

// g <- g ⊙ 1[pre > 0]
void relu_backward(Mat& g, const Mat& pre) {
  auto gd = g.data();
  const auto pd = pre.data();
  for (std::size_t i = 0; i < gd.size(); ++i)
    if (!(pd[i] > 0.0)) gd[i] = 0.0;
}

// Runs an MLP, recording each layer's input and affine output. ReLU follows
// every layer except the last.
Mat mlp_forward(const std::vector<DenseLayer>& layers, Mat x, std::vector<Mat>& inputs, std::vector<Mat>& pre) {
  inputs.clear();
  pre.clear();
  for (std::size_t l = 0; l < layers.size(); ++l) {
    inputs.push_back(x);
    pre.push_back(affine(x, layers[l]));
    x = l + 1 < layers.size() ? relu(pre.back()) : pre.back();
  }
  return x;
}

// Takes the gradient at the MLP output; returns the gradient at its input.
Mat mlp_backward(const std::vector<DenseLayer>& layers, const std::vector<Mat>& inputs,
                 const std::vector<Mat>& pre, Mat g, std::vector<DenseGrad>& grads) {
  grads.assign(layers.size(), {});
  for (std::size_t l = layers.size(); l-- > 0;) {
    grads[l].weight = matmul_tn(inputs[l], g);
    grads[l].bias = Mat(1, g.cols());
    for (std::size_t r = 0; r < g.rows(); ++r) simd::axpy(1.0, g.row(r), grads[l].bias.row(0));
    g = matmul_nt(g, layers[l].weight);
    if (l > 0) relu_backward(g, pre[l - 1]);
  }
  return g;
}

double sigmoid(double x) {
  if (x >= 0.0) return 1.0 / (1.0 + std::exp(-x));
  const double e = std::exp(x);
  return e / (1.0 + e);
}

void check_batch(const ModelConfig& config, const MiniBatch& batch) {
  const std::size_t b = batch.size();
  if (batch.dense.rows() != b || batch.dense.cols() != config.num_dense) {
    throw Error(ErrorKind::kShapeMismatch, "batch dense block " + batch.dense.shape_string() + " for " +
                                               std::to_string(b) + " examples and " +
                                               std::to_string(config.num_dense) + " dense features");
  }
  if (batch.cats.size() != config.num_features()) {
    throw Error(ErrorKind::kShapeMismatch, "batch has " + std::to_string(batch.cats.size()) +
                                               " categorical features, model expects " +
                                               std::to_string(config.num_features()));
  }
  for (std::size_t f = 0; f < batch.cats.size(); ++f) {
    if (batch.cats[f].size() != b) {
      throw Error(ErrorKind::kShapeMismatch, "feature " + std::to_string(f) + " has " +
                                                 std::to_string(batch.cats[f].size()) + " indices for " +
                                                 std::to_string(b) + " examples");
    }
  }
}

void sgd(Mat& w, const Mat& g, double lr) {
  if (!w.same_shape(g)) {
    throw Error(ErrorKind::kShapeMismatch, "gradient " + g.shape_string() + " for parameter " + w.shape_string());
  }
  simd::axpy(-lr, g.data(), w.data());
}

void apply_dense(std::vector<DenseLayer>& layers, const std::vector<DenseGrad>& grads, double lr) {
  if (grads.size() != layers.size()) throw Error(ErrorKind::kShapeMismatch, "dense gradient count mismatch");
  for (std::size_t l = 0; l < layers.size(); ++l) {
    sgd(layers[l].weight, grads[l].weight, lr);
    sgd(layers[l].bias, grads[l].bias, lr);
  }
}

// Dense gradients of every factor of one table, in factor order.
std::vector<Mat> densify(const AnyTable& table, const EmbedGrad& g) {
  return std::visit(
      [&](const auto& t) {
        std::vector<Mat> out;
        std::size_t first_cols = 0;
        std::size_t n = t.n();
        if constexpr (std::is_same_v<std::decay_t<decltype(t)>, EmbeddingTable>) {
          first_cols = t.d();
        } else {
          first_cols = t.k();
        }
        Mat first(n, first_cols);
        for (std::size_t i = 0; i < g.touched_rows.size(); ++i)
          simd::axpy(1.0, g.row_grads.row(i), first.row(g.touched_rows[i]));
        out.push_back(std::move(first));
        for (const Mat& m : g.dense_grads) out.push_back(m);
        return out;
      },
      table);
}

template <typename MatPtr, typename Model>
std::vector<std::pair<std::string, MatPtr>> collect_parameters(Model& model) {
  std::vector<std::pair<std::string, MatPtr>> out;
  for (std::size_t l = 0; l < model.bottom.size(); ++l) {
    out.emplace_back(layer_name("bottom", l, "weight"), &model.bottom[l].weight);
    out.emplace_back(layer_name("bottom", l, "bias"), &model.bottom[l].bias);
  }
  for (std::size_t f = 0; f < model.tables.size(); ++f) {
    auto& table = model.tables[f];
    const std::string prefix = "table." + std::to_string(f);
    if (auto* single = std::get_if<EmbeddingTable>(&table)) {
      out.emplace_back(prefix + ".weight", &single->w);
    } else {
      auto& factored = std::get<FactorizedTable>(table);
      for (std::size_t i = 0; i < factored.factors.size(); ++i)
        out.emplace_back(prefix + ".factor." + std::to_string(i), &factored.factors[i]);
    }
  }
  for (std::size_t l = 0; l < model.top.size(); ++l) {
    out.emplace_back(layer_name("top", l, "weight"), &model.top[l].weight);
    out.emplace_back(layer_name("top", l, "bias"), &model.top[l].bias);
  }
  return out;
}

}  // namespace

std::size_t ModelConfig::interaction_width() const noexcept {
  const std::size_t v = num_features() + 1;
  return v * (v - 1) / 2;
}

std::size_t ModelConfig::top_input_width() const noexcept {
  return interaction_width() + (concat_dense ? d : 0);
}

void validate(const ModelConfig& c) {
  auto fail = [](const std::string& msg) { throw Error(ErrorKind::kInvalidArgument, "model config: " + msg); };
  if (c.num_dense == 0) fail("num_dense must be >= 1");
  if (c.d == 0) fail("d must be >= 1");
  if (c.cat_cardinalities.empty()) fail("at least one categorical feature is required");
  for (std::size_t f = 0; f < c.cat_cardinalities.size(); ++f)
    if (c.cat_cardinalities[f] == 0) fail("cardinality of feature " + std::to_string(f) + " is 0");
  if (c.k && *c.k == 0) fail("k must be >= 1");
  if (c.k && c.embedding_depth < 2) fail("factorized tables need embedding_depth >= 2");
  if (c.bottom_layers.empty() || c.bottom_layers.back() != c.d) {
    fail("bottom MLP must end in width d = " + std::to_string(c.d));
  }
  if (c.top_layers.empty() || c.top_layers.back() != 1) fail("top MLP must end in a single logit");
  for (std::size_t w : c.bottom_layers)
    if (w == 0) fail("zero-width bottom layer");
  for (std::size_t w : c.top_layers)
    if (w == 0) fail("zero-width top layer");
  if (!(c.embedding_init_std > 0.0) || !std::isfinite(c.embedding_init_std)) fail("embedding_init_std must be > 0");
}

CtrModel init_model(const ModelConfig& config) {
  validate(config);
  CtrModel model;
  model.config = config;
  const Rng root(config.seed);

  std::size_t in = config.num_dense;
  for (std::size_t l = 0; l < config.bottom_layers.size(); ++l) {
    model.bottom.push_back(make_layer(in, config.bottom_layers[l], root.split(kBottomStreamBase + l)));
    in = config.bottom_layers[l];
  }

  for (std::size_t f = 0; f < config.num_features(); ++f) {
    Rng rng = root.split(f);
    const std::size_t n = config.cat_cardinalities[f];
    if (config.k) {
      std::vector<std::size_t> dims{n};
      for (std::size_t i = 0; i + 1 < config.embedding_depth; ++i) dims.push_back(*config.k);
      dims.push_back(config.d);
      model.tables.emplace_back(make_factorized_table(dims, config.embedding_init_std, rng));
    } else {
      model.tables.emplace_back(make_embedding_table(n, config.d, config.embedding_init_std, rng));
    }
  }

  in = config.top_input_width();
  for (std::size_t l = 0; l < config.top_layers.size(); ++l) {
    model.top.push_back(make_layer(in, config.top_layers[l], root.split(kTopStreamBase + l)));
    in = config.top_layers[l];
  }
  return model;
}

ForwardTrace forward(const CtrModel& model, const MiniBatch& batch) {
  const ModelConfig& c = model.config;
  check_batch(c, batch);
  const std::size_t b = batch.size();
  const std::size_t d = c.d;
  ForwardTrace t;

  t.z = mlp_forward(model.bottom, batch.dense, t.bottom_inputs, t.bottom_pre);

  t.embeddings.reserve(model.tables.size());
  t.cats = batch.cats;
  for (std::size_t f = 0; f < model.tables.size(); ++f) {
    t.embeddings.push_back(
        std::visit([&](const auto& table) { return lookup_batch(table, batch.cats[f]); }, model.tables[f]));
  }

  // Layout per example: [z (if concatenated) | dot(v_i, v_j) for i < j], v_0 = z, v_f = e_f.
  const std::size_t offset = c.concat_dense ? d : 0;
  t.interaction = Mat(b, c.top_input_width());
  for (std::size_t e = 0; e < b; ++e) {
    auto out = t.interaction.row(e);
    if (c.concat_dense) std::copy(t.z.row(e).begin(), t.z.row(e).end(), out.begin());
    std::size_t slot = offset;
    const std::size_t v = model.tables.size() + 1;
    for (std::size_t i = 0; i < v; ++i) {
      const auto vi = i == 0 ? t.z.row(e) : t.embeddings[i - 1].row(e);
      for (std::size_t j = i + 1; j < v; ++j) out[slot++] = simd::dot(vi, t.embeddings[j - 1].row(e));
    }
  }

  const Mat logits = mlp_forward(model.top, t.interaction, t.top_inputs, t.top_pre);
  t.logits.assign(logits.data().begin(), logits.data().end());
  t.probs.resize(b);
  for (std::size_t e = 0; e < b; ++e) t.probs[e] = sigmoid(t.logits[e]);
  return t;
}

std::vector<double> predict(const CtrModel& model, const MiniBatch& batch) {
  return forward(model, batch).probs;
}

ModelGrad backward(const CtrModel& model, const ForwardTrace& t, std::span<const double> labels) {
  const ModelConfig& c = model.config;
  const std::size_t b = t.probs.size();
  if (labels.size() != b) {
    throw Error(ErrorKind::kShapeMismatch,
                "backward: " + std::to_string(labels.size()) + " labels for " + std::to_string(b) + " predictions");
  }
  if (b == 0) throw Error(ErrorKind::kInvalidArgument, "backward: empty batch");
  ModelGrad grad;

  // d(mean BCE)/d(logit) = (p - y) / B
  Mat g(b, 1);
  for (std::size_t e = 0; e < b; ++e) g(e, 0) = (t.probs[e] - labels[e]) / static_cast<double>(b);
  const Mat g_inter = mlp_backward(model.top, t.top_inputs, t.top_pre, std::move(g), grad.top);

  const std::size_t d = c.d;
  const std::size_t nf = model.tables.size();
  const std::size_t offset = c.concat_dense ? d : 0;
  Mat g_z(b, d);
  std::vector<Mat> g_emb(nf, Mat(b, d));
  for (std::size_t e = 0; e < b; ++e) {
    const auto gi = g_inter.row(e);
    if (c.concat_dense) std::copy(gi.begin(), gi.begin() + static_cast<std::ptrdiff_t>(d), g_z.row(e).begin());
    std::size_t slot = offset;
    for (std::size_t i = 0; i <= nf; ++i) {
      const auto vi = i == 0 ? t.z.row(e) : t.embeddings[i - 1].row(e);
      auto gvi = i == 0 ? g_z.row(e) : g_emb[i - 1].row(e);
      for (std::size_t j = i + 1; j <= nf; ++j) {
        const double gd = gi[slot++];
        simd::axpy(gd, t.embeddings[j - 1].row(e), gvi);
        simd::axpy(gd, vi, g_emb[j - 1].row(e));
      }
    }
  }

  mlp_backward(model.bottom, t.bottom_inputs, t.bottom_pre, std::move(g_z), grad.bottom);

  grad.tables.reserve(nf);
  for (std::size_t f = 0; f < nf; ++f) {
    grad.tables.push_back(std::visit(
        [&](const auto& table) { return embed_backward(table, t.cats[f], g_emb[f]); }, model.tables[f]));
  }
  return grad;
}

void apply_gradients(CtrModel& model, const ModelGrad& grad, double lr) {
  if (lr == 0.0) return;
  if (grad.tables.size() != model.tables.size()) throw Error(ErrorKind::kShapeMismatch, "table gradient count mismatch");
  apply_dense(model.bottom, grad.bottom, lr);
  for (std::size_t f = 0; f < model.tables.size(); ++f)
    std::visit([&](auto& table) { sgd_step(table, grad.tables[f], lr); }, model.tables[f]);
  apply_dense(model.top, grad.top, lr);
}

double train_step(CtrModel& model, const MiniBatch& batch, double lr) {
  const ForwardTrace trace = forward(model, batch);
  const double loss = logloss(trace.probs, batch.labels);
  const ModelGrad grad = backward(model, trace, batch.labels);
  apply_gradients(model, grad, lr);
  return loss;
}

CtrModel collapse_model(const CtrModel& model) {
  CtrModel out;
  out.config = model.config;
  out.config.k.reset();
  out.bottom = model.bottom;
  out.top = model.top;
  for (const AnyTable& table : model.tables) {
    if (const auto* factored = std::get_if<FactorizedTable>(&table)) {
      out.tables.emplace_back(collapse(*factored));
    } else {
      out.tables.push_back(table);
    }
  }
  return out;
}

ParameterCounts parameter_counts(const CtrModel& model) {
  ParameterCounts counts;
  for (const AnyTable& table : model.tables) {
    std::visit(
        [&](const auto& t) {
          if constexpr (std::is_same_v<std::decay_t<decltype(t)>, EmbeddingTable>) {
            counts.embedding_train += t.w.size();
          } else {
            counts.embedding_train += t.parameter_count();
          }
          counts.embedding_inference += t.n() * t.d();
        },
        table);
  }
  for (const auto* block : {&model.bottom, &model.top})
    for (const DenseLayer& layer : *block) counts.mlp += layer.weight.size() + layer.bias.size();
  return counts;
}

std::vector<std::pair<std::string, Mat*>> named_parameters(CtrModel& model) {
  return collect_parameters<Mat*>(model);
}

std::vector<std::pair<std::string, const Mat*>> named_parameters(const CtrModel& model) {
  return collect_parameters<const Mat*>(model);
}

std::vector<std::pair<std::string, Mat>> named_gradients(const CtrModel& model, const ModelGrad& grad) {
  const auto params = named_parameters(model);
  std::vector<Mat> flat;
  for (const DenseGrad& g : grad.bottom) {
    flat.push_back(g.weight);
    flat.push_back(g.bias);
  }
  for (std::size_t f = 0; f < model.tables.size(); ++f)
    for (Mat& m : densify(model.tables[f], grad.tables.at(f))) flat.push_back(std::move(m));
  for (const DenseGrad& g : grad.top) {
    flat.push_back(g.weight);
    flat.push_back(g.bias);
  }
  if (flat.size() != params.size()) throw Error(ErrorKind::kShapeMismatch, "gradient set does not match model");
  std::vector<std::pair<std::string, Mat>> out;
  for (std::size_t i = 0; i < flat.size(); ++i) out.emplace_back(params[i].first, std::move(flat[i]));
  return out;
}

}  // namespace mlet
