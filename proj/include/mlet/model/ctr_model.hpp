#pragma once

// Miniature DLRM-style click-through-rate model.
//
//   dense features ──bottom MLP──► z ∈ R^d
//   category f ──embedding table f──► e_f ∈ R^d     (single-layer or factorized)
//   interaction: all pairwise dots among {z, e_1, …, e_F}, optionally with z
//   concatenated in front ──top MLP──► logit ──sigmoid──► p
//
// ReLU sits between hidden layers of both MLPs; the last bottom layer and the
// logit are linear. Embedding chains never get an activation, otherwise the
// post-training collapse would change the function.

#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <utility>
#include <variant>
#include <vector>

#include "mlet/data/dataset.hpp"
#include "mlet/embedding/table.hpp"
#include "mlet/linalg/mat.hpp"

namespace mlet {

struct ModelConfig {
  std::size_t num_dense = 4;
  std::vector<std::size_t> cat_cardinalities;
  std::size_t d = 4;
  // Hidden width of factorized tables; unset means single-layer tables.
  std::optional<std::size_t> k;
  // Number of factors per table when k is set; dims are [n, k, …, k, d].
  std::size_t embedding_depth = 2;
  std::vector<std::size_t> bottom_layers{32, 16, 4};  // must end in d
  std::vector<std::size_t> top_layers{64, 32, 1};     // must end in 1
  bool concat_dense = true;
  double embedding_init_std = 0.25;
  std::uint64_t seed = 0;

  std::size_t num_features() const noexcept { return cat_cardinalities.size(); }
  // C(F + 1, 2) pairwise dots among z and the F embeddings.
  std::size_t interaction_width() const noexcept;
  std::size_t top_input_width() const noexcept;
};

// Throws ErrorKind::kInvalidArgument naming the broken invariant.
void validate(const ModelConfig& config);

struct DenseLayer {
  Mat weight;  // in × out
  Mat bias;    // 1 × out
};

using AnyTable = std::variant<EmbeddingTable, FactorizedTable>;

struct CtrModel {
  ModelConfig config;
  std::vector<DenseLayer> bottom;
  std::vector<AnyTable> tables;
  std::vector<DenseLayer> top;
};

struct ForwardTrace {
  std::vector<Mat> bottom_inputs;  // input to each bottom layer
  std::vector<Mat> bottom_pre;     // affine output of each bottom layer
  Mat z;                           // bottom output, B × d
  std::vector<std::vector<CategoryIndex>> cats;  // batch indices, feature-major
  std::vector<Mat> embeddings;     // one B × d per feature
  Mat interaction;                 // B × top_input_width
  std::vector<Mat> top_inputs;
  std::vector<Mat> top_pre;
  std::vector<double> logits;
  std::vector<double> probs;
};

struct DenseGrad {
  Mat weight;
  Mat bias;
};

struct ModelGrad {
  std::vector<DenseGrad> bottom;
  std::vector<EmbedGrad> tables;
  std::vector<DenseGrad> top;
};

// MLP weights ~ N(0, 1/fan_in), biases 0; embedding parameters ~
// N(0, embedding_init_std²) from an independent stream per table.
CtrModel init_model(const ModelConfig& config);

ForwardTrace forward(const CtrModel& model, const MiniBatch& batch);
std::vector<double> predict(const CtrModel& model, const MiniBatch& batch);

// Gradient of mean binary cross-entropy over the batch. The trace must come
// from forward() on the current parameters; a stale trace is not detected.
ModelGrad backward(const CtrModel& model, const ForwardTrace& trace, std::span<const double> labels);

void apply_gradients(CtrModel& model, const ModelGrad& grad, double lr);

// Forward, backward, SGD update. Returns the batch LogLoss before the update.
double train_step(CtrModel& model, const MiniBatch& batch, double lr);

// Same model with every factorized table multiplied out.
CtrModel collapse_model(const CtrModel& model);

struct ParameterCounts {
  std::size_t embedding_train = 0;      // Σ_f parameters of table f as trained
  std::size_t embedding_inference = 0;  // Σ_f n_f · d
  std::size_t mlp = 0;
};
ParameterCounts parameter_counts(const CtrModel& model);

// Every parameter tensor in a fixed order, e.g. "bottom.0.weight",
// "table.3.factor.1", "top.2.bias".
std::vector<std::pair<std::string, Mat*>> named_parameters(CtrModel& model);
std::vector<std::pair<std::string, const Mat*>> named_parameters(const CtrModel& model);
// Gradients in the same order as named_parameters, with sparse embedding
// gradients expanded to full dense tensors.
std::vector<std::pair<std::string, Mat>> named_gradients(const CtrModel& model, const ModelGrad& grad);

}  // namespace mlet
