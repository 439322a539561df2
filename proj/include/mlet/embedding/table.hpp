#pragma once

// Single-layer and factorized (multi-layer) embedding tables.
//
// A categorical input is a row index into the table; the one-hot product q·W
// is never materialized. A FactorizedTable represents W = W1·W2·…·WN and is
// trained directly. After training, collapse() multiplies the chain out so
// that inference stores only an n×d table, whatever the hidden widths were.

#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

#include "mlet/dynamics/spectrum.hpp"
#include "mlet/linalg/mat.hpp"
#include "mlet/linalg/rng.hpp"

namespace mlet {

using CategoryIndex = std::uint32_t;

struct EmbeddingTable {
  Mat w;  // n × d

  std::size_t n() const noexcept { return w.rows(); }
  std::size_t d() const noexcept { return w.cols(); }
};

struct FactorizedTable {
  // factors[i] has shape dims[i] × dims[i+1], dims = [n, k1, ..., d].
  std::vector<Mat> factors;

  std::size_t n() const noexcept { return factors.front().rows(); }
  std::size_t d() const noexcept { return factors.back().cols(); }
  std::size_t depth() const noexcept { return factors.size(); }
  // Width of the first hidden layer (k for the default two-factor chain).
  std::size_t k() const noexcept { return factors.front().cols(); }
  std::vector<std::size_t> dims() const;
  std::size_t parameter_count() const;
};

// Sparse gradient for one table and one batch. For a FactorizedTable the
// first factor's gradient is restricted to touched rows and the remaining
// factors get dense gradients. For an EmbeddingTable dense_grads is empty.
struct EmbedGrad {
  std::vector<CategoryIndex> touched_rows;  // sorted, unique
  Mat row_grads;                            // |touched_rows| × (k1 or d)
  std::vector<Mat> dense_grads;             // shapes of factors[1..N)
};

EmbeddingTable make_embedding_table(std::size_t n, std::size_t d, double init_std, Rng& rng);
// dims = [n, k1, ..., d] with at least three entries (two factors).
FactorizedTable make_factorized_table(std::span<const std::size_t> dims, double init_std, Rng& rng);

// Throws on broken chain shapes or empty factors.
void validate(const FactorizedTable& table);

std::vector<double> lookup(const EmbeddingTable& table, std::size_t index);
std::vector<double> lookup(const FactorizedTable& table, std::size_t index);

// One output row per index.
Mat lookup_batch(const EmbeddingTable& table, std::span<const CategoryIndex> indices);
Mat lookup_batch(const FactorizedTable& table, std::span<const CategoryIndex> indices);

// Gradient of sum_b <out_grads[b], lookup(indices[b])> with respect to the
// table parameters. Repeated indices accumulate.
EmbedGrad embed_backward(const EmbeddingTable& table, std::span<const CategoryIndex> indices,
                         const Mat& out_grads);
EmbedGrad embed_backward(const FactorizedTable& table, std::span<const CategoryIndex> indices,
                         const Mat& out_grads);

// w <- w - lr * g. Rows of the first factor that the batch did not touch are
// left bit-for-bit unchanged.
void sgd_step(EmbeddingTable& table, const EmbedGrad& grad, double lr);
void sgd_step(FactorizedTable& table, const EmbedGrad& grad, double lr);

EmbeddingTable collapse(const FactorizedTable& table);

// Exact two-factor representation of `table` with hidden width k >= d, built
// from the QR decomposition of wᵀ = QR: W1 = [Rᵀ | 0] (n×k), W2 = [Qᵀ; 0] (k×d).
// For k < d the product has rank <= k, so general tables cannot be
// represented and this throws.
FactorizedTable construct_factors(const EmbeddingTable& table, std::size_t k);

SpectrumReport spectrum(const EmbeddingTable& table, double rel_threshold = kDefaultRankThreshold);

}  // namespace mlet
