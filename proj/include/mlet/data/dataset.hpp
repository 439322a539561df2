#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "mlet/embedding/table.hpp"
#include "mlet/linalg/mat.hpp"

namespace mlet {

struct Dataset {
  Mat dense;                              // examples × num_dense
  std::vector<CategoryIndex> cats;        // examples × num_features, row-major
  std::size_t num_features = 0;
  std::vector<std::uint8_t> labels;       // 0 or 1
  std::vector<std::size_t> cardinalities; // one per categorical feature
  std::string provenance;
  // Noise-free teacher logit per example; only set by the synthetic generator.
  std::vector<double> teacher_logits;

  std::size_t size() const noexcept { return labels.size(); }
  std::size_t num_dense() const noexcept { return dense.cols(); }
  CategoryIndex cat(std::size_t example, std::size_t feature) const noexcept {
    return cats[example * num_features + feature];
  }
};

// Throws ErrorKind::kInvalidArgument describing the first violated invariant.
void validate(const Dataset& ds);

Dataset subset(const Dataset& ds, std::span<const std::size_t> ids);

// FNV-1a over dense bits, categories and labels; stable across runs and platforms.
std::uint64_t content_hash(const Dataset& ds);

struct MiniBatch {
  Mat dense;                                       // B × num_dense
  std::vector<std::vector<CategoryIndex>> cats;    // num_features × B
  std::vector<double> labels;                      // B

  std::size_t size() const noexcept { return labels.size(); }
};

MiniBatch make_batch(const Dataset& ds, std::span<const std::size_t> ids);
MiniBatch full_batch(const Dataset& ds);

// Per-column mean/std fitted on one dataset and applied to others.
struct Standardizer {
  std::vector<double> mean;
  std::vector<double> std;  // constant columns get std 1

  static Standardizer fit(const Mat& dense);
  void apply(Mat& dense) const;
};

enum class SplitMode { kRandom, kSequential };

struct SplitSpec {
  double train = 0.8;
  double val = 0.1;
  double test = 0.1;
  SplitMode mode = SplitMode::kRandom;
  std::uint64_t seed = 0;
};

struct SplitIndices {
  std::vector<std::size_t> train;
  std::vector<std::size_t> val;
  std::vector<std::size_t> test;
};

struct Splits {
  Dataset train;
  Dataset val;
  Dataset test;
};

// Train and val sizes are round(fraction · n); test takes the remainder.
SplitIndices split_indices(std::size_t n, const SplitSpec& spec);
Splits split(const Dataset& ds, const SplitSpec& spec);

// One epoch of minibatches. With an order seed, examples are visited in a
// seeded random permutation; otherwise in dataset order. The last batch may
// be smaller than batch_size.
class BatchIterator {
 public:
  BatchIterator(const Dataset& ds, std::size_t batch_size, std::optional<std::uint64_t> order_seed);

  bool next(MiniBatch& out);
  // Example ids of the next batch without materializing it; empty at the end.
  std::span<const std::size_t> peek_ids() const;
  std::size_t batches_per_epoch() const noexcept;
  void reset() noexcept { cursor_ = 0; }

 private:
  const Dataset* ds_;
  std::size_t batch_size_;
  std::vector<std::size_t> order_;
  std::size_t cursor_ = 0;
};

}  // namespace mlet
