#pragma once

#include <cstddef>
#include <cstdint>
#include <vector>

#include "mlet/data/dataset.hpp"

namespace mlet {

// Planted-structure CTR generator. A hidden teacher gives every category of
// every feature a latent vector confined to one shared rank-`true_rank`
// subspace of R^latent_dim. The teacher logit of an example is a mix of the
// sum of pairwise dot products between its categories' latent vectors and a
// linear function of its dense features, standardized to mean 0 and std
// `signal_scale`. Labels are Bernoulli(sigmoid(teacher + noise·ε)), ε ~ N(0,1).
struct SyntheticParams {
  std::size_t examples = 50000;
  std::size_t num_dense = 4;
  std::vector<std::size_t> cardinalities = std::vector<std::size_t>(8, 1000);
  std::size_t true_rank = 2;
  std::size_t latent_dim = 8;
  double noise = 0.0;
  double signal_scale = 6.0;
  // Fraction of teacher-logit variance from the dense linear term.
  double dense_share = 0.2;
  // Category frequency ∝ 1 / (rank + 1)^zipf_exponent; 0 gives uniform.
  double zipf_exponent = 1.0;
  std::uint64_t seed = 0;
};

void validate(const SyntheticParams& params);
Dataset generate_synthetic(const SyntheticParams& params);

}  // namespace mlet
