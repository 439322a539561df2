#include "mlet/data/synthetic.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "mlet/error.hpp"
#include "mlet/linalg/rng.hpp"

namespace mlet {

namespace {

// Mean 0, population std 1 (all zeros if the input is constant).
void standardize(std::vector<double>& v) {
  const double n = static_cast<double>(v.size());
  double mean = 0.0;
  for (double x : v) mean += x;
  mean /= n;
  double ss = 0.0;
  for (double x : v) ss += (x - mean) * (x - mean);
  const double sd = std::sqrt(ss / n);
  for (double& x : v) x = sd > 0.0 ? (x - mean) / sd : 0.0;
}

class CategorySampler {
 public:
  CategorySampler(std::size_t n, double exponent) : cdf_(n) {
    double acc = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      acc += exponent == 0.0 ? 1.0 : std::pow(static_cast<double>(i + 1), -exponent);
      cdf_[i] = acc;
    }
    for (double& c : cdf_) c /= acc;
  }

  CategoryIndex draw(Rng& rng) const {
    const double u = rng.uniform();
    const auto it = std::upper_bound(cdf_.begin(), cdf_.end(), u);
    return static_cast<CategoryIndex>(std::min<std::size_t>(it - cdf_.begin(), cdf_.size() - 1));
  }

 private:
  std::vector<double> cdf_;
};

}  // namespace

void validate(const SyntheticParams& p) {
  if (p.examples == 0) throw Error(ErrorKind::kInvalidArgument, "synthetic: examples must be >= 1");
  if (p.cardinalities.empty()) throw Error(ErrorKind::kInvalidArgument, "synthetic: need >= 1 categorical feature");
  for (std::size_t c : p.cardinalities) {
    if (c == 0) throw Error(ErrorKind::kInvalidArgument, "synthetic: cardinalities must be >= 1");
  }
  if (p.latent_dim == 0 || p.true_rank == 0 || p.true_rank > p.latent_dim) {
    throw Error(ErrorKind::kInvalidArgument, "synthetic: need 1 <= true_rank <= latent_dim");
  }
  if (!(p.noise >= 0.0) || !(p.signal_scale >= 0.0) || !(p.zipf_exponent >= 0.0)) {
    throw Error(ErrorKind::kInvalidArgument, "synthetic: noise, signal_scale, zipf_exponent must be >= 0");
  }
  if (!(p.dense_share >= 0.0 && p.dense_share <= 1.0)) {
    throw Error(ErrorKind::kInvalidArgument, "synthetic: dense_share must be in [0, 1]");
  }
  if (p.num_dense == 0 && p.dense_share > 0.0) {
    throw Error(ErrorKind::kInvalidArgument, "synthetic: dense_share > 0 needs num_dense >= 1");
  }
}

Dataset generate_synthetic(const SyntheticParams& p) {
  validate(p);
  const std::size_t num_features = p.cardinalities.size();
  const Rng root(p.seed);

  // Teacher: shared basis (rank × latent) and per-feature coefficients.
  Rng basis_stream = root.split(1);
  const Mat basis = gaussian_mat(p.true_rank, p.latent_dim, 1.0 / std::sqrt(static_cast<double>(p.latent_dim)), basis_stream);
  std::vector<Mat> teacher(num_features);
  for (std::size_t f = 0; f < num_features; ++f) {
    Rng stream = root.split(100 + f);
    teacher[f] = matmul(gaussian_mat(p.cardinalities[f], p.true_rank, 1.0, stream), basis);
  }
  Rng weight_stream = root.split(2);
  std::vector<double> dense_weights(p.num_dense);
  for (double& w : dense_weights) w = weight_stream.normal();

  std::vector<CategorySampler> samplers;
  samplers.reserve(num_features);
  for (std::size_t c : p.cardinalities) samplers.emplace_back(c, p.zipf_exponent);

  Dataset ds;
  ds.num_features = num_features;
  ds.cardinalities = p.cardinalities;
  ds.dense = Mat(p.examples, p.num_dense);
  ds.cats.resize(p.examples * num_features);
  ds.labels.resize(p.examples);

  Rng example_stream = root.split(3);
  std::vector<double> interaction(p.examples);
  std::vector<double> linear(p.examples);
  for (std::size_t e = 0; e < p.examples; ++e) {
    for (std::size_t f = 0; f < num_features; ++f) {
      ds.cats[e * num_features + f] = samplers[f].draw(example_stream);
    }
    double lin = 0.0;
    for (std::size_t j = 0; j < p.num_dense; ++j) {
      const double x = example_stream.normal();
      ds.dense(e, j) = x;
      lin += dense_weights[j] * x;
    }
    linear[e] = lin;
    double dots = 0.0;
    for (std::size_t f = 0; f < num_features; ++f) {
      const auto tf = teacher[f].row(ds.cat(e, f));
      for (std::size_t g = f + 1; g < num_features; ++g) {
        const auto tg = teacher[g].row(ds.cat(e, g));
        for (std::size_t c = 0; c < p.latent_dim; ++c) dots += tf[c] * tg[c];
      }
    }
    interaction[e] = dots;
  }
  standardize(interaction);
  standardize(linear);

  Rng label_stream = root.split(4);
  ds.teacher_logits.resize(p.examples);
  const double wi = std::sqrt(1.0 - p.dense_share);
  const double wl = std::sqrt(p.dense_share);
  for (std::size_t e = 0; e < p.examples; ++e) {
    const double teacher_logit = p.signal_scale * (wi * interaction[e] + wl * linear[e]);
    ds.teacher_logits[e] = teacher_logit;
    const double logit = teacher_logit + p.noise * label_stream.normal();
    const double prob = 1.0 / (1.0 + std::exp(-logit));
    ds.labels[e] = label_stream.uniform() < prob ? 1 : 0;
  }

  std::ostringstream prov;
  prov << "synthetic(examples=" << p.examples << ", num_dense=" << p.num_dense
       << ", features=" << num_features << ", true_rank=" << p.true_rank
       << ", latent_dim=" << p.latent_dim << ", noise=" << p.noise
       << ", signal_scale=" << p.signal_scale << ", zipf=" << p.zipf_exponent << ", seed=" << p.seed << ")";
  ds.provenance = prov.str();
  return ds;
}

}  // namespace mlet
