#include "mlet/data/dataset.hpp"

#include <cmath>
#include <cstring>

#include "mlet/error.hpp"

namespace mlet {

namespace {

constexpr std::uint64_t kFnvOffset = 0xCBF29CE484222325ULL;
constexpr std::uint64_t kFnvPrime = 0x100000001B3ULL;

void fnv_bytes(std::uint64_t& h, const void* data, std::size_t len) {
  const auto* p = static_cast<const unsigned char*>(data);
  for (std::size_t i = 0; i < len; ++i) {
    h ^= p[i];
    h *= kFnvPrime;
  }
}

}  // namespace

void validate(const Dataset& ds) {
  const std::size_t n = ds.size();
  if (ds.dense.rows() != n) {
    throw Error(ErrorKind::kInvalidArgument, "dense has " + std::to_string(ds.dense.rows()) +
                                                 " rows for " + std::to_string(n) + " labels");
  }
  if (ds.cats.size() != n * ds.num_features || ds.cardinalities.size() != ds.num_features) {
    throw Error(ErrorKind::kInvalidArgument, "categorical block does not match feature count");
  }
  for (std::size_t e = 0; e < n; ++e) {
    if (ds.labels[e] > 1) throw Error(ErrorKind::kInvalidArgument, "non-binary label at example " + std::to_string(e));
    for (std::size_t f = 0; f < ds.num_features; ++f) {
      if (ds.cat(e, f) >= ds.cardinalities[f]) {
        throw Error(ErrorKind::kIndexOutOfRange, "example " + std::to_string(e) + " feature " +
                                                     std::to_string(f) + " index " +
                                                     std::to_string(ds.cat(e, f)) + " >= cardinality " +
                                                     std::to_string(ds.cardinalities[f]));
      }
    }
  }
  if (!all_finite(ds.dense)) throw Error(ErrorKind::kInvalidArgument, "non-finite dense feature");
}

Dataset subset(const Dataset& ds, std::span<const std::size_t> ids) {
  Dataset out;
  out.num_features = ds.num_features;
  out.cardinalities = ds.cardinalities;
  out.provenance = ds.provenance;
  out.dense = Mat(ids.size(), ds.num_dense());
  out.cats.resize(ids.size() * ds.num_features);
  out.labels.resize(ids.size());
  if (!ds.teacher_logits.empty()) out.teacher_logits.resize(ids.size());
  for (std::size_t i = 0; i < ids.size(); ++i) {
    const std::size_t e = ids[i];
    if (e >= ds.size()) throw Error(ErrorKind::kIndexOutOfRange, "subset: example " + std::to_string(e));
    const auto src = ds.dense.row(e);
    std::copy(src.begin(), src.end(), out.dense.row(i).begin());
    std::copy_n(ds.cats.begin() + static_cast<std::ptrdiff_t>(e * ds.num_features), ds.num_features,
                out.cats.begin() + static_cast<std::ptrdiff_t>(i * ds.num_features));
    out.labels[i] = ds.labels[e];
    if (!ds.teacher_logits.empty()) out.teacher_logits[i] = ds.teacher_logits[e];
  }
  return out;
}

std::uint64_t content_hash(const Dataset& ds) {
  std::uint64_t h = kFnvOffset;
  const std::uint64_t shape[3] = {ds.size(), ds.num_dense(), ds.num_features};
  fnv_bytes(h, shape, sizeof(shape));
  fnv_bytes(h, ds.dense.data().data(), ds.dense.size() * sizeof(double));
  fnv_bytes(h, ds.cats.data(), ds.cats.size() * sizeof(CategoryIndex));
  fnv_bytes(h, ds.labels.data(), ds.labels.size());
  for (std::size_t c : ds.cardinalities) {
    const std::uint64_t v = c;
    fnv_bytes(h, &v, sizeof(v));
  }
  return h;
}

MiniBatch make_batch(const Dataset& ds, std::span<const std::size_t> ids) {
  MiniBatch b;
  b.dense = Mat(ids.size(), ds.num_dense());
  b.cats.assign(ds.num_features, std::vector<CategoryIndex>(ids.size()));
  b.labels.resize(ids.size());
  for (std::size_t i = 0; i < ids.size(); ++i) {
    const std::size_t e = ids[i];
    const auto src = ds.dense.row(e);
    std::copy(src.begin(), src.end(), b.dense.row(i).begin());
    for (std::size_t f = 0; f < ds.num_features; ++f) b.cats[f][i] = ds.cat(e, f);
    b.labels[i] = ds.labels[e];
  }
  return b;
}

MiniBatch full_batch(const Dataset& ds) {
  std::vector<std::size_t> ids(ds.size());
  for (std::size_t i = 0; i < ids.size(); ++i) ids[i] = i;
  return make_batch(ds, ids);
}

Standardizer Standardizer::fit(const Mat& dense) {
  Standardizer s;
  const std::size_t cols = dense.cols();
  s.mean.assign(cols, 0.0);
  s.std.assign(cols, 1.0);
  if (dense.rows() == 0) return s;
  const double n = static_cast<double>(dense.rows());
  for (std::size_t c = 0; c < cols; ++c) {
    double sum = 0.0;
    for (std::size_t r = 0; r < dense.rows(); ++r) sum += dense(r, c);
    const double mean = sum / n;
    double ss = 0.0;
    for (std::size_t r = 0; r < dense.rows(); ++r) ss += (dense(r, c) - mean) * (dense(r, c) - mean);
    const double sd = std::sqrt(ss / n);
    s.mean[c] = mean;
    s.std[c] = sd > 0.0 ? sd : 1.0;
  }
  return s;
}

void Standardizer::apply(Mat& dense) const {
  if (dense.cols() != mean.size()) {
    throw Error(ErrorKind::kShapeMismatch, "standardizer fitted on " + std::to_string(mean.size()) +
                                               " columns applied to " + dense.shape_string());
  }
  for (std::size_t r = 0; r < dense.rows(); ++r)
    for (std::size_t c = 0; c < dense.cols(); ++c) dense(r, c) = (dense(r, c) - mean[c]) / std[c];
}

}  // namespace mlet
