#include "mlet/embedding/table.hpp"

#include <algorithm>
#include <numeric>

#include "mlet/error.hpp"
#include "mlet/linalg/decompose.hpp"
#include "mlet/simd/kernels.hpp"

namespace mlet {

namespace {

void check_index(std::size_t index, std::size_t n) {
  if (index >= n) {
    throw Error(ErrorKind::kIndexOutOfRange,
                "category index " + std::to_string(index) + " not in [0, " + std::to_string(n) + ")");
  }
}

void check_indices(std::span<const CategoryIndex> indices, std::size_t n) {
  for (CategoryIndex i : indices) check_index(i, n);
}

Mat gather_rows(const Mat& w, std::span<const CategoryIndex> indices) {
  Mat out(indices.size(), w.cols());
  for (std::size_t b = 0; b < indices.size(); ++b) {
    const auto src = w.row(indices[b]);
    std::copy(src.begin(), src.end(), out.row(b).begin());
  }
  return out;
}

// Sums rows of `grads` that share an index into one row per unique index.
void scatter_unique(std::span<const CategoryIndex> indices, const Mat& grads, EmbedGrad& out) {
  std::vector<std::size_t> order(indices.size());
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t a, std::size_t b) { return indices[a] < indices[b]; });
  out.touched_rows.clear();
  for (std::size_t pos : order) {
    if (out.touched_rows.empty() || out.touched_rows.back() != indices[pos]) {
      out.touched_rows.push_back(indices[pos]);
    }
  }
  out.row_grads = Mat(out.touched_rows.size(), grads.cols());
  std::size_t slot = 0;
  for (std::size_t i = 0; i < order.size(); ++i) {
    const std::size_t pos = order[i];
    if (i > 0 && indices[pos] != indices[order[i - 1]]) ++slot;
    simd::axpy(1.0, grads.row(pos), out.row_grads.row(slot));
  }
}

void check_out_grads(const Mat& out_grads, std::size_t batch, std::size_t d) {
  if (out_grads.rows() != batch || out_grads.cols() != d) {
    throw Error(ErrorKind::kShapeMismatch, "embed_backward: upstream gradient " +
                                               out_grads.shape_string() + ", expected " +
                                               std::to_string(batch) + "x" + std::to_string(d));
  }
}

void apply_row_grads(Mat& w, const EmbedGrad& grad, double lr) {
  if (grad.row_grads.rows() != grad.touched_rows.size() || grad.row_grads.cols() != w.cols()) {
    throw Error(ErrorKind::kShapeMismatch, "sgd_step: row gradient " + grad.row_grads.shape_string() +
                                               " for " + std::to_string(grad.touched_rows.size()) +
                                               " rows of a " + w.shape_string() + " factor");
  }
  if (lr == 0.0) return;
  for (std::size_t i = 0; i < grad.touched_rows.size(); ++i) {
    check_index(grad.touched_rows[i], w.rows());
    simd::axpy(-lr, grad.row_grads.row(i), w.row(grad.touched_rows[i]));
  }
}

}  // namespace

std::vector<std::size_t> FactorizedTable::dims() const {
  std::vector<std::size_t> out;
  out.push_back(n());
  for (const Mat& f : factors) out.push_back(f.cols());
  return out;
}

std::size_t FactorizedTable::parameter_count() const {
  std::size_t total = 0;
  for (const Mat& f : factors) total += f.size();
  return total;
}

EmbeddingTable make_embedding_table(std::size_t n, std::size_t d, double init_std, Rng& rng) {
  if (n == 0 || d == 0) throw Error(ErrorKind::kInvalidArgument, "embedding table needs n, d >= 1");
  return EmbeddingTable{gaussian_mat(n, d, init_std, rng)};
}

FactorizedTable make_factorized_table(std::span<const std::size_t> dims, double init_std, Rng& rng) {
  if (dims.size() < 3) {
    throw Error(ErrorKind::kInvalidArgument, "factorized table needs dims [n, k, ..., d] with >= 2 factors");
  }
  FactorizedTable table;
  for (std::size_t i = 0; i + 1 < dims.size(); ++i) {
    if (dims[i] == 0 || dims[i + 1] == 0) {
      throw Error(ErrorKind::kInvalidArgument, "factorized table dims must be positive");
    }
    table.factors.push_back(gaussian_mat(dims[i], dims[i + 1], init_std, rng));
  }
  return table;
}

void validate(const FactorizedTable& table) {
  if (table.factors.size() < 2) {
    throw Error(ErrorKind::kInvalidArgument, "factorized table has fewer than two factors");
  }
  for (std::size_t i = 0; i < table.factors.size(); ++i) {
    if (table.factors[i].empty()) throw Error(ErrorKind::kInvalidArgument, "empty factor");
    if (i > 0 && table.factors[i - 1].cols() != table.factors[i].rows()) {
      throw Error(ErrorKind::kShapeMismatch, "factor " + std::to_string(i - 1) + " is " +
                                                 table.factors[i - 1].shape_string() + " but factor " +
                                                 std::to_string(i) + " is " +
                                                 table.factors[i].shape_string());
    }
  }
}

std::vector<double> lookup(const EmbeddingTable& table, std::size_t index) {
  check_index(index, table.n());
  const auto r = table.w.row(index);
  return {r.begin(), r.end()};
}

std::vector<double> lookup(const FactorizedTable& table, std::size_t index) {
  check_index(index, table.n());
  const CategoryIndex idx = static_cast<CategoryIndex>(index);
  const Mat r = lookup_batch(table, std::span<const CategoryIndex>(&idx, 1));
  return {r.data().begin(), r.data().end()};
}

Mat lookup_batch(const EmbeddingTable& table, std::span<const CategoryIndex> indices) {
  check_indices(indices, table.n());
  return gather_rows(table.w, indices);
}

Mat lookup_batch(const FactorizedTable& table, std::span<const CategoryIndex> indices) {
  check_indices(indices, table.n());
  Mat act = gather_rows(table.factors.front(), indices);
  for (std::size_t i = 1; i < table.factors.size(); ++i) act = matmul(act, table.factors[i]);
  return act;
}

EmbedGrad embed_backward(const EmbeddingTable& table, std::span<const CategoryIndex> indices,
                         const Mat& out_grads) {
  check_indices(indices, table.n());
  check_out_grads(out_grads, indices.size(), table.d());
  EmbedGrad grad;
  scatter_unique(indices, out_grads, grad);
  return grad;
}

EmbedGrad embed_backward(const FactorizedTable& table, std::span<const CategoryIndex> indices,
                         const Mat& out_grads) {
  check_indices(indices, table.n());
  check_out_grads(out_grads, indices.size(), table.d());
  const std::size_t depth = table.factors.size();

  // acts[i] is the input to factor i+1: acts[0] = gathered rows of factor 0.
  std::vector<Mat> acts;
  acts.reserve(depth);
  acts.push_back(gather_rows(table.factors.front(), indices));
  for (std::size_t i = 1; i + 1 < depth; ++i) acts.push_back(matmul(acts.back(), table.factors[i]));

  EmbedGrad grad;
  grad.dense_grads.resize(depth - 1);
  Mat upstream = out_grads;
  for (std::size_t i = depth - 1; i >= 1; --i) {
    grad.dense_grads[i - 1] = matmul_tn(acts[i - 1], upstream);
    upstream = matmul_nt(upstream, table.factors[i]);
  }
  scatter_unique(indices, upstream, grad);
  return grad;
}

void sgd_step(EmbeddingTable& table, const EmbedGrad& grad, double lr) {
  if (!grad.dense_grads.empty()) {
    throw Error(ErrorKind::kShapeMismatch, "sgd_step: dense factor gradients given for a single-layer table");
  }
  apply_row_grads(table.w, grad, lr);
}

void sgd_step(FactorizedTable& table, const EmbedGrad& grad, double lr) {
  if (grad.dense_grads.size() + 1 != table.factors.size()) {
    throw Error(ErrorKind::kShapeMismatch,
                "sgd_step: " + std::to_string(grad.dense_grads.size()) + " dense gradients for " +
                    std::to_string(table.factors.size()) + " factors");
  }
  for (std::size_t i = 0; i < grad.dense_grads.size(); ++i) {
    if (!grad.dense_grads[i].same_shape(table.factors[i + 1])) {
      throw Error(ErrorKind::kShapeMismatch, "sgd_step: gradient " + grad.dense_grads[i].shape_string() +
                                                 " for factor " + table.factors[i + 1].shape_string());
    }
  }
  apply_row_grads(table.factors.front(), grad, lr);
  if (lr == 0.0) return;
  for (std::size_t i = 0; i < grad.dense_grads.size(); ++i) {
    simd::axpy(-lr, grad.dense_grads[i].data(), table.factors[i + 1].data());
  }
}

EmbeddingTable collapse(const FactorizedTable& table) {
  validate(table);
  Mat w = table.factors.front();
  for (std::size_t i = 1; i < table.factors.size(); ++i) w = matmul(w, table.factors[i]);
  return EmbeddingTable{std::move(w)};
}

FactorizedTable construct_factors(const EmbeddingTable& table, std::size_t k) {
  const std::size_t n = table.n();
  const std::size_t d = table.d();
  if (k < d) {
    throw Error(ErrorKind::kInvalidArgument,
                "construct_factors: k=" + std::to_string(k) + " < d=" + std::to_string(d) +
                    "; with k < d the two-factor search space is reduced (rank <= k) and an "
                    "arbitrary table cannot be represented");
  }
  // wᵀ (d×n) = Q (d×p) R (p×n), p = min(d, n).
  const QrResult qr = qr_decompose(transpose(table.w));
  const std::size_t p = qr.q.cols();

  Mat w1(n, k);
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < p; ++j) w1(i, j) = qr.r(j, i);
  Mat w2(k, d);
  for (std::size_t j = 0; j < p; ++j)
    for (std::size_t c = 0; c < d; ++c) w2(j, c) = qr.q(c, j);

  FactorizedTable out;
  out.factors.push_back(std::move(w1));
  out.factors.push_back(std::move(w2));
  return out;
}

SpectrumReport spectrum(const EmbeddingTable& table, double rel_threshold) {
  return spectrum_of(table.w, rel_threshold);
}

}  // namespace mlet
