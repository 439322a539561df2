#include "mlet/linalg/decompose.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

#include "mlet/error.hpp"
#include "mlet/simd/kernels.hpp"

namespace mlet {

QrResult qr_decompose(const Mat& m) {
  if (m.rows() == 0 || m.cols() == 0) {
    throw Error(ErrorKind::kInvalidArgument, "qr_decompose: empty matrix " + m.shape_string());
  }
  const std::size_t rows = m.rows();
  const std::size_t cols = m.cols();
  const std::size_t p = std::min(rows, cols);

  Mat a = m;
  // Householder vectors, v_j has support [j, rows). Zero vector means identity.
  std::vector<std::vector<double>> reflectors(p);

  for (std::size_t j = 0; j < p; ++j) {
    const std::size_t len = rows - j;
    if (len < 2) break;
    std::vector<double> v(len);
    for (std::size_t i = 0; i < len; ++i) v[i] = a(j + i, j);
    double norm = 0.0;
    for (double x : v) norm = std::hypot(norm, x);
    if (norm == 0.0) continue;
    v[0] += (v[0] >= 0.0 ? norm : -norm);
    double vv = 0.0;
    for (double x : v) vv += x * x;
    // Apply H = I - 2 v vᵀ / (vᵀv) to the trailing block.
    for (std::size_t c = j; c < cols; ++c) {
      double proj = 0.0;
      for (std::size_t i = 0; i < len; ++i) proj += v[i] * a(j + i, c);
      const double f = 2.0 * proj / vv;
      for (std::size_t i = 0; i < len; ++i) a(j + i, c) -= f * v[i];
    }
    for (std::size_t i = 1; i < len; ++i) a(j + i, j) = 0.0;
    const double inv = 1.0 / std::sqrt(vv);
    for (double& x : v) x *= inv;
    reflectors[j] = std::move(v);
  }

  QrResult out{Mat(rows, p), Mat(p, cols)};
  for (std::size_t i = 0; i < p; ++i)
    for (std::size_t c = i; c < cols; ++c) out.r(i, c) = a(i, c);

  // q = H_0 H_1 ... H_{p-1} applied to the first p columns of the identity.
  for (std::size_t i = 0; i < p; ++i) out.q(i, i) = 1.0;
  for (std::size_t jj = p; jj-- > 0;) {
    const auto& v = reflectors[jj];
    if (v.empty()) continue;
    for (std::size_t c = 0; c < p; ++c) {
      double proj = 0.0;
      for (std::size_t i = 0; i < v.size(); ++i) proj += v[i] * out.q(jj + i, c);
      for (std::size_t i = 0; i < v.size(); ++i) out.q(jj + i, c) -= 2.0 * proj * v[i];
    }
  }

  for (std::size_t i = 0; i < p; ++i) {
    if (out.r(i, i) < 0.0) {
      for (std::size_t c = i; c < cols; ++c) out.r(i, c) = -out.r(i, c);
      for (std::size_t r = 0; r < rows; ++r) out.q(r, i) = -out.q(r, i);
    }
  }
  return out;
}

namespace {

// Rows of `cols` are the columns of the (tall) working matrix; rows of `vcols`
// accumulate the right rotations when non-null.
void jacobi_orthogonalize(Mat& cols, Mat* vcols, const SvdOptions& options) {
  const std::size_t n = cols.rows();
  const std::size_t m = cols.cols();
  const auto& k = simd::active();
  // Computed cosines carry O(m·eps) rounding, so a tighter bound can stall.
  const double tol =
      std::max(options.tolerance, static_cast<double>(m) * std::numeric_limits<double>::epsilon());
  for (int sweep = 0; sweep < options.max_sweeps; ++sweep) {
    bool rotated = false;
    for (std::size_t i = 0; i + 1 < n; ++i) {
      for (std::size_t j = i + 1; j < n; ++j) {
        double* ai = cols.row(i).data();
        double* aj = cols.row(j).data();
        const double alpha = k.dot(ai, ai, m);
        const double beta = k.dot(aj, aj, m);
        const double gamma = k.dot(ai, aj, m);
        if (gamma == 0.0 || std::abs(gamma) <= tol * std::sqrt(alpha * beta)) continue;
        rotated = true;
        const double zeta = (beta - alpha) / (2.0 * gamma);
        const double t = std::copysign(1.0, zeta) / (std::abs(zeta) + std::hypot(1.0, zeta));
        const double c = 1.0 / std::hypot(1.0, t);
        const double s = c * t;
        for (std::size_t r = 0; r < m; ++r) {
          const double x = ai[r];
          const double y = aj[r];
          ai[r] = c * x - s * y;
          aj[r] = s * x + c * y;
        }
        if (vcols != nullptr) {
          double* vi = vcols->row(i).data();
          double* vj = vcols->row(j).data();
          for (std::size_t r = 0; r < vcols->cols(); ++r) {
            const double x = vi[r];
            const double y = vj[r];
            vi[r] = c * x - s * y;
            vj[r] = s * x + c * y;
          }
        }
      }
    }
    if (!rotated) return;
  }
  throw Error(ErrorKind::kConvergence, "Jacobi SVD did not converge within " +
                                           std::to_string(options.max_sweeps) + " sweeps on " +
                                           std::to_string(m) + "x" + std::to_string(n) + " input");
}

// Replace row `target` of `basis` (rows = vectors of length m) with a unit
// vector orthogonal to every row in `filled`.
void complete_basis(Mat& basis, std::size_t target, const std::vector<std::size_t>& filled) {
  const std::size_t m = basis.cols();
  std::vector<double> best;
  double best_norm = -1.0;
  for (std::size_t e = 0; e < m; ++e) {
    std::vector<double> v(m, 0.0);
    v[e] = 1.0;
    for (int pass = 0; pass < 2; ++pass) {
      for (std::size_t f : filled) {
        const auto row = basis.row(f);
        const double proj = std::inner_product(row.begin(), row.end(), v.begin(), 0.0);
        for (std::size_t r = 0; r < m; ++r) v[r] -= proj * row[r];
      }
    }
    const double norm = std::sqrt(std::inner_product(v.begin(), v.end(), v.begin(), 0.0));
    if (norm > best_norm) {
      best_norm = norm;
      best = std::move(v);
    }
    if (best_norm > 0.5) break;
  }
  auto row = basis.row(target);
  for (std::size_t r = 0; r < m; ++r) row[r] = best[r] / best_norm;
}

SvdResult svd_tall(const Mat& m, bool want_vectors, const SvdOptions& options) {
  const std::size_t rows = m.rows();
  const std::size_t p = m.cols();
  Mat cols = transpose(m);
  Mat vcols = Mat::identity(p);
  jacobi_orthogonalize(cols, want_vectors ? &vcols : nullptr, options);

  std::vector<double> norms(p);
  for (std::size_t i = 0; i < p; ++i) {
    const auto c = cols.row(i);
    double acc = 0.0;
    for (double x : c) acc = std::hypot(acc, x);
    norms[i] = acc;
  }
  std::vector<std::size_t> order(p);
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t a, std::size_t b) { return norms[a] > norms[b]; });

  SvdResult out;
  out.s.resize(p);
  for (std::size_t i = 0; i < p; ++i) out.s[i] = norms[order[i]];
  if (!want_vectors) return out;

  Mat ut(p, rows);
  Mat vt(p, p);
  std::vector<std::size_t> filled;
  std::vector<std::size_t> missing;
  for (std::size_t i = 0; i < p; ++i) {
    const std::size_t src = order[i];
    std::copy(vcols.row(src).begin(), vcols.row(src).end(), vt.row(i).begin());
    if (out.s[i] > 0.0 && std::isnormal(out.s[i])) {
      const auto c = cols.row(src);
      auto dst = ut.row(i);
      for (std::size_t r = 0; r < rows; ++r) dst[r] = c[r] / out.s[i];
      filled.push_back(i);
    } else {
      missing.push_back(i);
    }
  }
  for (std::size_t i : missing) {
    complete_basis(ut, i, filled);
    filled.push_back(i);
  }
  out.u = transpose(ut);
  out.v = transpose(vt);
  return out;
}

void require_finite(const Mat& m, const char* op) {
  if (!all_finite(m)) throw Error(ErrorKind::kInvalidArgument, std::string(op) + ": non-finite input");
}

}  // namespace

SvdResult svd(const Mat& m, const SvdOptions& options) {
  require_finite(m, "svd");
  if (m.rows() == 0 || m.cols() == 0) return SvdResult{Mat(m.rows(), 0), {}, Mat(m.cols(), 0)};
  if (m.rows() >= m.cols()) return svd_tall(m, true, options);
  SvdResult t = svd_tall(transpose(m), true, options);
  std::swap(t.u, t.v);
  return t;
}

std::vector<double> singular_values(const Mat& m) {
  require_finite(m, "singular_values");
  if (m.rows() == 0 || m.cols() == 0) return {};
  if (m.rows() >= m.cols()) return svd_tall(m, false, {}).s;
  return svd_tall(transpose(m), false, {}).s;
}

}  // namespace mlet
