#include "mlet/linalg/decompose.hpp"

#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <limits>

#include "mlet/error.hpp"
#include "mlet/linalg/rng.hpp"

namespace mlet {
namespace {

// Classical two-sided Jacobi eigenvalues of a symmetric matrix; independent
// of the one-sided algorithm under test.
std::vector<double> symmetric_eigenvalues(Mat a) {
  const std::size_t n = a.rows();
  for (int sweep = 0; sweep < 100; ++sweep) {
    double off = 0.0;
    for (std::size_t i = 0; i < n; ++i)
      for (std::size_t j = i + 1; j < n; ++j) off += a(i, j) * a(i, j);
    if (off < 1e-30) break;
    for (std::size_t p = 0; p < n; ++p) {
      for (std::size_t q = p + 1; q < n; ++q) {
        if (a(p, q) == 0.0) continue;
        const double theta = (a(q, q) - a(p, p)) / (2.0 * a(p, q));
        const double t = (theta >= 0 ? 1.0 : -1.0) / (std::abs(theta) + std::sqrt(theta * theta + 1.0));
        const double c = 1.0 / std::sqrt(t * t + 1.0);
        const double s = t * c;
        for (std::size_t k = 0; k < n; ++k) {
          const double akp = a(k, p), akq = a(k, q);
          a(k, p) = c * akp - s * akq;
          a(k, q) = s * akp + c * akq;
        }
        for (std::size_t k = 0; k < n; ++k) {
          const double apk = a(p, k), aqk = a(q, k);
          a(p, k) = c * apk - s * aqk;
          a(q, k) = s * apk + c * aqk;
        }
      }
    }
  }
  std::vector<double> ev(n);
  for (std::size_t i = 0; i < n; ++i) ev[i] = a(i, i);
  std::sort(ev.rbegin(), ev.rend());
  return ev;
}

double orthonormality_error(const Mat& q) {
  return max_abs_diff(matmul_tn(q, q), Mat::identity(q.cols()));
}

Mat diag_product(const SvdResult& r) {
  Mat us = r.u;
  for (std::size_t i = 0; i < us.rows(); ++i)
    for (std::size_t j = 0; j < us.cols(); ++j) us(i, j) *= r.s[j];
  return matmul_nt(us, r.v);
}

TEST(Qr, ReconstructsWithOrthonormalQAndNonNegativeDiagonal) {
  for (std::uint64_t seed = 0; seed < 30; ++seed) {
    Rng rng(seed);
    const std::size_t m = 1 + rng.below(10), n = 1 + rng.below(10);
    const Mat a = gaussian_mat(m, n, 1.0, rng);
    const QrResult qr = qr_decompose(a);
    const std::size_t p = std::min(m, n);
    ASSERT_EQ(qr.q.rows(), m);
    ASSERT_EQ(qr.q.cols(), p);
    ASSERT_EQ(qr.r.rows(), p);
    ASSERT_EQ(qr.r.cols(), n);
    EXPECT_LE(max_abs_diff(matmul(qr.q, qr.r), a), 1e-12);
    EXPECT_LE(orthonormality_error(qr.q), 1e-12);
    for (std::size_t i = 0; i < p; ++i) {
      EXPECT_GE(qr.r(i, i), 0.0);
      for (std::size_t j = 0; j < i; ++j) EXPECT_EQ(qr.r(i, j), 0.0);
    }
  }
}

TEST(Qr, RankDeficientInput) {
  Mat a(5, 3);
  for (std::size_t i = 0; i < 5; ++i) {
    a(i, 0) = static_cast<double>(i + 1);
    a(i, 1) = 2.0 * static_cast<double>(i + 1);
    a(i, 2) = 1.0;
  }
  const QrResult qr = qr_decompose(a);
  EXPECT_LE(max_abs_diff(matmul(qr.q, qr.r), a), 1e-12);
  EXPECT_LE(orthonormality_error(qr.q), 1e-12);
  const QrResult zero = qr_decompose(Mat(3, 2));
  EXPECT_LE(max_abs(zero.r), 0.0);
  EXPECT_LE(orthonormality_error(zero.q), 1e-12);
}

TEST(Svd, ReconstructsAndIsOrthonormal) {
  for (std::uint64_t seed = 0; seed < 30; ++seed) {
    Rng rng(100 + seed);
    const std::size_t m = 1 + rng.below(12), n = 1 + rng.below(12);
    const Mat a = gaussian_mat(m, n, 1.0, rng);
    const SvdResult r = svd(a);
    const std::size_t p = std::min(m, n);
    ASSERT_EQ(r.s.size(), p);
    ASSERT_EQ(r.u.rows(), m);
    ASSERT_EQ(r.v.rows(), n);
    EXPECT_LE(max_abs_diff(diag_product(r), a), 1e-12);
    EXPECT_LE(orthonormality_error(r.u), 1e-12);
    EXPECT_LE(orthonormality_error(r.v), 1e-12);
    for (std::size_t i = 0; i + 1 < p; ++i) EXPECT_GE(r.s[i], r.s[i + 1]);
    EXPECT_GE(r.s.back(), 0.0);
  }
}

TEST(Svd, SingularValuesMatchGramEigenvalues) {
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    Rng rng(200 + seed);
    const std::size_t m = 2 + rng.below(8), n = 2 + rng.below(8);
    const Mat a = gaussian_mat(m, n, 1.0, rng);
    const std::vector<double> s = singular_values(a);
    const std::vector<double> ev = symmetric_eigenvalues(m >= n ? matmul_tn(a, a) : matmul_nt(a, a));
    ASSERT_EQ(s.size(), std::min(m, n));
    for (std::size_t i = 0; i < s.size(); ++i) EXPECT_NEAR(s[i] * s[i], std::max(ev[i], 0.0), 1e-10 * (1 + ev[0]));
  }
}

TEST(Svd, KnownDiagonalAndRankDeficient) {
  const Mat d{{0, 3, 0}, {2, 0, 0}};
  const std::vector<double> s = singular_values(d);
  EXPECT_NEAR(s[0], 3.0, 1e-15);
  EXPECT_NEAR(s[1], 2.0, 1e-15);

  const Mat low = matmul(gaussian_mat(8, 2, 1.0, 1), gaussian_mat(2, 6, 1.0, 2));
  const SvdResult r = svd(low);
  EXPECT_LE(r.s[2], 1e-12 * r.s[0]);
  EXPECT_LE(orthonormality_error(r.u), 1e-12);
  EXPECT_LE(max_abs_diff(diag_product(r), low), 1e-12);
}

TEST(Svd, ZeroAndEmptyInputs) {
  const SvdResult z = svd(Mat(4, 3));
  for (double v : z.s) EXPECT_EQ(v, 0.0);
  EXPECT_LE(orthonormality_error(z.u), 1e-12);
  EXPECT_TRUE(svd(Mat(0, 3)).s.empty());
}

TEST(Svd, RejectsNonFiniteInput) {
  Mat a(2, 2, 1.0);
  a(0, 1) = std::numeric_limits<double>::quiet_NaN();
  EXPECT_THROW(svd(a), Error);
  EXPECT_THROW(singular_values(a), Error);
}

TEST(Svd, SweepCapReportsConvergenceFailure) {
  try {
    svd(gaussian_mat(10, 10, 1.0, 3), SvdOptions{1, 1e-15});
    FAIL() << "expected a convergence error";
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::kConvergence);
  }
}

}  // namespace
}  // namespace mlet
