#include "mlet/linalg/mat.hpp"

#include <gtest/gtest.h>

#include <cmath>
#include <limits>

#include "mlet/error.hpp"
#include "mlet/linalg/rng.hpp"

namespace mlet {
namespace {

// Plain triple loop, the reference for every product kernel.
Mat naive_matmul(const Mat& a, const Mat& b) {
  Mat out(a.rows(), b.cols());
  for (std::size_t i = 0; i < a.rows(); ++i)
    for (std::size_t j = 0; j < b.cols(); ++j) {
      double s = 0.0;
      for (std::size_t t = 0; t < a.cols(); ++t) s += a(i, t) * b(t, j);
      out(i, j) = s;
    }
  return out;
}

TEST(Mat, ConstructionAndAccess) {
  const Mat m{{1, 2, 3}, {4, 5, 6}};
  EXPECT_EQ(m.rows(), 2u);
  EXPECT_EQ(m.cols(), 3u);
  EXPECT_EQ(m(1, 2), 6.0);
  EXPECT_EQ(m.row(1)[0], 4.0);
  EXPECT_EQ(m.shape_string(), "2x3");
  EXPECT_EQ(Mat(2, 2, 1.5)(1, 1), 1.5);
  EXPECT_TRUE(Mat().empty());
}

TEST(Mat, RejectsInconsistentInput) {
  EXPECT_THROW(Mat(2, 2, std::vector<double>{1, 2, 3}), Error);
  EXPECT_THROW((Mat{{1, 2}, {3}}), Error);
}

TEST(Mat, IdentityAndTranspose) {
  const Mat i = Mat::identity(3);
  EXPECT_EQ(i(0, 0), 1.0);
  EXPECT_EQ(i(0, 1), 0.0);
  const Mat m{{1, 2, 3}, {4, 5, 6}};
  const Mat t = transpose(m);
  EXPECT_EQ(t.rows(), 3u);
  EXPECT_EQ(t(2, 1), 6.0);
  EXPECT_EQ(transpose(t), m);
}

TEST(Mat, ProductsMatchTripleLoop) {
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    Rng rng(seed);
    const std::size_t m = 1 + rng.below(9), k = 1 + rng.below(9), n = 1 + rng.below(9);
    const Mat a = gaussian_mat(m, k, 1.0, rng);
    const Mat b = gaussian_mat(k, n, 1.0, rng);
    const Mat ref = naive_matmul(a, b);
    EXPECT_LE(max_abs_diff(matmul(a, b), ref), 1e-13);
    EXPECT_LE(max_abs_diff(matmul_tn(transpose(a), b), ref), 1e-13);
    EXPECT_LE(max_abs_diff(matmul_nt(a, transpose(b)), ref), 1e-13);
  }
}

TEST(Mat, ProductShapeMismatchThrows) {
  EXPECT_THROW(matmul(Mat(2, 3), Mat(2, 3)), Error);
  EXPECT_THROW(matmul_tn(Mat(2, 3), Mat(3, 3)), Error);
  EXPECT_THROW(matmul_nt(Mat(2, 3), Mat(2, 2)), Error);
  EXPECT_THROW(Mat(2, 2) + Mat(2, 3), Error);
  EXPECT_THROW(max_abs_diff(Mat(1, 2), Mat(2, 1)), Error);
}

TEST(Mat, ArithmeticAndNorms) {
  const Mat a{{3, -4}};
  const Mat b{{1, 1}};
  EXPECT_EQ(a + b, (Mat{{4, -3}}));
  EXPECT_EQ(a - b, (Mat{{2, -5}}));
  EXPECT_EQ(2.0 * a, (Mat{{6, -8}}));
  EXPECT_DOUBLE_EQ(frobenius_norm(a), 5.0);
  EXPECT_EQ(max_abs(a), 4.0);
  EXPECT_EQ(max_abs_diff(a, b), 5.0);
}

TEST(Mat, FrobeniusNormAvoidsOverflowAndUnderflow) {
  EXPECT_DOUBLE_EQ(frobenius_norm(Mat{{3e200, 4e200}}), 5e200);
  EXPECT_DOUBLE_EQ(frobenius_norm(Mat{{3e-200, 4e-200}}), 5e-200);
  EXPECT_EQ(frobenius_norm(Mat(2, 2)), 0.0);
}

TEST(Mat, FiniteCheck) {
  Mat m(2, 2, 1.0);
  EXPECT_TRUE(all_finite(m));
  m(1, 0) = std::numeric_limits<double>::quiet_NaN();
  EXPECT_FALSE(all_finite(m));
  m(1, 0) = std::numeric_limits<double>::infinity();
  EXPECT_FALSE(all_finite(m));
}

TEST(Mat, Blocks) {
  const Mat m{{1, 2, 3}, {4, 5, 6}, {7, 8, 9}};
  EXPECT_EQ(row_block(m, 1, 2), (Mat{{4, 5, 6}, {7, 8, 9}}));
  EXPECT_EQ(col_block(m, 1, 1), (Mat{{2}, {5}, {8}}));
  EXPECT_THROW(row_block(m, 2, 2), Error);
  EXPECT_THROW(col_block(m, 3, 1), Error);
}

TEST(Mat, EmptyProducts) {
  EXPECT_EQ(matmul(Mat(2, 0), Mat(0, 3)), Mat(2, 3));
  EXPECT_EQ(matmul(Mat(0, 2), Mat(2, 3)).rows(), 0u);
}

}  // namespace
}  // namespace mlet
