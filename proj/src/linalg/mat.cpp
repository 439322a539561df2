#include "mlet/linalg/mat.hpp"

#include <algorithm>
#include <cmath>

#include "mlet/error.hpp"
#include "mlet/simd/kernels.hpp"

namespace mlet {

namespace {

void require_same_shape(const Mat& a, const Mat& b, const char* op) {
  if (!a.same_shape(b)) {
    throw Error(ErrorKind::kShapeMismatch,
                std::string(op) + ": " + a.shape_string() + " vs " + b.shape_string());
  }
}

}  // namespace

Mat::Mat(std::size_t rows, std::size_t cols, double fill)
    : rows_(rows), cols_(cols), data_(rows * cols, fill) {}

Mat::Mat(std::size_t rows, std::size_t cols, std::vector<double> data)
    : rows_(rows), cols_(cols), data_(std::move(data)) {
  if (data_.size() != rows_ * cols_) {
    throw Error(ErrorKind::kShapeMismatch, "data length " + std::to_string(data_.size()) +
                                               " does not match " + shape_string());
  }
}

Mat::Mat(std::initializer_list<std::initializer_list<double>> rows)
    : rows_(rows.size()), cols_(rows.size() == 0 ? 0 : rows.begin()->size()) {
  data_.reserve(rows_ * cols_);
  for (const auto& r : rows) {
    if (r.size() != cols_) throw Error(ErrorKind::kShapeMismatch, "ragged matrix literal");
    data_.insert(data_.end(), r.begin(), r.end());
  }
}

Mat Mat::identity(std::size_t n) {
  Mat out(n, n);
  for (std::size_t i = 0; i < n; ++i) out(i, i) = 1.0;
  return out;
}

std::string Mat::shape_string() const {
  return std::to_string(rows_) + "x" + std::to_string(cols_);
}

Mat matmul(const Mat& a, const Mat& b) {
  if (a.cols() != b.rows()) {
    throw Error(ErrorKind::kShapeMismatch,
                "matmul: " + a.shape_string() + " times " + b.shape_string());
  }
  const auto& k = simd::active();
  Mat c(a.rows(), b.cols());
  for (std::size_t i = 0; i < a.rows(); ++i) {
    double* out = c.row(i).data();
    for (std::size_t p = 0; p < a.cols(); ++p) {
      const double s = a(i, p);
      if (s != 0.0) k.axpy(s, b.row(p).data(), out, b.cols());
    }
  }
  return c;
}

Mat matmul_tn(const Mat& a, const Mat& b) {
  if (a.rows() != b.rows()) {
    throw Error(ErrorKind::kShapeMismatch,
                "matmul_tn: transpose of " + a.shape_string() + " times " + b.shape_string());
  }
  const auto& k = simd::active();
  Mat c(a.cols(), b.cols());
  for (std::size_t p = 0; p < a.rows(); ++p) {
    const double* brow = b.row(p).data();
    for (std::size_t i = 0; i < a.cols(); ++i) {
      const double s = a(p, i);
      if (s != 0.0) k.axpy(s, brow, c.row(i).data(), b.cols());
    }
  }
  return c;
}

Mat matmul_nt(const Mat& a, const Mat& b) {
  if (a.cols() != b.cols()) {
    throw Error(ErrorKind::kShapeMismatch,
                "matmul_nt: " + a.shape_string() + " times transpose of " + b.shape_string());
  }
  const auto& k = simd::active();
  Mat c(a.rows(), b.rows());
  for (std::size_t i = 0; i < a.rows(); ++i) {
    for (std::size_t j = 0; j < b.rows(); ++j) {
      c(i, j) = k.dot(a.row(i).data(), b.row(j).data(), a.cols());
    }
  }
  return c;
}

Mat transpose(const Mat& a) {
  Mat t(a.cols(), a.rows());
  for (std::size_t i = 0; i < a.rows(); ++i)
    for (std::size_t j = 0; j < a.cols(); ++j) t(j, i) = a(i, j);
  return t;
}

Mat operator+(const Mat& a, const Mat& b) {
  require_same_shape(a, b, "add");
  Mat c = a;
  simd::axpy(1.0, b.data(), c.data());
  return c;
}

Mat operator-(const Mat& a, const Mat& b) {
  require_same_shape(a, b, "subtract");
  Mat c = a;
  simd::axpy(-1.0, b.data(), c.data());
  return c;
}

Mat operator*(double s, const Mat& a) {
  Mat c = a;
  simd::scale(s, c.data());
  return c;
}

double frobenius_norm(const Mat& a) {
  // Scaled accumulation so tiny or huge entries do not under/overflow.
  const double m = max_abs(a);
  if (m == 0.0 || !std::isfinite(m)) return m;
  double acc = 0.0;
  for (double v : a.data()) {
    const double x = v / m;
    acc += x * x;
  }
  return m * std::sqrt(acc);
}

double max_abs(const Mat& a) {
  double m = 0.0;
  for (double v : a.data()) m = std::max(m, std::abs(v));
  return m;
}

double max_abs_diff(const Mat& a, const Mat& b) {
  require_same_shape(a, b, "max_abs_diff");
  double m = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) m = std::max(m, std::abs(a.data()[i] - b.data()[i]));
  return m;
}

bool all_finite(const Mat& a) {
  return std::all_of(a.data().begin(), a.data().end(), [](double v) { return std::isfinite(v); });
}

Mat row_block(const Mat& a, std::size_t first, std::size_t count) {
  if (first + count > a.rows()) {
    throw Error(ErrorKind::kIndexOutOfRange, "row_block past end of " + a.shape_string());
  }
  Mat out(count, a.cols());
  std::copy_n(a.data().begin() + static_cast<std::ptrdiff_t>(first * a.cols()), count * a.cols(),
              out.data().begin());
  return out;
}

Mat col_block(const Mat& a, std::size_t first, std::size_t count) {
  if (first + count > a.cols()) {
    throw Error(ErrorKind::kIndexOutOfRange, "col_block past end of " + a.shape_string());
  }
  Mat out(a.rows(), count);
  for (std::size_t i = 0; i < a.rows(); ++i)
    for (std::size_t j = 0; j < count; ++j) out(i, j) = a(i, first + j);
  return out;
}

}  // namespace mlet
