#pragma once

#include <cstddef>
#include <initializer_list>
#include <span>
#include <string>
#include <vector>

namespace mlet {

// Dense row-major matrix of doubles. The only numerical carrier in the
// project: embedding tables, factors, activations and gradients are all Mats.
class Mat {
 public:
  Mat() = default;
  Mat(std::size_t rows, std::size_t cols, double fill = 0.0);
  Mat(std::size_t rows, std::size_t cols, std::vector<double> data);
  // Nested-list literal, e.g. Mat{{1, 2}, {3, 4}}. Rows must be equal length.
  Mat(std::initializer_list<std::initializer_list<double>> rows);

  static Mat identity(std::size_t n);

  std::size_t rows() const noexcept { return rows_; }
  std::size_t cols() const noexcept { return cols_; }
  std::size_t size() const noexcept { return data_.size(); }
  bool empty() const noexcept { return data_.empty(); }

  double& operator()(std::size_t r, std::size_t c) noexcept { return data_[r * cols_ + c]; }
  double operator()(std::size_t r, std::size_t c) const noexcept { return data_[r * cols_ + c]; }

  std::span<double> row(std::size_t r) noexcept { return {data_.data() + r * cols_, cols_}; }
  std::span<const double> row(std::size_t r) const noexcept {
    return {data_.data() + r * cols_, cols_};
  }

  std::span<double> data() noexcept { return data_; }
  std::span<const double> data() const noexcept { return data_; }

  bool same_shape(const Mat& other) const noexcept {
    return rows_ == other.rows_ && cols_ == other.cols_;
  }

  std::string shape_string() const;

  // Exact (bitwise) equality of shape and contents.
  friend bool operator==(const Mat& a, const Mat& b) = default;

 private:
  std::size_t rows_ = 0;
  std::size_t cols_ = 0;
  std::vector<double> data_;
};

Mat matmul(const Mat& a, const Mat& b);
// aᵀ·b without materializing the transpose.
Mat matmul_tn(const Mat& a, const Mat& b);
// a·bᵀ without materializing the transpose.
Mat matmul_nt(const Mat& a, const Mat& b);
Mat transpose(const Mat& a);

Mat operator+(const Mat& a, const Mat& b);
Mat operator-(const Mat& a, const Mat& b);
Mat operator*(double s, const Mat& a);

double frobenius_norm(const Mat& a);
double max_abs(const Mat& a);
// max |a - b| over entries; shapes must match.
double max_abs_diff(const Mat& a, const Mat& b);
bool all_finite(const Mat& a);

// Rows [first, first + count) as a new matrix.
Mat row_block(const Mat& a, std::size_t first, std::size_t count);
// Columns [first, first + count) as a new matrix.
Mat col_block(const Mat& a, std::size_t first, std::size_t count);

}  // namespace mlet
