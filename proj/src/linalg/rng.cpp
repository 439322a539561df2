#include "mlet/linalg/rng.hpp"

#include <cmath>
#include <numbers>

#include "mlet/error.hpp"

namespace mlet {

namespace {
__extension__ typedef unsigned __int128 u128;
}  // namespace

std::uint64_t Rng::below(std::uint64_t n) {
  if (n == 0) throw Error(ErrorKind::kInvalidArgument, "Rng::below(0)");
  const std::uint64_t threshold = (0 - n) % n;
  for (;;) {
    const u128 m = static_cast<u128>(next_u64()) * n;
    if (static_cast<std::uint64_t>(m) >= threshold) return static_cast<std::uint64_t>(m >> 64);
  }
}

double Rng::normal() {
  if (has_cached_) {
    has_cached_ = false;
    return cached_normal_;
  }
  // 1 - uniform() lies in (0, 1], so the log is finite.
  const double u1 = 1.0 - uniform();
  const double u2 = uniform();
  const double radius = std::sqrt(-2.0 * std::log(u1));
  const double theta = 2.0 * std::numbers::pi * u2;
  cached_normal_ = radius * std::sin(theta);
  has_cached_ = true;
  return radius * std::cos(theta);
}

Mat gaussian_mat(std::size_t rows, std::size_t cols, double std, Rng& rng) {
  if (!(std > 0.0)) throw Error(ErrorKind::kInvalidArgument, "gaussian_mat: std must be > 0");
  Mat out(rows, cols);
  for (double& v : out.data()) v = rng.normal(0.0, std);
  return out;
}

Mat gaussian_mat(std::size_t rows, std::size_t cols, double std, std::uint64_t seed) {
  Rng rng(seed);
  return gaussian_mat(rows, cols, std, rng);
}

}  // namespace mlet
