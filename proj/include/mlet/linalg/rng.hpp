#pragma once

#include <cstdint>

#include "mlet/linalg/mat.hpp"

namespace mlet {

// Counter-based 64-bit generator. Output i of a stream with key K is
//
//   mix64(K + (i + 1) * 0x9E3779B97F4A7C15)
//
// where mix64 is the SplitMix64 finalizer (Steele, Lea & Flood 2014). It uses
// only integer arithmetic, so sequences are identical on every platform.
// Normals come from the Box-Muller transform and are cached in pairs.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : key_(mix64(seed ^ 0x6A09E667F3BCC909ULL)) {}

  // Independent child stream; the parent is not advanced.
  Rng split(std::uint64_t stream_id) const {
    Rng child(0);
    child.key_ = mix64(key_ ^ mix64(stream_id + 0xBB67AE8584CAA73BULL));
    return child;
  }

  std::uint64_t next_u64() {
    ++counter_;
    return mix64(key_ + counter_ * 0x9E3779B97F4A7C15ULL);
  }

  // Uniform in [0, 1) with 53 random bits.
  double uniform() { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }

  // Uniform integer in [0, n); n > 0. Lemire's multiply-shift with rejection.
  std::uint64_t below(std::uint64_t n);

  double normal();
  double normal(double mean, double std) { return mean + std * normal(); }

  static constexpr std::uint64_t mix64(std::uint64_t z) {
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
    return z ^ (z >> 31);
  }

 private:
  std::uint64_t key_ = 0;
  std::uint64_t counter_ = 0;
  double cached_normal_ = 0.0;
  bool has_cached_ = false;
};

// i.i.d. N(0, std^2) entries drawn row-major from Rng(seed).
Mat gaussian_mat(std::size_t rows, std::size_t cols, double std, std::uint64_t seed);
// Same, drawing from an existing stream.
Mat gaussian_mat(std::size_t rows, std::size_t cols, double std, Rng& rng);

}  // namespace mlet
