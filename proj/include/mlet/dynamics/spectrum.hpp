#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include "mlet/linalg/mat.hpp"

namespace mlet {

inline constexpr double kDefaultRankThreshold = 0.01;

struct SpectrumReport {
  std::vector<double> singular_values;  // descending
  double rel_threshold = kDefaultRankThreshold;
  std::size_t effective_rank = 0;
  std::size_t step = 0;
};

// Number of values strictly greater than rel_threshold * s[0]; 0 when s[0] == 0.
// `s` must be non-empty, descending and non-negative.
std::size_t effective_rank(std::span<const double> s, double rel_threshold = kDefaultRankThreshold);

SpectrumReport spectrum_of(const Mat& m, double rel_threshold = kDefaultRankThreshold,
                           std::size_t step = 0);

}  // namespace mlet
