#include "mlet/dynamics/spectrum.hpp"

#include "mlet/error.hpp"
#include "mlet/linalg/decompose.hpp"

namespace mlet {

std::size_t effective_rank(std::span<const double> s, double rel_threshold) {
  if (s.empty()) throw Error(ErrorKind::kInvalidArgument, "effective_rank: empty spectrum");
  if (s.front() == 0.0) return 0;
  const double cutoff = rel_threshold * s.front();
  std::size_t count = 0;
  for (double v : s) {
    if (v < 0.0) throw Error(ErrorKind::kInvalidArgument, "effective_rank: negative singular value");
    if (v > cutoff) ++count;
  }
  return count;
}

SpectrumReport spectrum_of(const Mat& m, double rel_threshold, std::size_t step) {
  SpectrumReport report;
  report.singular_values = singular_values(m);
  report.rel_threshold = rel_threshold;
  report.effective_rank = effective_rank(report.singular_values, rel_threshold);
  report.step = step;
  return report;
}

}  // namespace mlet
