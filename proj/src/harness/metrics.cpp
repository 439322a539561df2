#include "mlet/harness/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <numeric>
#include <string>
#include <vector>

#include "mlet/error.hpp"

namespace mlet {

namespace {

void check_lengths(std::size_t a, std::size_t b, const char* what) {
  if (a == 0) throw Error(ErrorKind::kInvalidArgument, std::string(what) + ": empty input");
  if (a != b) {
    throw Error(ErrorKind::kShapeMismatch, std::string(what) + ": " + std::to_string(a) + " scores for " +
                                               std::to_string(b) + " labels");
  }
}

}  // namespace

double logloss(std::span<const double> probs, std::span<const double> labels) {
  check_lengths(probs.size(), labels.size(), "logloss");
  double sum = 0.0;
  for (std::size_t i = 0; i < probs.size(); ++i) {
    const double p = std::clamp(probs[i], kProbClamp, 1.0 - kProbClamp);
    const double y = labels[i];
    sum += y * std::log(p) + (1.0 - y) * std::log1p(-p);
  }
  return -sum / static_cast<double>(probs.size());
}

double auc(std::span<const double> scores, std::span<const double> labels) {
  check_lengths(scores.size(), labels.size(), "auc");
  const std::size_t n = scores.size();
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return scores[a] < scores[b]; });

  // Ranks are 1-based; a tie group spanning positions [i, j) gets rank (i + j + 1) / 2.
  // Twice the rank sum is accumulated so every term stays an integer.
  std::uint64_t positives = 0;
  std::uint64_t twice_rank_sum = 0;
  for (std::size_t i = 0; i < n;) {
    std::size_t j = i + 1;
    while (j < n && scores[order[j]] == scores[order[i]]) ++j;
    std::uint64_t group_pos = 0;
    for (std::size_t t = i; t < j; ++t) group_pos += labels[order[t]] > 0.5 ? 1 : 0;
    twice_rank_sum += group_pos * static_cast<std::uint64_t>(i + j + 1);
    positives += group_pos;
    i = j;
  }
  const std::uint64_t negatives = n - positives;
  if (positives == 0) throw Error(ErrorKind::kInvalidArgument, "auc: no positive labels");
  if (negatives == 0) throw Error(ErrorKind::kInvalidArgument, "auc: no negative labels");
  // U = R_pos - P(P+1)/2 counts wins plus half ties; doubled to stay integral.
  const std::uint64_t twice_u = twice_rank_sum - positives * (positives + 1);
  return static_cast<double>(twice_u) / (2.0 * static_cast<double>(positives) * static_cast<double>(negatives));
}

}  // namespace mlet
