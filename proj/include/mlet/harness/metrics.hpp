#pragma once

#include <span>

namespace mlet {

inline constexpr double kProbClamp = 1e-12;

// Mean binary cross-entropy with probabilities clamped to [1e-12, 1 - 1e-12].
// Labels are 0 or 1 (as doubles). Empty or mismatched input throws.
double logloss(std::span<const double> probs, std::span<const double> labels);

// Mann-Whitney AUC, (wins + 0.5 * ties) / (P * N), computed from average ranks
// in O(n log n). Throws ErrorKind::kInvalidArgument naming the missing class
// when every label is the same.
double auc(std::span<const double> scores, std::span<const double> labels);

}  // namespace mlet
