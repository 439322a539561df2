#pragma once

#include <vector>

#include "mlet/linalg/mat.hpp"

namespace mlet {

// Thin QR: q is m×p with orthonormal columns, r is p×n upper triangular with a
// non-negative diagonal, p = min(m, n).
struct QrResult {
  Mat q;
  Mat r;
};

// Thin SVD: m = u · diag(s) · vᵀ with u m×p, v n×p, s descending, p = min(m, n).
struct SvdResult {
  Mat u;
  std::vector<double> s;
  Mat v;
};

// Householder QR without pivoting. Rank-deficient input is fine: the
// corresponding diagonal entries of r come out as zero.
QrResult qr_decompose(const Mat& m);

struct SvdOptions {
  int max_sweeps = 60;
  // Column pair (i, j) is treated as orthogonal once
  // |a_i·a_j| <= tolerance * ‖a_i‖‖a_j‖.
  double tolerance = 1e-15;
};

// One-sided (Hestenes) Jacobi SVD. Throws ErrorKind::kConvergence if the
// sweep cap is hit before every column pair is orthogonal.
SvdResult svd(const Mat& m, const SvdOptions& options = {});

// Singular values only; same algorithm, skips forming u and v.
std::vector<double> singular_values(const Mat& m);

}  // namespace mlet
