#pragma once

// Dense double-precision inner-loop kernels with runtime backend selection.
//
// Every backend computes the same mathematical result; they differ only in
// summation order and FMA contraction, so results agree to rounding, not
// bit-for-bit. Within one process the backend is fixed unless a caller
// switches it explicitly, which keeps training runs bit-reproducible.

#include <cstddef>
#include <span>
#include <string_view>
#include <vector>

namespace mlet::simd {

enum class Backend { kScalar, kAvx2, kNeon };

std::string_view to_string(Backend backend);

struct KernelTable {
  Backend backend;
  // sum_i x[i] * y[i]
  double (*dot)(const double* x, const double* y, std::size_t n);
  // y[i] += alpha * x[i]
  void (*axpy)(double alpha, const double* x, double* y, std::size_t n);
  // y[i] *= alpha
  void (*scale)(double alpha, double* y, std::size_t n);
};

const KernelTable& scalar_kernels();
#if defined(MLET_HAVE_AVX2)
const KernelTable& avx2_kernels();
#endif
#if defined(MLET_HAVE_NEON)
const KernelTable& neon_kernels();
#endif

// Backends compiled in and supported by the running CPU. Scalar is always first.
std::vector<Backend> available_backends();

// Best supported backend, unless the MLET_SIMD environment variable names one
// ("scalar", "avx2", "neon") at first use.
const KernelTable& active();

// Throws mlet::Error if the backend is not available on this machine.
void set_backend(Backend backend);

inline double dot(std::span<const double> x, std::span<const double> y) {
  return active().dot(x.data(), y.data(), x.size());
}

inline void axpy(double alpha, std::span<const double> x, std::span<double> y) {
  active().axpy(alpha, x.data(), y.data(), x.size());
}

inline void scale(double alpha, std::span<double> y) { active().scale(alpha, y.data(), y.size()); }

}  // namespace mlet::simd
