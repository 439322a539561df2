#include <atomic>
#include <cstdlib>
#include <string>

#include "mlet/error.hpp"
#include "mlet/simd/kernels.hpp"

namespace mlet::simd {
namespace {

bool cpu_supports(Backend backend) {
  switch (backend) {
    case Backend::kScalar:
      return true;
    case Backend::kAvx2:
#if defined(MLET_HAVE_AVX2)
      return __builtin_cpu_supports("avx2") && __builtin_cpu_supports("fma");
#else
      return false;
#endif
    case Backend::kNeon:
#if defined(MLET_HAVE_NEON)
      return true;
#else
      return false;
#endif
  }
  return false;
}

const KernelTable& table_for(Backend backend) {
  switch (backend) {
#if defined(MLET_HAVE_AVX2)
    case Backend::kAvx2: return avx2_kernels();
#endif
#if defined(MLET_HAVE_NEON)
    case Backend::kNeon: return neon_kernels();
#endif
    default: return scalar_kernels();
  }
}

const KernelTable* select_initial() {
  if (const char* env = std::getenv("MLET_SIMD")) {
    const std::string name(env);
    for (Backend b : available_backends()) {
      if (name == to_string(b)) return &table_for(b);
    }
  }
  return &table_for(available_backends().back());
}

std::atomic<const KernelTable*>& current() {
  static std::atomic<const KernelTable*> table{select_initial()};
  return table;
}

}  // namespace

std::string_view to_string(Backend backend) {
  switch (backend) {
    case Backend::kScalar: return "scalar";
    case Backend::kAvx2: return "avx2";
    case Backend::kNeon: return "neon";
  }
  return "unknown";
}

std::vector<Backend> available_backends() {
  std::vector<Backend> out{Backend::kScalar};
  for (Backend b : {Backend::kAvx2, Backend::kNeon}) {
    if (cpu_supports(b)) out.push_back(b);
  }
  return out;
}

const KernelTable& active() { return *current().load(std::memory_order_acquire); }

void set_backend(Backend backend) {
  if (!cpu_supports(backend)) {
    throw Error(ErrorKind::kInvalidArgument,
                "SIMD backend '" + std::string(to_string(backend)) + "' is not available on this CPU");
  }
  current().store(&table_for(backend), std::memory_order_release);
}

}  // namespace mlet::simd
