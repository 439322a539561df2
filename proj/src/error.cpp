#include "mlet/error.hpp"

namespace mlet {

std::string_view to_string(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::kShapeMismatch: return "shape mismatch";
    case ErrorKind::kIndexOutOfRange: return "index out of range";
    case ErrorKind::kInvalidArgument: return "invalid argument";
    case ErrorKind::kConvergence: return "convergence failure";
    case ErrorKind::kDivergence: return "divergence";
    case ErrorKind::kDegenerateSpectrum: return "degenerate spectrum";
    case ErrorKind::kIo: return "io error";
    case ErrorKind::kFormat: return "format error";
    case ErrorKind::kInvariant: return "invariant violation";
  }
  return "error";
}

}  // namespace mlet
