#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace mlet {

enum class ErrorKind {
  kShapeMismatch,
  kIndexOutOfRange,
  kInvalidArgument,
  kConvergence,
  kDivergence,
  kDegenerateSpectrum,
  kIo,
  kFormat,
  kInvariant,
};

std::string_view to_string(ErrorKind kind);

// All library failures are reported through this type. `kind()` lets callers
// (the CLI in particular) map failures to exit codes without parsing text.
class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& message)
      : std::runtime_error(std::string(to_string(kind)) + ": " + message), kind_(kind) {}

  ErrorKind kind() const noexcept { return kind_; }

 private:
  ErrorKind kind_;
};

}  // namespace mlet
