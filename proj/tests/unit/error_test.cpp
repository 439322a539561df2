#include "mlet/error.hpp"

#include <gtest/gtest.h>

namespace mlet {
namespace {

TEST(Error, CarriesKindAndPrefixedMessage) {
  const Error e(ErrorKind::kShapeMismatch, "2x3 vs 4x5");
  EXPECT_EQ(e.kind(), ErrorKind::kShapeMismatch);
  EXPECT_STREQ(e.what(), "shape mismatch: 2x3 vs 4x5");
}

TEST(Error, EveryKindHasADistinctName) {
  const ErrorKind kinds[] = {ErrorKind::kShapeMismatch, ErrorKind::kIndexOutOfRange, ErrorKind::kInvalidArgument,
                             ErrorKind::kConvergence,   ErrorKind::kDivergence,      ErrorKind::kDegenerateSpectrum,
                             ErrorKind::kIo,            ErrorKind::kFormat,          ErrorKind::kInvariant};
  for (std::size_t i = 0; i < std::size(kinds); ++i)
    for (std::size_t j = i + 1; j < std::size(kinds); ++j) EXPECT_NE(to_string(kinds[i]), to_string(kinds[j]));
}

}  // namespace
}  // namespace mlet
