#pragma once

// Binary tensor file, all integers and floats little-endian:
//
//   offset  size     field
//   0       4        magic "MLET"
//   4       4        u32 format version (currently 1)
//   8       8        u64 n (rows)
//   16      8        u64 d (cols)
//   24      8·n·d    f64 entries, row-major
//
// Used for exported inference tables and for every tensor in a checkpoint.

#include <cstdint>
#include <filesystem>

#include "mlet/embedding/table.hpp"

namespace mlet {

inline constexpr std::uint32_t kTableFormatVersion = 1;

// Empty tensors throw ErrorKind::kInvalidArgument; readers reject them as corrupt.
void write_tensor(const std::filesystem::path& path, const Mat& m);
Mat read_tensor(const std::filesystem::path& path);

inline void write_table(const std::filesystem::path& path, const EmbeddingTable& table) {
  write_tensor(path, table.w);
}
inline EmbeddingTable read_table(const std::filesystem::path& path) {
  return EmbeddingTable{read_tensor(path)};
}

}  // namespace mlet
