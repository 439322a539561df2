#include "mlet/embedding/table_io.hpp"

#include <algorithm>
#include <array>
#include <bit>
#include <cstring>
#include <fstream>
#include <limits>

#include "mlet/error.hpp"

namespace mlet {

namespace {

template <typename T>
void put_le(std::ostream& os, T value) {
  std::array<unsigned char, sizeof(T)> bytes{};
  std::memcpy(bytes.data(), &value, sizeof(T));
  if constexpr (std::endian::native == std::endian::big) std::reverse(bytes.begin(), bytes.end());
  os.write(reinterpret_cast<const char*>(bytes.data()), sizeof(T));
}

template <typename T>
bool get_le(std::istream& is, T& value) {
  std::array<unsigned char, sizeof(T)> bytes{};
  if (!is.read(reinterpret_cast<char*>(bytes.data()), sizeof(T))) return false;
  if constexpr (std::endian::native == std::endian::big) std::reverse(bytes.begin(), bytes.end());
  std::memcpy(&value, bytes.data(), sizeof(T));
  return true;
}

}  // namespace

void write_tensor(const std::filesystem::path& path, const Mat& m) {
  if (m.empty()) throw Error(ErrorKind::kInvalidArgument, "write_tensor: empty tensor " + m.shape_string());
  std::ofstream os(path, std::ios::binary | std::ios::trunc);
  if (!os) throw Error(ErrorKind::kIo, "cannot open " + path.string() + " for writing");
  os.write("MLET", 4);
  put_le<std::uint32_t>(os, kTableFormatVersion);
  put_le<std::uint64_t>(os, m.rows());
  put_le<std::uint64_t>(os, m.cols());
  for (double v : m.data()) put_le<double>(os, v);
  if (!os) throw Error(ErrorKind::kIo, "write failed for " + path.string());
}

Mat read_tensor(const std::filesystem::path& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw Error(ErrorKind::kIo, "cannot open " + path.string());
  char magic[4];
  if (!is.read(magic, 4) || std::memcmp(magic, "MLET", 4) != 0) {
    throw Error(ErrorKind::kFormat, path.string() + ": bad magic");
  }
  std::uint32_t version = 0;
  std::uint64_t rows = 0;
  std::uint64_t cols = 0;
  if (!get_le(is, version) || !get_le(is, rows) || !get_le(is, cols)) {
    throw Error(ErrorKind::kFormat, path.string() + ": truncated header");
  }
  if (version != kTableFormatVersion) {
    throw Error(ErrorKind::kFormat, path.string() + ": unsupported version " + std::to_string(version));
  }
  if (rows == 0 || cols == 0 || rows > std::numeric_limits<std::uint64_t>::max() / cols / 8) {
    throw Error(ErrorKind::kFormat, path.string() + ": invalid shape");
  }
  const auto expected = static_cast<std::uintmax_t>(24 + 8 * rows * cols);
  std::error_code ec;
  const auto actual = std::filesystem::file_size(path, ec);
  if (ec || actual != expected) {
    throw Error(ErrorKind::kFormat, path.string() + ": size " + std::to_string(actual) +
                                        " bytes, header implies " + std::to_string(expected));
  }
  Mat m(rows, cols);
  for (double& v : m.data()) {
    if (!get_le(is, v)) throw Error(ErrorKind::kFormat, path.string() + ": truncated data");
  }
  return m;
}

}  // namespace mlet
