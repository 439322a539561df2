#include "mlet/embedding/table_io.hpp"

#include <gtest/gtest.h>

#include <bit>
#include <cmath>
#include <fstream>
#include <iterator>
#include <limits>

#include "mlet/error.hpp"

namespace mlet {
namespace {

namespace fs = std::filesystem;

fs::path temp_file(const std::string& name) {
  const fs::path dir = fs::temp_directory_path() / "mlet_table_io_test";
  fs::create_directories(dir);
  return dir / name;
}

std::vector<unsigned char> read_bytes(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

void write_bytes(const fs::path& p, const std::vector<unsigned char>& bytes) {
  std::ofstream out(p, std::ios::binary | std::ios::trunc);
  out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
}

TEST(TableIo, HeaderBytesAreExact) {
  const fs::path p = temp_file("header.mlet");
  write_tensor(p, Mat{{1.0, -2.0, 0.5}, {3.0, 4.0, 5.0}});
  const auto bytes = read_bytes(p);
  ASSERT_EQ(bytes.size(), 24u + 8 * 6);
  const std::vector<unsigned char> header{'M', 'L', 'E', 'T', 1, 0, 0, 0, 2, 0, 0, 0, 0, 0, 0, 0,
                                          3,   0,   0,   0,   0, 0, 0, 0};
  EXPECT_TRUE(std::equal(header.begin(), header.end(), bytes.begin()));
  // 1.0 is 0x3FF0000000000000, stored little-endian.
  const std::vector<unsigned char> one{0, 0, 0, 0, 0, 0, 0xF0, 0x3F};
  EXPECT_TRUE(std::equal(one.begin(), one.end(), bytes.begin() + 24));
}

TEST(TableIo, RoundTripIsBitExact) {
  Mat m = gaussian_mat(17, 5, 3.0, 1);
  m(0, 0) = -0.0;
  m(1, 1) = std::numeric_limits<double>::denorm_min();
  m(2, 2) = std::numeric_limits<double>::max();
  const fs::path p = temp_file("roundtrip.mlet");
  write_tensor(p, m);
  const Mat back = read_tensor(p);
  ASSERT_TRUE(back.same_shape(m));
  for (std::size_t i = 0; i < m.size(); ++i)
    EXPECT_EQ(std::bit_cast<std::uint64_t>(back.data()[i]), std::bit_cast<std::uint64_t>(m.data()[i]));
}

TEST(TableIo, TableWrappersRoundTrip) {
  const EmbeddingTable t{gaussian_mat(4, 2, 1.0, 2)};
  const fs::path p = temp_file("table.mlet");
  write_table(p, t);
  EXPECT_EQ(read_table(p).w, t.w);
}

TEST(TableIo, EmptyTensorIsRejected) {
  try {
    write_tensor(temp_file("empty.mlet"), Mat(0, 3));
    FAIL() << "expected an error";
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::kInvalidArgument);
  }
}

void expect_kind(const fs::path& p, ErrorKind kind) {
  try {
    read_tensor(p);
    FAIL() << "expected an error";
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), kind) << e.what();
  }
}

TEST(TableIo, MissingFileIsIoError) { expect_kind(temp_file("does_not_exist.mlet"), ErrorKind::kIo); }

TEST(TableIo, CorruptFilesAreFormatErrors) {
  const fs::path good = temp_file("good.mlet");
  write_tensor(good, Mat{{1, 2}, {3, 4}});
  const auto bytes = read_bytes(good);
  const fs::path p = temp_file("corrupt.mlet");

  auto bad_magic = bytes;
  bad_magic[0] = 'X';
  write_bytes(p, bad_magic);
  expect_kind(p, ErrorKind::kFormat);

  auto bad_version = bytes;
  bad_version[4] = 2;
  write_bytes(p, bad_version);
  expect_kind(p, ErrorKind::kFormat);

  auto truncated = bytes;
  truncated.pop_back();
  write_bytes(p, truncated);
  expect_kind(p, ErrorKind::kFormat);

  auto trailing = bytes;
  trailing.push_back(0);
  write_bytes(p, trailing);
  expect_kind(p, ErrorKind::kFormat);

  write_bytes(p, std::vector<unsigned char>(bytes.begin(), bytes.begin() + 10));
  expect_kind(p, ErrorKind::kFormat);

  // A header claiming more entries than the file could ever hold.
  auto huge = bytes;
  for (std::size_t i = 8; i < 24; ++i) huge[i] = 0xFF;
  write_bytes(p, huge);
  expect_kind(p, ErrorKind::kFormat);
}

}  // namespace
}  // namespace mlet
