#include "mlet/data/loader.hpp"

#include <gtest/gtest.h>

#include <cmath>
#include <utility>

#include "mlet/error.hpp"
#include "mlet/linalg/rng.hpp"

namespace mlet {
namespace {

namespace fs = std::filesystem;

const fs::path kFixtures{MLET_FIXTURE_DIR};

// Golden values computed independently with a few lines of Python.
const std::pair<std::string_view, std::uint64_t> kFnvGolden[] = {
    {"", 0xcbf29ce484222325ULL},
    {"a", 0xaf63dc4c8601ec8cULL},
    {"b", 0xaf63df4c8601f1a5ULL},
    {"foobar", 0x85944171f73967e8ULL},
    {"68fd1e64", 0x1ae7327a0f5691ddULL},
    {"05db9164", 0x1cb713a4f2d89668ULL},
    {"hello world", 0x779a65e7023cd2e7ULL},
    {"1000", 0x0d8269f0f88e4a24ULL},
    {"ffffffff", 0xd5a0786644d315c5ULL},
    {"criteo", 0xad426b08efe31875ULL},
    {"avazu", 0x1e623f92c42cec90ULL},
    {"1fbe01fe", 0xdd6c2bdd4f66656dULL},
    {"Z", 0xaf64174c860250cdULL},
    {"0", 0xaf63ad4c86019cafULL},
    {"\t", 0xaf63c44c8601c3c4ULL},
    {"\xc3\xa9", 0x0ac21707b7181e01ULL},
    {"abc", 0xe71fa2190541574bULL},
    {"abd", 0xe71fa71905415fcaULL},
    {"abcdefghijklmnopqrstuvwxyz", 0x8450deb1cdc382a2ULL},
    {"MLET", 0x3448d2af54ee971dULL},
};

LoadOptions raw(std::uint64_t hash_mod) {
  LoadOptions o;
  o.hash_mod = {hash_mod};
  o.standardize = false;
  return o;
}

void expect_format_error_at_line(const fs::path& file, CtrFormat format, std::size_t line) {
  try {
    load_ctr_file(file, format, raw(100));
    FAIL() << "expected a format error for " << file;
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::kFormat);
    const std::string needle = file.filename().string() + ":" + std::to_string(line) + ":";
    EXPECT_NE(std::string(e.what()).find(needle), std::string::npos) << e.what();
  }
}

TEST(Fnv1a, MatchesGoldenTable) {
  for (const auto& [s, h] : kFnvGolden) EXPECT_EQ(fnv1a64(s), h) << "'" << s << "'";
}

TEST(HashCategory, EmptyIsReservedAndOthersAreShifted) {
  EXPECT_EQ(hash_category("", 7), 0u);
  for (const auto& [s, h] : kFnvGolden) {
    if (s.empty()) continue;
    EXPECT_EQ(hash_category(s, 1000), 1 + h % 1000);
    EXPECT_GE(hash_category(s, 1), 1u);
  }
}

TEST(ParseFormat, KnownNamesRoundTrip) {
  EXPECT_EQ(parse_format("criteo-tsv"), CtrFormat::kCriteoTsv);
  EXPECT_EQ(parse_format("avazu-csv"), CtrFormat::kAvazuCsv);
  EXPECT_EQ(to_string(CtrFormat::kAvazuCsv), "avazu-csv");
  EXPECT_THROW(parse_format("parquet"), Error);
}

TEST(CriteoLoader, HandComputedFixture) {
  const Dataset ds = load_ctr_file(kFixtures / "criteo_small.tsv", CtrFormat::kCriteoTsv, raw(1000));
  ASSERT_EQ(ds.size(), 3u);
  EXPECT_EQ(ds.num_dense(), 13u);
  EXPECT_EQ(ds.num_features, 26u);
  EXPECT_EQ(ds.labels, (std::vector<std::uint8_t>{1, 0, 1}));
  EXPECT_EQ(ds.cardinalities, std::vector<std::size_t>(26, 1001));

  // Row 0 dense: 0,1,_,3,-5,10,_,0,2,0,0,7,1 → log(1 + max(x, 0)), missing → 0.
  const double row0[13] = {0, std::log(2.0), 0, std::log(4.0), 0, std::log(11.0), 0, 0, std::log(3.0), 0, 0,
                           std::log(8.0), std::log(2.0)};
  for (std::size_t j = 0; j < 13; ++j) EXPECT_NEAR(ds.dense(0, j), row0[j], 1e-15) << j;
  for (std::size_t j = 0; j < 13; ++j) EXPECT_EQ(ds.dense(1, j), 0.0);
  for (std::size_t j = 0; j < 13; ++j) EXPECT_NEAR(ds.dense(2, j), std::log1p(static_cast<double>(j)), 1e-15);

  const CategoryIndex row0_cats[6] = {462, 55, 0, 997, 630, 419};
  for (std::size_t f = 0; f < 6; ++f) EXPECT_EQ(ds.cat(0, f), row0_cats[f]) << f;
  for (std::size_t f = 0; f < 26; ++f) EXPECT_EQ(ds.cat(1, f), 0u);
  for (std::size_t f = 0; f < 26; ++f) EXPECT_EQ(ds.cat(2, f), 97u);
  EXPECT_NE(ds.provenance.find("criteo-tsv"), std::string::npos);
  EXPECT_NO_THROW(validate(ds));
}

TEST(CriteoLoader, MaxRowsAndPerFeatureHashMod) {
  LoadOptions o = raw(1000);
  o.max_rows = 2;
  EXPECT_EQ(load_ctr_file(kFixtures / "criteo_small.tsv", CtrFormat::kCriteoTsv, o).size(), 2u);
  o.max_rows = 0;
  o.hash_mod.assign(26, 50);
  o.hash_mod[0] = 1000;
  const Dataset ds = load_ctr_file(kFixtures / "criteo_small.tsv", CtrFormat::kCriteoTsv, o);
  EXPECT_EQ(ds.cardinalities[0], 1001u);
  EXPECT_EQ(ds.cardinalities[1], 51u);
  EXPECT_EQ(ds.cat(0, 0), 462u);
}

TEST(CriteoLoader, StandardizeGivesZeroMeanColumns) {
  LoadOptions o = raw(1000);
  o.standardize = true;
  const Dataset ds = load_ctr_file(kFixtures / "criteo_small.tsv", CtrFormat::kCriteoTsv, o);
  for (std::size_t j = 0; j < 13; ++j) {
    double mean = 0.0;
    for (std::size_t e = 0; e < ds.size(); ++e) mean += ds.dense(e, j);
    EXPECT_NEAR(mean / 3.0, 0.0, 1e-12);
  }
}

TEST(CriteoLoader, MalformedLinesReportLineNumbers) {
  expect_format_error_at_line(kFixtures / "criteo_bad_label.tsv", CtrFormat::kCriteoTsv, 3);
  expect_format_error_at_line(kFixtures / "criteo_bad_fields.tsv", CtrFormat::kCriteoTsv, 2);
  expect_format_error_at_line(kFixtures / "criteo_bad_number.tsv", CtrFormat::kCriteoTsv, 1);
}

TEST(CriteoLoader, MissingFileIsIoError) {
  try {
    load_ctr_file(kFixtures / "nope.tsv", CtrFormat::kCriteoTsv);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::kIo);
  }
}

TEST(CriteoLoader, RejectsBadHashMod) {
  EXPECT_THROW(load_ctr_file(kFixtures / "criteo_small.tsv", CtrFormat::kCriteoTsv, raw(0)), Error);
}

TEST(AvazuLoader, HandComputedFixture) {
  const Dataset ds = load_ctr_file(kFixtures / "avazu_small.csv", CtrFormat::kAvazuCsv, raw(50));
  ASSERT_EQ(ds.size(), 3u);
  EXPECT_EQ(ds.num_dense(), 1u);
  EXPECT_EQ(ds.num_features, 3u);  // C1, banner_pos, site_id; id is dropped
  EXPECT_EQ(ds.labels, (std::vector<std::uint8_t>{0, 1, 0}));
  EXPECT_EQ(ds.dense(0, 0), 0.0);
  EXPECT_EQ(ds.dense(1, 0), 13.0);
  EXPECT_EQ(ds.dense(2, 0), 23.0);
  const CategoryIndex cats[3][3] = {{46, 30, 40}, {46, 19, 0}, {1, 30, 27}};
  for (std::size_t e = 0; e < 3; ++e)
    for (std::size_t f = 0; f < 3; ++f) EXPECT_EQ(ds.cat(e, f), cats[e][f]) << e << "," << f;
}

TEST(AvazuLoader, HourOutOfRangeReportsLineNumber) {
  expect_format_error_at_line(kFixtures / "avazu_bad_hour.csv", CtrFormat::kAvazuCsv, 3);
}

TEST(WriteCriteo, RoundTripsThroughLoader) {
  Dataset ds;
  ds.num_features = 2;
  ds.dense = Mat{{0.0, 2.5}, {7.0, 1e-3}};
  ds.cats = {3, 0, 12, 5};
  ds.labels = {1, 0};
  ds.cardinalities = {20, 20};
  const fs::path p = fs::temp_directory_path() / "mlet_loader_roundtrip.tsv";
  write_criteo_tsv(ds, p);
  LoadOptions o = raw(1000);
  o.criteo_dense = 2;
  o.criteo_categorical = 2;
  const Dataset back = load_ctr_file(p, CtrFormat::kCriteoTsv, o);
  EXPECT_EQ(back.labels, ds.labels);
  EXPECT_NEAR(back.dense(0, 1), std::log1p(2.5), 1e-15);
  EXPECT_NEAR(back.dense(1, 0), std::log1p(7.0), 1e-15);
  // Categories are written as 8-digit hex and hashed again on load.
  EXPECT_EQ(back.cat(0, 0), hash_category("00000003", 1000));
  EXPECT_EQ(back.cat(1, 1), hash_category("00000005", 1000));
}

}  // namespace
}  // namespace mlet
