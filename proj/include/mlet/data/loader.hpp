#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

#include "mlet/data/dataset.hpp"

namespace mlet {

enum class CtrFormat { kCriteoTsv, kAvazuCsv };

// "criteo-tsv" or "avazu-csv"; anything else throws ErrorKind::kInvalidArgument.
CtrFormat parse_format(std::string_view name);
std::string_view to_string(CtrFormat format);

inline constexpr std::uint64_t kDefaultHashMod = 100000;

struct LoadOptions {
  std::size_t max_rows = 0;  // 0 reads the whole file
  // Per-feature hash range; a single entry applies to every feature.
  std::vector<std::uint64_t> hash_mod{kDefaultHashMod};
  // Standardize dense columns with statistics of the loaded rows. Training
  // pipelines turn this off and fit on the train split instead.
  bool standardize = true;
  // Column layout of criteo-tsv files.
  std::size_t criteo_dense = 13;
  std::size_t criteo_categorical = 26;
};

// 64-bit FNV-1a: h = 0xcbf29ce484222325; for each byte: h ^= byte, h *= 0x100000001b3.
std::uint64_t fnv1a64(std::string_view s);

// Empty strings map to the reserved index 0; everything else to
// 1 + fnv1a64(s) mod hash_mod, so real values never land on 0.
CategoryIndex hash_category(std::string_view s, std::uint64_t hash_mod);

// criteo-tsv: `label \t I1..I13 \t C1..C26`, no header. Integers become
//   log(1 + max(x, 0)), missing integers count as 0.
// avazu-csv: header row; `click` is the label, `hour` (YYMMDDHH) contributes
//   its hour of day as the only dense feature, `id` is dropped and every other
//   column is categorical.
// Malformed lines throw ErrorKind::kFormat with the 1-based line number.
Dataset load_ctr_file(const std::filesystem::path& path, CtrFormat format, const LoadOptions& options = {});

// Writes `ds` in criteo-tsv layout with its own dense/categorical counts.
// Dense values are written at full precision, categories as 8-digit hex.
void write_criteo_tsv(const Dataset& ds, const std::filesystem::path& path);

}  // namespace mlet
