#include "mlet/data/loader.hpp"

#include <charconv>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>

#include "mlet/error.hpp"

namespace mlet {

namespace {

std::vector<std::string_view> split_fields(std::string_view line, char sep) {
  std::vector<std::string_view> out;
  std::size_t start = 0;
  for (;;) {
    const std::size_t pos = line.find(sep, start);
    if (pos == std::string_view::npos) {
      out.push_back(line.substr(start));
      return out;
    }
    out.push_back(line.substr(start, pos - start));
    start = pos + 1;
  }
}

[[noreturn]] void malformed(const std::filesystem::path& path, std::size_t line_no, const std::string& what) {
  throw Error(ErrorKind::kFormat, path.string() + ":" + std::to_string(line_no) + ": " + what);
}

double parse_number(std::string_view field, const std::filesystem::path& path, std::size_t line_no) {
  double value = 0.0;
  const auto* end = field.data() + field.size();
  const auto [ptr, ec] = std::from_chars(field.data(), end, value);
  if (ec != std::errc() || ptr != end || !std::isfinite(value)) {
    malformed(path, line_no, "bad numeric field '" + std::string(field) + "'");
  }
  return value;
}

std::uint8_t parse_label(std::string_view field, const std::filesystem::path& path, std::size_t line_no) {
  if (field == "0") return 0;
  if (field == "1") return 1;
  malformed(path, line_no, "label must be 0 or 1, got '" + std::string(field) + "'");
}

std::uint64_t mod_for(const LoadOptions& options, std::size_t feature) {
  if (options.hash_mod.empty()) return kDefaultHashMod;
  const std::uint64_t m = options.hash_mod.size() == 1 ? options.hash_mod.front() : options.hash_mod.at(feature);
  if (m == 0) throw Error(ErrorKind::kInvalidArgument, "hash_mod must be >= 1");
  return m;
}

void strip_cr(std::string& line) {
  if (!line.empty() && line.back() == '\r') line.pop_back();
}

struct Builder {
  std::vector<double> dense;
  std::vector<CategoryIndex> cats;
  std::vector<std::uint8_t> labels;
  std::uint64_t byte_hash = 0xCBF29CE484222325ULL;

  void hash_line(const std::string& line) {
    for (unsigned char c : line) {
      byte_hash ^= c;
      byte_hash *= 0x100000001B3ULL;
    }
    byte_hash ^= '\n';
    byte_hash *= 0x100000001B3ULL;
  }
};

Dataset finish(Builder&& b, std::size_t num_dense, std::size_t num_features, const LoadOptions& options,
               const std::filesystem::path& path, CtrFormat format) {
  Dataset ds;
  ds.num_features = num_features;
  ds.labels = std::move(b.labels);
  ds.cats = std::move(b.cats);
  ds.dense = Mat(ds.labels.size(), num_dense, std::move(b.dense));
  for (std::size_t f = 0; f < num_features; ++f) ds.cardinalities.push_back(mod_for(options, f) + 1);
  if (options.standardize) Standardizer::fit(ds.dense).apply(ds.dense);
  char hex[17];
  std::snprintf(hex, sizeof(hex), "%016llx", static_cast<unsigned long long>(b.byte_hash));
  ds.provenance = "file(" + path.string() + ", " + std::string(to_string(format)) + ", fnv1a=" + hex + ")";
  return ds;
}

Dataset load_criteo(std::istream& in, const std::filesystem::path& path, const LoadOptions& options) {
  const std::size_t nd = options.criteo_dense;
  const std::size_t nc = options.criteo_categorical;
  Builder b;
  std::string line;
  std::size_t line_no = 0;
  while ((options.max_rows == 0 || b.labels.size() < options.max_rows) && std::getline(in, line)) {
    ++line_no;
    strip_cr(line);
    b.hash_line(line);
    const auto fields = split_fields(line, '\t');
    if (fields.size() != 1 + nd + nc) {
      malformed(path, line_no, "expected " + std::to_string(1 + nd + nc) + " tab-separated fields, got " +
                                   std::to_string(fields.size()));
    }
    b.labels.push_back(parse_label(fields[0], path, line_no));
    for (std::size_t j = 0; j < nd; ++j) {
      const std::string_view f = fields[1 + j];
      const double x = f.empty() ? 0.0 : parse_number(f, path, line_no);
      b.dense.push_back(std::log1p(std::max(x, 0.0)));
    }
    for (std::size_t j = 0; j < nc; ++j) b.cats.push_back(hash_category(fields[1 + nd + j], mod_for(options, j)));
  }
  return finish(std::move(b), nd, nc, options, path, CtrFormat::kCriteoTsv);
}

Dataset load_avazu(std::istream& in, const std::filesystem::path& path, const LoadOptions& options) {
  std::string line;
  if (!std::getline(in, line)) malformed(path, 1, "missing header row");
  strip_cr(line);
  const auto header = split_fields(line, ',');
  std::size_t click_col = header.size();
  std::size_t hour_col = header.size();
  std::vector<std::size_t> cat_cols;
  for (std::size_t i = 0; i < header.size(); ++i) {
    if (header[i] == "click") {
      click_col = i;
    } else if (header[i] == "hour") {
      hour_col = i;
    } else if (header[i] != "id") {
      cat_cols.push_back(i);
    }
  }
  if (click_col == header.size() || hour_col == header.size()) {
    malformed(path, 1, "header must contain 'click' and 'hour' columns");
  }
  Builder b;
  b.hash_line(line);
  std::size_t line_no = 1;
  while ((options.max_rows == 0 || b.labels.size() < options.max_rows) && std::getline(in, line)) {
    ++line_no;
    strip_cr(line);
    b.hash_line(line);
    const auto fields = split_fields(line, ',');
    if (fields.size() != header.size()) {
      malformed(path, line_no, "expected " + std::to_string(header.size()) + " comma-separated fields, got " +
                                   std::to_string(fields.size()));
    }
    b.labels.push_back(parse_label(fields[click_col], path, line_no));
    const std::string_view hour = fields[hour_col];
    if (hour.size() != 8) malformed(path, line_no, "hour must be YYMMDDHH, got '" + std::string(hour) + "'");
    const double hh = parse_number(hour.substr(6, 2), path, line_no);
    if (hh > 23.0) malformed(path, line_no, "hour of day out of range in '" + std::string(hour) + "'");
    b.dense.push_back(hh);
    for (std::size_t j = 0; j < cat_cols.size(); ++j) {
      b.cats.push_back(hash_category(fields[cat_cols[j]], mod_for(options, j)));
    }
  }
  return finish(std::move(b), 1, cat_cols.size(), options, path, CtrFormat::kAvazuCsv);
}

}  // namespace

CtrFormat parse_format(std::string_view name) {
  if (name == "criteo-tsv") return CtrFormat::kCriteoTsv;
  if (name == "avazu-csv") return CtrFormat::kAvazuCsv;
  throw Error(ErrorKind::kInvalidArgument, "unknown dataset format '" + std::string(name) +
                                               "' (expected criteo-tsv or avazu-csv)");
}

std::string_view to_string(CtrFormat format) {
  return format == CtrFormat::kCriteoTsv ? "criteo-tsv" : "avazu-csv";
}

std::uint64_t fnv1a64(std::string_view s) {
  std::uint64_t h = 0xCBF29CE484222325ULL;
  for (unsigned char c : s) {
    h ^= c;
    h *= 0x100000001B3ULL;
  }
  return h;
}

CategoryIndex hash_category(std::string_view s, std::uint64_t hash_mod) {
  if (s.empty()) return 0;
  return static_cast<CategoryIndex>(1 + fnv1a64(s) % hash_mod);
}

Dataset load_ctr_file(const std::filesystem::path& path, CtrFormat format, const LoadOptions& options) {
  if (!options.hash_mod.empty()) {
    for (std::uint64_t m : options.hash_mod) {
      if (m == 0 || m >= 0xFFFFFFFFULL) throw Error(ErrorKind::kInvalidArgument, "hash_mod must be in [1, 2^32 - 1)");
    }
  }
  std::ifstream in(path);
  if (!in) throw Error(ErrorKind::kIo, "cannot open " + path.string());
  return format == CtrFormat::kCriteoTsv ? load_criteo(in, path, options) : load_avazu(in, path, options);
}

void write_criteo_tsv(const Dataset& ds, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw Error(ErrorKind::kIo, "cannot open " + path.string() + " for writing");
  char buf[64];
  for (std::size_t e = 0; e < ds.size(); ++e) {
    out << static_cast<int>(ds.labels[e]);
    for (std::size_t j = 0; j < ds.num_dense(); ++j) {
      std::snprintf(buf, sizeof(buf), "%.17g", ds.dense(e, j));
      out << '\t' << buf;
    }
    for (std::size_t f = 0; f < ds.num_features; ++f) {
      std::snprintf(buf, sizeof(buf), "%08x", static_cast<unsigned>(ds.cat(e, f)));
      out << '\t' << buf;
    }
    out << '\n';
  }
  if (!out) throw Error(ErrorKind::kIo, "write failed for " + path.string());
}

}  // namespace mlet
