#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <cstdlib>
#include <fstream>
#include <limits>
#include <set>
#include <span>
#include <string>
#include <vector>

#include "stego/csv.hpp"
#include "stego/error.hpp"
#include "stego/kv.hpp"
#include "stego/rng.hpp"
#include "stego/tensor.hpp"

namespace stego {

// ============================================================================
//  Schema
// ============================================================================

enum class AttrKind { categorical, numeric };

struct AttributeSpec {
  std::string name;
  AttrKind kind = AttrKind::categorical;
  int bins = 32;  // numeric attributes only
};

// One attribute's slice of the one-hot layout. Categorical slices are as
// wide as the vocabulary; numeric slices have one bit per bin (bin i spans
// [edges[i], edges[i+1])).
struct Attribute {
  std::string name;
  AttrKind kind = AttrKind::categorical;
  std::vector<std::string> vocabulary;  // categorical
  std::vector<double> bin_edges;        // numeric, strictly ascending

  std::size_t width() const {
    return kind == AttrKind::categorical ? vocabulary.size()
                                         : bin_edges.size() - 1;
  }
};

struct TabularSchema {
  std::vector<Attribute> attributes;

  std::size_t total_dims() const {
    std::size_t d = 0;
    for (const auto& a : attributes) d += a.width();
    return d;
  }

  std::size_t offset_of(std::size_t attr_index) const {
    std::size_t off = 0;
    for (std::size_t i = 0; i < attr_index; ++i) off += attributes[i].width();
    return off;
  }
};

using Record = std::vector<std::string>;

struct CsvTable {
  std::vector<std::string> header;
  std::vector<Record> rows;
};

struct BitVector {
  std::vector<std::uint8_t> bits;  // values 0/1
};

// Binary carrier image; the payload occupies the first `payload_dims`
// pixels in row-major order and everything after is zero.
struct SecretImage {
  int height = 0;
  int width = 0;
  std::size_t payload_dims = 0;
  std::vector<std::uint8_t> pixels;  // height*width values 0/1

  template <typename S>
  Tensor<S> to_tensor() const {
    Tensor<S> t(Shape{1, static_cast<std::size_t>(height),
                      static_cast<std::size_t>(width)});
    for (std::size_t i = 0; i < pixels.size(); ++i)
      t.data[i] = static_cast<S>(pixels[i]);
    return t;
  }
};

// ============================================================================
//  CSV ingestion
// ============================================================================

inline CsvTable load_csv(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) fail(Error::Kind::io, "load_csv: cannot open " + path);
  std::vector<std::size_t> lines;
  auto rows = parse_csv(in, &lines);
  if (rows.empty()) fail(Error::Kind::format, "load_csv: empty file " + path);
  CsvTable table;
  table.header = rows.front();
  for (std::size_t i = 1; i < rows.size(); ++i) {
    if (rows[i].size() != table.header.size())
      fail(Error::Kind::format,
           "load_csv: line " + std::to_string(lines[i]) + " has " +
               std::to_string(rows[i].size()) + " fields, expected " +
               std::to_string(table.header.size()));
    table.rows.push_back(std::move(rows[i]));
  }
  return table;
}

inline void write_csv(const std::string& path, const CsvTable& table) {
  std::ofstream out(path, std::ios::binary);
  if (!out) fail(Error::Kind::io, "write_csv: cannot open " + path);
  out << csv_join(table.header) << '\n';
  for (const auto& row : table.rows) out << csv_join(row) << '\n';
  if (!out) fail(Error::Kind::io, "write_csv: write failure on " + path);
}

// ============================================================================
//  Schema fitting
// ============================================================================

namespace detail {

inline double parse_numeric_cell(const std::string& cell,
                                 const std::string& attr) {
  const char* begin = cell.c_str();
  char* end = nullptr;
  const double v = std::strtod(begin, &end);
  if (end == begin || *end != '\0' || !std::isfinite(v))
    fail(Error::Kind::invalid_argument,
         "attribute '" + attr + "': cannot parse numeric value '" + cell + "'");
  return v;
}

// Linear-interpolation quantile over a sorted sample.
inline double quantile_sorted(const std::vector<double>& sorted, double p) {
  const double pos = p * static_cast<double>(sorted.size() - 1);
  const auto lo = static_cast<std::size_t>(pos);
  const std::size_t hi = std::min(lo + 1, sorted.size() - 1);
  const double frac = pos - static_cast<double>(lo);
  return sorted[lo] + frac * (sorted[hi] - sorted[lo]);
}

}  // namespace detail

// Builds the one-hot layout from observed data: sorted distinct values for
// categorical attributes, equal-frequency quantile bin edges for numeric
// ones. Degenerate (duplicate) quantile edges are nudged upward by one ulp
// so the bin count always matches the request and the edges stay strictly
// ascending.
inline TabularSchema fit_schema(const CsvTable& table,
                                const std::vector<AttributeSpec>& specs) {
  if (table.rows.empty())
    fail(Error::Kind::invalid_argument, "fit_schema: no records");
  if (specs.empty())
    fail(Error::Kind::invalid_argument, "fit_schema: no attributes");
  TabularSchema schema;
  for (const auto& spec : specs) {
    const auto it =
        std::find(table.header.begin(), table.header.end(), spec.name);
    if (it == table.header.end())
      fail(Error::Kind::invalid_argument,
           "fit_schema: attribute '" + spec.name + "' missing from records");
    const auto col = static_cast<std::size_t>(it - table.header.begin());

    Attribute attr;
    attr.name = spec.name;
    attr.kind = spec.kind;
    if (spec.kind == AttrKind::categorical) {
      std::set<std::string> distinct;
      for (const auto& row : table.rows) distinct.insert(row[col]);
      attr.vocabulary.assign(distinct.begin(), distinct.end());
    } else {
      if (spec.bins < 1)
        fail(Error::Kind::config,
             "fit_schema: attribute '" + spec.name + "' needs bins >= 1");
      std::vector<double> values;
      values.reserve(table.rows.size());
      for (const auto& row : table.rows)
        values.push_back(detail::parse_numeric_cell(row[col], spec.name));
      std::sort(values.begin(), values.end());
      attr.bin_edges.resize(static_cast<std::size_t>(spec.bins) + 1);
      for (int j = 0; j <= spec.bins; ++j)
        attr.bin_edges[static_cast<std::size_t>(j)] = detail::quantile_sorted(
            values, static_cast<double>(j) / static_cast<double>(spec.bins));
      for (std::size_t j = 1; j < attr.bin_edges.size(); ++j)
        if (attr.bin_edges[j] <= attr.bin_edges[j - 1])
          attr.bin_edges[j] = std::nextafter(
              attr.bin_edges[j - 1], std::numeric_limits<double>::infinity());
    }
    schema.attributes.push_back(std::move(attr));
  }
  return schema;
}

// Extracts the schema's attributes, in schema order, from a table.
inline std::vector<Record> project(const CsvTable& table,
                                   const TabularSchema& schema) {
  std::vector<std::size_t> cols;
  for (const auto& attr : schema.attributes) {
    const auto it =
        std::find(table.header.begin(), table.header.end(), attr.name);
    if (it == table.header.end())
      fail(Error::Kind::invalid_argument,
           "project: attribute '" + attr.name + "' missing from records");
    cols.push_back(static_cast<std::size_t>(it - table.header.begin()));
  }
  std::vector<Record> records;
  records.reserve(table.rows.size());
  for (const auto& row : table.rows) {
    Record r;
    r.reserve(cols.size());
    for (std::size_t c : cols) r.push_back(row[c]);
    records.push_back(std::move(r));
  }
  return records;
}

// ============================================================================
//  Encoding and decoding
// ============================================================================

// Exactly one active bit per attribute slice. Out-of-range numeric values
// clamp to the boundary bins.
inline BitVector encode_record(const TabularSchema& schema,
                               const Record& record) {
  if (record.size() != schema.attributes.size())
    fail(Error::Kind::shape_mismatch,
         "encode_record: record has " + std::to_string(record.size()) +
             " cells, schema has " +
             std::to_string(schema.attributes.size()) + " attributes");
  BitVector out;
  out.bits.assign(schema.total_dims(), 0);
  std::size_t offset = 0;
  for (std::size_t a = 0; a < schema.attributes.size(); ++a) {
    const Attribute& attr = schema.attributes[a];
    std::size_t index = 0;
    if (attr.kind == AttrKind::categorical) {
      const auto it = std::find(attr.vocabulary.begin(), attr.vocabulary.end(),
                                record[a]);
      if (it == attr.vocabulary.end())
        fail(Error::Kind::invalid_argument,
             "encode_record: unknown value '" + record[a] +
                 "' for attribute '" + attr.name + "'");
      index = static_cast<std::size_t>(it - attr.vocabulary.begin());
    } else {
      const double v = detail::parse_numeric_cell(record[a], attr.name);
      const auto pos =
          std::upper_bound(attr.bin_edges.begin(), attr.bin_edges.end(), v);
      const long bin = (pos - attr.bin_edges.begin()) - 1;
      index = static_cast<std::size_t>(
          std::clamp<long>(bin, 0, static_cast<long>(attr.width()) - 1));
    }
    out.bits[offset + index] = 1;
    offset += attr.width();
  }
  return out;
}

// Argmax per attribute slice (lowest index wins ties), so any soft reveal
// decodes to a structurally valid record. Numeric attributes come back as
// their bin midpoint.
inline Record decode_bits(const TabularSchema& schema,
                          std::span<const double> values) {
  if (values.size() != schema.total_dims())
    fail(Error::Kind::shape_mismatch,
         "decode_bits: got " + std::to_string(values.size()) +
             " values, schema needs " + std::to_string(schema.total_dims()));
  Record record;
  record.reserve(schema.attributes.size());
  std::size_t offset = 0;
  for (const Attribute& attr : schema.attributes) {
    std::size_t best = 0;
    for (std::size_t i = 1; i < attr.width(); ++i)
      if (values[offset + i] > values[offset + best]) best = i;
    if (attr.kind == AttrKind::categorical) {
      record.push_back(attr.vocabulary[best]);
    } else {
      const double mid = 0.5 * (attr.bin_edges[best] + attr.bin_edges[best + 1]);
      record.push_back(format_double(mid));
    }
    offset += attr.width();
  }
  return record;
}

// ============================================================================
//  Packing payload bits into secret images
// ============================================================================

inline SecretImage pack_bits(const BitVector& bits, int height, int width) {
  const std::size_t capacity =
      static_cast<std::size_t>(height) * static_cast<std::size_t>(width);
  if (bits.bits.size() > capacity)
    fail(Error::Kind::capacity,
         "pack_bits: payload of " + std::to_string(bits.bits.size()) +
             " bits exceeds " + std::to_string(capacity) +
             " pixels; use a larger image or split across images");
  SecretImage img;
  img.height = height;
  img.width = width;
  img.payload_dims = bits.bits.size();
  img.pixels.assign(capacity, 0);
  std::copy(bits.bits.begin(), bits.bits.end(), img.pixels.begin());
  return img;
}

// Reads `dims` soft values row-major starting at `offset`. Binarization, if
// any, is the caller's choice.
inline std::vector<double> unpack_bits(std::span<const double> pixels,
                                       std::size_t dims,
                                       std::size_t offset = 0) {
  if (offset + dims > pixels.size())
    fail(Error::Kind::capacity,
         "unpack_bits: " + std::to_string(dims) + " values at offset " +
             std::to_string(offset) + " exceed " +
             std::to_string(pixels.size()) + " pixels");
  return std::vector<double>(pixels.begin() + static_cast<long>(offset),
                             pixels.begin() + static_cast<long>(offset + dims));
}

inline std::vector<double> unpack_bits(const SecretImage& img,
                                       std::size_t dims,
                                       std::size_t offset = 0) {
  std::vector<double> soft(img.pixels.begin(), img.pixels.end());
  return unpack_bits(std::span<const double>(soft), dims, offset);
}

// ============================================================================
//  Synthetic payments
// ============================================================================

// Stands in for a real payment extract: a handful of categorical attributes
// plus one numeric amount. Record i < cardinality takes value i for each
// categorical attribute, which guarantees every vocabulary entry is observed
// and the fitted layout width is independent of the draw.
struct SyntheticSpec {
  std::vector<int> cardinalities{24, 32, 16, 28, 20, 12, 18, 22, 12};
  int amount_bins = 16;  // advisory: bins used when fitting the schema

  // One-hot dimensionality this spec yields under fit_schema.
  std::size_t payload_dims() const {
    std::size_t d = static_cast<std::size_t>(amount_bins);
    for (int c : cardinalities) d += static_cast<std::size_t>(c);
    return d;
  }
};

inline const std::vector<std::string>& synthetic_attribute_names() {
  static const std::vector<std::string> names{
      "department", "vendor",   "doc_type", "account",  "cost_center",
      "payment_term", "currency", "region",   "quarter",  "approver",
      "plant",      "channel"};
  return names;
}

inline CsvTable generate_synthetic_payments(std::size_t n, std::uint64_t seed,
                                            const SyntheticSpec& spec = {}) {
  if (n < 1)
    fail(Error::Kind::invalid_argument, "synthetic payments: n must be >= 1");
  if (spec.cardinalities.empty())
    fail(Error::Kind::config, "synthetic payments: no categorical attributes");
  CsvTable table;
  const auto& names = synthetic_attribute_names();
  for (std::size_t a = 0; a < spec.cardinalities.size(); ++a) {
    std::string base = names[a % names.size()];
    if (a >= names.size()) base += std::to_string(a / names.size());
    table.header.push_back(base);
  }
  table.header.push_back("amount");

  std::vector<std::uint64_t> attr_seeds;
  for (std::size_t a = 0; a < spec.cardinalities.size(); ++a)
    attr_seeds.push_back(substream_seed(seed, a + 1));
  const std::uint64_t amount_seed = substream_seed(seed, 0xA11CE);

  char buf[64];
  for (std::size_t i = 0; i < n; ++i) {
    Record row;
    for (std::size_t a = 0; a < spec.cardinalities.size(); ++a) {
      const auto card = static_cast<std::uint64_t>(spec.cardinalities[a]);
      const std::uint64_t idx =
          i < card ? i : indexed_below(attr_seeds[a], i, card);
      std::snprintf(buf, sizeof(buf), "%s_%03llu", table.header[a].c_str(),
                    static_cast<unsigned long long>(idx));
      row.emplace_back(buf);
    }
    // log-normal-ish amount via Box-Muller on two indexed uniforms
    double u1 = static_cast<double>(indexed_u64(amount_seed, 2 * i) >> 11) *
                0x1.0p-53;
    if (u1 <= 0.0) u1 = 0x1.0p-53;
    const double u2 =
        static_cast<double>(indexed_u64(amount_seed, 2 * i + 1) >> 11) *
        0x1.0p-53;
    const double z = std::sqrt(-2.0 * std::log(u1)) *
                     std::cos(2.0 * 3.14159265358979323846 * u2);
    const double amount =
        std::round(std::exp(3.0 + 1.2 * z) * 100.0) / 100.0;
    std::snprintf(buf, sizeof(buf), "%.2f", amount);
    row.emplace_back(buf);
    table.rows.push_back(std::move(row));
  }
  return table;
}

inline std::vector<AttributeSpec> synthetic_attribute_specs(
    const CsvTable& table, int amount_bins) {
  std::vector<AttributeSpec> specs;
  for (const auto& name : table.header) {
    AttributeSpec s;
    s.name = name;
    if (name == "amount") {
      s.kind = AttrKind::numeric;
      s.bins = amount_bins;
    }
    specs.push_back(std::move(s));
  }
  return specs;
}

// ============================================================================
//  Schema persistence
// ============================================================================

namespace detail {

inline std::string schema_escape(const std::string& s) {
  std::string out;
  for (char c : s) {
    switch (c) {
      case '%': out += "%25"; break;
      case '\t': out += "%09"; break;
      case '\n': out += "%0A"; break;
      case '\r': out += "%0D"; break;
      default: out += c;
    }
  }
  return out;
}

inline std::string schema_unescape(const std::string& s) {
  std::string out;
  for (std::size_t i = 0; i < s.size(); ++i) {
    if (s[i] == '%' && i + 2 < s.size()) {
      const std::string hex = s.substr(i + 1, 2);
      out += static_cast<char>(std::strtol(hex.c_str(), nullptr, 16));
      i += 2;
    } else {
      out += s[i];
    }
  }
  return out;
}

inline std::vector<std::string> split_tabs(const std::string& line) {
  std::vector<std::string> parts;
  std::size_t start = 0;
  while (true) {
    const auto tab = line.find('\t', start);
    if (tab == std::string::npos) {
      parts.push_back(line.substr(start));
      break;
    }
    parts.push_back(line.substr(start, tab - start));
    start = tab + 1;
  }
  return parts;
}

}  // namespace detail

// One attribute per line: name, kind, width, then the vocabulary entries or
// the width+1 bin edges, tab-separated (tabs/percents in values escaped).
inline void save_schema(const std::string& path, const TabularSchema& schema) {
  std::ofstream out(path, std::ios::binary);
  if (!out) fail(Error::Kind::io, "save_schema: cannot open " + path);
  out << "STEGOSCHEMA 1\n";
  for (const auto& attr : schema.attributes) {
    out << detail::schema_escape(attr.name) << '\t'
        << (attr.kind == AttrKind::categorical ? "categorical" : "numeric")
        << '\t' << attr.width();
    if (attr.kind == AttrKind::categorical) {
      for (const auto& v : attr.vocabulary)
        out << '\t' << detail::schema_escape(v);
    } else {
      for (double e : attr.bin_edges) out << '\t' << format_double(e);
    }
    out << '\n';
  }
  if (!out) fail(Error::Kind::io, "save_schema: write failure on " + path);
}

inline TabularSchema load_schema(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) fail(Error::Kind::io, "load_schema: cannot open " + path);
  std::string line;
  if (!std::getline(in, line) || kv_trim(line) != "STEGOSCHEMA 1")
    fail(Error::Kind::format, "load_schema: unknown schema version in " + path);
  TabularSchema schema;
  while (std::getline(in, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    const auto parts = detail::split_tabs(line);
    if (parts.size() < 4)
      fail(Error::Kind::format, "load_schema: malformed attribute line");
    Attribute attr;
    attr.name = detail::schema_unescape(parts[0]);
    const std::size_t width = std::stoul(parts[2]);
    if (parts[1] == "categorical") {
      attr.kind = AttrKind::categorical;
      for (std::size_t i = 3; i < parts.size(); ++i)
        attr.vocabulary.push_back(detail::schema_unescape(parts[i]));
      if (attr.vocabulary.size() != width)
        fail(Error::Kind::format,
             "load_schema: vocabulary width mismatch for '" + attr.name + "'");
    } else if (parts[1] == "numeric") {
      attr.kind = AttrKind::numeric;
      for (std::size_t i = 3; i < parts.size(); ++i)
        attr.bin_edges.push_back(std::strtod(parts[i].c_str(), nullptr));
      if (attr.bin_edges.size() != width + 1)
        fail(Error::Kind::format,
             "load_schema: edge count mismatch for '" + attr.name + "'");
    } else {
      fail(Error::Kind::format,
           "load_schema: unknown attribute kind '" + parts[1] + "'");
    }
    schema.attributes.push_back(std::move(attr));
  }
  return schema;
}

// ============================================================================
//  Manifest (record id <-> secret image file <-> payload dims)
// ============================================================================

struct ManifestEntry {
  std::size_t record_index = 0;
  std::string filename;
  std::size_t payload_dims = 0;
};

inline void save_manifest(const std::string& path,
                          const std::vector<ManifestEntry>& entries) {
  CsvTable table;
  table.header = {"record_index", "filename", "payload_dims"};
  for (const auto& e : entries)
    table.rows.push_back({std::to_string(e.record_index), e.filename,
                          std::to_string(e.payload_dims)});
  write_csv(path, table);
}

inline std::vector<ManifestEntry> load_manifest(const std::string& path) {
  const CsvTable table = load_csv(path);
  if (table.header != std::vector<std::string>{"record_index", "filename",
                                               "payload_dims"})
    fail(Error::Kind::format, "manifest: unexpected header in " + path);
  std::vector<ManifestEntry> entries;
  for (const auto& row : table.rows)
    entries.push_back(ManifestEntry{std::stoul(row[0]), row[1],
                                    std::stoul(row[2])});
  return entries;
}

}  // namespace stego
