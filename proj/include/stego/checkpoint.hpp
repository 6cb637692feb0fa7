#pragma once

#include <bit>
#include <cstdint>
#include <fstream>
#include <string>
#include <vector>

#include "stego/tensor.hpp"

namespace stego {

// Versioned binary store of named tensors.
//
//   magic "STEGO1", then per entry:
//     u64  name length          (little-endian)
//     ...  UTF-8 name bytes
//     u64  rank
//     u64  dims[rank]
//     f64  values, row-major    (little-endian IEEE-754)
//
// Entries run to end-of-file; a file that ends inside an entry is rejected.

inline constexpr char kCheckpointMagic[6] = {'S', 'T', 'E', 'G', 'O', '1'};

namespace detail {

inline void put_u64(std::ostream& os, std::uint64_t v) {
  char b[8];
  for (int i = 0; i < 8; ++i) b[i] = static_cast<char>((v >> (8 * i)) & 0xFF);
  os.write(b, 8);
}

inline void put_f64(std::ostream& os, double v) {
  put_u64(os, std::bit_cast<std::uint64_t>(v));
}

inline bool try_get_u64(std::istream& is, std::uint64_t& v) {
  unsigned char b[8];
  is.read(reinterpret_cast<char*>(b), 8);
  if (is.gcount() == 0 && is.eof()) return false;  // clean end of file
  if (is.gcount() != 8)
    fail(Error::Kind::format, "checkpoint: truncated file");
  v = 0;
  for (int i = 0; i < 8; ++i) v |= static_cast<std::uint64_t>(b[i]) << (8 * i);
  return true;
}

inline std::uint64_t get_u64(std::istream& is) {
  std::uint64_t v = 0;
  if (!try_get_u64(is, v)) fail(Error::Kind::format, "checkpoint: truncated file");
  return v;
}

inline double get_f64(std::istream& is) {
  return std::bit_cast<double>(get_u64(is));
}

}  // namespace detail

class TensorFileWriter {
 public:
  explicit TensorFileWriter(const std::string& path)
      : out_(path, std::ios::binary) {
    if (!out_) fail(Error::Kind::io, "checkpoint: cannot open " + path);
    out_.write(kCheckpointMagic, sizeof(kCheckpointMagic));
  }

  void add(const std::string& name, const Shape& shape,
           const double* values, std::size_t count) {
    if (count != shape_numel(shape))
      fail(Error::Kind::shape_mismatch,
           "checkpoint: value count does not match shape for " + name);
    detail::put_u64(out_, name.size());
    out_.write(name.data(), static_cast<std::streamsize>(name.size()));
    detail::put_u64(out_, shape.size());
    for (std::size_t d : shape) detail::put_u64(out_, d);
    for (std::size_t i = 0; i < count; ++i) detail::put_f64(out_, values[i]);
  }

  template <typename S>
  void add(const std::string& name, const Tensor<S>& t) {
    if constexpr (std::is_same_v<S, double>) {
      add(name, t.shape, t.data.data(), t.data.size());
    } else {
      std::vector<double> tmp(t.data.begin(), t.data.end());
      add(name, t.shape, tmp.data(), tmp.size());
    }
  }

  void close() {
    out_.flush();
    if (!out_) fail(Error::Kind::io, "checkpoint: write failure");
    out_.close();
  }

 private:
  std::ofstream out_;
};

struct NamedTensor {
  std::string name;
  Tensor<double> value;
};

// Reads all entries in file order. Rejects unknown magic and truncation.
inline std::vector<NamedTensor> read_tensor_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) fail(Error::Kind::io, "checkpoint: cannot open " + path);
  char magic[sizeof(kCheckpointMagic)];
  in.read(magic, sizeof(magic));
  if (in.gcount() != sizeof(magic) ||
      !std::equal(magic, magic + sizeof(magic), kCheckpointMagic))
    fail(Error::Kind::format, "checkpoint: unknown magic/version in " + path);

  std::vector<NamedTensor> entries;
  std::uint64_t name_len = 0;
  while (detail::try_get_u64(in, name_len)) {
    std::string name(name_len, '\0');
    in.read(name.data(), static_cast<std::streamsize>(name_len));
    if (static_cast<std::uint64_t>(in.gcount()) != name_len)
      fail(Error::Kind::format, "checkpoint: truncated file");
    const std::uint64_t rank = detail::get_u64(in);
    Shape shape(rank);
    for (std::uint64_t i = 0; i < rank; ++i) shape[i] = detail::get_u64(in);
    Tensor<double> t(shape);
    for (std::size_t i = 0; i < t.size(); ++i) t.data[i] = detail::get_f64(in);
    entries.push_back(NamedTensor{std::move(name), std::move(t)});
  }
  return entries;
}

}  // namespace stego
