#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "stego/error.hpp"
#include "stego/media.hpp"

namespace stego {

// Classic n-bit least-significant-bit embedding over 8-bit pixel arrays.
// Bytes are consumed in storage order (channel-major, then row-major); each
// consumed byte takes its next n payload bits MSB-first in the low n bits.
struct LsbConfig {
  int bits = 1;

  void validate() const {
    if (bits < 1 || bits > 8)
      fail(Error::Kind::config, "lsb: bits must lie in [1,8]");
  }
};

inline std::size_t lsb_capacity(const Image8& cover, const LsbConfig& cfg) {
  cfg.validate();
  return cover.pixels.size() * static_cast<std::size_t>(cfg.bits);
}

inline Image8 lsb_embed(const Image8& cover,
                        const std::vector<std::uint8_t>& payload_bits,
                        const LsbConfig& cfg) {
  const std::size_t capacity = lsb_capacity(cover, cfg);
  if (payload_bits.size() > capacity)
    fail(Error::Kind::capacity,
         "lsb_embed: payload of " + std::to_string(payload_bits.size()) +
             " bits exceeds capacity of " + std::to_string(capacity) +
             " bits (" + std::to_string(cfg.bits) + " per byte)");
  Image8 container = cover;
  const int n = cfg.bits;
  const std::uint8_t mask = static_cast<std::uint8_t>((1u << n) - 1u);
  std::size_t pos = 0;
  const std::size_t consumed_bytes =
      (payload_bits.size() + static_cast<std::size_t>(n) - 1) /
      static_cast<std::size_t>(n);
  for (std::size_t b = 0; b < consumed_bytes; ++b) {
    std::uint8_t group = 0;
    for (int j = 0; j < n; ++j) {
      const std::uint8_t bit =
          pos < payload_bits.size() ? (payload_bits[pos++] ? 1 : 0) : 0;
      group = static_cast<std::uint8_t>((group << 1) | bit);
    }
    container.pixels[b] =
        static_cast<std::uint8_t>((container.pixels[b] & ~mask) | group);
  }
  return container;
}

inline std::vector<std::uint8_t> lsb_extract(const Image8& container,
                                             std::size_t bit_count,
                                             const LsbConfig& cfg) {
  const std::size_t capacity = lsb_capacity(container, cfg);
  if (bit_count > capacity)
    fail(Error::Kind::capacity,
         "lsb_extract: " + std::to_string(bit_count) +
             " bits exceed capacity of " + std::to_string(capacity) + " bits");
  std::vector<std::uint8_t> bits;
  bits.reserve(bit_count);
  const int n = cfg.bits;
  for (std::size_t b = 0; bits.size() < bit_count; ++b) {
    for (int j = n - 1; j >= 0 && bits.size() < bit_count; --j)
      bits.push_back((container.pixels[b] >> j) & 1u);
  }
  return bits;
}

}  // namespace stego
