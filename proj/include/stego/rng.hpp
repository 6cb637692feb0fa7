#pragma once

#include <cstdint>

namespace stego {

namespace detail {
constexpr std::uint64_t kGolden = 0x9E3779B97F4A7C15ULL;

inline std::uint64_t mix64(std::uint64_t z) {
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
  return z ^ (z >> 31);
}
}  // namespace detail

// SplitMix64 stream. Small, fast, and the state is a single counter, so a
// stream position can be checkpointed or jumped to in O(1). All randomness
// in the library flows through this type; std::random distributions are
// avoided because their output is implementation-defined.
class SplitMix64 {
 public:
  explicit SplitMix64(std::uint64_t seed) : state_(seed) {}

  std::uint64_t next() {
    state_ += detail::kGolden;
    return detail::mix64(state_);
  }

  // Uniform in [0, 1), 53 mantissa bits.
  double next_unit() { return static_cast<double>(next() >> 11) * 0x1.0p-53; }

  // Uniform in [0, n). Multiply-high mapping; bias is O(n / 2^64).
  std::uint64_t next_below(std::uint64_t n) {
    return static_cast<std::uint64_t>(
        (static_cast<__uint128_t>(next()) * n) >> 64);
  }

  std::uint64_t state() const { return state_; }

 private:
  std::uint64_t state_;
};

// Derives an independent-looking stream seed for a named substream.
inline std::uint64_t substream_seed(std::uint64_t seed, std::uint64_t tag) {
  return detail::mix64(seed ^ detail::mix64(tag * detail::kGolden + 1));
}

// Stateless draw: the i-th value of the stream without iterating to it.
inline std::uint64_t indexed_u64(std::uint64_t seed, std::uint64_t index) {
  return detail::mix64(seed + (index + 1) * detail::kGolden);
}

inline std::uint64_t indexed_below(std::uint64_t seed, std::uint64_t index,
                                   std::uint64_t n) {
  return static_cast<std::uint64_t>(
      (static_cast<__uint128_t>(indexed_u64(seed, index)) * n) >> 64);
}

}  // namespace stego
