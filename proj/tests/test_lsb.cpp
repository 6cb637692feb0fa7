#include <catch2/catch_amalgamated.hpp>

#include "oracles.hpp"
#include "stego/lsb.hpp"
#include "stego/metrics.hpp"

using namespace stego;

namespace {

Image8 random_cover(int c, int h, int w, std::uint64_t seed) {
  SplitMix64 rng(seed);
  Image8 img;
  img.channels = c;
  img.height = h;
  img.width = w;
  img.pixels.resize(static_cast<std::size_t>(c) * h * w);
  for (auto& v : img.pixels)
    v = static_cast<std::uint8_t>(rng.next_below(256));
  return img;
}

std::vector<std::uint8_t> random_bits(std::size_t n, std::uint64_t seed) {
  SplitMix64 rng(seed);
  std::vector<std::uint8_t> bits(n);
  for (auto& b : bits) b = static_cast<std::uint8_t>(rng.next_below(2));
  return bits;
}

}  // namespace

TEST_CASE("single byte bit replacement") {
  Image8 cover;
  cover.channels = 1;
  cover.height = 1;
  cover.width = 1;

  cover.pixels = {0b10110010};
  auto c1 = lsb_embed(cover, {1}, LsbConfig{1});
  REQUIRE(c1.pixels[0] == 0b10110011);

  cover.pixels = {0b11111111};
  auto c2 = lsb_embed(cover, {0, 0}, LsbConfig{2});
  REQUIRE(c2.pixels[0] == 0b11111100);
}

TEST_CASE("embed/extract round trip is exact") {
  for (int bits : {1, 2, 4, 8}) {
    auto cover = random_cover(3, 64, 64, 400 + bits);
    auto payload = random_bits(1000, 500 + bits);
    auto container = lsb_embed(cover, payload, LsbConfig{bits});
    auto back = lsb_extract(container, payload.size(), LsbConfig{bits});
    REQUIRE(back == payload);
  }
}

TEST_CASE("untouched bytes match the cover and changes are bounded") {
  const LsbConfig cfg{3};
  auto cover = random_cover(1, 16, 16, 42);
  auto payload = random_bits(60, 43);  // consumes 20 bytes
  auto container = lsb_embed(cover, payload, cfg);
  const std::size_t consumed = (payload.size() + 2) / 3;
  for (std::size_t i = 0; i < cover.pixels.size(); ++i) {
    const int diff = std::abs(static_cast<int>(cover.pixels[i]) -
                              static_cast<int>(container.pixels[i]));
    if (i < consumed)
      REQUIRE(diff <= (1 << cfg.bits) - 1);
    else
      REQUIRE(diff == 0);
  }
}

TEST_CASE("capacity is enforced with a figure") {
  auto cover = random_cover(1, 2, 2, 44);
  auto payload = random_bits(5, 45);
  try {
    lsb_embed(cover, payload, LsbConfig{1});
    FAIL("expected capacity error");
  } catch (const Error& e) {
    REQUIRE(e.kind() == Error::Kind::capacity);
    REQUIRE(std::string(e.what()).find("4") != std::string::npos);
  }
  REQUIRE_THROWS_AS(lsb_extract(cover, 5, LsbConfig{1}), Error);
  REQUIRE_THROWS_AS(lsb_embed(cover, payload, LsbConfig{0}), Error);
  REQUIRE_THROWS_AS(lsb_embed(cover, payload, LsbConfig{9}), Error);
}

TEST_CASE("extracting zero bits yields an empty payload") {
  auto cover = random_cover(1, 4, 4, 46);
  REQUIRE(lsb_extract(cover, 0, LsbConfig{1}).empty());
}

TEST_CASE("1-bit containers sit near the expected psnr") {
  // Random cover LSBs vs random payload differ with probability 1/2, so the
  // expected squared error per byte is 0.5 and PSNR about 51.14 dB.
  double sum = 0.0;
  const int trials = 24;
  for (int t = 0; t < trials; ++t) {
    auto cover = random_cover(3, 64, 64, 600 + t);
    auto payload = random_bits(cover.pixels.size(), 700 + t);
    auto container = lsb_embed(cover, payload, LsbConfig{1});
    auto cov_t = to_tensor<double>(normalize_bytes(cover));
    auto con_t = to_tensor<double>(normalize_bytes(container));
    sum += psnr(cov_t, con_t);
  }
  const double mean = sum / trials;
  REQUIRE(mean == Catch::Approx(51.1).margin(0.5));
}
