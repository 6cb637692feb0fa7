#include <catch2/catch_amalgamated.hpp>

#include <algorithm>
#include <cmath>

#include "oracles.hpp"
#include "stego/losses.hpp"
#include "stego/metrics.hpp"

using namespace stego;

TEST_CASE("cover_loss basics") {
  SplitMix64 rng(31);
  auto a = oracle::random_tensor<double>(Shape{3, 4, 4}, rng, 0.0, 1.0);
  REQUIRE(cover_loss(a, a) == 0.0);

  Tensor<double> x(Shape{1, 1, 1}, {0.5});
  Tensor<double> y(Shape{1, 1, 1}, {0.0});
  REQUIRE(cover_loss(x, y) == Catch::Approx(0.25).margin(1e-15));

  auto b = oracle::random_tensor<double>(Shape{3, 4, 4}, rng, 0.0, 1.0);
  double want = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i)
    want += (a.data[i] - b.data[i]) * (a.data[i] - b.data[i]);
  REQUIRE(cover_loss(a, b) == Catch::Approx(want).margin(1e-12));

  Tensor<double> bad(Shape{3, 4, 5});
  REQUIRE_THROWS_AS(cover_loss(a, bad), Error);
}

TEST_CASE("secret_loss basics") {
  SplitMix64 rng(32);
  Tensor<double> sec(Shape{1, 4, 4});
  for (auto& v : sec.data) v = rng.next_unit() < 0.3 ? 1.0 : 0.0;
  REQUIRE(secret_loss(sec, sec) <= 16 * 1e-6);  // perfect reveal, post-clamp

  Tensor<double> one(Shape{1, 1, 1}, {1.0});
  Tensor<double> half(Shape{1, 1, 1}, {0.5});
  REQUIRE(secret_loss(one, half) ==
          Catch::Approx(std::log(2.0)).epsilon(1e-9));

  auto rev = oracle::random_tensor<double>(Shape{1, 4, 4}, rng, 0.05, 0.95);
  double want = 0.0;
  for (std::size_t i = 0; i < sec.size(); ++i)
    want -= sec.data[i] * std::log(rev.data[i]) +
            (1.0 - sec.data[i]) * std::log(1.0 - rev.data[i]);
  REQUIRE(secret_loss(sec, rev) == Catch::Approx(want).margin(1e-12));
  REQUIRE(secret_loss(sec, rev) >= 0.0);

  Tensor<double> bad(Shape{1, 4, 5});
  REQUIRE_THROWS_AS(secret_loss(sec, bad), Error);
}

TEST_CASE("loss gradients match finite differences") {
  SplitMix64 rng(33);
  auto cov = oracle::random_tensor<double>(Shape{2, 3, 3}, rng, 0.0, 1.0);
  auto con0 = oracle::random_tensor<double>(Shape{2, 3, 3}, rng, 0.05, 0.95);
  Tensor<double> sec(Shape{1, 3, 3});
  for (auto& v : sec.data) v = rng.next_unit() < 0.4 ? 1.0 : 0.0;
  auto rev0 = oracle::random_tensor<double>(Shape{1, 3, 3}, rng, 0.05, 0.95);

  SECTION("cover loss w.r.t. container") {
    Graph<double> g;
    auto c = g.leaf(Tensor<double>(cov));
    auto t = g.leaf(Tensor<double>(con0));
    t->requires_grad = true;
    auto loss = cover_loss(g, c, t);
    g.backward(loss);
    auto eval = [&]() { return cover_loss(cov, *t); };
    std::vector<double*> coords;
    std::vector<double> analytic;
    for (std::size_t i = 0; i < t->size(); ++i) {
      coords.push_back(&t->data[i]);
      analytic.push_back(t->grad[i]);
    }
    REQUIRE(oracle::max_grad_rel_error(coords, analytic, eval) <= 1e-4);
  }
  SECTION("secret loss w.r.t. revealed") {
    Graph<double> g;
    auto s = g.leaf(Tensor<double>(sec));
    auto r = g.leaf(Tensor<double>(rev0));
    r->requires_grad = true;
    auto loss = secret_loss(g, s, r);
    g.backward(loss);
    auto eval = [&]() { return secret_loss(sec, *r); };
    std::vector<double*> coords;
    std::vector<double> analytic;
    for (std::size_t i = 0; i < r->size(); ++i) {
      coords.push_back(&r->data[i]);
      analytic.push_back(r->grad[i]);
    }
    REQUIRE(oracle::max_grad_rel_error(coords, analytic, eval) <= 1e-4);
  }
}

TEST_CASE("combined_loss weighting") {
  std::vector<std::pair<double, double>> batch{{2.0, 3.0}, {4.0, 5.0}};
  std::span<const std::pair<double, double>> view{batch};

  REQUIRE(combined_loss(view, LossWeights{0.0, 1.0}) ==
          Catch::Approx(4.0).margin(1e-15));  // beta * mean bce
  REQUIRE(combined_loss(view, LossWeights{1.0, 0.0}) ==
          Catch::Approx(3.0).margin(1e-15));  // alpha * mean mse
  REQUIRE(combined_loss(view, LossWeights{0.5, 2.0}) ==
          Catch::Approx(0.5 * 3.0 + 2.0 * 4.0).margin(1e-12));

  // linear in alpha: doubling alpha doubles the cover term exactly
  const double base = combined_loss(view, LossWeights{1.0, 1.0});
  const double doubled = combined_loss(view, LossWeights{2.0, 1.0});
  REQUIRE(doubled - base == Catch::Approx(3.0).margin(1e-12));

  std::vector<std::pair<double, double>> empty;
  REQUIRE_THROWS_AS(
      combined_loss(std::span<const std::pair<double, double>>{empty},
                    LossWeights{1.0, 1.0}),
      Error);
  REQUIRE_THROWS_AS(
      combined_loss(view, LossWeights{0.0, 0.0}), Error);
}

TEST_CASE("psnr modes") {
  SplitMix64 rng(34);
  auto a = oracle::random_tensor<double>(Shape{3, 8, 8}, rng, 0.0, 1.0);
  REQUIRE(std::isinf(psnr(a, a)));

  SECTION("one quantization level of difference") {
    Tensor<double> x(Shape{1, 4, 4}, 0.5);
    Tensor<double> y(Shape{1, 4, 4}, 0.5 + 1.0 / 255.0);
    REQUIRE(psnr(x, y) == Catch::Approx(48.1308).margin(1e-3));
    // same statement on 8-bit values
    Tensor<double> xb(Shape{1, 4, 4}, 128.0);
    Tensor<double> yb(Shape{1, 4, 4}, 129.0);
    REQUIRE(psnr(xb, yb, PsnrMode::standard, 255.0) ==
            Catch::Approx(20.0 * std::log10(255.0)).margin(1e-9));
  }
  SECTION("literal and standard modes differ by the documented offset") {
    auto b = oracle::random_tensor<double>(Shape{3, 8, 8}, rng, 0.0, 1.0);
    double sum_sq = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i)
      sum_sq += (a.data[i] - b.data[i]) * (a.data[i] - b.data[i]);
    const double mean_sq = sum_sq / static_cast<double>(a.size());
    const double peak = 1.0;
    const double lit = psnr(a, b, PsnrMode::literal, peak);
    const double std_ = psnr(a, b, PsnrMode::standard, peak);
    REQUIRE(lit - std_ ==
            Catch::Approx(10.0 * std::log10(peak * peak * mean_sq /
                                            (peak * sum_sq)))
                .margin(1e-9));
  }
  SECTION("monotonically decreasing in mse") {
    Tensor<double> base(Shape{1, 4, 4}, 0.5);
    double prev = std::numeric_limits<double>::infinity();
    for (double d : {0.001, 0.01, 0.1, 0.2}) {
      Tensor<double> off(Shape{1, 4, 4}, 0.5 + d);
      const double v = psnr(base, off);
      REQUIRE(v < prev);
      prev = v;
    }
  }
  Tensor<double> bad(Shape{3, 8, 9});
  REQUIRE_THROWS_AS(psnr(a, bad), Error);
}

TEST_CASE("ssim") {
  SplitMix64 rng(35);
  auto a = oracle::random_tensor<double>(Shape{1, 8, 8}, rng, 0.0, 1.0);
  REQUIRE(ssim(a, a) == Catch::Approx(1.0).margin(1e-12));

  SECTION("negated image scores below zero") {
    Tensor<double> x(Shape{1, 2, 2}, {0.0, 1.0, 1.0, 0.0});
    Tensor<double> y(Shape{1, 2, 2}, {1.0, 0.0, 0.0, 1.0});
    REQUIRE(ssim(x, y) < 0.0);
  }
  SECTION("agrees with the straight-line oracle") {
    for (int trial = 0; trial < 25; ++trial) {
      auto p = oracle::random_tensor<double>(Shape{1, 8, 8}, rng, 0.0, 1.0);
      auto q = oracle::random_tensor<double>(Shape{1, 8, 8}, rng, 0.0, 1.0);
      REQUIRE(ssim(p, q) ==
              Catch::Approx(oracle::ssim_naive(p.data, q.data, 1.0))
                  .margin(1e-10));
      REQUIRE(ssim(p, q) == Catch::Approx(ssim(q, p)).margin(1e-15));
      REQUIRE(ssim(p, q) <= 1.0);
    }
  }
  Tensor<double> bad(Shape{1, 8, 9});
  REQUIRE_THROWS_AS(ssim(a, bad), Error);
}

TEST_CASE("top_k_mask") {
  Tensor<double> v(Shape{4}, {0.9, 0.1, 0.9, 0.5});
  REQUIRE(top_k_mask(v, 0) == std::vector<std::uint8_t>{0, 0, 0, 0});
  REQUIRE(top_k_mask(v, 4) == std::vector<std::uint8_t>{1, 1, 1, 1});
  REQUIRE(top_k_mask(v, 2) == std::vector<std::uint8_t>{1, 0, 1, 0});

  Tensor<double> ties(Shape{4}, {0.9, 0.9, 0.9, 0.1});
  REQUIRE(top_k_mask(ties, 2) == std::vector<std::uint8_t>{1, 1, 0, 0});

  REQUIRE_THROWS_AS(top_k_mask(v, 5), Error);

  SplitMix64 rng(36);
  for (int trial = 0; trial < 50; ++trial) {
    auto r = oracle::random_tensor<double>(Shape{32}, rng, 0.0, 1.0);
    const std::size_t k = rng.next_below(33);
    REQUIRE(top_k_mask(r, k) == oracle::top_k_naive(r.data, k));
  }
}

TEST_CASE("bit_accuracy") {
  const double delta = 0.001;
  SECTION("perfect reveal") {
    Tensor<double> sec(Shape{1, 4, 4});
    SplitMix64 rng(37);
    for (auto& v : sec.data) v = rng.next_unit() < 0.4 ? 1.0 : 0.0;
    sec.data[0] = 1.0;
    REQUIRE(bit_accuracy(sec, sec, delta) == 1.0);
  }
  SECTION("hand-walked mixed case") {
    Tensor<double> sec(Shape{4}, {1.0, 0.0, 0.0, 1.0});
    Tensor<double> rev(Shape{4}, {0.9995, 0.2, 0.9, 0.1});
    REQUIRE(bit_accuracy(sec, rev, delta) == 0.5);
  }
  SECTION("agrees exactly with the exhaustive oracle") {
    SplitMix64 rng(38);
    for (int trial = 0; trial < 100; ++trial) {
      Tensor<double> sec(Shape{1, 8, 8});
      bool any = false;
      for (auto& v : sec.data) {
        v = rng.next_unit() < 0.2 ? 1.0 : 0.0;
        any = any || v > 0.0;
      }
      if (!any) sec.data[0] = 1.0;
      auto rev = oracle::random_tensor<double>(Shape{1, 8, 8}, rng, 0.0, 1.0);
      REQUIRE(bit_accuracy(sec, rev, delta) ==
              oracle::bacc_naive(sec.data, rev.data, delta));
    }
  }
  SECTION("permuting sub-threshold inactive values changes nothing") {
    SplitMix64 rng(39);
    Tensor<double> sec(Shape{16});
    for (std::size_t i = 0; i < 16; ++i) sec.data[i] = i < 5 ? 1.0 : 0.0;
    Tensor<double> rev(Shape{16});
    for (std::size_t i = 0; i < 16; ++i)
      rev.data[i] = i < 5 ? 0.9 + 0.02 * static_cast<double>(i)
                          : 0.3 * rng.next_unit();
    const double before = bit_accuracy(sec, rev, delta);
    auto permuted = rev;
    std::reverse(permuted.data.begin() + 5, permuted.data.end());
    REQUIRE(bit_accuracy(sec, permuted, delta) == before);
  }
  SECTION("all-zero secret is rejected") {
    Tensor<double> sec(Shape{4}, 0.0);
    Tensor<double> rev(Shape{4}, 0.5);
    REQUIRE_THROWS_AS(bit_accuracy(sec, rev, delta), Error);
  }
}

TEST_CASE("bpp reference values") {
  auto round4 = [](double v) { return std::round(v * 1e4) / 1e4; };
  REQUIRE(round4(bpp(8565, 256, 256, 3)) == Catch::Approx(0.0436));
  REQUIRE(round4(bpp(2354, 256, 256, 3)) == Catch::Approx(0.0120));
  REQUIRE(round4(bpp(8565, 256, 256, 1)) == Catch::Approx(0.1307));
  REQUIRE(round4(bpp(2354, 256, 256, 1)) == Catch::Approx(0.0359));
  REQUIRE(bpp(100, 10, 10, 1) == 1.0);
}

TEST_CASE("metrics report csv layout") {
  REQUIRE(MetricsReport::csv_header() ==
          "BPP,alpha,beta,L_all,L_mse,L_bce,PSNR,SSIM,BACC");
  MetricsReport r;
  r.bpp = 0.0436;
  r.alpha = 0.5;
  r.beta = 1.0;
  r.psnr_db = std::numeric_limits<double>::infinity();
  r.ssim = 1.0;
  r.bacc = 1.0;
  const auto row = r.csv_row();
  REQUIRE(std::count(row.begin(), row.end(), ',') == 8);
  REQUIRE(row.find("inf") != std::string::npos);
}
