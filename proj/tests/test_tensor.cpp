#include <catch2/catch_amalgamated.hpp>

#include <cstdio>
#include <fstream>

#include "oracles.hpp"
#include "stego/adam.hpp"
#include "stego/checkpoint.hpp"
#include "stego/graph.hpp"
#include "stego/ops.hpp"
#include "stego/tensor.hpp"

using namespace stego;

namespace {

ConvLayer<double> layer_from(Tensor<double> kernels, std::vector<double> bias,
                             int k, Padding pad) {
  ConvLayer<double> layer;
  layer.kernels = make_tensor(std::move(kernels));
  layer.bias = make_tensor(Tensor<double>(Shape{layer.kernels->shape[0]},
                                          std::move(bias)));
  layer.kernel = k;
  layer.pad = pad;
  return layer;
}

}  // namespace

TEST_CASE("conv2d_forward identity kernel") {
  Tensor<double> input(Shape{1, 3, 3}, 1.0);
  auto layer = layer_from(Tensor<double>(Shape{1, 1, 1, 1}, {1.0}), {0.0}, 1,
                          Padding{0, 0, 0, 0});
  auto out = conv2d_forward(input, layer);
  REQUIRE(out.shape == input.shape);
  for (std::size_t i = 0; i < out.size(); ++i)
    REQUIRE(out.data[i] == input.data[i]);
}

TEST_CASE("conv2d_forward all-ones 3x3 kernel on 2x2 input") {
  Tensor<double> input(Shape{1, 2, 2}, {1.0, 2.0, 3.0, 4.0});
  Tensor<double> kernels(Shape{1, 1, 3, 3}, 1.0);
  auto layer = layer_from(std::move(kernels), {0.0}, 3, Padding{1, 1, 1, 1});
  auto out = conv2d_forward(input, layer);
  for (double v : out.data) REQUIRE(v == Catch::Approx(10.0).margin(1e-12));
  // cross-check with the quadruple-loop oracle
  auto ref = oracle::conv_naive(input, *layer.kernels, layer.bias->data.data(),
                                3, layer.pad);
  for (std::size_t i = 0; i < out.size(); ++i)
    REQUIRE(out.data[i] == Catch::Approx(ref.data[i]).margin(1e-12));
}

TEST_CASE("conv2d_forward annihilated by zero kernel") {
  SplitMix64 rng(11);
  auto input = oracle::random_tensor<double>(Shape{3, 5, 7}, rng);
  Tensor<double> kernels(Shape{2, 3, 3, 3}, 0.0);
  auto layer = layer_from(std::move(kernels), {0.0, 0.0}, 3, same_padding(3));
  auto out = conv2d_forward(input, layer);
  for (double v : out.data) REQUIRE(v == 0.0);
}

TEST_CASE("conv2d_forward rejects channel mismatch with dims in message") {
  SplitMix64 rng(12);
  auto input = oracle::random_tensor<double>(Shape{2, 4, 4}, rng);
  auto kernels = oracle::random_tensor<double>(Shape{1, 3, 3, 3}, rng);
  auto layer = layer_from(std::move(kernels), {0.0}, 3, same_padding(3));
  try {
    conv2d_forward(input, layer);
    FAIL("expected shape mismatch");
  } catch (const Error& e) {
    REQUIRE(e.kind() == Error::Kind::shape_mismatch);
    REQUIRE(std::string(e.what()).find("3") != std::string::npos);
    REQUIRE(std::string(e.what()).find("2") != std::string::npos);
  }
}

TEST_CASE("conv2d_forward agrees with the naive oracle") {
  SplitMix64 rng(13);
  for (int k : {1, 2, 3, 4, 5}) {
    auto input = oracle::random_tensor<double>(Shape{2, 6, 5}, rng);
    auto kernels = oracle::random_tensor<double>(
        Shape{3, 2, static_cast<std::size_t>(k), static_cast<std::size_t>(k)},
        rng);
    std::vector<double> bias{0.3, -0.2, 0.05};
    auto layer = layer_from(std::move(kernels), bias, k, same_padding(k));
    auto got = conv2d_forward(input, layer);
    auto want =
        oracle::conv_naive(input, *layer.kernels, bias.data(), k, layer.pad);
    REQUIRE(got.shape == Shape{3, 6, 5});  // spatial dims preserved
    for (std::size_t i = 0; i < got.size(); ++i)
      REQUIRE(got.data[i] == Catch::Approx(want.data[i]).margin(1e-12));
  }
}

TEST_CASE("conv2d_backward matches finite differences") {
  SplitMix64 rng(14);
  for (int k : {3, 4}) {
    auto input = oracle::random_tensor<double>(Shape{1, 4, 4}, rng);
    auto kernels = oracle::random_tensor<double>(
        Shape{2, 1, static_cast<std::size_t>(k), static_cast<std::size_t>(k)},
        rng);
    std::vector<double> bias{0.1, -0.4};
    auto layer = layer_from(std::move(kernels), bias, k, same_padding(k));
    // scalar objective: fixed random weighting of the outputs
    auto weights = oracle::random_tensor<double>(Shape{2, 4, 4}, rng);
    auto eval = [&]() {
      auto out = conv2d_forward(input, layer);
      double acc = 0.0;
      for (std::size_t i = 0; i < out.size(); ++i)
        acc += out.data[i] * weights.data[i];
      return acc;
    };
    auto grads = conv2d_backward(input, layer, weights);

    std::vector<double*> coords;
    std::vector<double> analytic;
    for (std::size_t i = 0; i < input.size(); ++i) {
      coords.push_back(&input.data[i]);
      analytic.push_back(grads.input.data[i]);
    }
    for (std::size_t i = 0; i < layer.kernels->size(); ++i) {
      coords.push_back(&layer.kernels->data[i]);
      analytic.push_back(grads.kernels.data[i]);
    }
    for (std::size_t i = 0; i < layer.bias->size(); ++i) {
      coords.push_back(&layer.bias->data[i]);
      analytic.push_back(grads.bias.data[i]);
    }
    REQUIRE(oracle::max_grad_rel_error(coords, analytic, eval, 1e-5) <= 1e-4);
  }
}

TEST_CASE("conv2d_backward zero upstream yields zero gradients") {
  SplitMix64 rng(15);
  auto input = oracle::random_tensor<double>(Shape{2, 4, 4}, rng);
  auto kernels = oracle::random_tensor<double>(Shape{2, 2, 3, 3}, rng);
  auto layer = layer_from(std::move(kernels), {0.1, 0.2}, 3, same_padding(3));
  Tensor<double> upstream(Shape{2, 4, 4}, 0.0);
  auto grads = conv2d_backward(input, layer, upstream);
  for (double v : grads.input.data) REQUIRE(v == 0.0);
  for (double v : grads.kernels.data) REQUIRE(v == 0.0);
  for (double v : grads.bias.data) REQUIRE(v == 0.0);
}

TEST_CASE("conv2d_backward 1x1 kernel scales upstream by kernel value") {
  SplitMix64 rng(16);
  auto input = oracle::random_tensor<double>(Shape{1, 3, 3}, rng);
  const double kv = 0.75;
  auto layer = layer_from(Tensor<double>(Shape{1, 1, 1, 1}, {kv}), {0.0}, 1,
                          Padding{0, 0, 0, 0});
  auto upstream = oracle::random_tensor<double>(Shape{1, 3, 3}, rng);
  auto grads = conv2d_backward(input, layer, upstream);
  for (std::size_t i = 0; i < upstream.size(); ++i)
    REQUIRE(grads.input.data[i] ==
            Catch::Approx(kv * upstream.data[i]).margin(1e-15));
}

TEST_CASE("relu examples and gradient") {
  Tensor<double> t(Shape{3}, {-1.0, 0.0, 2.0});
  auto out = relu(t);
  REQUIRE(out.data == std::vector<double>{0.0, 0.0, 2.0});

  Tensor<double> neg(Shape{4}, {-3.0, -0.5, -1e-9, -100.0});
  auto zero = relu(neg);
  for (double v : zero.data) REQUIRE(v == 0.0);
  Tensor<double> ones(Shape{4}, 1.0);
  auto g = relu_backward(neg, ones);
  for (double v : g.data) REQUIRE(v == 0.0);

  // gradient check away from the kink
  SplitMix64 rng(17);
  Tensor<double> x(Shape{16});
  for (auto& v : x.data) {
    do {
      v = 2.0 * rng.next_unit() - 1.0;
    } while (std::abs(v) < 1e-3);
  }
  auto weights = oracle::random_tensor<double>(Shape{16}, rng);
  auto eval = [&]() {
    auto y = relu(x);
    double acc = 0.0;
    for (std::size_t i = 0; i < y.size(); ++i)
      acc += y.data[i] * weights.data[i];
    return acc;
  };
  auto analytic_t = relu_backward(x, weights);
  std::vector<double*> coords;
  for (auto& v : x.data) coords.push_back(&v);
  REQUIRE(oracle::max_grad_rel_error(coords, analytic_t.data, eval) <= 1e-4);
}

TEST_CASE("sigmoid examples and gradient") {
  Tensor<double> zero(Shape{1}, {0.0});
  REQUIRE(sigmoid(zero).data[0] == Catch::Approx(0.5).margin(1e-15));

  Tensor<double> deep(Shape{1}, {-100.0});
  REQUIRE(sigmoid(deep).data[0] > 0.0);

  SplitMix64 rng(18);
  auto x = oracle::random_tensor<double>(Shape{12}, rng, -3.0, 3.0);
  auto weights = oracle::random_tensor<double>(Shape{12}, rng);
  auto eval = [&]() {
    auto y = sigmoid(x);
    double acc = 0.0;
    for (std::size_t i = 0; i < y.size(); ++i)
      acc += y.data[i] * weights.data[i];
    return acc;
  };
  auto y = sigmoid(x);
  auto analytic_t = sigmoid_backward(y, weights);
  std::vector<double*> coords;
  for (auto& v : x.data) coords.push_back(&v);
  REQUIRE(oracle::max_grad_rel_error(coords, analytic_t.data, eval) <= 1e-4);
}

TEST_CASE("concat_channels stacks and splits") {
  SplitMix64 rng(19);
  std::vector<Tensor<double>> parts;
  for (int i = 0; i < 3; ++i)
    parts.push_back(oracle::random_tensor<double>(Shape{50, 4, 4}, rng));
  auto out = concat_channels(parts);
  REQUIRE(out.shape == Shape{150, 4, 4});

  auto single = concat_channels(std::vector<Tensor<double>>{parts[0]});
  REQUIRE(single.data == parts[0].data);

  // concat then split is the identity
  auto slices = concat_backward({parts[0].shape, parts[1].shape,
                                 parts[2].shape},
                                out);
  for (int i = 0; i < 3; ++i) REQUIRE(slices[i].data == parts[i].data);

  Tensor<double> bad(Shape{1, 5, 4});
  std::vector<const Tensor<double>*> mixed{&parts[0], &bad};
  REQUIRE_THROWS_AS(concat_channels(mixed), Error);
}

TEST_CASE("adam_step examples") {
  SECTION("zero gradient leaves the parameter unchanged") {
    Tensor<double> p(Shape{3}, {0.5, -0.25, 1.0});
    auto before = p.data;
    AdamState<double> st;
    const std::vector<double> zero{0.0, 0.0, 0.0};
    adam_step<double>(p, zero, st, 0.1, 0.9, 0.999);
    REQUIRE(p.data == before);
    REQUIRE(st.step == 1);
  }
  SECTION("hand-evaluated single step") {
    Tensor<double> p(Shape{1}, {0.0});
    AdamState<double> st;
    const std::vector<double> one{1.0};
    adam_step<double>(p, one, st, 0.1, 0.9, 0.999);
    REQUIRE(p.data[0] == Catch::Approx(-0.1).epsilon(1e-6));
  }
  SECTION("same seed is bitwise reproducible") {
    auto run = [](std::uint64_t seed) {
      SplitMix64 rng(seed);
      auto p = oracle::random_tensor<double>(Shape{32}, rng);
      AdamState<double> st;
      for (int i = 0; i < 50; ++i) {
        std::vector<double> g(32);
        for (auto& v : g) v = 2.0 * rng.next_unit() - 1.0;
        adam_step<double>(p, g, st, 1e-2, 0.9, 0.999);
      }
      return p.data;
    };
    REQUIRE(run(123) == run(123));
    REQUIRE(run(123) != run(124));
  }
  SECTION("length mismatch is rejected") {
    Tensor<double> p(Shape{3});
    AdamState<double> st;
    std::vector<double> g{1.0};
    REQUIRE_THROWS_AS(adam_step<double>(p, g, st, 0.1, 0.9, 0.999), Error);
  }
  SECTION("second moments stay non-negative") {
    SplitMix64 rng(77);
    Tensor<double> p(Shape{8});
    AdamState<double> st;
    for (int i = 0; i < 100; ++i) {
      std::vector<double> g(8);
      for (auto& v : g) v = 4.0 * rng.next_unit() - 2.0;
      adam_step<double>(p, g, st, 1e-3, 0.9, 0.999);
      for (double v : st.v) REQUIRE(v >= 0.0);
    }
  }
}

TEST_CASE("forward ops keep finite inputs finite") {
  SplitMix64 rng(20);
  for (int trial = 0; trial < 5; ++trial) {
    auto x = oracle::random_tensor<double>(Shape{3, 6, 6}, rng, -50.0, 50.0);
    auto kernels = oracle::random_tensor<double>(Shape{4, 3, 4, 4}, rng);
    auto layer = layer_from(std::move(kernels), {1.0, -1.0, 0.0, 2.0}, 4,
                            same_padding(4));
    auto y = conv2d_forward(x, layer);
    REQUIRE(y.all_finite());
    REQUIRE(relu(y).all_finite());
    REQUIRE(sigmoid(y).all_finite());
  }
}

TEST_CASE("graph backward composes kernels and accumulates over fan-out") {
  // y = sigmoid(conv(x)); loss = sum-of-squares of (y - target), with x used
  // by two branches so gradients must accumulate.
  SplitMix64 rng(21);
  Graph<double> g;
  auto x = g.leaf(oracle::random_tensor<double>(Shape{1, 4, 4}, rng));
  x->requires_grad = true;
  auto kernels = oracle::random_tensor<double>(Shape{1, 1, 3, 3}, rng);
  ConvLayer<double> layer;
  layer.kernels = make_tensor(std::move(kernels));
  layer.bias = make_tensor(Tensor<double>(Shape{1}, {0.2}));
  layer.kernel = 3;
  layer.pad = same_padding(3);

  auto a = g.sigmoid(g.conv2d(x, layer));
  auto b = g.relu(x);
  auto cat = g.concat({a, b});

  auto weights = oracle::random_tensor<double>(Shape{2, 4, 4}, rng);
  double value = 0.0;
  for (std::size_t i = 0; i < cat->size(); ++i)
    value += cat->data[i] * weights.data[i];
  auto loss = g.custom_scalar(value, {cat}, [cat, weights](double up) {
    Graph<double>::accumulate(cat, [&] {
      std::vector<double> gr(cat->size());
      for (std::size_t i = 0; i < gr.size(); ++i)
        gr[i] = weights.data[i] * up;
      return gr;
    }());
  });
  g.backward(loss);

  auto eval = [&]() {
    Graph<double> gg(false);
    auto xx = gg.leaf(Tensor<double>(*x));
    auto aa = gg.sigmoid(gg.conv2d(xx, layer));
    auto bb = gg.relu(xx);
    auto cc = gg.concat({aa, bb});
    double acc = 0.0;
    for (std::size_t i = 0; i < cc->size(); ++i)
      acc += cc->data[i] * weights.data[i];
    return acc;
  };
  std::vector<double*> coords;
  std::vector<double> analytic;
  for (std::size_t i = 0; i < x->size(); ++i) {
    coords.push_back(&x->data[i]);
    analytic.push_back(x->grad[i]);
  }
  REQUIRE(oracle::max_grad_rel_error(coords, analytic, eval) <= 1e-4);
}

TEST_CASE("tensor store round trip and rejection") {
  const std::string path = "tensor_store_test.bin";
  SplitMix64 rng(22);
  auto a = oracle::random_tensor<double>(Shape{2, 3}, rng);
  auto b = oracle::random_tensor<double>(Shape{5}, rng);
  {
    TensorFileWriter w(path);
    w.add("alpha", a);
    w.add("beta", b);
    w.close();
  }
  auto entries = read_tensor_file(path);
  REQUIRE(entries.size() == 2);
  REQUIRE(entries[0].name == "alpha");
  REQUIRE(entries[0].value.shape == a.shape);
  REQUIRE(entries[0].value.data == a.data);
  REQUIRE(entries[1].name == "beta");
  REQUIRE(entries[1].value.data == b.data);

  SECTION("unknown magic is rejected") {
    std::ofstream bad("tensor_store_bad.bin", std::ios::binary);
    bad << "STEGO9junk";
    bad.close();
    REQUIRE_THROWS_AS(read_tensor_file("tensor_store_bad.bin"), Error);
    std::remove("tensor_store_bad.bin");
  }
  SECTION("truncated file is rejected") {
    std::ifstream in(path, std::ios::binary);
    std::string all((std::istreambuf_iterator<char>(in)),
                    std::istreambuf_iterator<char>());
    in.close();
    std::ofstream out("tensor_store_trunc.bin", std::ios::binary);
    out.write(all.data(), static_cast<std::streamsize>(all.size() - 7));
    out.close();
    REQUIRE_THROWS_AS(read_tensor_file("tensor_store_trunc.bin"), Error);
    std::remove("tensor_store_trunc.bin");
  }
  std::remove(path.c_str());
}
