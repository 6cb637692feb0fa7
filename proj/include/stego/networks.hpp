#pragma once

#include <array>
#include <string>
#include <utility>
#include <vector>

#include "stego/graph.hpp"
#include "stego/kv.hpp"
#include "stego/ops.hpp"
#include "stego/rng.hpp"

namespace stego {

// ============================================================================
//  Configuration
// ============================================================================

// The three networks share one layout: three parallel convolution branches
// with fixed kernel sizes {3,4,5}, each a stack of same-padded layers, merged
// by channel concatenation. branch_channels is the width of every branch
// (reference value 50; smaller widths make CPU-scale runs practical).
struct NetworkConfig {
  int branch_channels = 50;
  std::array<int, 3> kernel_sizes{3, 4, 5};
  int height = 256;
  int width = 256;
  int cover_channels = 3;  // 3 = RGB covers, 1 = grayscale covers

  void validate() const {
    if (kernel_sizes != std::array<int, 3>{3, 4, 5})
      fail(Error::Kind::config, "network: kernel sizes must be {3,4,5}");
    if (branch_channels < 1)
      fail(Error::Kind::config, "network: branch_channels must be positive");
    if (cover_channels != 1 && cover_channels != 3)
      fail(Error::Kind::config, "network: cover_channels must be 1 or 3");
    const int kmax = 5;
    if (height < kmax || width < kmax)
      fail(Error::Kind::config,
           "network: image dims must be at least the largest kernel (5)");
  }

  std::size_t trunk_channels() const {
    return static_cast<std::size_t>(3 * branch_channels);
  }
};

inline void save_network_config(const std::string& path,
                                const NetworkConfig& c) {
  write_key_value_file(path,
                       {{"branch_channels", std::to_string(c.branch_channels)},
                        {"height", std::to_string(c.height)},
                        {"width", std::to_string(c.width)},
                        {"cover_channels", std::to_string(c.cover_channels)}});
}

inline NetworkConfig load_network_config(const KeyValueMap& kv) {
  NetworkConfig c;
  auto want = [&](const char* key) -> int {
    auto it = kv.find(key);
    if (it == kv.end())
      fail(Error::Kind::config, std::string("network config: missing ") + key);
    return std::stoi(it->second);
  };
  c.branch_channels = want("branch_channels");
  c.height = want("height");
  c.width = want("width");
  c.cover_channels = want("cover_channels");
  c.validate();
  return c;
}

// ============================================================================
//  Model
// ============================================================================

// Post-trunk head: each branch reduces the concatenated trunk to a single
// channel (the middle branch through an extra wide layer), and the three
// 1-channel outputs concatenate to a 3-channel map.
template <typename S>
struct BranchHead {
  ConvLayer<S> side_a;      // k=3, trunk -> 1
  ConvLayer<S> mid_wide;    // k=4, trunk -> branch_channels
  ConvLayer<S> mid_narrow;  // k=4, branch_channels -> 1
  ConvLayer<S> side_b;      // k=5, trunk -> 1
};

template <typename S>
using BranchTowers = std::array<std::vector<ConvLayer<S>>, 3>;

template <typename S>
struct StegoModel {
  NetworkConfig config;

  // preparation: secret [1,H,W] -> prepared [3,H,W]
  BranchTowers<S> prep_towers;
  BranchHead<S> prep_head;  // sigmoid outputs

  // hiding: cat(prepared, cover) -> container [cover_channels,H,W]
  BranchTowers<S> hide_towers;
  std::array<ConvLayer<S>, 3> hide_mid;     // trunk -> branch_channels
  std::array<ConvLayer<S>, 3> hide_narrow;  // branch_channels -> 1
  ConvLayer<S> hide_out;                    // 1x1, 3 -> cover_channels

  // reveal: container -> revealed secret [1,H,W]
  BranchTowers<S> reveal_towers;
  BranchHead<S> reveal_head;  // relu outputs
  ConvLayer<S> reveal_out;    // 2x2, 3 -> 1

  std::vector<std::pair<std::string, TensorPtr<S>>> named_parameters() const {
    std::vector<std::pair<std::string, TensorPtr<S>>> out;
    auto add = [&](const std::string& name, const ConvLayer<S>& layer) {
      out.emplace_back(name + ".kernels", layer.kernels);
      out.emplace_back(name + ".bias", layer.bias);
    };
    auto add_towers = [&](const std::string& net, const BranchTowers<S>& tw) {
      for (std::size_t b = 0; b < 3; ++b)
        for (std::size_t s = 0; s < tw[b].size(); ++s)
          add(net + ".t" + std::to_string(config.kernel_sizes[b]) + ".s" +
                  std::to_string(s),
              tw[b][s]);
    };
    auto add_head = [&](const std::string& net, const BranchHead<S>& h) {
      add(net + ".head.k3", h.side_a);
      add(net + ".head.k4a", h.mid_wide);
      add(net + ".head.k4b", h.mid_narrow);
      add(net + ".head.k5", h.side_b);
    };
    add_towers("prep", prep_towers);
    add_head("prep", prep_head);
    add_towers("hide", hide_towers);
    for (std::size_t b = 0; b < 3; ++b)
      add("hide.mid.k" + std::to_string(config.kernel_sizes[b]), hide_mid[b]);
    for (std::size_t b = 0; b < 3; ++b)
      add("hide.narrow.k" + std::to_string(config.kernel_sizes[b]),
          hide_narrow[b]);
    add("hide.out", hide_out);
    add_towers("reveal", reveal_towers);
    add_head("reveal", reveal_head);
    add("reveal.out", reveal_out);
    return out;
  }

  void set_requires_grad(bool value) {
    for (auto& [name, p] : named_parameters()) p->requires_grad = value;
  }

  void zero_grads() {
    for (auto& [name, p] : named_parameters()) p->grad.clear();
  }

  void copy_data_from(const StegoModel& other) {
    auto dst = named_parameters();
    auto src = other.named_parameters();
    if (dst.size() != src.size())
      fail(Error::Kind::shape_mismatch, "model copy: parameter count mismatch");
    for (std::size_t i = 0; i < dst.size(); ++i) {
      check_same_shape(dst[i].second->shape, src[i].second->shape,
                       "model copy");
      dst[i].second->data = src[i].second->data;
    }
  }

  StegoModel clone() const {
    StegoModel out = *this;
    auto deep = [](ConvLayer<S>& layer) {
      layer.kernels = make_tensor(Tensor<S>(*layer.kernels));
      layer.bias = make_tensor(Tensor<S>(*layer.bias));
    };
    for (auto* towers : {&out.prep_towers, &out.hide_towers, &out.reveal_towers})
      for (auto& tower : *towers)
        for (auto& layer : tower) deep(layer);
    for (auto* head : {&out.prep_head, &out.reveal_head}) {
      deep(head->side_a);
      deep(head->mid_wide);
      deep(head->mid_narrow);
      deep(head->side_b);
    }
    for (auto& layer : out.hide_mid) deep(layer);
    for (auto& layer : out.hide_narrow) deep(layer);
    deep(out.hide_out);
    deep(out.reveal_out);
    return out;
  }
};

// ============================================================================
//  Construction
// ============================================================================

namespace detail {

template <typename S>
BranchTowers<S> make_towers(std::size_t in_channels, const NetworkConfig& cfg,
                            SplitMix64& rng, int stages = 4) {
  BranchTowers<S> towers;
  const auto bc = static_cast<std::size_t>(cfg.branch_channels);
  for (std::size_t b = 0; b < 3; ++b) {
    towers[b].reserve(static_cast<std::size_t>(stages));
    for (int s = 0; s < stages; ++s)
      towers[b].push_back(make_conv_layer<S>(bc, s == 0 ? in_channels : bc,
                                             cfg.kernel_sizes[b], rng));
  }
  return towers;
}

template <typename S>
BranchHead<S> make_head(const NetworkConfig& cfg, SplitMix64& rng) {
  const std::size_t trunk = cfg.trunk_channels();
  const auto bc = static_cast<std::size_t>(cfg.branch_channels);
  BranchHead<S> head;
  head.side_a = make_conv_layer<S>(1, trunk, cfg.kernel_sizes[0], rng);
  head.mid_wide = make_conv_layer<S>(bc, trunk, cfg.kernel_sizes[1], rng);
  head.mid_narrow = make_conv_layer<S>(1, bc, cfg.kernel_sizes[1], rng);
  head.side_b = make_conv_layer<S>(1, trunk, cfg.kernel_sizes[2], rng);
  return head;
}

}  // namespace detail

template <typename S>
StegoModel<S> build_model(const NetworkConfig& config, std::uint64_t seed) {
  config.validate();
  SplitMix64 rng(seed);
  StegoModel<S> model;
  model.config = config;
  const std::size_t trunk = config.trunk_channels();
  const auto bc = static_cast<std::size_t>(config.branch_channels);
  const auto cc = static_cast<std::size_t>(config.cover_channels);

  model.prep_towers = detail::make_towers<S>(1, config, rng);
  model.prep_head = detail::make_head<S>(config, rng);

  model.hide_towers = detail::make_towers<S>(3 + cc, config, rng);
  for (std::size_t b = 0; b < 3; ++b)
    model.hide_mid[b] =
        make_conv_layer<S>(bc, trunk, config.kernel_sizes[b], rng);
  for (std::size_t b = 0; b < 3; ++b)
    model.hide_narrow[b] =
        make_conv_layer<S>(1, bc, config.kernel_sizes[b], rng);
  model.hide_out = make_conv_layer<S>(cc, 3, 1, rng);

  model.reveal_towers = detail::make_towers<S>(cc, config, rng);
  model.reveal_head = detail::make_head<S>(config, rng);
  model.reveal_out = make_conv_layer<S>(1, 3, 2, rng);

  for (const auto& [name, p] : model.named_parameters()) {
    (void)name;
    p->requires_grad = true;
  }
  return model;
}

// ============================================================================
//  Forward passes
// ============================================================================

namespace detail {

template <typename S>
TensorPtr<S> run_towers(Graph<S>& g, const TensorPtr<S>& x,
                        const BranchTowers<S>& towers) {
  std::vector<TensorPtr<S>> outs;
  outs.reserve(3);
  for (const auto& tower : towers) {
    TensorPtr<S> h = x;
    for (const auto& layer : tower) h = g.relu(g.conv2d(h, layer));
    outs.push_back(h);
  }
  return g.concat(outs);
}

template <typename S>
TensorPtr<S> run_head(Graph<S>& g, const TensorPtr<S>& trunk,
                      const BranchHead<S>& head, bool sigmoid_out) {
  auto out_act = [&](const TensorPtr<S>& t) {
    return sigmoid_out ? g.sigmoid(t) : g.relu(t);
  };
  auto a = out_act(g.conv2d(trunk, head.side_a));
  auto m = g.relu(g.conv2d(trunk, head.mid_wide));
  m = out_act(g.conv2d(m, head.mid_narrow));
  auto b = out_act(g.conv2d(trunk, head.side_b));
  return g.concat({a, m, b});
}

template <typename S>
void check_image_shape(const Tensor<S>& t, std::size_t channels,
                       const NetworkConfig& cfg, const char* what) {
  const Shape expect{channels, static_cast<std::size_t>(cfg.height),
                     static_cast<std::size_t>(cfg.width)};
  check_same_shape(expect, t.shape, what);
}

template <typename S>
void check_unit_range(const Tensor<S>& t, const char* what) {
  for (S v : t.data)
    if (!(v >= S(0) && v <= S(1)))
      fail(Error::Kind::invalid_argument,
           std::string(what) + ": values must lie in [0,1]");
}

}  // namespace detail

// Secret [1,H,W] with values in {0,1} -> prepared image [3,H,W] in (0,1).
template <typename S>
TensorPtr<S> prep_forward(Graph<S>& g, const StegoModel<S>& model,
                          const TensorPtr<S>& secret) {
  detail::check_image_shape(*secret, 1, model.config, "prep_forward secret");
  for (S v : secret->data)
    if (v != S(0) && v != S(1))
      fail(Error::Kind::invalid_argument,
           "prep_forward: secret image must be binary (0/1)");
  auto trunk = detail::run_towers(g, secret, model.prep_towers);
  return detail::run_head(g, trunk, model.prep_head, /*sigmoid_out=*/true);
}

// Prepared [3,H,W] + cover [C,H,W] -> container [C,H,W] in (0,1).
template <typename S>
TensorPtr<S> hide_forward(Graph<S>& g, const StegoModel<S>& model,
                          const TensorPtr<S>& prepared,
                          const TensorPtr<S>& cover) {
  detail::check_image_shape(*prepared, 3, model.config, "hide_forward prepared");
  if (cover->rank() != 3 ||
      cover->shape[0] != static_cast<std::size_t>(model.config.cover_channels))
    fail(Error::Kind::shape_mismatch,
         "hide_forward: cover " + shape_str(cover->shape) +
             " does not match the configured " +
             std::to_string(model.config.cover_channels) + " cover channels");
  detail::check_image_shape(
      *cover, static_cast<std::size_t>(model.config.cover_channels),
      model.config, "hide_forward cover");
  detail::check_unit_range(*cover, "hide_forward cover");

  auto x = g.concat({prepared, cover});
  auto trunk = detail::run_towers(g, x, model.hide_towers);
  std::vector<TensorPtr<S>> narrow;
  narrow.reserve(3);
  for (std::size_t b = 0; b < 3; ++b) {
    auto h = g.relu(g.conv2d(trunk, model.hide_mid[b]));
    narrow.push_back(g.relu(g.conv2d(h, model.hide_narrow[b])));
  }
  auto merged = g.concat(narrow);
  return g.sigmoid(g.conv2d(merged, model.hide_out));
}

// Container [C,H,W] -> revealed secret probabilities [1,H,W] in (0,1).
template <typename S>
TensorPtr<S> reveal_forward(Graph<S>& g, const StegoModel<S>& model,
                            const TensorPtr<S>& container) {
  detail::check_image_shape(
      *container, static_cast<std::size_t>(model.config.cover_channels),
      model.config, "reveal_forward container");
  detail::check_unit_range(*container, "reveal_forward container");
  auto trunk = detail::run_towers(g, container, model.reveal_towers);
  auto merged = detail::run_head(g, trunk, model.reveal_head,
                                 /*sigmoid_out=*/false);
  return g.sigmoid(g.conv2d(merged, model.reveal_out));
}

template <typename S>
struct PipelineOutputs {
  TensorPtr<S> prepared;
  TensorPtr<S> container;
  TensorPtr<S> revealed;
};

template <typename S>
PipelineOutputs<S> full_forward(Graph<S>& g, const StegoModel<S>& model,
                                const TensorPtr<S>& secret,
                                const TensorPtr<S>& cover) {
  PipelineOutputs<S> out;
  out.prepared = prep_forward(g, model, secret);
  out.container = hide_forward(g, model, out.prepared, cover);
  out.revealed = reveal_forward(g, model, out.container);
  return out;
}

}  // namespace stego
