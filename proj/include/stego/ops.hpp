#pragma once

#include <Eigen/Dense>
#include <cmath>
#include <cstring>
#include <string>
#include <vector>

#include "stego/tensor.hpp"

namespace stego {

// ============================================================================
//  Convolution layer
// ============================================================================

// Per-side zero padding. Stride is always 1; a total padding of k-1 per axis
// keeps the spatial dimensions unchanged for both odd and even kernels.
struct Padding {
  int top = 0, bottom = 0, left = 0, right = 0;
};

// Even kernels split the k-1 total asymmetrically: floor before, ceil after.
inline Padding same_padding(int kernel) {
  const int before = (kernel - 1) / 2;
  const int after = kernel - 1 - before;
  return Padding{before, after, before, after};
}

template <typename S>
struct ConvLayer {
  TensorPtr<S> kernels;  // [C_out, C_in, k, k]
  TensorPtr<S> bias;     // [C_out]
  int kernel = 0;
  Padding pad{};

  std::size_t out_channels() const { return kernels->shape[0]; }
  std::size_t in_channels() const { return kernels->shape[1]; }
};

template <typename S>
void validate_conv_layer(const ConvLayer<S>& layer) {
  if (!layer.kernels || !layer.bias || layer.kernels->rank() != 4)
    fail(Error::Kind::invalid_argument, "conv layer: kernels must be rank 4");
  const auto& ks = layer.kernels->shape;
  if (static_cast<int>(ks[2]) != layer.kernel ||
      static_cast<int>(ks[3]) != layer.kernel)
    fail(Error::Kind::shape_mismatch,
         "conv layer: kernel tensor " + shape_str(ks) +
             " does not match kernel size " + std::to_string(layer.kernel));
  if (layer.bias->shape != Shape{ks[0]})
    fail(Error::Kind::shape_mismatch,
         "conv layer: bias shape " + shape_str(layer.bias->shape) +
             " does not match " + std::to_string(ks[0]) + " out channels");
  if (layer.pad.top + layer.pad.bottom != layer.kernel - 1 ||
      layer.pad.left + layer.pad.right != layer.kernel - 1)
    fail(Error::Kind::invalid_argument,
         "conv layer: padding must sum to k-1 per axis");
}

// Weights uniform in +-1/sqrt(fan_in), bias zero.
template <typename S>
ConvLayer<S> make_conv_layer(std::size_t c_out, std::size_t c_in, int kernel,
                             SplitMix64& rng) {
  ConvLayer<S> layer;
  layer.kernel = kernel;
  layer.pad = same_padding(kernel);
  layer.kernels = make_tensor<S>(
      Shape{c_out, c_in, static_cast<std::size_t>(kernel),
            static_cast<std::size_t>(kernel)});
  layer.bias = make_tensor<S>(Shape{c_out});
  const S bound =
      static_cast<S>(1.0 / std::sqrt(static_cast<double>(c_in) * kernel * kernel));
  fill_uniform(*layer.kernels, bound, rng);
  return layer;
}

// ============================================================================
//  im2col convolution kernels
// ============================================================================

namespace detail {

template <typename S>
using RowMatrix =
    Eigen::Matrix<S, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

// Gathers the padded k*k neighbourhood of every output position into a
// (C_in*k*k) x (H*W) row-major matrix. Out-of-image taps are zero.
template <typename S>
void im2col(const S* in, int c_in, int h, int w, int k, Padding pad, S* col) {
  const std::size_t plane = static_cast<std::size_t>(h) * w;
  for (int ci = 0; ci < c_in; ++ci) {
    for (int ky = 0; ky < k; ++ky) {
      for (int kx = 0; kx < k; ++kx) {
        S* row = col + ((static_cast<std::size_t>(ci) * k + ky) * k + kx) * plane;
        const int x0 = std::max(0, pad.left - kx);
        const int x1 = std::min(w, w + pad.left - kx);
        for (int y = 0; y < h; ++y, row += w) {
          const int iy = y + ky - pad.top;
          if (iy < 0 || iy >= h) {
            std::memset(row, 0, sizeof(S) * w);
            continue;
          }
          const S* src = in + (static_cast<std::size_t>(ci) * h + iy) * w;
          if (x0 > 0) std::memset(row, 0, sizeof(S) * x0);
          if (x1 > x0)
            std::memcpy(row + x0, src + x0 + kx - pad.left,
                        sizeof(S) * (x1 - x0));
          if (x1 < w) std::memset(row + x1, 0, sizeof(S) * (w - x1));
        }
      }
    }
  }
}

// Scatter-add transpose of im2col.
template <typename S>
void col2im(const S* col, int c_in, int h, int w, int k, Padding pad, S* in) {
  const std::size_t plane = static_cast<std::size_t>(h) * w;
  for (int ci = 0; ci < c_in; ++ci) {
    for (int ky = 0; ky < k; ++ky) {
      for (int kx = 0; kx < k; ++kx) {
        const S* row =
            col + ((static_cast<std::size_t>(ci) * k + ky) * k + kx) * plane;
        const int x0 = std::max(0, pad.left - kx);
        const int x1 = std::min(w, w + pad.left - kx);
        for (int y = 0; y < h; ++y, row += w) {
          const int iy = y + ky - pad.top;
          if (iy < 0 || iy >= h) continue;
          S* dst = in + (static_cast<std::size_t>(ci) * h + iy) * w + kx - pad.left;
          for (int x = x0; x < x1; ++x) dst[x] += row[x];
        }
      }
    }
  }
}

// Reused per thread so hot conv calls do not hit the allocator (the column
// matrices are large enough to otherwise round-trip through mmap).
template <typename S>
Buffer<S>& col_scratch() {
  thread_local Buffer<S> buf;
  return buf;
}

template <typename S>
Buffer<S>& gcol_scratch() {
  thread_local Buffer<S> buf;
  return buf;
}

template <typename S>
void check_conv_input(const Tensor<S>& input, const ConvLayer<S>& layer) {
  validate_conv_layer(layer);
  if (input.rank() != 3)
    fail(Error::Kind::shape_mismatch,
         "conv2d: expected rank-3 input [C,H,W], got " + shape_str(input.shape));
  if (input.shape[0] != layer.in_channels())
    fail(Error::Kind::shape_mismatch,
         "conv2d: expected " + std::to_string(layer.in_channels()) +
             " input channels, got " + std::to_string(input.shape[0]) +
             " in " + shape_str(input.shape));
  if (input.shape[1] == 0 || input.shape[2] == 0)
    fail(Error::Kind::shape_mismatch,
         "conv2d: empty spatial dims " + shape_str(input.shape));
}

}  // namespace detail

// Stride-1 same-padding 2D convolution; output spatial dims equal the input.
template <typename S>
Tensor<S> conv2d_forward(const Tensor<S>& input, const ConvLayer<S>& layer) {
  detail::check_conv_input(input, layer);
  const int c_in = static_cast<int>(input.shape[0]);
  const int h = static_cast<int>(input.shape[1]);
  const int w = static_cast<int>(input.shape[2]);
  const int k = layer.kernel;
  const std::size_t c_out = layer.out_channels();
  const std::size_t ckk = static_cast<std::size_t>(c_in) * k * k;
  const std::size_t hw = static_cast<std::size_t>(h) * w;

  Buffer<S>& col = detail::col_scratch<S>();
  if (col.size() < ckk * hw) col.resize(ckk * hw);
  detail::im2col(input.data.data(), c_in, h, w, k, layer.pad, col.data());

  Tensor<S> out(Shape{c_out, static_cast<std::size_t>(h),
                      static_cast<std::size_t>(w)});
  Eigen::Map<const detail::RowMatrix<S>> kmat(layer.kernels->data.data(),
                                              static_cast<Eigen::Index>(c_out),
                                              static_cast<Eigen::Index>(ckk));
  Eigen::Map<const detail::RowMatrix<S>> cmat(col.data(),
                                              static_cast<Eigen::Index>(ckk),
                                              static_cast<Eigen::Index>(hw));
  Eigen::Map<detail::RowMatrix<S>> omat(out.data.data(),
                                        static_cast<Eigen::Index>(c_out),
                                        static_cast<Eigen::Index>(hw));
  omat.noalias() = kmat * cmat;
  for (std::size_t c = 0; c < c_out; ++c)
    omat.row(static_cast<Eigen::Index>(c)).array() += layer.bias->data[c];
  return out;
}

template <typename S>
struct ConvGrads {
  Tensor<S> input;    // empty when not requested
  Tensor<S> kernels;  // same shape as layer.kernels
  Tensor<S> bias;     // same shape as layer.bias
};

template <typename S>
ConvGrads<S> conv2d_backward(const Tensor<S>& input, const ConvLayer<S>& layer,
                             const Tensor<S>& upstream,
                             bool want_input_grad = true) {
  detail::check_conv_input(input, layer);
  const int c_in = static_cast<int>(input.shape[0]);
  const int h = static_cast<int>(input.shape[1]);
  const int w = static_cast<int>(input.shape[2]);
  const int k = layer.kernel;
  const std::size_t c_out = layer.out_channels();
  const std::size_t ckk = static_cast<std::size_t>(c_in) * k * k;
  const std::size_t hw = static_cast<std::size_t>(h) * w;
  const Shape expect{c_out, static_cast<std::size_t>(h),
                     static_cast<std::size_t>(w)};
  check_same_shape(expect, upstream.shape, "conv2d_backward upstream");

  Buffer<S>& col = detail::col_scratch<S>();
  if (col.size() < ckk * hw) col.resize(ckk * hw);
  detail::im2col(input.data.data(), c_in, h, w, k, layer.pad, col.data());

  ConvGrads<S> grads;
  grads.kernels = Tensor<S>(layer.kernels->shape);
  grads.bias = Tensor<S>(layer.bias->shape);

  Eigen::Map<const detail::RowMatrix<S>> up(upstream.data.data(),
                                            static_cast<Eigen::Index>(c_out),
                                            static_cast<Eigen::Index>(hw));
  Eigen::Map<const detail::RowMatrix<S>> cmat(col.data(),
                                              static_cast<Eigen::Index>(ckk),
                                              static_cast<Eigen::Index>(hw));
  Eigen::Map<detail::RowMatrix<S>> gk(grads.kernels.data.data(),
                                      static_cast<Eigen::Index>(c_out),
                                      static_cast<Eigen::Index>(ckk));
  gk.noalias() = up * cmat.transpose();
  for (std::size_t c = 0; c < c_out; ++c)
    grads.bias.data[c] = up.row(static_cast<Eigen::Index>(c)).sum();

  if (want_input_grad) {
    Buffer<S>& gcol = detail::gcol_scratch<S>();
    if (gcol.size() < ckk * hw) gcol.resize(ckk * hw);
    Eigen::Map<const detail::RowMatrix<S>> kmat(
        layer.kernels->data.data(), static_cast<Eigen::Index>(c_out),
        static_cast<Eigen::Index>(ckk));
    Eigen::Map<detail::RowMatrix<S>> gc(gcol.data(),
                                        static_cast<Eigen::Index>(ckk),
                                        static_cast<Eigen::Index>(hw));
    gc.noalias() = kmat.transpose() * up;
    grads.input = Tensor<S>(input.shape);
    detail::col2im(gcol.data(), c_in, h, w, k, layer.pad,
                   grads.input.data.data());
  }
  return grads;
}

// ============================================================================
//  Activations
// ============================================================================

template <typename S>
Tensor<S> relu(const Tensor<S>& input) {
  Tensor<S> out(input.shape);
  for (std::size_t i = 0; i < input.data.size(); ++i)
    out.data[i] = input.data[i] > S(0) ? input.data[i] : S(0);
  return out;
}

// Subgradient at 0 is 0.
template <typename S>
Tensor<S> relu_backward(const Tensor<S>& input, const Tensor<S>& upstream) {
  check_same_shape(input.shape, upstream.shape, "relu_backward");
  Tensor<S> out(input.shape);
  for (std::size_t i = 0; i < input.data.size(); ++i)
    out.data[i] = input.data[i] > S(0) ? upstream.data[i] : S(0);
  return out;
}

template <typename S>
S sigmoid_scalar(S x) {
  if (x >= S(0)) return S(1) / (S(1) + std::exp(-x));
  const S e = std::exp(x);
  return e / (S(1) + e);
}

template <typename S>
Tensor<S> sigmoid(const Tensor<S>& input) {
  Tensor<S> out(input.shape);
  for (std::size_t i = 0; i < input.data.size(); ++i)
    out.data[i] = sigmoid_scalar(input.data[i]);
  return out;
}

// Takes the forward *output*: d/dx sigmoid = y * (1 - y).
template <typename S>
Tensor<S> sigmoid_backward(const Tensor<S>& output, const Tensor<S>& upstream) {
  check_same_shape(output.shape, upstream.shape, "sigmoid_backward");
  Tensor<S> out(output.shape);
  for (std::size_t i = 0; i < output.data.size(); ++i)
    out.data[i] = upstream.data[i] * output.data[i] * (S(1) - output.data[i]);
  return out;
}

// ============================================================================
//  Channel concatenation
// ============================================================================

template <typename S>
Tensor<S> concat_channels(const std::vector<const Tensor<S>*>& parts) {
  if (parts.empty())
    fail(Error::Kind::invalid_argument, "concat_channels: no inputs");
  const Shape& first = parts.front()->shape;
  if (first.size() != 3)
    fail(Error::Kind::shape_mismatch,
         "concat_channels: expected rank-3 inputs, got " + shape_str(first));
  std::size_t channels = 0;
  for (const Tensor<S>* p : parts) {
    if (p->rank() != 3 || p->shape[1] != first[1] || p->shape[2] != first[2])
      fail(Error::Kind::shape_mismatch,
           "concat_channels: spatial dims of " + shape_str(p->shape) +
               " do not match " + shape_str(first));
    channels += p->shape[0];
  }
  Tensor<S> out(Shape{channels, first[1], first[2]});
  std::size_t offset = 0;
  for (const Tensor<S>* p : parts) {
    std::copy(p->data.begin(), p->data.end(), out.data.begin() + offset);
    offset += p->data.size();
  }
  return out;
}

template <typename S>
Tensor<S> concat_channels(const std::vector<Tensor<S>>& parts) {
  std::vector<const Tensor<S>*> ptrs;
  ptrs.reserve(parts.size());
  for (const auto& p : parts) ptrs.push_back(&p);
  return concat_channels(ptrs);
}

// Splits the upstream gradient back into per-input channel slices.
template <typename S>
std::vector<Tensor<S>> concat_backward(const std::vector<Shape>& part_shapes,
                                       const Tensor<S>& upstream) {
  std::vector<Tensor<S>> grads;
  grads.reserve(part_shapes.size());
  std::size_t offset = 0;
  for (const Shape& s : part_shapes) {
    Tensor<S> g(s);
    std::copy(upstream.data.begin() + offset,
              upstream.data.begin() + offset + g.size(), g.data.begin());
    offset += g.size();
    grads.push_back(std::move(g));
  }
  if (offset != upstream.size())
    fail(Error::Kind::shape_mismatch,
         "concat_backward: upstream size does not match the input slices");
  return grads;
}

}  // namespace stego
