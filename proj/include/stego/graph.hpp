#pragma once

#include <functional>
#include <span>
#include <utility>
#include <vector>

#include "stego/ops.hpp"

namespace stego {

// Reverse-mode gradient tape over the op kernels. Ops compute the forward
// result eagerly and, when recording, push a closure that routes the output
// gradient to the inputs. Tensors produced by ops are treated as immutable;
// gradient accumulation is the only mutation performed by backward().
//
// A Graph constructed with record=false runs forward passes only (no tape,
// no requires_grad propagation) and is safe to use concurrently on shared
// read-only parameters.
template <typename S>
class Graph {
 public:
  explicit Graph(bool record = true) : record_(record) {}

  bool recording() const { return record_; }

  TensorPtr<S> leaf(Tensor<S> t) { return make_tensor(std::move(t)); }

  TensorPtr<S> conv2d(const TensorPtr<S>& x, const ConvLayer<S>& layer) {
    auto out = make_tensor(conv2d_forward(*x, layer));
    if (should_track({x, layer.kernels, layer.bias})) {
      out->requires_grad = true;
      TensorPtr<S> kernels = layer.kernels;
      TensorPtr<S> bias = layer.bias;
      ConvLayer<S> snapshot = layer;
      nodes_.push_back([x, kernels, bias, snapshot, out]() {
        if (out->grad.empty()) return;
        Tensor<S> upstream(out->shape, out->grad);
        auto grads = conv2d_backward(*x, snapshot, upstream, x->requires_grad);
        if (x->requires_grad) accumulate(x, grads.input.data);
        if (kernels->requires_grad) accumulate(kernels, grads.kernels.data);
        if (bias->requires_grad) accumulate(bias, grads.bias.data);
      });
    }
    return out;
  }

  TensorPtr<S> relu(const TensorPtr<S>& x) {
    auto out = make_tensor(stego::relu(*x));
    if (should_track({x})) {
      out->requires_grad = true;
      nodes_.push_back([x, out]() {
        if (out->grad.empty()) return;
        Tensor<S> upstream(out->shape, out->grad);
        accumulate(x, relu_backward(*x, upstream).data);
      });
    }
    return out;
  }

  TensorPtr<S> sigmoid(const TensorPtr<S>& x) {
    auto out = make_tensor(stego::sigmoid(*x));
    if (should_track({x})) {
      out->requires_grad = true;
      nodes_.push_back([x, out]() {
        if (out->grad.empty()) return;
        Tensor<S> upstream(out->shape, out->grad);
        accumulate(x, sigmoid_backward(*out, upstream).data);
      });
    }
    return out;
  }

  TensorPtr<S> concat(const std::vector<TensorPtr<S>>& xs) {
    std::vector<const Tensor<S>*> ptrs;
    ptrs.reserve(xs.size());
    for (const auto& x : xs) ptrs.push_back(x.get());
    auto out = make_tensor(concat_channels(ptrs));
    if (should_track(xs)) {
      out->requires_grad = true;
      std::vector<TensorPtr<S>> inputs = xs;
      nodes_.push_back([inputs, out]() {
        if (out->grad.empty()) return;
        std::vector<Shape> shapes;
        shapes.reserve(inputs.size());
        for (const auto& x : inputs) shapes.push_back(x->shape);
        Tensor<S> upstream(out->shape, out->grad);
        auto slices = concat_backward(shapes, upstream);
        for (std::size_t i = 0; i < inputs.size(); ++i)
          if (inputs[i]->requires_grad) accumulate(inputs[i], slices[i].data);
      });
    }
    return out;
  }

  // Scalar a*x + b*y for combining per-pair loss terms.
  TensorPtr<S> weighted_sum(S a, const TensorPtr<S>& x, S b,
                            const TensorPtr<S>& y) {
    if (x->size() != 1 || y->size() != 1)
      fail(Error::Kind::shape_mismatch, "weighted_sum: scalar inputs required");
    auto out = make_tensor(Tensor<S>::scalar(a * x->data[0] + b * y->data[0]));
    if (should_track({x, y})) {
      out->requires_grad = true;
      nodes_.push_back([a, x, b, y, out]() {
        if (out->grad.empty()) return;
        const S g = out->grad[0];
        if (x->requires_grad) {
          x->ensure_grad();
          x->grad[0] += a * g;
        }
        if (y->requires_grad) {
          y->ensure_grad();
          y->grad[0] += b * g;
        }
      });
    }
    return out;
  }

  // Generic hook for loss ops defined outside this header. `backward_fn`
  // receives the upstream scalar gradient.
  TensorPtr<S> custom_scalar(S value, std::vector<TensorPtr<S>> inputs,
                             std::function<void(S)> backward_fn) {
    auto out = make_tensor(Tensor<S>::scalar(value));
    if (should_track(inputs)) {
      out->requires_grad = true;
      nodes_.push_back([out, fn = std::move(backward_fn)]() {
        if (out->grad.empty()) return;
        fn(out->grad[0]);
      });
    }
    return out;
  }

  // Seeds d(root)/d(root) = 1 and replays the tape in reverse. Gradients
  // accumulate, so leaves reachable along several paths sum contributions.
  void backward(const TensorPtr<S>& root) {
    if (root->size() != 1)
      fail(Error::Kind::shape_mismatch, "backward: root must be a scalar");
    root->ensure_grad();
    root->grad[0] += S(1);
    for (auto it = nodes_.rbegin(); it != nodes_.rend(); ++it) (*it)();
  }

  void clear() { nodes_.clear(); }
  std::size_t node_count() const { return nodes_.size(); }

  static void accumulate(const TensorPtr<S>& t, std::span<const S> g) {
    t->ensure_grad();
    for (std::size_t i = 0; i < g.size(); ++i) t->grad[i] += g[i];
  }

 private:
  bool should_track(const std::vector<TensorPtr<S>>& inputs) const {
    if (!record_) return false;
    for (const auto& x : inputs)
      if (x->requires_grad) return true;
    return false;
  }

  bool record_;
  std::vector<std::function<void()>> nodes_;
};

}  // namespace stego
