#pragma once

#include <cmath>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "stego/tensor.hpp"

namespace stego {

// First/second moment estimates for one parameter tensor. Zero-initialized;
// `step` counts completed updates.
template <typename S>
struct AdamState {
  std::uint64_t step = 0;
  std::vector<S> m;
  std::vector<S> v;
};

// Bias-corrected Adam update, in place.
template <typename S>
void adam_step(Tensor<S>& param, std::span<const S> grad, AdamState<S>& state,
               S lr, S beta1, S beta2, S eps = static_cast<S>(1e-8)) {
  const std::size_t n = param.size();
  if (grad.size() != n)
    fail(Error::Kind::shape_mismatch,
         "adam_step: gradient length " + std::to_string(grad.size()) +
             " does not match parameter length " + std::to_string(n));
  if (state.m.empty()) state.m.assign(n, S(0));
  if (state.v.empty()) state.v.assign(n, S(0));
  if (state.m.size() != n || state.v.size() != n)
    fail(Error::Kind::shape_mismatch,
         "adam_step: moment length does not match parameter length " +
             std::to_string(n));

  state.step += 1;
  const S c1 = S(1) - static_cast<S>(std::pow(static_cast<double>(beta1),
                                              static_cast<double>(state.step)));
  const S c2 = S(1) - static_cast<S>(std::pow(static_cast<double>(beta2),
                                              static_cast<double>(state.step)));
  for (std::size_t i = 0; i < n; ++i) {
    const S g = grad[i];
    state.m[i] = beta1 * state.m[i] + (S(1) - beta1) * g;
    state.v[i] = beta2 * state.v[i] + (S(1) - beta2) * g * g;
    const S mhat = state.m[i] / c1;
    const S vhat = state.v[i] / c2;
    param.data[i] -= lr * mhat / (std::sqrt(vhat) + eps);
  }
}

}  // namespace stego
