#pragma once

#include <cmath>
#include <span>
#include <utility>

#include "stego/graph.hpp"
#include "stego/tensor.hpp"

namespace stego {

// Balance factors for the combined training objective.
struct LossWeights {
  double alpha = 1.0;  // container-vs-cover distortion term
  double beta = 1.0;   // secret reconstruction term

  void validate() const {
    if (alpha < 0 || beta < 0)
      fail(Error::Kind::config, "loss weights must be non-negative");
    if (alpha == 0 && beta == 0)
      fail(Error::Kind::config, "loss weights must not both be zero");
  }
};

// Probabilities are clamped before the logs so a saturated prediction cannot
// produce log(0).
template <typename S>
inline constexpr S kProbClampLo = static_cast<S>(1e-7);
template <typename S>
inline constexpr S kProbClampHi = S(1) - static_cast<S>(1e-7);

// Sum of squared differences over all channels and pixels.
template <typename S>
S cover_loss(const Tensor<S>& cover, const Tensor<S>& container) {
  check_same_shape(cover.shape, container.shape, "cover_loss");
  S acc = S(0);
  for (std::size_t i = 0; i < cover.data.size(); ++i) {
    const S d = cover.data[i] - container.data[i];
    acc += d * d;
  }
  return acc;
}

// Negated binary cross-entropy sum between the binary secret and the
// revealed probabilities; zero iff the prediction is perfect pre-clamp.
template <typename S>
S secret_loss(const Tensor<S>& secret, const Tensor<S>& revealed) {
  check_same_shape(secret.shape, revealed.shape, "secret_loss");
  S acc = S(0);
  for (std::size_t i = 0; i < secret.data.size(); ++i) {
    const S r = std::clamp(revealed.data[i], kProbClampLo<S>, kProbClampHi<S>);
    const S s = secret.data[i];
    acc -= s * std::log(r) + (S(1) - s) * std::log(S(1) - r);
  }
  return acc;
}

// alpha * mean(mse) + beta * mean(bce) over the batch.
template <typename S>
S combined_loss(std::span<const std::pair<S, S>> per_pair_mse_bce,
                const LossWeights& weights) {
  weights.validate();
  if (per_pair_mse_bce.empty())
    fail(Error::Kind::invalid_argument, "combined_loss: empty batch");
  S mse = S(0), bce = S(0);
  for (const auto& [m, b] : per_pair_mse_bce) {
    mse += m;
    bce += b;
  }
  const S n = static_cast<S>(per_pair_mse_bce.size());
  return static_cast<S>(weights.alpha) * (mse / n) +
         static_cast<S>(weights.beta) * (bce / n);
}

// ---------------------------------------------------------------------------
// Tape-aware variants used during training.
// ---------------------------------------------------------------------------

template <typename S>
TensorPtr<S> cover_loss(Graph<S>& g, const TensorPtr<S>& cover,
                        const TensorPtr<S>& container) {
  const S value = cover_loss(*cover, *container);
  return g.custom_scalar(value, {cover, container}, [cover, container](S up) {
    for (std::size_t i = 0; i < cover->data.size(); ++i) {
      const S d = S(2) * (container->data[i] - cover->data[i]) * up;
      if (container->requires_grad) {
        container->ensure_grad();
        container->grad[i] += d;
      }
      if (cover->requires_grad) {
        cover->ensure_grad();
        cover->grad[i] -= d;
      }
    }
  });
}

template <typename S>
TensorPtr<S> secret_loss(Graph<S>& g, const TensorPtr<S>& secret,
                         const TensorPtr<S>& revealed) {
  const S value = secret_loss(*secret, *revealed);
  return g.custom_scalar(value, {secret, revealed}, [secret, revealed](S up) {
    if (!revealed->requires_grad) return;
    revealed->ensure_grad();
    for (std::size_t i = 0; i < secret->data.size(); ++i) {
      const S r = revealed->data[i];
      if (r < kProbClampLo<S> || r > kProbClampHi<S>) continue;  // clamped
      const S s = secret->data[i];
      revealed->grad[i] += up * (-(s / r) + (S(1) - s) / (S(1) - r));
    }
  });
}

}  // namespace stego
