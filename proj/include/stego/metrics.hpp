#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <numeric>
#include <string>
#include <vector>

#include "stego/csv.hpp"
#include "stego/tensor.hpp"

namespace stego {

// Evaluation metrics are always computed in double precision.

enum class PsnrMode {
  standard,  // 10*log10(peak^2 / mean squared error)
  literal,   // 10*log10(peak / summed squared error)
};

// Returns +infinity for identical images. `peak` is the dynamic range of the
// representation (1.0 for normalized images, 255.0 for 8-bit).
inline double psnr(const Tensor<double>& cover, const Tensor<double>& container,
                   PsnrMode mode = PsnrMode::standard, double peak = 1.0) {
  check_same_shape(cover.shape, container.shape, "psnr");
  double sum_sq = 0.0;
  for (std::size_t i = 0; i < cover.data.size(); ++i) {
    const double d = cover.data[i] - container.data[i];
    sum_sq += d * d;
  }
  if (sum_sq == 0.0) return std::numeric_limits<double>::infinity();
  if (mode == PsnrMode::standard) {
    const double mse = sum_sq / static_cast<double>(cover.data.size());
    return 10.0 * std::log10(peak * peak / mse);
  }
  return 10.0 * std::log10(peak / sum_sq);
}

// Global-statistics SSIM: one mean/variance/covariance over all pixels of
// both images (population variance), stabilized by c1=(0.01L)^2 and
// c2=(0.03L)^2 with L the dynamic range.
inline double ssim(const Tensor<double>& a, const Tensor<double>& b,
                   double dynamic_range = 1.0) {
  check_same_shape(a.shape, b.shape, "ssim");
  const std::size_t n = a.data.size();
  if (n == 0) fail(Error::Kind::invalid_argument, "ssim: empty image");
  const double inv_n = 1.0 / static_cast<double>(n);
  double mu_a = 0.0, mu_b = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    mu_a += a.data[i];
    mu_b += b.data[i];
  }
  mu_a *= inv_n;
  mu_b *= inv_n;
  double var_a = 0.0, var_b = 0.0, cov = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    const double da = a.data[i] - mu_a;
    const double db = b.data[i] - mu_b;
    var_a += da * da;
    var_b += db * db;
    cov += da * db;
  }
  var_a *= inv_n;
  var_b *= inv_n;
  cov *= inv_n;
  const double c1 = (0.01 * dynamic_range) * (0.01 * dynamic_range);
  const double c2 = (0.03 * dynamic_range) * (0.03 * dynamic_range);
  return ((2.0 * mu_a * mu_b + c1) * (2.0 * cov + c2)) /
         ((mu_a * mu_a + mu_b * mu_b + c1) * (var_a + var_b + c2));
}

// Binary mask with exactly k ones at the k largest values; ties resolved in
// favour of the lower row-major index.
inline std::vector<std::uint8_t> top_k_mask(const Tensor<double>& values,
                                            std::size_t k) {
  const std::size_t n = values.data.size();
  if (k > n)
    fail(Error::Kind::invalid_argument,
         "top_k_mask: k=" + std::to_string(k) + " exceeds " +
             std::to_string(n) + " values");
  std::vector<std::uint32_t> order(n);
  std::iota(order.begin(), order.end(), 0);
  std::partial_sort(order.begin(), order.begin() + static_cast<long>(k),
                    order.end(), [&](std::uint32_t i, std::uint32_t j) {
                      if (values.data[i] != values.data[j])
                        return values.data[i] > values.data[j];
                      return i < j;
                    });
  std::vector<std::uint8_t> mask(n, 0);
  for (std::size_t i = 0; i < k; ++i) mask[order[i]] = 1;
  return mask;
}

// Fraction of the secret's active bits whose masked revealed value lies
// within delta of 1. k is the number of active bits in the secret; the mask
// keeps the k most active revealed pixels.
inline double bit_accuracy(const Tensor<double>& secret,
                           const Tensor<double>& revealed, double delta) {
  check_same_shape(secret.shape, revealed.shape, "bit_accuracy");
  std::size_t k = 0;
  for (double s : secret.data) k += (s > 0.0) ? 1 : 0;
  if (k == 0)
    fail(Error::Kind::invalid_argument,
         "bit_accuracy: secret has no active bits");
  const auto mask = top_k_mask(revealed, k);
  std::size_t matched = 0;
  for (std::size_t i = 0; i < secret.data.size(); ++i) {
    if (secret.data[i] <= 0.0) continue;
    const double masked = mask[i] ? revealed.data[i] : 0.0;
    if (std::abs(secret.data[i] - masked) <= delta) ++matched;
  }
  return static_cast<double>(matched) / static_cast<double>(k);
}

// Payload bits per cover pixel value.
inline double bpp(std::size_t payload_dims, std::size_t height,
                  std::size_t width, std::size_t channels) {
  return static_cast<double>(payload_dims) /
         (static_cast<double>(height) * static_cast<double>(width) *
          static_cast<double>(channels));
}

// One evaluation row; mirrors the quantitative-results table layout.
struct MetricsReport {
  double bpp = 0.0;
  double alpha = 0.0;
  double beta = 0.0;
  double loss_all = 0.0;
  double loss_mse = 0.0;
  double loss_bce = 0.0;
  double psnr_db = 0.0;
  double ssim = 0.0;
  double bacc = 0.0;
  std::size_t n_pairs = 0;

  static std::string csv_header() {
    return "BPP,alpha,beta,L_all,L_mse,L_bce,PSNR,SSIM,BACC";
  }

  std::string csv_row() const {
    return csv_join({format_double(bpp), format_double(alpha),
                     format_double(beta), format_double(loss_all),
                     format_double(loss_mse), format_double(loss_bce),
                     format_double(psnr_db), format_double(ssim),
                     format_double(bacc)});
  }
};

}  // namespace stego
