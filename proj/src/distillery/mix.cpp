// SPDX-License-Identifier: Apache-2.0
#include "onedatum/distillery/mix.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "onedatum/core/error.hpp"

namespace onedatum::distillery {

namespace {
std::vector<int> random_pairing(int n, rng::Stream& rs) {
  std::vector<int> pi(n);
  std::iota(pi.begin(), pi.end(), 0);
  rs.shuffle(pi.begin(), pi.end());
  return pi;
}
}  // namespace

MixedBatch mixup(const nn::Tensor& batch, rng::Stream& rs) {
  if (batch.n() < 2) throw ConfigError("mixup needs a batch of at least 2");
  MixedBatch out;
  out.pairing = random_pairing(batch.n(), rs);
  out.lambda.resize(batch.n());
  out.inputs = batch;
  const std::size_t ss = batch.sample_size();
  for (int i = 0; i < batch.n(); ++i) {
    float lam = static_cast<float>(rs.uniform());
    out.lambda[i] = lam;
    const float* a = batch.sample(i);
    const float* b = batch.sample(out.pairing[i]);
    float* dst = out.inputs.sample(i);
    for (std::size_t j = 0; j < ss; ++j) {
      dst[j] = lam * a[j] + (1.0f - lam) * b[j];
    }
  }
  return out;
}

MixedBatch cutmix(const nn::Tensor& batch, double alpha, double beta,
                  rng::Stream& rs) {
  if (batch.n() < 2) throw ConfigError("cutmix needs a batch of at least 2");
  if (alpha <= 0.0 || beta <= 0.0) {
    throw ConfigError("cutmix alpha and beta must be positive");
  }
  const int H = batch.h(), W = batch.w();
  if (H < 2 || W < 2 || H != W) {
    throw ConfigError("cutmix requires square spatial inputs");
  }
  MixedBatch out;
  out.pairing = random_pairing(batch.n(), rs);
  out.lambda.resize(batch.n());
  out.inputs = batch;
  for (int i = 0; i < batch.n(); ++i) {
    double lam0 = rs.beta(alpha, beta);
    double frac = std::sqrt(1.0 - lam0);
    int bh = static_cast<int>(std::lround(H * frac));
    int bw = static_cast<int>(std::lround(W * frac));
    int cy = static_cast<int>(rs.uniform_int(static_cast<std::uint32_t>(H)));
    int cx = static_cast<int>(rs.uniform_int(static_cast<std::uint32_t>(W)));
    int y0 = std::clamp(cy - bh / 2, 0, H);
    int y1 = std::clamp(cy + (bh + 1) / 2, 0, H);
    int x0 = std::clamp(cx - bw / 2, 0, W);
    int x1 = std::clamp(cx + (bw + 1) / 2, 0, W);
    // stored lambda reflects the clamped box
    out.lambda[i] = 1.0f - static_cast<float>(y1 - y0) * (x1 - x0) /
                               (static_cast<float>(H) * W);
    const float* src = batch.sample(out.pairing[i]);
    float* dst = out.inputs.sample(i);
    for (int c = 0; c < batch.c(); ++c) {
      for (int y = y0; y < y1; ++y) {
        std::size_t off = (static_cast<std::size_t>(c) * H + y) * W;
        std::copy(src + off + x0, src + off + x1, dst + off + x0);
      }
    }
  }
  return out;
}

}  // namespace onedatum::distillery
