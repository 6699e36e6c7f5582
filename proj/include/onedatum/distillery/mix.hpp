// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <vector>

#include "onedatum/core/rng.hpp"
#include "onedatum/nn/tensor.hpp"

namespace onedatum::distillery {

/// A batch after mix augmentation. `lambda` is the per-sample share of
/// the base sample; `pairing` is the partner permutation. For cutmix,
/// lambda is recomputed from the clamped box as 1 - box/total area.
struct MixedBatch {
  nn::Tensor inputs;
  std::vector<float> lambda;
  std::vector<int> pairing;
};

/// Convex combination with per-sample lambda ~ Uniform(0,1):
/// out_i = lambda_i * x_i + (1 - lambda_i) * x_perm(i).
MixedBatch mixup(const nn::Tensor& batch, rng::Stream& rs);

/// Rectangular paste of the partner's pixels: lambda0 ~ Beta(alpha, beta),
/// box side fractions sqrt(1 - lambda0) around a uniform center, clamped
/// to bounds. Requires square spatial inputs.
MixedBatch cutmix(const nn::Tensor& batch, double alpha, double beta,
                  rng::Stream& rs);

}  // namespace onedatum::distillery
