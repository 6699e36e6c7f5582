// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <string>
#include <vector>

#include "onedatum/distillery/distill.hpp"
#include "onedatum/nn/model.hpp"

namespace onedatum::compress {

/// Data-free compression recipe: magnitude pruning or 8-bit weight
/// quantization, recovered by self-distillation on single-image patches.
struct CompressionPlan {
  enum class Method { kPrune, kQuantize };
  Method method = Method::kPrune;
  double sparsity = 0.5;  // prune only; standard grid {0.25, 0.5, 0.75, 0.85}
  int bit_width = 8;      // quantize only (8 is the only supported width)
  distillery::DistillConfig finetune;

  void validate() const;
};

/// One 0/1 mask per prunable tensor (conv kernels and linear weight
/// matrices; biases and normalization parameters are exempt).
struct PruneMasks {
  std::vector<std::pair<std::string, std::vector<std::uint8_t>>> masks;

  const std::vector<std::uint8_t>* find(const std::string& name) const {
    for (const auto& [n, m] : masks) {
      if (n == name) return &m;
    }
    return nullptr;
  }
};

/// Zeroes the floor(sparsity * n) smallest-magnitude entries of every
/// prunable tensor (ties broken by index order) and returns the masks.
PruneMasks magnitude_prune(nn::Model& model, double sparsity);

/// Re-applies masks (zeroes masked positions); used after every
/// finetuning step so pruned weights never revive.
void apply_masks(nn::Model& model, const PruneMasks& masks);

/// Exact per-tensor sparsity (zero count / numel) of prunable tensors.
std::vector<std::pair<std::string, double>> measure_sparsity(nn::Model& model);

/// Symmetric per-tensor weight quantization: scale = max|w| / 127,
/// q = clamp(round(w / scale), -127, 127); dequantized values replace
/// the originals (simulated quantization). All-zero tensors get scale 1.
struct QuantizationInfo {
  std::vector<std::pair<std::string, float>> scales;

  float scale_for(const std::string& name) const {
    for (const auto& [n, s] : scales) {
      if (n == name) return s;
    }
    throw ConfigError("no scale recorded for " + name);
  }
};

QuantizationInfo quantize_8bit(nn::Model& model);

/// Snaps prunable tensors back onto a previously recorded quantization
/// grid (straight-through finetuning keeps the scales frozen).
void requantize(nn::Model& model, const QuantizationInfo& info);

struct CompressionResult {
  nn::Model model;
  PruneMasks masks;           // empty for quantization
  QuantizationInfo quant;     // empty for pruning
  distillery::TrainResult train;
};

/// Clones `pretrained`, applies the compression, then finetunes the
/// clone against the uncompressed original on the patch dataset with
/// masks (or the quantization grid) enforced after every step.
CompressionResult compress_with_self_distillation(
    nn::Model& pretrained, const CompressionPlan& plan,
    const patchforge::PatchDataset& patches,
    const data::LabeledImages& eval_set, const std::string& run_dir = "");

}  // namespace onedatum::compress
