// SPDX-License-Identifier: Apache-2.0
#include "onedatum/compress/compress.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "onedatum/modelzoo/modelzoo.hpp"

namespace onedatum::compress {

void CompressionPlan::validate() const {
  if (method == Method::kPrune && (sparsity < 0.0 || sparsity >= 1.0)) {
    throw ConfigError("sparsity must lie in [0, 1)");
  }
  if (method == Method::kQuantize && bit_width != 8) {
    throw ConfigError("only 8-bit quantization is supported");
  }
  finetune.validate();
}

PruneMasks magnitude_prune(nn::Model& model, double sparsity) {
  if (sparsity < 0.0 || sparsity >= 1.0) {
    throw ConfigError("sparsity must lie in [0, 1)");
  }
  PruneMasks out;
  for (auto& p : model.params()) {
    if (!p.prunable) continue;
    auto& w = p.value->data;
    std::vector<std::uint8_t> mask(w.size(), 1);
    auto zero_count =
        static_cast<std::size_t>(std::floor(sparsity * w.size()));
    if (zero_count > 0) {
      std::vector<std::size_t> order(w.size());
      std::iota(order.begin(), order.end(), 0);
      std::stable_sort(order.begin(), order.end(),
                       [&](std::size_t a, std::size_t b) {
                         return std::fabs(w[a]) < std::fabs(w[b]);
                       });
      for (std::size_t i = 0; i < zero_count; ++i) {
        w[order[i]] = 0.0f;
        mask[order[i]] = 0;
      }
    }
    out.masks.emplace_back(p.name, std::move(mask));
  }
  return out;
}

void apply_masks(nn::Model& model, const PruneMasks& masks) {
  for (auto& p : model.params()) {
    const auto* mask = masks.find(p.name);
    if (mask == nullptr) continue;
    auto& w = p.value->data;
    for (std::size_t i = 0; i < w.size(); ++i) {
      if ((*mask)[i] == 0) w[i] = 0.0f;
    }
  }
}

std::vector<std::pair<std::string, double>> measure_sparsity(
    nn::Model& model) {
  std::vector<std::pair<std::string, double>> out;
  for (auto& p : model.params()) {
    if (!p.prunable) continue;
    std::size_t zeros = 0;
    for (float v : p.value->data) zeros += v == 0.0f;
    out.emplace_back(p.name,
                     static_cast<double>(zeros) / p.value->data.size());
  }
  return out;
}

QuantizationInfo quantize_8bit(nn::Model& model) {
  QuantizationInfo info;
  for (auto& p : model.params()) {
    if (!p.prunable) continue;
    auto& w = p.value->data;
    float maxabs = 0.0f;
    for (float v : w) maxabs = std::max(maxabs, std::fabs(v));
    float scale = maxabs > 0.0f ? maxabs / 127.0f : 1.0f;
    for (auto& v : w) {
      float q = std::clamp(std::nearbyint(v / scale), -127.0f, 127.0f);
      v = q * scale;
    }
    info.scales.emplace_back(p.name, scale);
  }
  return info;
}

void requantize(nn::Model& model, const QuantizationInfo& info) {
  for (auto& p : model.params()) {
    if (!p.prunable) continue;
    float scale = info.scale_for(p.name);
    for (auto& v : p.value->data) {
      float q = std::clamp(std::nearbyint(v / scale), -127.0f, 127.0f);
      v = q * scale;
    }
  }
}

CompressionResult compress_with_self_distillation(
    nn::Model& pretrained, const CompressionPlan& plan,
    const patchforge::PatchDataset& patches,
    const data::LabeledImages& eval_set, const std::string& run_dir) {
  plan.validate();
  CompressionResult result;
  result.model = modelzoo::clone_model(pretrained);

  distillery::DistillHooks hooks;
  if (plan.method == CompressionPlan::Method::kPrune) {
    result.masks = magnitude_prune(result.model, plan.sparsity);
    hooks.post_step = [&result](nn::Model& m) {
      apply_masks(m, result.masks);
    };
  } else {
    result.quant = quantize_8bit(result.model);
    hooks.post_step = [&result](nn::Model& m) {
      requantize(m, result.quant);
    };
  }

  if (plan.finetune.epochs > 0) {
    result.train = distillery::distill(pretrained, result.model, patches,
                                       eval_set, plan.finetune, run_dir,
                                       hooks);
  }
  return result;
}

}  // namespace onedatum::compress
