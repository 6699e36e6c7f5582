// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <string>
#include <utility>
#include <vector>

#include <nlohmann/json.hpp>

#include "onedatum/nn/model.hpp"

namespace onedatum::nn {

inline constexpr int kCheckpointVersion = 1;

/// Self-describing model archive: identity, metadata and named tensors
/// (parameters, normalization statistics, optionally optimizer moments).
struct Checkpoint {
  std::string arch;
  int num_classes = 0;
  std::array<int, 3> input_shape{0, 0, 0};
  std::uint64_t init_seed = 0;
  nlohmann::json meta;
  std::vector<std::pair<std::string, Tensor>> tensors;

  const Tensor* find(const std::string& name) const {
    for (const auto& [n, t] : tensors) {
      if (n == name) return &t;
    }
    return nullptr;
  }
};

void save_checkpoint(const std::string& path, const Checkpoint& ck);
Checkpoint load_checkpoint(const std::string& path);

/// Captures parameters + running statistics of a model.
Checkpoint snapshot_model(Model& model, nlohmann::json meta = {});

/// Copies tensors into an already-built model by name; throws on
/// missing tensors or shape mismatches.
void load_into_model(const Checkpoint& ck, Model& model);

}  // namespace onedatum::nn
