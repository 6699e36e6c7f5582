// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <array>
#include <memory>
#include <string>
#include <vector>

#include "onedatum/nn/layers.hpp"

namespace onedatum::nn {

/// A built network plus its identity (architecture name, class count,
/// input shape, init seed). Parameters live inside the layers; ParamRef
/// views stay valid for the model's lifetime.
struct Model {
  std::string arch;
  int num_classes = 0;
  std::array<int, 3> input_shape{0, 0, 0};  // C, H, W
  std::uint64_t init_seed = 0;
  std::unique_ptr<Sequential> net;

  Tensor forward(const Tensor& x, bool train) {
    return net->forward(x, train);
  }
  Tensor backward(const Tensor& dy) { return net->backward(dy); }

  Tensor forward_taps(const Tensor& x,
                      std::vector<std::pair<std::string, Tensor>>& taps) {
    return net->forward_taps(x, taps);
  }

  std::vector<ParamRef> params() {
    std::vector<ParamRef> out;
    net->collect_params("net", out);
    return out;
  }
  std::vector<StateRef> state() {
    std::vector<StateRef> out;
    net->collect_state("net", out);
    return out;
  }

  std::size_t param_count() {
    std::size_t n = 0;
    for (const auto& p : params()) n += p.value->numel();
    return n;
  }

  /// Digest over all parameters and normalization statistics; used for
  /// teacher-immutability checks.
  std::string weights_hash();

  void zero_grads() {
    for (auto& p : params()) p.grad->fill(0.0f);
  }
};

}  // namespace onedatum::nn
