// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <array>
#include <cstdint>
#include <numeric>
#include <string>
#include <vector>

#include "onedatum/core/error.hpp"

namespace onedatum::nn {

/// Dense float32 tensor, NCHW, row-major. Vectors/matrices use trailing
/// singleton dims (a batch of logits is N×C×1×1).
struct Tensor {
  std::array<int, 4> shape{0, 0, 0, 0};
  std::vector<float> data;

  Tensor() = default;
  Tensor(int n, int c, int h, int w)
      : shape{n, c, h, w},
        data(static_cast<std::size_t>(n) * c * h * w, 0.0f) {}

  static Tensor zeros_like(const Tensor& other) {
    return {other.shape[0], other.shape[1], other.shape[2], other.shape[3]};
  }

  int n() const { return shape[0]; }
  int c() const { return shape[1]; }
  int h() const { return shape[2]; }
  int w() const { return shape[3]; }

  std::size_t numel() const { return data.size(); }
  std::size_t sample_size() const {
    return static_cast<std::size_t>(shape[1]) * shape[2] * shape[3];
  }

  float* sample(int i) { return data.data() + sample_size() * i; }
  const float* sample(int i) const { return data.data() + sample_size() * i; }

  float& at(int n_, int c_, int h_, int w_) {
    return data[((static_cast<std::size_t>(n_) * shape[1] + c_) * shape[2] +
                 h_) * shape[3] + w_];
  }
  float at(int n_, int c_, int h_, int w_) const {
    return data[((static_cast<std::size_t>(n_) * shape[1] + c_) * shape[2] +
                 h_) * shape[3] + w_];
  }

  bool same_shape(const Tensor& o) const { return shape == o.shape; }

  std::string shape_str() const {
    return "[" + std::to_string(shape[0]) + "," + std::to_string(shape[1]) +
           "," + std::to_string(shape[2]) + "," + std::to_string(shape[3]) +
           "]";
  }

  void fill(float v) { std::fill(data.begin(), data.end(), v); }
};

}  // namespace onedatum::nn
