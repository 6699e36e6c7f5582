// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <memory>
#include <string>
#include <vector>

#include "onedatum/core/rng.hpp"
#include "onedatum/nn/tensor.hpp"

namespace onedatum::nn {

/// Named reference to a trainable parameter and its gradient buffer.
/// `decay` marks it for weight decay / L2 regularization; `prunable`
/// marks conv/linear weight matrices for magnitude pruning.
struct ParamRef {
  std::string name;
  Tensor* value;
  Tensor* grad;
  bool decay;
  bool prunable;
};

/// Non-trainable buffers (normalization running statistics).
struct StateRef {
  std::string name;
  Tensor* value;
};

/// One backward per forward; backward overwrites parameter gradients.
class Layer {
 public:
  virtual ~Layer() = default;
  virtual Tensor forward(const Tensor& x, bool train) = 0;
  virtual Tensor backward(const Tensor& dy) = 0;
  virtual void collect_params(const std::string& prefix,
                              std::vector<ParamRef>& out) {
    (void)prefix;
    (void)out;
  }
  virtual void collect_state(const std::string& prefix,
                             std::vector<StateRef>& out) {
    (void)prefix;
    (void)out;
  }
  /// Layers that act as representation tap points for analysis.
  virtual bool is_tap() const { return false; }
  virtual std::string kind() const = 0;
};

using LayerPtr = std::unique_ptr<Layer>;

// --------------------------------------------------------------------------

class Conv2d : public Layer {
 public:
  /// Symmetric padding.
  Conv2d(int cin, int cout, int kh, int kw, int stride = 1, int pad = 0,
         bool bias = false);
  /// Per-side padding (top, bottom, left, right) for SAME-style even
  /// kernels.
  Conv2d(int cin, int cout, int kh, int kw, int stride, int pt, int pb,
         int pl, int pr, bool bias);

  Tensor forward(const Tensor& x, bool train) override;
  Tensor backward(const Tensor& dy) override;
  void collect_params(const std::string& prefix,
                      std::vector<ParamRef>& out) override;
  std::string kind() const override { return "conv"; }

  void init(rng::Stream& rs);  // He normal, fan-out mode

  Tensor weight;  // [cout, cin, kh, kw]
  Tensor bias;    // [cout,1,1,1] when enabled
  Tensor dweight;
  Tensor dbias;

 private:
  int cin_, cout_, kh_, kw_, stride_, pt_, pb_, pl_, pr_;
  bool has_bias_;
  Tensor x_;  // cached input
};

class Linear : public Layer {
 public:
  Linear(int in, int out, bool zero_bias_init = true);

  Tensor forward(const Tensor& x, bool train) override;
  Tensor backward(const Tensor& dy) override;
  void collect_params(const std::string& prefix,
                      std::vector<ParamRef>& out) override;
  std::string kind() const override { return "linear"; }

  void init(rng::Stream& rs);

  Tensor weight;  // [out, in, 1, 1]
  Tensor bias;    // [out, 1, 1, 1]
  Tensor dweight;
  Tensor dbias;

 private:
  int in_, out_;
  Tensor x_;
};

class BatchNorm2d : public Layer {
 public:
  explicit BatchNorm2d(int channels, double momentum = 0.1,
                       double eps = 1e-5);

  Tensor forward(const Tensor& x, bool train) override;
  Tensor backward(const Tensor& dy) override;
  void collect_params(const std::string& prefix,
                      std::vector<ParamRef>& out) override;
  void collect_state(const std::string& prefix,
                     std::vector<StateRef>& out) override;
  std::string kind() const override { return "bn"; }

  Tensor gamma, beta, dgamma, dbeta;
  Tensor running_mean, running_var;

 private:
  int c_;
  double momentum_, eps_;
  // train-mode cache
  Tensor x_;
  std::vector<float> mean_, inv_std_;
  bool last_train_ = false;
};

class GroupNorm : public Layer {
 public:
  GroupNorm(int groups, int channels, double eps = 1e-5);

  Tensor forward(const Tensor& x, bool train) override;
  Tensor backward(const Tensor& dy) override;
  void collect_params(const std::string& prefix,
                      std::vector<ParamRef>& out) override;
  std::string kind() const override { return "gn"; }

  Tensor gamma, beta, dgamma, dbeta;

 private:
  int groups_, c_;
  double eps_;
  Tensor x_;
  std::vector<float> mean_, inv_std_;  // per (n, group)
};

class ReLU : public Layer {
 public:
  Tensor forward(const Tensor& x, bool train) override;
  Tensor backward(const Tensor& dy) override;
  std::string kind() const override { return "relu"; }

 private:
  std::vector<std::uint8_t> mask_;
  std::array<int, 4> shape_{};
};

/// k×k max pooling with stride k and ceil-mode output size; windows are
/// clipped at the lower/right borders.
class MaxPool2d : public Layer {
 public:
  explicit MaxPool2d(int k = 2, int stride = 2);
  Tensor forward(const Tensor& x, bool train) override;
  Tensor backward(const Tensor& dy) override;
  std::string kind() const override { return "maxpool"; }

 private:
  int k_, stride_;
  std::array<int, 4> in_shape_{};
  std::vector<std::int32_t> argmax_;
};

class GlobalAvgPool : public Layer {
 public:
  Tensor forward(const Tensor& x, bool train) override;
  Tensor backward(const Tensor& dy) override;
  bool is_tap() const override { return true; }
  std::string kind() const override { return "gap"; }

 private:
  std::array<int, 4> in_shape_{};
};

class GlobalMaxPool : public Layer {
 public:
  Tensor forward(const Tensor& x, bool train) override;
  Tensor backward(const Tensor& dy) override;
  bool is_tap() const override { return true; }
  std::string kind() const override { return "gmp"; }

 private:
  std::array<int, 4> in_shape_{};
  std::vector<std::int32_t> argmax_;
};

/// Channel dropout (whole feature maps), scaled by 1/(1-p) at train time.
class Dropout2d : public Layer {
 public:
  Dropout2d(double p, std::uint64_t seed);
  Tensor forward(const Tensor& x, bool train) override;
  Tensor backward(const Tensor& dy) override;
  std::string kind() const override { return "dropout2d"; }

 private:
  double p_;
  rng::Stream rs_;
  std::vector<std::uint8_t> keep_;  // per (n, c)
  std::array<int, 4> shape_{};
  bool active_ = false;
};

class Sequential : public Layer {
 public:
  Sequential() = default;
  void add(LayerPtr layer) { layers_.push_back(std::move(layer)); }
  std::size_t size() const { return layers_.size(); }
  Layer* at(std::size_t i) { return layers_[i].get(); }

  Tensor forward(const Tensor& x, bool train) override;
  Tensor backward(const Tensor& dy) override;
  void collect_params(const std::string& prefix,
                      std::vector<ParamRef>& out) override;
  void collect_state(const std::string& prefix,
                     std::vector<StateRef>& out) override;
  std::string kind() const override { return "seq"; }

  /// Inference pass that records the output of every tap layer.
  Tensor forward_taps(const Tensor& x,
                      std::vector<std::pair<std::string, Tensor>>& taps,
                      const std::string& prefix = "") const;

 private:
  std::vector<LayerPtr> layers_;
};

/// Post-activation residual block (classic CIFAR ResNet):
///   y = relu(bn2(conv2(relu(bn1(conv1(x))))) + shortcut(x))
/// with an optional projection shortcut (1×1 conv + BN).
class BasicBlock : public Layer {
 public:
  BasicBlock(int cin, int cout, int stride, std::uint64_t init_seed);

  Tensor forward(const Tensor& x, bool train) override;
  Tensor backward(const Tensor& dy) override;
  void collect_params(const std::string& prefix,
                      std::vector<ParamRef>& out) override;
  void collect_state(const std::string& prefix,
                     std::vector<StateRef>& out) override;
  bool is_tap() const override { return true; }
  std::string kind() const override { return "basicblock"; }

 private:
  bool project_;
  Conv2d conv1_, conv2_;
  BatchNorm2d bn1_, bn2_;
  std::unique_ptr<Conv2d> short_conv_;
  std::unique_ptr<BatchNorm2d> short_bn_;
  ReLU relu1_;
  Tensor x_, sum_;  // caches
};

/// Pre-activation wide-residual block:
///   a = relu(bn1(x)); out = conv2(relu(bn2(conv1(a))))
///   y = out + (identity ? x : conv_short(a))
class PreActBlock : public Layer {
 public:
  PreActBlock(int cin, int cout, int stride, std::uint64_t init_seed);

  Tensor forward(const Tensor& x, bool train) override;
  Tensor backward(const Tensor& dy) override;
  void collect_params(const std::string& prefix,
                      std::vector<ParamRef>& out) override;
  void collect_state(const std::string& prefix,
                     std::vector<StateRef>& out) override;
  bool is_tap() const override { return true; }
  std::string kind() const override { return "preactblock"; }

 private:
  bool equal_in_out_;
  BatchNorm2d bn1_, bn2_;
  ReLU relu1_, relu2_;
  Conv2d conv1_, conv2_;
  std::unique_ptr<Conv2d> short_conv_;
  Tensor x_;
};

/// Audio block: two parallel kernel-4 convolutions, one along time
/// (4×1) and one along frequency (1×4), concatenated and fused with a
/// 1×1 convolution, then group-normalized and rectified.
class AudioBlock : public Layer {
 public:
  AudioBlock(int cin, int cout, std::uint64_t init_seed);

  Tensor forward(const Tensor& x, bool train) override;
  Tensor backward(const Tensor& dy) override;
  void collect_params(const std::string& prefix,
                      std::vector<ParamRef>& out) override;
  std::string kind() const override { return "audioblock"; }
  bool is_tap() const override { return true; }

 private:
  Conv2d conv_time_, conv_freq_, fuse_;
  GroupNorm gn_;
  ReLU relu_;
  int cout_;
};

}  // namespace onedatum::nn
