// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "onedatum/nn/layers.hpp"

namespace onedatum::nn {

/// Piecewise/cosine learning-rate schedules over optimizer steps.
struct Schedule {
  enum class Kind { kFixed, kCosine, kMultiStep };
  Kind kind = Kind::kFixed;
  double base_lr = 1e-3;
  std::int64_t total_steps = 0;             // cosine horizon
  std::vector<std::int64_t> boundaries;     // multistep: value i until boundary i
  std::vector<double> values;               // multistep: boundaries.size() + 1

  static Schedule fixed(double lr);
  static Schedule cosine(double lr, std::int64_t total_steps);
  static Schedule multistep(std::vector<double> values,
                            std::vector<std::int64_t> boundaries);

  double lr_at(std::int64_t step) const;
};

/// Optimizers update the referenced parameters in place. Weight decay
/// applies only to decay-flagged parameters: `l2_into_grad` adds
/// wd * w to the gradient (classic L2), otherwise decay is decoupled.
class Optimizer {
 public:
  virtual ~Optimizer() = default;
  explicit Optimizer(std::vector<ParamRef> params)
      : params_(std::move(params)) {}

  virtual void step(double lr) = 0;
  virtual std::string name() const = 0;

  /// Internal buffers for checkpoint/resume, keyed by parameter name.
  virtual void collect_state(
      std::vector<std::pair<std::string, Tensor*>>& out) = 0;

  std::int64_t steps_taken() const { return t_; }
  void set_steps_taken(std::int64_t t) { t_ = t; }

 protected:
  std::vector<ParamRef> params_;
  std::int64_t t_ = 0;
};

class Sgd : public Optimizer {
 public:
  Sgd(std::vector<ParamRef> params, double momentum, bool nesterov,
      double weight_decay);
  void step(double lr) override;
  std::string name() const override { return "sgd"; }
  void collect_state(
      std::vector<std::pair<std::string, Tensor*>>& out) override;

 private:
  double momentum_, weight_decay_;
  bool nesterov_;
  std::vector<Tensor> velocity_;
};

class Adam : public Optimizer {
 public:
  /// decoupled = false: classic Adam with L2 folded into the gradient.
  /// decoupled = true: AdamW.
  Adam(std::vector<ParamRef> params, double beta1, double beta2, double eps,
       double weight_decay, bool decoupled);
  void step(double lr) override;
  std::string name() const override { return decoupled_ ? "adamw" : "adam"; }
  void collect_state(
      std::vector<std::pair<std::string, Tensor*>>& out) override;

 private:
  double beta1_, beta2_, eps_, weight_decay_;
  bool decoupled_;
  std::vector<Tensor> m_, v_;
};

}  // namespace onedatum::nn
