// SPDX-License-Identifier: Apache-2.0
#include "onedatum/nn/optim.hpp"

#include <cmath>

#include "onedatum/core/error.hpp"

namespace onedatum::nn {

Schedule Schedule::fixed(double lr) {
  Schedule s;
  s.kind = Kind::kFixed;
  s.base_lr = lr;
  return s;
}

Schedule Schedule::cosine(double lr, std::int64_t total_steps) {
  if (total_steps <= 0) throw ConfigError("cosine schedule needs a horizon");
  Schedule s;
  s.kind = Kind::kCosine;
  s.base_lr = lr;
  s.total_steps = total_steps;
  return s;
}

Schedule Schedule::multistep(std::vector<double> values,
                             std::vector<std::int64_t> boundaries) {
  if (values.size() != boundaries.size() + 1) {
    throw ConfigError("multistep schedule needs one more value than boundary");
  }
  Schedule s;
  s.kind = Kind::kMultiStep;
  s.base_lr = values.front();
  s.values = std::move(values);
  s.boundaries = std::move(boundaries);
  return s;
}

double Schedule::lr_at(std::int64_t step) const {
  switch (kind) {
    case Kind::kFixed:
      return base_lr;
    case Kind::kCosine: {
      double frac = std::min(1.0, static_cast<double>(step) /
                                      static_cast<double>(total_steps));
      return base_lr * 0.5 * (1.0 + std::cos(3.14159265358979323846 * frac));
    }
    case Kind::kMultiStep: {
      std::size_t i = 0;
      while (i < boundaries.size() && step >= boundaries[i]) ++i;
      return values[i];
    }
  }
  return base_lr;
}

Sgd::Sgd(std::vector<ParamRef> params, double momentum, bool nesterov,
         double weight_decay)
    : Optimizer(std::move(params)), momentum_(momentum),
      weight_decay_(weight_decay), nesterov_(nesterov) {
  velocity_.reserve(params_.size());
  for (const auto& p : params_) {
    velocity_.push_back(Tensor::zeros_like(*p.value));
  }
}

void Sgd::step(double lr) {
  ++t_;
  for (std::size_t i = 0; i < params_.size(); ++i) {
    auto& p = params_[i];
    auto& vel = velocity_[i];
    for (std::size_t j = 0; j < p.value->data.size(); ++j) {
      float g = p.grad->data[j];
      if (p.decay && weight_decay_ > 0.0) {
        g += static_cast<float>(weight_decay_) * p.value->data[j];
      }
      float v = static_cast<float>(momentum_) * vel.data[j] + g;
      vel.data[j] = v;
      float update = nesterov_ ? g + static_cast<float>(momentum_) * v : v;
      p.value->data[j] -= static_cast<float>(lr) * update;
    }
  }
}

void Sgd::collect_state(std::vector<std::pair<std::string, Tensor*>>& out) {
  for (std::size_t i = 0; i < params_.size(); ++i) {
    out.emplace_back("opt." + params_[i].name + ".v", &velocity_[i]);
  }
}

Adam::Adam(std::vector<ParamRef> params, double beta1, double beta2,
           double eps, double weight_decay, bool decoupled)
    : Optimizer(std::move(params)), beta1_(beta1), beta2_(beta2), eps_(eps),
      weight_decay_(weight_decay), decoupled_(decoupled) {
  m_.reserve(params_.size());
  v_.reserve(params_.size());
  for (const auto& p : params_) {
    m_.push_back(Tensor::zeros_like(*p.value));
    v_.push_back(Tensor::zeros_like(*p.value));
  }
}

void Adam::step(double lr) {
  ++t_;
  double bc1 = 1.0 - std::pow(beta1_, static_cast<double>(t_));
  double bc2 = 1.0 - std::pow(beta2_, static_cast<double>(t_));
  for (std::size_t i = 0; i < params_.size(); ++i) {
    auto& p = params_[i];
    for (std::size_t j = 0; j < p.value->data.size(); ++j) {
      float g = p.grad->data[j];
      if (!decoupled_ && p.decay && weight_decay_ > 0.0) {
        g += static_cast<float>(weight_decay_) * p.value->data[j];
      }
      float m = m_[i].data[j] =
          static_cast<float>(beta1_) * m_[i].data[j] +
          static_cast<float>(1.0 - beta1_) * g;
      float v = v_[i].data[j] =
          static_cast<float>(beta2_) * v_[i].data[j] +
          static_cast<float>(1.0 - beta2_) * g * g;
      double mhat = m / bc1;
      double vhat = v / bc2;
      double update = mhat / (std::sqrt(vhat) + eps_);
      if (decoupled_ && p.decay && weight_decay_ > 0.0) {
        update += weight_decay_ * p.value->data[j];
      }
      p.value->data[j] -= static_cast<float>(lr * update);
    }
  }
}

void Adam::collect_state(std::vector<std::pair<std::string, Tensor*>>& out) {
  for (std::size_t i = 0; i < params_.size(); ++i) {
    out.emplace_back("opt." + params_[i].name + ".m", &m_[i]);
    out.emplace_back("opt." + params_[i].name + ".v", &v_[i]);
  }
}

}  // namespace onedatum::nn
