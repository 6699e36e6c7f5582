// SPDX-License-Identifier: Apache-2.0
#include "onedatum/distillery/losses.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

namespace onedatum::distillery {

namespace {

template <typename T>
std::vector<T> soften_impl(std::span<const T> logits, double tau) {
  if (tau <= 0.0) throw ConfigError("temperature must be positive");
  if (logits.empty()) throw ConfigError("soften: empty logits");
  T mx = *std::max_element(logits.begin(), logits.end());
  std::vector<T> out(logits.size());
  double sum = 0.0;
  for (std::size_t i = 0; i < logits.size(); ++i) {
    double e = std::exp((static_cast<double>(logits[i]) - mx) / tau);
    out[i] = static_cast<T>(e);
    sum += e;
  }
  for (auto& v : out) v = static_cast<T>(v / sum);
  return out;
}

}  // namespace

std::vector<double> soften(std::span<const double> logits, double tau) {
  return soften_impl(logits, tau);
}

std::vector<float> soften(std::span<const float> logits, double tau) {
  return soften_impl(logits, tau);
}

double kd_loss(std::span<const double> teacher_logits,
               std::span<const double> student_logits, double tau) {
  if (teacher_logits.size() != student_logits.size()) {
    throw ConfigError("kd_loss: logit length mismatch");
  }
  auto pt = soften(teacher_logits, tau);
  auto ps = soften(student_logits, tau);
  double loss = 0.0;
  for (std::size_t c = 0; c < pt.size(); ++c) {
    if (pt[c] > 0.0) loss += pt[c] * (std::log(pt[c]) - std::log(ps[c]));
  }
  return loss;
}

std::vector<double> kd_loss_grad(std::span<const double> teacher_logits,
                                 std::span<const double> student_logits,
                                 double tau) {
  if (teacher_logits.size() != student_logits.size()) {
    throw ConfigError("kd_loss: logit length mismatch");
  }
  auto pt = soften(teacher_logits, tau);
  auto ps = soften(student_logits, tau);
  std::vector<double> g(pt.size());
  for (std::size_t c = 0; c < pt.size(); ++c) g[c] = (ps[c] - pt[c]) / tau;
  return g;
}

double logit_regression_loss(std::span<const double> teacher_logits,
                             std::span<const double> student_logits,
                             double tau, RegressionKind kind) {
  if (teacher_logits.size() != student_logits.size()) {
    throw ConfigError("logit regression: length mismatch");
  }
  if (tau <= 0.0) throw ConfigError("temperature must be positive");
  double acc = 0.0;
  for (std::size_t c = 0; c < teacher_logits.size(); ++c) {
    double d = (teacher_logits[c] - student_logits[c]) / tau;
    acc += kind == RegressionKind::kL1 ? std::abs(d) : d * d;
  }
  return acc / static_cast<double>(teacher_logits.size());
}

SignalMode signal_mode_from_name(const std::string& name) {
  if (name == "full") return SignalMode::kFull;
  if (name == "hard") return SignalMode::kHard;
  if (name.rfind("top", 0) == 0) return SignalMode::kTopK;
  throw ConfigError("unknown signal mode: " + name);
}

const char* signal_mode_name(SignalMode mode) {
  switch (mode) {
    case SignalMode::kFull: return "full";
    case SignalMode::kTopK: return "top_k";
    case SignalMode::kHard: return "hard";
  }
  return "?";
}

TeacherSignal degrade_signal(std::span<const float> full_probs,
                             SignalMode mode, int k) {
  TeacherSignal out;
  out.mode = mode;
  out.probs.assign(full_probs.begin(), full_probs.end());
  const int C = static_cast<int>(full_probs.size());
  if (mode == SignalMode::kFull) return out;
  if (mode == SignalMode::kHard) {
    int best = 0;
    for (int c = 1; c < C; ++c) {
      if (full_probs[c] > full_probs[best]) best = c;
    }
    std::fill(out.probs.begin(), out.probs.end(), 0.0f);
    out.probs[best] = 1.0f;
    return out;
  }
  if (k < 1 || k > C) {
    throw ConfigError("top_k: k must be in [1, C]");
  }
  std::vector<int> order(full_probs.size());
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(), [&](int a, int b) {
    return full_probs[a] > full_probs[b];  // stable: ties keep lower index
  });
  std::fill(out.probs.begin(), out.probs.end(), 0.0f);
  double mass = 0.0;
  for (int i = 0; i < k; ++i) mass += full_probs[order[i]];
  for (int i = 0; i < k; ++i) {
    out.probs[order[i]] =
        mass > 0.0 ? static_cast<float>(full_probs[order[i]] / mass) : 0.0f;
  }
  return out;
}

LossKind loss_kind_from_name(const std::string& name) {
  if (name == "kl") return LossKind::kKl;
  if (name == "l1") return LossKind::kL1;
  if (name == "l2") return LossKind::kL2;
  throw ConfigError("unknown loss kind: " + name);
}

const char* loss_kind_name(LossKind kind) {
  switch (kind) {
    case LossKind::kKl: return "kl";
    case LossKind::kL1: return "l1";
    case LossKind::kL2: return "l2";
  }
  return "?";
}

BatchLoss batch_distill_loss(const nn::Tensor& teacher_logits,
                             const nn::Tensor& student_logits, double tau,
                             LossKind kind, SignalMode signal, int top_k) {
  if (!teacher_logits.same_shape(student_logits)) {
    throw RuntimeFailure("teacher/student logit shapes differ (head width?)");
  }
  if (tau <= 0.0) throw ConfigError("temperature must be positive");
  if (kind != LossKind::kKl && signal != SignalMode::kFull) {
    throw ConfigError("l1/l2 losses operate on raw logits and require the "
                      "full teacher signal");
  }
  const int N = teacher_logits.n();
  const int C = teacher_logits.c();
  BatchLoss out;
  out.dstudent = nn::Tensor(N, C, 1, 1);
  double total = 0.0;

  for (int n = 0; n < N; ++n) {
    std::span<const float> t(teacher_logits.sample(n), C);
    std::span<const float> s(student_logits.sample(n), C);
    float* g = out.dstudent.sample(n);
    if (kind == LossKind::kKl) {
      auto pt_full = soften(t, tau);
      std::vector<float> pt = pt_full;
      if (signal != SignalMode::kFull) {
        pt = degrade_signal(pt_full, signal, top_k).probs;
      }
      auto ps = soften(s, tau);
      for (int c = 0; c < C; ++c) {
        if (pt[c] > 0.0f) {
          total += pt[c] * (std::log(static_cast<double>(pt[c])) -
                            std::log(static_cast<double>(ps[c])));
        }
        g[c] = static_cast<float>((ps[c] - pt[c]) / (tau * N));
      }
    } else if (kind == LossKind::kL1) {
      for (int c = 0; c < C; ++c) {
        double d = (t[c] - s[c]) / tau;
        total += std::abs(d) / C;
        double sign = d > 0.0 ? 1.0 : (d < 0.0 ? -1.0 : 0.0);
        g[c] = static_cast<float>(-sign / (tau * C * N));
      }
    } else {
      for (int c = 0; c < C; ++c) {
        double d = (t[c] - s[c]) / tau;
        total += d * d / C;
        g[c] = static_cast<float>(-2.0 * d / (tau * C * N));
      }
    }
  }
  out.value = total / N;
  return out;
}

BatchLoss batch_cross_entropy(const nn::Tensor& logits,
                              std::span<const std::int32_t> labels) {
  const int N = logits.n();
  const int C = logits.c();
  if (static_cast<int>(labels.size()) != N) {
    throw RuntimeFailure("label count does not match batch");
  }
  BatchLoss out;
  out.dstudent = nn::Tensor(N, C, 1, 1);
  double total = 0.0;
  for (int n = 0; n < N; ++n) {
    std::span<const float> l(logits.sample(n), C);
    auto p = soften(l, 1.0);
    int y = labels[n];
    if (y < 0 || y >= C) throw RuntimeFailure("label out of range");
    total += -std::log(std::max(static_cast<double>(p[y]), 1e-12));
    float* g = out.dstudent.sample(n);
    for (int c = 0; c < C; ++c) {
      g[c] = (p[c] - (c == y ? 1.0f : 0.0f)) / static_cast<float>(N);
    }
  }
  out.value = total / N;
  return out;
}

}  // namespace onedatum::distillery
