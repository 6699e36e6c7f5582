// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <span>
#include <string>
#include <vector>

#include "onedatum/core/error.hpp"
#include "onedatum/nn/tensor.hpp"

namespace onedatum::distillery {

/// Temperature-flattened probabilities softmax(l / tau), max-subtracted.
std::vector<double> soften(std::span<const double> logits, double tau);
std::vector<float> soften(std::span<const float> logits, double tau);

/// The distillation objective: KL(p_t || p_s) with both sides softened
/// at the same temperature,
///     sum_c  -p^t_c log p^s_c  +  p^t_c log p^t_c.
/// No tau^2 rescaling is applied: the objective is used alone, without a
/// supervised cross-entropy term, so there is no relative weighting to
/// preserve (this intentionally differs from the classic KD recipe).
double kd_loss(std::span<const double> teacher_logits,
               std::span<const double> student_logits, double tau);

/// Analytic gradient of kd_loss w.r.t. the student logits:
///     (p^s - p^t) / tau.
std::vector<double> kd_loss_grad(std::span<const double> teacher_logits,
                                 std::span<const double> student_logits,
                                 double tau);

enum class RegressionKind { kL1, kL2 };

/// Mean absolute / mean squared difference of logits / tau.
double logit_regression_loss(std::span<const double> teacher_logits,
                             std::span<const double> student_logits,
                             double tau, RegressionKind kind);

// --- teacher-signal fidelities --------------------------------------------

enum class SignalMode { kFull, kTopK, kHard };

SignalMode signal_mode_from_name(const std::string& name);  // full|top5|topK|hard
const char* signal_mode_name(SignalMode mode);

/// Teacher supervision at one of three fidelities. `probs` always lies
/// on the simplex; top-k keeps at most k nonzeros, hard is one-hot.
struct TeacherSignal {
  SignalMode mode = SignalMode::kFull;
  std::vector<float> probs;
};

/// full -> identity; top_k -> retain the k largest and renormalize
/// (ties broken toward the lower class index); hard -> one-hot argmax.
TeacherSignal degrade_signal(std::span<const float> full_probs,
                             SignalMode mode, int k = 5);

// --- batched training path --------------------------------------------------

enum class LossKind { kKl, kL1, kL2 };

LossKind loss_kind_from_name(const std::string& name);
const char* loss_kind_name(LossKind kind);

/// Per-batch loss and gradient w.r.t. student logits (already averaged
/// over the batch). For KL the teacher side is softened then optionally
/// degraded per `signal`; L1/L2 regress raw scaled logits and therefore
/// require the full signal.
struct BatchLoss {
  double value = 0.0;
  nn::Tensor dstudent;  // [N, C, 1, 1]
};

BatchLoss batch_distill_loss(const nn::Tensor& teacher_logits,
                             const nn::Tensor& student_logits, double tau,
                             LossKind kind, SignalMode signal, int top_k);

/// Supervised cross entropy (softmax), mean over the batch, with
/// gradient w.r.t. logits.
BatchLoss batch_cross_entropy(const nn::Tensor& logits,
                              std::span<const std::int32_t> labels);

}  // namespace onedatum::distillery
