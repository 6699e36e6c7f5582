// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "onedatum/audioforge/audioforge.hpp"
#include "onedatum/data/datasets.hpp"
#include "onedatum/distillery/losses.hpp"
#include "onedatum/distillery/mix.hpp"
#include "onedatum/nn/model.hpp"
#include "onedatum/patchforge/patchforge.hpp"

namespace onedatum::distillery {

enum class MixKind { kNone, kMixup, kCutmix };
MixKind mix_kind_from_name(const std::string& name);
const char* mix_kind_name(MixKind kind);

/// Everything that defines a distillation run. Defaults are the
/// small-scale recipe (Adam, lr 1e-3, batch 512, fixed schedule,
/// temperature 8); large_scale() switches to AdamW lr 0.01, weight
/// decay 1e-4, cosine schedule, cutmix alpha = beta = 1.
struct DistillConfig {
  double temperature = 8.0;
  LossKind loss = LossKind::kKl;
  SignalMode signal = SignalMode::kFull;
  int top_k = 5;
  bool topk_renorm = true;  // fixed choice, recorded in run manifests
  MixKind mix = MixKind::kNone;
  double mix_alpha = 0.25;
  double mix_beta = 0.25;
  bool standard_aug = true;  // random flip + padded random crop (images)

  std::string optimizer = "adam";  // adam | adamw | sgd
  double lr = 1e-3;
  double weight_decay = 0.0;
  double momentum = 0.9;
  bool nesterov = false;
  std::string schedule = "fixed";  // fixed | cosine
  int epochs = 30;
  int batch_size = 512;
  std::uint64_t seed = 0;
  bool track_per_class = false;

  void validate() const;
  static DistillConfig small_scale();
  static DistillConfig large_scale();
};

struct EpochMetrics {
  int epoch = 0;
  double train_loss = 0.0;
  double val_top1 = 0.0;
  double lr = 0.0;
  double wall_seconds = 0.0;
  std::vector<double> per_class;  // empty unless tracked

  std::string to_json() const;
  static EpochMetrics from_json(const std::string& line);
};

struct TrainResult {
  std::vector<EpochMetrics> history;
  double best_top1 = 0.0;
  int best_epoch = -1;
  std::string teacher_hash_before;
  std::string teacher_hash_after;
  double final_train_loss = 0.0;
};

struct DistillHooks {
  /// Invoked after every optimizer step (mask re-application during
  /// compression finetuning).
  std::function<void(nn::Model&)> post_step;
  /// Invoked with the exact tensor that both teacher and student
  /// consume in a step.
  std::function<void(const nn::Tensor&)> on_batch;
};

/// Trains `student` to match the frozen `teacher` on a patch dataset;
/// evaluates on `eval_set` each epoch. If `run_dir` is non-empty, writes
/// metrics.log and checkpoints/{last,best}.odck there and resumes from
/// last.odck when present.
TrainResult distill(nn::Model& teacher, nn::Model& student,
                    const patchforge::PatchDataset& data,
                    const data::LabeledImages& eval_set,
                    const DistillConfig& cfg, const std::string& run_dir = "",
                    const DistillHooks& hooks = {});

/// Audio variant: 1 s training views of the 2 s clips are turned into
/// standardized log-Mel inputs on the fly. Cutmix is rejected (inputs
/// are not square); mixup operates on the spectrogram batch.
TrainResult distill_audio(nn::Model& teacher, nn::Model& student,
                          const audioforge::ClipDataset& data,
                          const data::LabeledClips& eval_set,
                          const DistillConfig& cfg,
                          const std::string& run_dir = "",
                          const DistillHooks& hooks = {});

// --- supervised teacher training -------------------------------------------

struct SupervisedConfig {
  std::string optimizer = "adam";
  double lr = 1e-3;
  double weight_decay = 0.0;
  double momentum = 0.9;
  bool nesterov = false;
  std::string schedule = "fixed";  // fixed | cosine | multistep
  std::vector<double> lr_values;            // multistep
  std::vector<std::int64_t> lr_boundaries;  // multistep
  int epochs = 30;
  int batch_size = 128;
  int cutout = 16;  // 0 disables
  std::uint64_t seed = 0;

  void validate() const;
};

TrainResult train_supervised(nn::Model& model,
                             const data::LabeledImages& train_set,
                             const data::LabeledImages& eval_set,
                             const SupervisedConfig& cfg,
                             const std::string& run_dir = "");

TrainResult train_supervised_audio(nn::Model& model,
                                   const data::LabeledClips& train_set,
                                   const data::LabeledClips& eval_set,
                                   const SupervisedConfig& cfg,
                                   const std::string& run_dir = "");

// --- evaluation helpers ------------------------------------------------------

struct EvalResult {
  double top1 = 0.0;                // percent
  std::vector<double> per_class;    // percent per class
};

EvalResult evaluate_images(nn::Model& model, const data::LabeledImages& set,
                           int batch_size = 256);
EvalResult evaluate_clips(nn::Model& model, const data::LabeledClips& set);

/// Converts one HWC u8 record to the CHW float input convention shared
/// by every image model in this project: u8 -> [-1, 1].
void record_to_input(std::span<const std::uint8_t> record, int height,
                     int width, int channels, float* dst);

/// Per-spectrogram standardization used for all audio model inputs.
nn::Tensor logmel_to_input(const audioforge::Spectrogram& spec);

}  // namespace onedatum::distillery
