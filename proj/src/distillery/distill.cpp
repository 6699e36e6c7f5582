// SPDX-License-Identifier: Apache-2.0
#include "onedatum/distillery/distill.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <numeric>

#include <nlohmann/json.hpp>

#include "onedatum/modelzoo/modelzoo.hpp"
#include "onedatum/nn/checkpoint.hpp"
#include "onedatum/nn/optim.hpp"

namespace fs = std::filesystem;
using json = nlohmann::json;

namespace onedatum::distillery {

MixKind mix_kind_from_name(const std::string& name) {
  if (name == "none") return MixKind::kNone;
  if (name == "mixup") return MixKind::kMixup;
  if (name == "cutmix") return MixKind::kCutmix;
  throw ConfigError("unknown mix kind: " + name);
}

const char* mix_kind_name(MixKind kind) {
  switch (kind) {
    case MixKind::kNone: return "none";
    case MixKind::kMixup: return "mixup";
    case MixKind::kCutmix: return "cutmix";
  }
  return "?";
}

void DistillConfig::validate() const {
  if (temperature <= 0.0) throw ConfigError("temperature must be positive");
  if (top_k < 1) throw ConfigError("top_k must be at least 1");
  if (mix == MixKind::kCutmix && (mix_alpha <= 0.0 || mix_beta <= 0.0)) {
    throw ConfigError("cutmix needs positive alpha and beta");
  }
  if (epochs < 0 || batch_size < 1) {
    throw ConfigError("invalid epochs or batch size");
  }
  if (optimizer != "adam" && optimizer != "adamw" && optimizer != "sgd") {
    throw ConfigError("unknown optimizer: " + optimizer);
  }
  if (schedule != "fixed" && schedule != "cosine") {
    throw ConfigError("unknown schedule: " + schedule);
  }
}

DistillConfig DistillConfig::small_scale() { return DistillConfig{}; }

DistillConfig DistillConfig::large_scale() {
  DistillConfig cfg;
  cfg.optimizer = "adamw";
  cfg.lr = 0.01;
  cfg.weight_decay = 1e-4;
  cfg.schedule = "cosine";
  cfg.mix = MixKind::kCutmix;
  cfg.mix_alpha = 1.0;
  cfg.mix_beta = 1.0;
  return cfg;
}

void SupervisedConfig::validate() const {
  if (epochs < 0 || batch_size < 1) {
    throw ConfigError("invalid epochs or batch size");
  }
  if (optimizer != "adam" && optimizer != "adamw" && optimizer != "sgd") {
    throw ConfigError("unknown optimizer: " + optimizer);
  }
  if (schedule == "multistep" &&
      lr_values.size() != lr_boundaries.size() + 1) {
    throw ConfigError("multistep schedule needs n+1 values for n boundaries");
  }
}

std::string EpochMetrics::to_json() const {
  json j{{"epoch", epoch},
         {"train_loss", train_loss},
         {"val_top1", val_top1},
         {"lr", lr},
         {"wall_seconds", wall_seconds}};
  if (!per_class.empty()) j["per_class"] = per_class;
  return j.dump();
}

EpochMetrics EpochMetrics::from_json(const std::string& line) {
  json j = json::parse(line);
  EpochMetrics m;
  m.epoch = j.at("epoch").get<int>();
  m.train_loss = j.at("train_loss").get<double>();
  m.val_top1 = j.at("val_top1").get<double>();
  m.lr = j.at("lr").get<double>();
  m.wall_seconds = j.at("wall_seconds").get<double>();
  if (j.contains("per_class")) {
    m.per_class = j.at("per_class").get<std::vector<double>>();
  }
  return m;
}

void record_to_input(std::span<const std::uint8_t> record, int height,
                     int width, int channels, float* dst) {
  for (int c = 0; c < channels; ++c) {
    for (int y = 0; y < height; ++y) {
      for (int x = 0; x < width; ++x) {
        dst[(static_cast<std::size_t>(c) * height + y) * width + x] =
            static_cast<float>(
                record[(static_cast<std::size_t>(y) * width + x) * channels +
                       c]) *
                (2.0f / 255.0f) -
            1.0f;
      }
    }
  }
}

nn::Tensor logmel_to_input(const audioforge::Spectrogram& spec) {
  nn::Tensor t(1, 1, spec.frames, spec.bins);
  double mean = 0.0, sq = 0.0;
  for (float v : spec.data) {
    mean += v;
    sq += static_cast<double>(v) * v;
  }
  mean /= static_cast<double>(spec.data.size());
  double var = std::max(sq / static_cast<double>(spec.data.size()) -
                            mean * mean,
                        0.0);
  double inv = 1.0 / std::sqrt(var + 1e-6);
  for (std::size_t i = 0; i < spec.data.size(); ++i) {
    t.data[i] = static_cast<float>((spec.data[i] - mean) * inv);
  }
  return t;
}

namespace {

// Image record -> HWC u8 bytes -> CHW float in [-1, 1], with optional
// train-time flip / padded random crop / cutout. Draw order per sample:
// flip coin, crop dy, crop dx, (cutout cy, cutout cx).
void assemble_image(std::span<const std::uint8_t> rec, int H, int W, int C,
                    float* dst, rng::Stream* aug_rs, int cutout) {
  constexpr int kPad = 4;
  bool flip = false;
  int dy = 0, dx = 0;
  if (aug_rs != nullptr) {
    flip = aug_rs->bernoulli(0.5);
    dy = static_cast<int>(aug_rs->uniform_int(2 * kPad + 1)) - kPad;
    dx = static_cast<int>(aug_rs->uniform_int(2 * kPad + 1)) - kPad;
  }
  int cy = -1, cx = -1;
  if (aug_rs != nullptr && cutout > 0) {
    cy = static_cast<int>(aug_rs->uniform_int(static_cast<std::uint32_t>(H)));
    cx = static_cast<int>(aug_rs->uniform_int(static_cast<std::uint32_t>(W)));
  }
  for (int c = 0; c < C; ++c) {
    for (int y = 0; y < H; ++y) {
      int sy = y + dy;
      for (int x = 0; x < W; ++x) {
        int sx = flip ? (W - 1 - x) + dx : x + dx;
        float v = 0.0f;  // zero padding outside
        if (sy >= 0 && sy < H && sx >= 0 && sx < W) {
          v = static_cast<float>(rec[(static_cast<std::size_t>(sy) * W + sx) *
                                     C + c]) *
                  (2.0f / 255.0f) -
              1.0f;
        }
        if (cy >= 0 && std::abs(y - cy) < cutout / 2 &&
            std::abs(x - cx) < cutout / 2) {
          v = 0.0f;
        }
        dst[(static_cast<std::size_t>(c) * H + y) * W + x] = v;
      }
    }
  }
}

struct RunLog {
  std::string dir;
  std::ofstream metrics;

  explicit RunLog(const std::string& run_dir) : dir(run_dir) {
    if (dir.empty()) return;
    fs::create_directories(fs::path(dir) / "checkpoints");
  }
  /// Discards records past the checkpointed epoch (an interrupt between
  /// the metrics append and the checkpoint write would otherwise leave a
  /// duplicate on resume) and opens the log for appending.
  void open_from_epoch(int resume_epoch) {
    if (dir.empty()) return;
    fs::path path = fs::path(dir) / "metrics.log";
    if (resume_epoch >= 0 && fs::exists(path)) {
      std::ifstream in(path);
      std::string line, kept;
      while (std::getline(in, line)) {
        if (line.empty()) continue;
        if (EpochMetrics::from_json(line).epoch <= resume_epoch) {
          kept += line + "\n";
        }
      }
      in.close();
      std::ofstream rewrite(path, std::ios::trunc);
      rewrite << kept;
    }
    metrics.open(path, std::ios::app);
  }
  void append(const EpochMetrics& m) {
    if (dir.empty()) return;
    metrics << m.to_json() << "\n";
    metrics.flush();
  }
  std::string last_ckpt() const {
    return (fs::path(dir) / "checkpoints" / "last.odck").string();
  }
  std::string best_ckpt() const {
    return (fs::path(dir) / "checkpoints" / "best.odck").string();
  }
};

std::unique_ptr<nn::Optimizer> make_optimizer(const std::string& name,
                                              std::vector<nn::ParamRef> params,
                                              double weight_decay,
                                              double momentum, bool nesterov) {
  if (name == "sgd") {
    return std::make_unique<nn::Sgd>(std::move(params), momentum, nesterov,
                                     weight_decay);
  }
  if (name == "adam") {
    return std::make_unique<nn::Adam>(std::move(params), 0.9, 0.999, 1e-8,
                                      weight_decay, false);
  }
  return std::make_unique<nn::Adam>(std::move(params), 0.9, 0.999, 1e-8,
                                    weight_decay, true);
}

nn::Schedule make_schedule(const std::string& kind, double lr,
                           std::int64_t total_steps,
                           const std::vector<double>& values,
                           const std::vector<std::int64_t>& boundaries) {
  if (kind == "cosine") return nn::Schedule::cosine(lr, total_steps);
  if (kind == "multistep") return nn::Schedule::multistep(values, boundaries);
  return nn::Schedule::fixed(lr);
}

void abort_with_diagnostic(const std::string& run_dir, int epoch,
                           std::int64_t step, double lr, double loss) {
  if (!run_dir.empty()) {
    json j{{"event", "nan_loss"},
           {"epoch", epoch},
           {"step", step},
           {"lr", lr},
           {"loss", std::isnan(loss) ? "nan" : "inf"}};
    std::ofstream os(fs::path(run_dir) / "diagnostic.json");
    os << j.dump(2) << "\n";
  }
  throw RuntimeFailure("training aborted: non-finite loss at epoch " +
                       std::to_string(epoch) + ", step " +
                       std::to_string(step));
}

// Saves student + optimizer state; meta records resume information.
void save_train_ckpt(const std::string& path, nn::Model& model,
                     nn::Optimizer* opt, int epoch, double best_top1,
                     int best_epoch) {
  nn::Checkpoint ck = nn::snapshot_model(
      model, json{{"epoch", epoch},
                  {"best_top1", best_top1},
                  {"best_epoch", best_epoch},
                  {"steps", opt != nullptr ? opt->steps_taken() : 0}});
  if (opt != nullptr) {
    std::vector<std::pair<std::string, nn::Tensor*>> st;
    opt->collect_state(st);
    for (auto& [name, t] : st) ck.tensors.emplace_back(name, *t);
  }
  nn::save_checkpoint(path, ck);
}

// Returns the epoch to resume from (0 when starting fresh).
int try_resume(const RunLog& log, nn::Model& model, nn::Optimizer* opt,
               double& best_top1, int& best_epoch) {
  if (log.dir.empty() || !fs::exists(log.last_ckpt())) return 0;
  nn::Checkpoint ck = nn::load_checkpoint(log.last_ckpt());
  nn::load_into_model(ck, model);
  if (opt != nullptr) {
    std::vector<std::pair<std::string, nn::Tensor*>> st;
    opt->collect_state(st);
    for (auto& [name, t] : st) {
      const nn::Tensor* src = ck.find(name);
      if (src != nullptr && src->shape == t->shape) t->data = src->data;
    }
    opt->set_steps_taken(ck.meta.value("steps", std::int64_t{0}));
  }
  best_top1 = ck.meta.value("best_top1", 0.0);
  best_epoch = ck.meta.value("best_epoch", -1);
  return ck.meta.value("epoch", 0);
}

// One training driver shared by distillation and supervised training,
// over an abstract batch maker and loss.
struct LoopSpec {
  std::int64_t dataset_count = 0;
  int batch_size = 512;
  int epochs = 0;
  std::uint64_t seed = 0;
  std::string run_dir;
  // assemble(indices, epoch_stream) -> model input batch
  std::function<nn::Tensor(std::span<const std::int64_t>, rng::Stream&)>
      assemble;
  // loss(batch, out dstudent) -> loss value; gradient via student model
  std::function<BatchLoss(const nn::Tensor&)> loss;
  std::function<EvalResult()> evaluate;
  nn::Model* student = nullptr;
  nn::Optimizer* optimizer = nullptr;
  nn::Schedule schedule;
  DistillHooks hooks;
  bool track_per_class = false;
};

TrainResult run_loop(LoopSpec& spec) {
  TrainResult result;
  RunLog log(spec.run_dir);
  double best_top1 = 0.0;
  int best_epoch = -1;
  int start_epoch = try_resume(log, *spec.student, spec.optimizer, best_top1,
                               best_epoch);
  log.open_from_epoch(start_epoch);

  std::vector<std::int64_t> order(
      static_cast<std::size_t>(spec.dataset_count));
  std::iota(order.begin(), order.end(), 0);
  double train_loss = 0.0;

  for (int epoch = start_epoch; epoch < spec.epochs; ++epoch) {
    auto t0 = std::chrono::steady_clock::now();
    rng::Stream epoch_rs(rng::derive(spec.seed, 0x45504f43ull + epoch));
    epoch_rs.shuffle(order.begin(), order.end());

    double loss_sum = 0.0;
    std::int64_t loss_batches = 0;
    double lr = spec.schedule.base_lr;
    for (std::int64_t at = 0; at < spec.dataset_count;
         at += spec.batch_size) {
      std::int64_t take =
          std::min<std::int64_t>(spec.batch_size, spec.dataset_count - at);
      if (take < 2) break;  // mix ops need pairs; drop the tail
      std::span<const std::int64_t> idx(order.data() + at,
                                        static_cast<std::size_t>(take));
      nn::Tensor batch = spec.assemble(idx, epoch_rs);
      if (spec.hooks.on_batch) spec.hooks.on_batch(batch);

      BatchLoss bl = spec.loss(batch);
      if (!std::isfinite(bl.value)) {
        abort_with_diagnostic(spec.run_dir, epoch,
                              spec.optimizer->steps_taken(), lr, bl.value);
      }
      loss_sum += bl.value;
      ++loss_batches;

      spec.student->backward(bl.dstudent);
      lr = spec.schedule.lr_at(spec.optimizer->steps_taken());
      spec.optimizer->step(lr);
      if (spec.hooks.post_step) spec.hooks.post_step(*spec.student);
    }
    train_loss = loss_batches > 0 ? loss_sum / loss_batches : 0.0;

    EvalResult ev = spec.evaluate();
    auto t1 = std::chrono::steady_clock::now();
    EpochMetrics m;
    m.epoch = epoch + 1;
    m.train_loss = train_loss;
    m.val_top1 = ev.top1;
    m.lr = lr;
    m.wall_seconds = std::chrono::duration<double>(t1 - t0).count();
    if (spec.track_per_class) m.per_class = ev.per_class;
    result.history.push_back(m);
    log.append(m);

    if (ev.top1 >= best_top1) {
      best_top1 = ev.top1;
      best_epoch = epoch + 1;
      if (!spec.run_dir.empty()) {
        save_train_ckpt(log.best_ckpt(), *spec.student, spec.optimizer,
                        epoch + 1, best_top1, best_epoch);
      }
    }
    if (!spec.run_dir.empty()) {
      save_train_ckpt(log.last_ckpt(), *spec.student, spec.optimizer,
                      epoch + 1, best_top1, best_epoch);
    }
  }
  result.best_top1 = best_top1;
  result.best_epoch = best_epoch;
  result.final_train_loss = train_loss;
  return result;
}

}  // namespace

EvalResult evaluate_images(nn::Model& model, const data::LabeledImages& set,
                           int batch_size) {
  EvalResult res;
  std::vector<std::int64_t> correct(static_cast<std::size_t>(set.num_classes),
                                    0);
  std::vector<std::int64_t> totals(static_cast<std::size_t>(set.num_classes),
                                   0);
  std::int64_t hit = 0;
  for (std::int64_t at = 0; at < set.count(); at += batch_size) {
    std::int64_t take = std::min<std::int64_t>(batch_size, set.count() - at);
    nn::Tensor batch(static_cast<int>(take), set.channels, set.height,
                     set.width);
    for (std::int64_t i = 0; i < take; ++i) {
      assemble_image(set.record(at + i), set.height, set.width, set.channels,
                     batch.sample(static_cast<int>(i)), nullptr, 0);
    }
    nn::Tensor logits = model.forward(batch, false);
    for (std::int64_t i = 0; i < take; ++i) {
      const float* l = logits.sample(static_cast<int>(i));
      int arg = 0;
      for (int c = 1; c < logits.c(); ++c) {
        if (l[c] > l[arg]) arg = c;
      }
      int y = set.labels[static_cast<std::size_t>(at + i)];
      totals[y]++;
      if (arg == y) {
        correct[y]++;
        ++hit;
      }
    }
  }
  res.top1 = 100.0 * static_cast<double>(hit) /
             static_cast<double>(std::max<std::int64_t>(1, set.count()));
  res.per_class.resize(static_cast<std::size_t>(set.num_classes), 0.0);
  for (int c = 0; c < set.num_classes; ++c) {
    res.per_class[c] =
        totals[c] > 0 ? 100.0 * correct[c] / static_cast<double>(totals[c])
                      : 0.0;
  }
  return res;
}

EvalResult evaluate_clips(nn::Model& model, const data::LabeledClips& set) {
  audioforge::SpectrogramConfig scfg;
  audioforge::LogMelExtractor extractor(scfg, set.sample_rate);
  EvalResult res;
  std::vector<std::int64_t> correct(static_cast<std::size_t>(set.num_classes),
                                    0);
  std::vector<std::int64_t> totals(static_cast<std::size_t>(set.num_classes),
                                   0);
  std::int64_t hit = 0;
  auto predict = [&](std::span<const float> seg) {
    nn::Tensor in = logmel_to_input(extractor.compute(seg));
    nn::Tensor logits = model.forward(in, false);
    auto probs = soften(std::span<const float>(logits.data.data(),
                                               logits.data.size()),
                        1.0);
    return std::vector<float>(probs.begin(), probs.end());
  };
  for (std::int64_t i = 0; i < set.count(); ++i) {
    auto probs = audioforge::evaluate_clip(predict, set.record(i),
                                           set.sample_rate);
    int arg = 0;
    for (std::size_t c = 1; c < probs.size(); ++c) {
      if (probs[c] > probs[arg]) arg = static_cast<int>(c);
    }
    int y = set.labels[static_cast<std::size_t>(i)];
    totals[y]++;
    if (arg == y) {
      correct[y]++;
      ++hit;
    }
  }
  res.top1 = 100.0 * static_cast<double>(hit) /
             static_cast<double>(std::max<std::int64_t>(1, set.count()));
  res.per_class.resize(static_cast<std::size_t>(set.num_classes), 0.0);
  for (int c = 0; c < set.num_classes; ++c) {
    res.per_class[c] =
        totals[c] > 0 ? 100.0 * correct[c] / static_cast<double>(totals[c])
                      : 0.0;
  }
  return res;
}

TrainResult distill(nn::Model& teacher, nn::Model& student,
                    const patchforge::PatchDataset& data,
                    const data::LabeledImages& eval_set,
                    const DistillConfig& cfg, const std::string& run_dir,
                    const DistillHooks& hooks) {
  cfg.validate();
  if (teacher.num_classes != student.num_classes) {
    throw ConfigError("teacher and student head widths differ: " +
                      std::to_string(teacher.num_classes) + " vs " +
                      std::to_string(student.num_classes));
  }
  const int P = data.patch_size;

  auto opt = make_optimizer(cfg.optimizer, student.params(),
                            cfg.weight_decay, cfg.momentum, cfg.nesterov);
  std::int64_t steps_per_epoch =
      std::max<std::int64_t>(1, data.count() / cfg.batch_size);
  nn::Schedule sched = make_schedule(
      cfg.schedule, cfg.lr, steps_per_epoch * std::max(cfg.epochs, 1), {}, {});

  TrainResult pre;
  pre.teacher_hash_before = teacher.weights_hash();

  LoopSpec spec;
  spec.dataset_count = data.count();
  spec.batch_size = cfg.batch_size;
  spec.epochs = cfg.epochs;
  spec.seed = cfg.seed;
  spec.run_dir = run_dir;
  spec.student = &student;
  spec.optimizer = opt.get();
  spec.schedule = sched;
  spec.hooks = hooks;
  spec.track_per_class = cfg.track_per_class;
  spec.assemble = [&](std::span<const std::int64_t> idx, rng::Stream& rs) {
    nn::Tensor batch(static_cast<int>(idx.size()), 3, P, P);
    for (std::size_t i = 0; i < idx.size(); ++i) {
      assemble_image(data.record(idx[i]), P, P, 3,
                     batch.sample(static_cast<int>(i)),
                     cfg.standard_aug ? &rs : nullptr, 0);
    }
    if (cfg.mix == MixKind::kMixup) {
      return mixup(batch, rs).inputs;
    }
    if (cfg.mix == MixKind::kCutmix) {
      return cutmix(batch, cfg.mix_alpha, cfg.mix_beta, rs).inputs;
    }
    return batch;
  };
  spec.loss = [&](const nn::Tensor& batch) {
    // one view, fed identically to both models; the teacher stays in
    // inference mode so its statistics remain frozen
    nn::Tensor t_logits = teacher.forward(batch, false);
    nn::Tensor s_logits = student.forward(batch, true);
    return batch_distill_loss(t_logits, s_logits, cfg.temperature, cfg.loss,
                              cfg.signal, cfg.top_k);
  };
  spec.evaluate = [&]() { return evaluate_images(student, eval_set); };

  TrainResult result = run_loop(spec);
  result.teacher_hash_before = pre.teacher_hash_before;
  result.teacher_hash_after = teacher.weights_hash();
  return result;
}

TrainResult distill_audio(nn::Model& teacher, nn::Model& student,
                          const audioforge::ClipDataset& data,
                          const data::LabeledClips& eval_set,
                          const DistillConfig& cfg,
                          const std::string& run_dir,
                          const DistillHooks& hooks) {
  cfg.validate();
  if (teacher.num_classes != student.num_classes) {
    throw ConfigError("teacher and student head widths differ");
  }
  if (cfg.mix == MixKind::kCutmix) {
    throw ConfigError("cutmix is unsupported for audio inputs");
  }
  audioforge::SpectrogramConfig scfg;
  audioforge::LogMelExtractor extractor(scfg, data.sample_rate);

  auto opt = make_optimizer(cfg.optimizer, student.params(),
                            cfg.weight_decay, cfg.momentum, cfg.nesterov);
  std::int64_t steps_per_epoch =
      std::max<std::int64_t>(1, data.count() / cfg.batch_size);
  nn::Schedule sched = make_schedule(
      cfg.schedule, cfg.lr, steps_per_epoch * std::max(cfg.epochs, 1), {}, {});

  std::string hash_before = teacher.weights_hash();

  LoopSpec spec;
  spec.dataset_count = data.count();
  spec.batch_size = cfg.batch_size;
  spec.epochs = cfg.epochs;
  spec.seed = cfg.seed;
  spec.run_dir = run_dir;
  spec.student = &student;
  spec.optimizer = opt.get();
  spec.schedule = sched;
  spec.hooks = hooks;
  spec.track_per_class = cfg.track_per_class;
  spec.assemble = [&](std::span<const std::int64_t> idx, rng::Stream& rs) {
    nn::Tensor batch;
    for (std::size_t i = 0; i < idx.size(); ++i) {
      auto view = audioforge::training_view(data.record(idx[i]), rs,
                                            data.sample_rate);
      nn::Tensor one = logmel_to_input(extractor.compute(view));
      if (i == 0) {
        batch = nn::Tensor(static_cast<int>(idx.size()), 1, one.h(), one.w());
      }
      std::copy(one.data.begin(), one.data.end(),
                batch.sample(static_cast<int>(i)));
    }
    if (cfg.mix == MixKind::kMixup) {
      return mixup(batch, rs).inputs;
    }
    return batch;
  };
  spec.loss = [&](const nn::Tensor& batch) {
    nn::Tensor t_logits = teacher.forward(batch, false);
    nn::Tensor s_logits = student.forward(batch, true);
    return batch_distill_loss(t_logits, s_logits, cfg.temperature, cfg.loss,
                              cfg.signal, cfg.top_k);
  };
  spec.evaluate = [&]() { return evaluate_clips(student, eval_set); };

  TrainResult result = run_loop(spec);
  result.teacher_hash_before = hash_before;
  result.teacher_hash_after = teacher.weights_hash();
  return result;
}

TrainResult train_supervised(nn::Model& model,
                             const data::LabeledImages& train_set,
                             const data::LabeledImages& eval_set,
                             const SupervisedConfig& cfg,
                             const std::string& run_dir) {
  cfg.validate();
  if (model.num_classes != train_set.num_classes) {
    throw ConfigError("model head width does not match dataset classes");
  }
  auto opt = make_optimizer(cfg.optimizer, model.params(), cfg.weight_decay,
                            cfg.momentum, cfg.nesterov);
  std::int64_t steps_per_epoch =
      std::max<std::int64_t>(1, train_set.count() / cfg.batch_size);
  nn::Schedule sched =
      make_schedule(cfg.schedule, cfg.lr,
                    steps_per_epoch * std::max(cfg.epochs, 1), cfg.lr_values,
                    cfg.lr_boundaries);

  LoopSpec spec;
  spec.dataset_count = train_set.count();
  spec.batch_size = cfg.batch_size;
  spec.epochs = cfg.epochs;
  spec.seed = cfg.seed;
  spec.run_dir = run_dir;
  spec.student = &model;
  spec.optimizer = opt.get();
  spec.schedule = sched;

  std::vector<std::int32_t> batch_labels;
  spec.assemble = [&](std::span<const std::int64_t> idx, rng::Stream& rs) {
    nn::Tensor batch(static_cast<int>(idx.size()), train_set.channels,
                     train_set.height, train_set.width);
    batch_labels.resize(idx.size());
    for (std::size_t i = 0; i < idx.size(); ++i) {
      batch_labels[i] = train_set.labels[static_cast<std::size_t>(idx[i])];
      assemble_image(train_set.record(idx[i]), train_set.height,
                     train_set.width, train_set.channels,
                     batch.sample(static_cast<int>(i)), &rs, cfg.cutout);
    }
    return batch;
  };
  spec.loss = [&](const nn::Tensor& batch) {
    nn::Tensor logits = model.forward(batch, true);
    return batch_cross_entropy(logits, batch_labels);
  };
  spec.evaluate = [&]() { return evaluate_images(model, eval_set); };
  return run_loop(spec);
}

TrainResult train_supervised_audio(nn::Model& model,
                                   const data::LabeledClips& train_set,
                                   const data::LabeledClips& eval_set,
                                   const SupervisedConfig& cfg,
                                   const std::string& run_dir) {
  cfg.validate();
  if (model.num_classes != train_set.num_classes) {
    throw ConfigError("model head width does not match dataset classes");
  }
  audioforge::SpectrogramConfig scfg;
  audioforge::LogMelExtractor extractor(scfg, train_set.sample_rate);
  auto opt = make_optimizer(cfg.optimizer, model.params(), cfg.weight_decay,
                            cfg.momentum, cfg.nesterov);
  std::int64_t steps_per_epoch =
      std::max<std::int64_t>(1, train_set.count() / cfg.batch_size);
  nn::Schedule sched =
      make_schedule(cfg.schedule, cfg.lr,
                    steps_per_epoch * std::max(cfg.epochs, 1), cfg.lr_values,
                    cfg.lr_boundaries);

  LoopSpec spec;
  spec.dataset_count = train_set.count();
  spec.batch_size = cfg.batch_size;
  spec.epochs = cfg.epochs;
  spec.seed = cfg.seed;
  spec.run_dir = run_dir;
  spec.student = &model;
  spec.optimizer = opt.get();
  spec.schedule = sched;

  std::vector<std::int32_t> batch_labels;
  spec.assemble = [&](std::span<const std::int64_t> idx, rng::Stream& rs) {
    (void)rs;
    nn::Tensor batch;
    batch_labels.resize(idx.size());
    for (std::size_t i = 0; i < idx.size(); ++i) {
      batch_labels[i] = train_set.labels[static_cast<std::size_t>(idx[i])];
      nn::Tensor one = logmel_to_input(extractor.compute(
          train_set.record(idx[i])));
      if (i == 0) {
        batch = nn::Tensor(static_cast<int>(idx.size()), 1, one.h(), one.w());
      }
      std::copy(one.data.begin(), one.data.end(),
                batch.sample(static_cast<int>(i)));
    }
    return batch;
  };
  spec.loss = [&](const nn::Tensor& batch) {
    nn::Tensor logits = model.forward(batch, true);
    return batch_cross_entropy(logits, batch_labels);
  };
  spec.evaluate = [&]() { return evaluate_clips(model, eval_set); };
  return run_loop(spec);
}

}  // namespace onedatum::distillery
