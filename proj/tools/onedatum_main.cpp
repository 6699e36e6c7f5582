// SPDX-License-Identifier: Apache-2.0
//
// onedatum: generate single-datum datasets, train/distill models,
// compress them and analyze the results.
//
// Exit codes: 0 success, 1 configuration error, 2 runtime failure.

#include <CLI11.hpp>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <future>
#include <iostream>

#include "onedatum/compress/compress.hpp"
#include "onedatum/core/binio.hpp"
#include "onedatum/core/hash.hpp"
#include "onedatum/data/synth.hpp"
#include "onedatum/distillery/distill.hpp"
#include "onedatum/lens/lens.hpp"
#include "onedatum/modelzoo/modelzoo.hpp"
#include "onedatum/nn/checkpoint.hpp"
#include "onedatum/runpack/run.hpp"

namespace fs = std::filesystem;
using json = nlohmann::json;
using namespace onedatum;

namespace {

// --- shared helpers ---------------------------------------------------------

// Source specs: a file path, "noise:WxH:SEED", or "synth:WxH:SEED".
patchforge::SourceImage load_source_spec(const std::string& spec,
                                         bool strict) {
  int w = 0, h = 0;
  unsigned long long seed = 0;
  if (std::sscanf(spec.c_str(), "noise:%dx%d:%llu", &w, &h, &seed) == 3) {
    return patchforge::make_noise_image(h, w, seed);
  }
  if (std::sscanf(spec.c_str(), "synth:%dx%d:%llu", &w, &h, &seed) == 3) {
    return data::make_synth_source(h, w, seed);
  }
  return patchforge::load_source_image(spec, strict);
}

audioforge::SourceClip load_clip_spec(const std::string& spec) {
  double seconds = 0.0;
  unsigned long long seed = 0;
  if (std::sscanf(spec.c_str(), "synthaudio:%lf:%llu", &seconds, &seed) == 2) {
    return data::make_synth_recording(seconds, seed);
  }
  return audioforge::load_source_clip(spec);
}

data::LabeledImages load_eval_images(const std::string& name, bool train) {
  if (name == "synth10") {
    return train ? data::make_synth_images(8000, 9980)
                 : data::make_synth_images(2000, 9990);
  }
  return data::load_cifar(data::default_data_root(), name, train);
}

data::LabeledClips load_eval_clips(const std::string& name, bool train) {
  if (name == "synthspeech") {
    return train ? data::make_synth_clips(4000, 8800)
                 : data::make_synth_clips(1000, 8810);
  }
  return data::load_wav_tree(
      (fs::path(data::default_data_root()) / name / (train ? "train" : "test"))
          .string());
}

nn::Model load_model(const std::string& ckpt_path) {
  return modelzoo::build_from_checkpoint(nn::load_checkpoint(ckpt_path));
}

runpack::RunManifest start_manifest(const std::string& command,
                                    const json& config, std::uint64_t seed,
                                    const std::string& run_dir,
                                    bool full_run_layout = true) {
  if (full_run_layout) {
    runpack::ensure_run_dir(run_dir);
  } else {
    fs::create_directories(run_dir);
  }
  runpack::RunManifest m;
  m.command = command;
  m.config = config;
  m.seed = seed;
  m.code_version = kVersion;
  m.started_at = runpack::iso_timestamp_now();
  m.write(run_dir);
  return m;
}

void finish_manifest(runpack::RunManifest& m, const json& final_metrics,
                     const std::string& run_dir) {
  m.finished_at = runpack::iso_timestamp_now();
  m.final_metrics = final_metrics;
  m.status = "completed";
  m.write(run_dir);
}

json distill_config_json(const distillery::DistillConfig& cfg) {
  return json{{"temperature", cfg.temperature},
              {"loss", distillery::loss_kind_name(cfg.loss)},
              {"signal", distillery::signal_mode_name(cfg.signal)},
              {"top_k", cfg.top_k},
              {"topk_renorm", cfg.topk_renorm},
              {"mix", distillery::mix_kind_name(cfg.mix)},
              {"mix_alpha", cfg.mix_alpha},
              {"mix_beta", cfg.mix_beta},
              {"standard_aug", cfg.standard_aug},
              {"optimizer", cfg.optimizer},
              {"lr", cfg.lr},
              {"weight_decay", cfg.weight_decay},
              {"schedule", cfg.schedule},
              {"epochs", cfg.epochs},
              {"batch_size", cfg.batch_size},
              {"seed", cfg.seed},
              {"track_per_class", cfg.track_per_class}};
}

// flags > config file > preset defaults
void merge_config_file(const std::string& path, CLI::App* cmd,
                       distillery::DistillConfig& cfg) {
  if (path.empty()) return;
  auto bytes = binio::read_file(path);
  json j = json::parse(std::string(bytes.begin(), bytes.end()));
  auto take = [&](const char* key, auto& slot, const char* flag) {
    if (j.contains(key) && cmd->count(flag) == 0) {
      j.at(key).get_to(slot);
    }
  };
  take("temperature", cfg.temperature, "--temperature");
  take("lr", cfg.lr, "--lr");
  take("weight_decay", cfg.weight_decay, "--weight-decay");
  take("epochs", cfg.epochs, "--epochs");
  take("batch_size", cfg.batch_size, "--batch");
  take("top_k", cfg.top_k, "--top-k");
  if (j.contains("loss") && cmd->count("--loss") == 0) {
    cfg.loss = distillery::loss_kind_from_name(j.at("loss"));
  }
  if (j.contains("signal") && cmd->count("--signal") == 0) {
    cfg.signal = distillery::signal_mode_from_name(j.at("signal"));
  }
  if (j.contains("mix") && cmd->count("--mix") == 0) {
    cfg.mix = distillery::mix_kind_from_name(j.at("mix"));
  }
  if (j.contains("optimizer") && cmd->count("--optimizer") == 0) {
    cfg.optimizer = j.at("optimizer").get<std::string>();
  }
  if (j.contains("schedule") && cmd->count("--schedule") == 0) {
    cfg.schedule = j.at("schedule").get<std::string>();
  }
}

// --- gen-patches -------------------------------------------------------------

struct GenPatchesArgs {
  std::string image, out;
  int size = 32;
  std::int64_t count = 50000;
  std::uint64_t seed = 0;
  bool png = false;
  bool strict = false;
  int workers = 2;
};

int run_gen_patches(const GenPatchesArgs& a) {
  auto src = load_source_spec(a.image, a.strict);
  patchforge::PatchConfig cfg;
  cfg.patch_size = a.size;
  cfg.count = a.count;
  cfg.global_seed = a.seed;
  auto ds = patchforge::generate_dataset(src, cfg, a.workers);
  patchforge::save_dataset(ds, a.out, a.png);

  json config{{"image", a.image}, {"size", a.size},   {"count", a.count},
              {"seed", a.seed},   {"png", a.png},     {"workers", a.workers},
              {"strict", a.strict}};
  auto manifest = start_manifest("gen-patches", config, a.seed, a.out, false);
  manifest.dataset_hashes["source"] = src.content_hash;
  manifest.dataset_hashes["patches"] =
      hash::hex_digest(ds.records.data(), ds.records.size());
  finish_manifest(manifest, {{"count", ds.count()}}, a.out);
  std::cout << "wrote " << ds.count() << " patches to " << a.out << "\n";
  return 0;
}

// --- gen-audio ----------------------------------------------------------------

struct GenAudioArgs {
  std::string clip, out;
  std::int64_t count = 50000;
  double segment_seconds = 2.0;
  std::uint64_t seed = 0;
  int workers = 2;
};

int run_gen_audio(const GenAudioArgs& a) {
  if (a.segment_seconds != audioforge::kSegmentSeconds) {
    throw ConfigError("this build generates 2-second segments");
  }
  auto src = load_clip_spec(a.clip);
  auto ds = audioforge::generate_clip_dataset(src, a.count, a.seed, a.workers);
  audioforge::save_clip_dataset(ds, a.out);

  json config{{"clip", a.clip},
              {"count", a.count},
              {"segment_seconds", a.segment_seconds},
              {"seed", a.seed},
              {"workers", a.workers}};
  auto manifest = start_manifest("gen-audio", config, a.seed, a.out, false);
  manifest.dataset_hashes["source"] = src.content_hash;
  manifest.dataset_hashes["clips"] = hash::hex_digest(
      ds.records.data(), ds.records.size() * sizeof(float));
  finish_manifest(manifest, {{"count", ds.count()}}, a.out);
  std::cout << "wrote " << ds.count() << " clips to " << a.out << "\n";
  return 0;
}

// --- train-teacher -------------------------------------------------------------

struct TrainTeacherArgs {
  std::string dataset = "cifar10";
  std::string arch = "wrn16-2";
  std::string out;
  std::string budget = "pilot";
  int epochs = -1;
  int batch = -1;
  double lr = -1.0;
  std::uint64_t seed = 0;
};

int run_train_teacher(const TrainTeacherArgs& a) {
  bool audio = a.dataset == "synthspeech" || a.dataset == "speechcommands";

  distillery::SupervisedConfig cfg;
  cfg.seed = a.seed;
  if (a.budget == "paper") {
    // family-specific published schedules
    bool wrn = a.arch.rfind("wrn", 0) == 0;
    cfg.optimizer = "sgd";
    cfg.batch_size = 128;
    cfg.schedule = "multistep";
    if (wrn) {
      cfg.lr_values = {0.1, 0.02, 0.004, 0.0008};
      cfg.lr_boundaries = {24000, 48000, 64000};
      cfg.nesterov = true;
      cfg.epochs = 205;  // ~80k steps at batch 128 over 50k examples
    } else {
      cfg.lr_values = {0.01, 0.1, 0.01, 0.001};
      cfg.lr_boundaries = {400, 32000, 48000};
      cfg.epochs = 164;  // ~64k steps
    }
    cfg.lr = cfg.lr_values.front();
    if (audio) {  // audio teachers use the Adam recipe
      cfg = distillery::SupervisedConfig{};
      cfg.seed = a.seed;
      cfg.optimizer = "adam";
      cfg.lr = 1e-3;
      cfg.batch_size = 128;
      cfg.epochs = 60;
    }
  } else if (a.budget == "pilot") {
    cfg.optimizer = "adam";
    cfg.lr = 1e-3;
    cfg.batch_size = 128;
    cfg.epochs = 12;
  } else {
    throw ConfigError("unknown budget: " + a.budget);
  }
  if (a.epochs >= 0) cfg.epochs = a.epochs;
  if (a.batch > 0) cfg.batch_size = a.batch;
  if (a.lr > 0) cfg.lr = a.lr;

  json config{{"dataset", a.dataset}, {"arch", a.arch},
              {"budget", a.budget},   {"epochs", cfg.epochs},
              {"batch", cfg.batch_size}, {"lr", cfg.lr},
              {"optimizer", cfg.optimizer}, {"schedule", cfg.schedule},
              {"cutout", cfg.cutout}, {"seed", a.seed}};
  auto manifest = start_manifest("train-teacher", config, a.seed, a.out);

  distillery::TrainResult result;
  std::string final_hash;
  if (audio) {
    auto train_set = load_eval_clips(a.dataset, true);
    auto eval_set = load_eval_clips(a.dataset, false);
    auto model = modelzoo::build_audio_cnn(train_set.num_classes, a.seed);
    manifest.dataset_hashes["train"] = train_set.content_hash;
    manifest.dataset_hashes["eval"] = eval_set.content_hash;
    manifest.write(a.out);
    result = distillery::train_supervised_audio(model, train_set, eval_set,
                                                cfg, a.out);
    nn::save_checkpoint(
        (fs::path(a.out) / "checkpoints" / "teacher.odck").string(),
        nn::snapshot_model(model, {{"val_top1", result.best_top1}}));
    final_hash = model.weights_hash();
  } else {
    auto train_set = load_eval_images(a.dataset, true);
    auto eval_set = load_eval_images(a.dataset, false);
    auto spec = modelzoo::ModelSpec::parse(a.arch, train_set.num_classes);
    auto model = modelzoo::build_model(spec, a.seed);
    manifest.dataset_hashes["train"] = train_set.content_hash;
    manifest.dataset_hashes["eval"] = eval_set.content_hash;
    manifest.write(a.out);
    result = distillery::train_supervised(model, train_set, eval_set, cfg,
                                          a.out);
    nn::save_checkpoint(
        (fs::path(a.out) / "checkpoints" / "teacher.odck").string(),
        nn::snapshot_model(model, {{"val_top1", result.best_top1}}));
    final_hash = model.weights_hash();
  }
  finish_manifest(manifest,
                  {{"best_top1", result.best_top1},
                   {"best_epoch", result.best_epoch},
                   {"weights_hash", final_hash}},
                  a.out);
  std::cout << "teacher best top-1: " << result.best_top1 << "% (epoch "
            << result.best_epoch << ")\n";
  return 0;
}

// --- distill -------------------------------------------------------------------

struct DistillArgs {
  std::string teacher, dataset_dir, arch, out;
  std::string eval = "cifar10";
  std::string budget = "pilot";
  std::string config_file;
  std::string loss = "kl";
  std::string signal = "full";
  std::string mix = "cutmix";
  std::string optimizer, schedule;
  double temperature = 8.0;
  int top_k = 5;
  int epochs = -1;
  int batch = -1;
  double lr = -1.0;
  double weight_decay = -1.0;
  std::uint64_t seed = 0;
  std::uint64_t student_seed = 1;
  bool per_class = false;
  CLI::App* cmd = nullptr;
};

distillery::DistillConfig resolve_distill_config(const DistillArgs& a) {
  distillery::DistillConfig cfg =
      a.budget == "paper" ? distillery::DistillConfig::large_scale()
                          : distillery::DistillConfig::small_scale();
  cfg.epochs = a.budget == "paper" ? 1000 : 30;
  merge_config_file(a.config_file, a.cmd, cfg);
  cfg.temperature = a.temperature;
  cfg.loss = distillery::loss_kind_from_name(a.loss);
  // "top5"/"top3"... carry k inline
  if (a.signal.rfind("top", 0) == 0 && a.signal.size() > 3) {
    cfg.signal = distillery::SignalMode::kTopK;
    cfg.top_k = std::stoi(a.signal.substr(3));
  } else {
    cfg.signal = distillery::signal_mode_from_name(a.signal);
    cfg.top_k = a.top_k;
  }
  cfg.mix = distillery::mix_kind_from_name(a.mix);
  if (!a.optimizer.empty()) cfg.optimizer = a.optimizer;
  if (!a.schedule.empty()) cfg.schedule = a.schedule;
  if (a.epochs >= 0) cfg.epochs = a.epochs;
  if (a.batch > 0) cfg.batch_size = a.batch;
  if (a.lr > 0) cfg.lr = a.lr;
  if (a.weight_decay >= 0) cfg.weight_decay = a.weight_decay;
  cfg.seed = a.seed;
  cfg.track_per_class = a.per_class;
  return cfg;
}

int run_distill(const DistillArgs& a) {
  auto cfg = resolve_distill_config(a);
  auto teacher = load_model(a.teacher);

  bool audio = fs::exists(fs::path(a.dataset_dir) / "clips.sad") ||
               (fs::path(a.dataset_dir).extension() == ".sad");

  json config = distill_config_json(cfg);
  config["teacher"] = a.teacher;
  config["data"] = a.dataset_dir;
  config["arch"] = a.arch.empty() ? teacher.arch : a.arch;
  config["eval"] = a.eval;
  config["budget"] = a.budget;
  config["student_seed"] = a.student_seed;
  auto manifest = start_manifest("distill", config, a.seed, a.out);
  manifest.dataset_hashes["teacher_weights"] = teacher.weights_hash();

  distillery::TrainResult result;
  if (audio) {
    auto clips = audioforge::load_clip_dataset(a.dataset_dir);
    auto eval_set = load_eval_clips(a.eval, false);
    auto student =
        a.arch.empty() || a.arch == "audio-cnn"
            ? modelzoo::build_audio_cnn(teacher.num_classes, a.student_seed)
            : modelzoo::build_model(
                  modelzoo::ModelSpec::parse(a.arch, teacher.num_classes),
                  a.student_seed);
    manifest.dataset_hashes["clips"] = clips.manifest.source_hash;
    manifest.dataset_hashes["eval"] = eval_set.content_hash;
    manifest.write(a.out);
    result = distillery::distill_audio(teacher, student, clips, eval_set, cfg,
                                       a.out);
    nn::save_checkpoint(
        (fs::path(a.out) / "checkpoints" / "student.odck").string(),
        nn::snapshot_model(student, {{"val_top1", result.best_top1}}));
  } else {
    auto patches = patchforge::load_dataset(a.dataset_dir);
    auto eval_set = load_eval_images(a.eval, false);
    auto student = modelzoo::build_model(
        modelzoo::ModelSpec::parse(a.arch.empty() ? teacher.arch : a.arch,
                                   teacher.num_classes),
        a.student_seed);
    manifest.dataset_hashes["patches"] =
        hash::hex_digest(patches.records.data(), patches.records.size());
    manifest.dataset_hashes["eval"] = eval_set.content_hash;
    manifest.write(a.out);
    result = distillery::distill(teacher, student, patches, eval_set, cfg,
                                 a.out);
    nn::save_checkpoint(
        (fs::path(a.out) / "checkpoints" / "student.odck").string(),
        nn::snapshot_model(student, {{"val_top1", result.best_top1}}));
  }
  if (result.teacher_hash_before != result.teacher_hash_after) {
    throw RuntimeFailure("teacher weights changed during distillation");
  }
  finish_manifest(manifest,
                  {{"best_top1", result.best_top1},
                   {"best_epoch", result.best_epoch},
                   {"teacher_hash", result.teacher_hash_after},
                   {"final_train_loss", result.final_train_loss}},
                  a.out);
  std::cout << "student best top-1: " << result.best_top1 << "% (epoch "
            << result.best_epoch << ")\n";
  return 0;
}

// --- compress -------------------------------------------------------------------

struct CompressArgs {
  std::string model, dataset_dir, out;
  std::string method = "prune";
  std::string eval = "cifar10";
  double sparsity = 0.5;
  int epochs = 5;
  int batch = -1;
  std::uint64_t seed = 0;
};

int run_compress(const CompressArgs& a) {
  auto pretrained = load_model(a.model);
  auto patches = patchforge::load_dataset(a.dataset_dir);
  auto eval_set = load_eval_images(a.eval, false);

  compress::CompressionPlan plan;
  if (a.method == "quantize") {
    plan.method = compress::CompressionPlan::Method::kQuantize;
  } else if (a.method == "prune") {
    plan.method = compress::CompressionPlan::Method::kPrune;
  } else {
    throw ConfigError("method must be prune or quantize");
  }
  plan.sparsity = a.sparsity;
  plan.finetune.epochs = a.epochs;
  plan.finetune.seed = a.seed;
  plan.finetune.mix = distillery::MixKind::kNone;
  if (a.batch > 0) plan.finetune.batch_size = a.batch;

  json config{{"model", a.model},       {"method", a.method},
              {"sparsity", a.sparsity}, {"data", a.dataset_dir},
              {"eval", a.eval},
              {"finetune", distill_config_json(plan.finetune)}};
  auto manifest = start_manifest("compress", config, a.seed, a.out);
  manifest.dataset_hashes["patches"] =
      hash::hex_digest(patches.records.data(), patches.records.size());
  manifest.write(a.out);

  auto dense_eval = distillery::evaluate_images(pretrained, eval_set);
  auto result = compress::compress_with_self_distillation(
      pretrained, plan, patches, eval_set, a.out);
  auto compressed_eval = distillery::evaluate_images(result.model, eval_set);

  nn::save_checkpoint(
      (fs::path(a.out) / "checkpoints" / "compressed.odck").string(),
      nn::snapshot_model(result.model, {{"val_top1", compressed_eval.top1},
                                        {"method", a.method},
                                        {"sparsity", a.sparsity}}));
  json sparsity_report = json::object();
  for (auto [name, s] : compress::measure_sparsity(result.model)) {
    sparsity_report[name] = s;
  }
  finish_manifest(manifest,
                  {{"dense_top1", dense_eval.top1},
                   {"compressed_top1", compressed_eval.top1},
                   {"sparsity_by_tensor", sparsity_report}},
                  a.out);
  std::cout << "dense top-1 " << dense_eval.top1 << "% -> compressed top-1 "
            << compressed_eval.top1 << "%\n";
  return 0;
}

// --- analyze --------------------------------------------------------------------

struct AnalyzeArgs {
  std::string what;  // confidence | cka | gist | embed | perclass
  std::string run;
  std::string model, model_b, dataset_dir, eval = "synth10";
  double tau = 8.0;
  int bins = 30;
  std::int64_t count = 1000;
  std::int64_t eval_count = 1000;
  std::uint64_t seed = 0;
  int gist_size = 256;
};

nn::Tensor patches_to_tensor(const patchforge::PatchDataset& ds,
                             std::int64_t count) {
  count = std::min<std::int64_t>(count, ds.count());
  if (count < 1) throw ConfigError("empty patch dataset");
  const int P = ds.patch_size;
  nn::Tensor t(static_cast<int>(count), 3, P, P);
  for (std::int64_t i = 0; i < count; ++i) {
    distillery::record_to_input(ds.record(i), P, P, 3,
                                t.sample(static_cast<int>(i)));
  }
  return t;
}

nn::Tensor images_to_tensor(const data::LabeledImages& set,
                            std::int64_t count) {
  count = std::min<std::int64_t>(count, set.count());
  nn::Tensor t(static_cast<int>(count), set.channels, set.height, set.width);
  for (std::int64_t i = 0; i < count; ++i) {
    distillery::record_to_input(set.record(i), set.height, set.width,
                                set.channels, t.sample(static_cast<int>(i)));
  }
  return t;
}

int run_analyze(const AnalyzeArgs& a) {
  runpack::ensure_run_dir(a.run);
  fs::path reports = fs::path(a.run) / "reports";

  if (a.what == "confidence") {
    auto model = load_model(a.model);
    auto patches = patchforge::load_dataset(a.dataset_dir);
    auto probe = patches_to_tensor(patches, a.count);
    auto h = lens::confidence_histogram(model, probe, a.tau, a.bins);
    binio::write_file((reports / "confidence_patches.json").string(),
                      h.to_json() + "\n");
    lens::write_histogram_svg(h, "confidence on patches",
                              (reports / "confidence_patches.svg").string());
    auto eval_set = load_eval_images(a.eval, false);
    auto eprobe = images_to_tensor(eval_set, a.eval_count);
    auto he = lens::confidence_histogram(model, eprobe, a.tau, a.bins);
    binio::write_file((reports / "confidence_eval.json").string(),
                      he.to_json() + "\n");
    lens::write_histogram_svg(he, "confidence on evaluation images",
                              (reports / "confidence_eval.svg").string());
    std::cout << "confidence histograms written to " << reports << "\n";
    return 0;
  }
  if (a.what == "cka") {
    auto model_a = load_model(a.model);
    auto model_b = load_model(a.model_b.empty() ? a.model : a.model_b);
    auto patches = patchforge::load_dataset(a.dataset_dir);
    auto probe = patches_to_tensor(patches, a.count);
    auto map = lens::cka_heatmap(model_a, model_b, probe);
    binio::write_file((reports / "cka.json").string(), map.to_json() + "\n");
    lens::write_heatmap_svg(map, "linear CKA", (reports / "cka.svg").string());
    std::cout << "cka heatmap written to " << reports << "\n";
    return 0;
  }
  if (a.what == "gist") {
    auto patches = patchforge::load_dataset(a.dataset_dir);
    std::int64_t m = std::min<std::int64_t>(a.count, patches.count());
    std::vector<img::ImageU8> images;
    images.reserve(static_cast<std::size_t>(m));
    for (std::int64_t i = 0; i < m; ++i) {
      img::ImageU8 im(patches.patch_size, patches.patch_size, 3);
      auto r = patches.record(i);
      std::copy(r.begin(), r.end(), im.data.begin());
      images.push_back(std::move(im));
    }
    lens::GistConfig gcfg;
    gcfg.size = a.gist_size;
    auto gd = lens::gist_distance_histogram(images, gcfg, a.bins);
    binio::write_file((reports / "gist_distances.json").string(),
                      gd.histogram.to_json() + "\n");
    lens::write_histogram_svg(gd.histogram,
                              "pairwise distances of normalized descriptors",
                              (reports / "gist_distances.svg").string());
    std::cout << "gist histogram over " << gd.distances.size()
              << " pairs written to " << reports << "\n";
    return 0;
  }
  if (a.what == "embed") {
    auto model = load_model(a.model);
    auto patches = patchforge::load_dataset(a.dataset_dir);
    auto eval_set = load_eval_images(a.eval, false);
    auto probe_a = patches_to_tensor(patches, a.count);
    auto probe_b = images_to_tensor(eval_set, a.eval_count);

    auto fa = lens::collect_features(model, probe_a);
    auto fb = lens::collect_features(model, probe_b);
    // penultimate representation = last tap (global pool)
    const auto& pa = fa.back();
    const auto& pb = fb.back();
    lens::FeatureMatrix joint(pa.rows + pb.rows, pa.cols);
    std::copy(pa.data.begin(), pa.data.end(), joint.data.begin());
    std::copy(pb.data.begin(), pb.data.end(),
              joint.data.begin() + pa.data.size());
    auto coords = lens::embed_2d(joint, a.seed);

    std::vector<std::int32_t> labels(static_cast<std::size_t>(joint.rows), 0);
    for (int i = 0; i < pb.rows; ++i) {
      labels[static_cast<std::size_t>(pa.rows + i)] =
          1 + eval_set.labels[static_cast<std::size_t>(i)] % 9;
    }
    json j;
    j["n_patches"] = pa.rows;
    j["n_eval"] = pb.rows;
    json pts = json::array();
    for (const auto& c : coords) pts.push_back({c[0], c[1]});
    j["coords"] = pts;
    binio::write_file((reports / "embedding.json").string(), j.dump() + "\n");
    lens::write_scatter_svg(coords, labels, "2-D embedding",
                            (reports / "embedding.svg").string());
    std::cout << "embedding written to " << reports << "\n";
    return 0;
  }
  if (a.what == "perclass") {
    auto teacher = load_model(a.model);
    auto patches = patchforge::load_dataset(a.dataset_dir);
    std::ifstream log(fs::path(a.run) / "metrics.log");
    if (!log) {
      throw ConfigError("no metrics.log in " + a.run +
                        "; run distill with --per-class first");
    }
    std::vector<distillery::EpochMetrics> history;
    std::string line;
    while (std::getline(log, line)) {
      if (!line.empty()) {
        history.push_back(distillery::EpochMetrics::from_json(line));
      }
    }
    auto report = lens::per_class_report(history, teacher, patches);
    binio::write_file((reports / "per_class.json").string(),
                      report.to_json() + "\n");
    // scatter: teacher frequency vs final accuracy
    std::vector<std::array<double, 2>> pts;
    std::vector<std::int32_t> labels;
    for (std::size_t c = 0; c < report.accuracy_curves.size(); ++c) {
      pts.push_back({static_cast<double>(report.teacher_top1_freq[c]),
                     report.accuracy_curves[c].back()});
      labels.push_back(static_cast<std::int32_t>(c));
    }
    lens::write_scatter_svg(pts, labels,
                            "teacher top-1 frequency vs class accuracy",
                            (reports / "per_class.svg").string());
    std::cout << "per-class report written to " << reports << "\n";
    return 0;
  }
  throw ConfigError("unknown analyze target: " + a.what);
}

// --- grid -----------------------------------------------------------------------

struct GridArgs {
  std::string grid;
  std::string teacher;
  std::string out;
  std::string budget = "pilot";
  std::string eval = "cifar10";
  std::vector<std::string> sources;  // name=spec
  std::int64_t count = 50000;
  int size = 32;
  int epochs = -1;
  int parallel = 1;
  std::uint64_t seed = 0;
};

struct GridCell {
  std::string name;
  std::string dataset_spec;  // per-cell source; empty = shared source
  distillery::DistillConfig cfg;
};

int run_grid(const GridArgs& a) {
  std::map<std::string, std::string> source_map = {
      {"noise", "noise:2560x1920:11"}};
  for (const auto& s : a.sources) {
    auto eq = s.find('=');
    if (eq == std::string::npos) {
      throw ConfigError("--source expects name=path, got " + s);
    }
    source_map[s.substr(0, eq)] = s.substr(eq + 1);
  }

  distillery::DistillConfig base =
      a.budget == "paper" ? distillery::DistillConfig::large_scale()
                          : distillery::DistillConfig::small_scale();
  base.epochs = a.budget == "paper" ? 1000 : 30;
  if (a.epochs >= 0) base.epochs = a.epochs;
  base.seed = a.seed;
  base.mix = distillery::MixKind::kCutmix;

  std::vector<GridCell> cells;
  if (a.grid == "source-image") {
    for (const char* name :
         {"noise", "universe", "bridge", "city", "animals"}) {
      auto it = source_map.find(name);
      if (it == source_map.end()) {
        throw ConfigError(
            std::string("source '") + name +
            "' has no path. Pass --source " + name +
            "=PATH; prerequisites: onedatum train-teacher --dataset " +
            a.eval + " --arch wrn16-2 --out TEACHER_RUN, and source media "
            "for each image");
      }
      cells.push_back({name, it->second, base});
    }
  } else if (a.grid == "dataset-size") {
    for (std::int64_t n : {1000, 10000, 100000}) {
      cells.push_back({"n" + std::to_string(n), "", base});
    }
  } else if (a.grid == "augmentation") {
    GridCell none{"none", "", base};
    none.cfg.standard_aug = false;
    none.cfg.mix = distillery::MixKind::kNone;
    GridCell flip{"flip-crop", "", base};
    flip.cfg.mix = distillery::MixKind::kNone;
    GridCell mix{"flip-crop-mixup", "", base};
    mix.cfg.mix = distillery::MixKind::kMixup;
    GridCell cut{"flip-crop-cutmix", "", base};
    cut.cfg.mix = distillery::MixKind::kCutmix;
    cells = {none, flip, mix, cut};
  } else if (a.grid == "signal") {
    GridCell full{"full", "", base};
    full.cfg.signal = distillery::SignalMode::kFull;
    GridCell top5{"top5", "", base};
    top5.cfg.signal = distillery::SignalMode::kTopK;
    top5.cfg.top_k = 5;
    GridCell hard{"hard", "", base};
    hard.cfg.signal = distillery::SignalMode::kHard;
    cells = {full, top5, hard};
  } else if (a.grid == "loss") {
    for (auto kind : {distillery::LossKind::kKl, distillery::LossKind::kL1,
                      distillery::LossKind::kL2}) {
      GridCell cell{distillery::loss_kind_name(kind), "", base};
      cell.cfg.loss = kind;
      cells.push_back(cell);
    }
  } else {
    throw ConfigError("unknown grid: " + a.grid);
  }

  { auto probe = load_model(a.teacher); }  // fail early if missing
  auto eval_set = load_eval_images(a.eval, false);

  json config{{"grid", a.grid},        {"teacher", a.teacher},
              {"budget", a.budget},    {"eval", a.eval},
              {"count", a.count},      {"size", a.size},
              {"epochs", base.epochs}, {"parallel", a.parallel},
              {"seed", a.seed}};
  auto manifest = start_manifest("grid", config, a.seed, a.out);

  // shared source for the non-source grids
  std::string shared_spec;
  if (a.grid != "source-image") {
    auto it = source_map.find("city");
    if (it == source_map.end()) {
      throw ConfigError(
          "this grid needs --source city=PATH (any dense image works); "
          "run gen-patches or pass a source spec first");
    }
    shared_spec = it->second;
  }

  auto run_cell = [&](const GridCell& cell) {
    std::string child_dir = (fs::path(a.out) / cell.name).string();
    std::string spec =
        cell.dataset_spec.empty() ? shared_spec : cell.dataset_spec;
    auto src = load_source_spec(spec, false);
    patchforge::PatchConfig pcfg;
    pcfg.patch_size = a.size;
    pcfg.count = a.grid == "dataset-size" ? std::stoll(cell.name.substr(1))
                                          : a.count;
    pcfg.global_seed = a.seed;  // shared generation seed across children
    auto patches = patchforge::generate_dataset(src, pcfg, 2);

    auto teacher = load_model(a.teacher);
    auto student = modelzoo::build_model(
        modelzoo::ModelSpec::parse(teacher.arch, teacher.num_classes),
        a.seed + 1);
    json child_config = distill_config_json(cell.cfg);
    child_config["cell"] = cell.name;
    child_config["source_spec"] = spec;
    child_config["patch_count"] = pcfg.count;
    auto child_manifest =
        start_manifest("grid/" + a.grid, child_config, a.seed, child_dir);
    child_manifest.dataset_hashes["source"] = src.content_hash;
    child_manifest.write(child_dir);
    auto result = distillery::distill(teacher, student, patches, eval_set,
                                      cell.cfg, child_dir);
    nn::save_checkpoint(
        (fs::path(child_dir) / "checkpoints" / "student.odck").string(),
        nn::snapshot_model(student, {{"val_top1", result.best_top1}}));
    finish_manifest(
        child_manifest,
        {{"best_top1", result.best_top1}, {"best_epoch", result.best_epoch}},
        child_dir);
    return result.best_top1;
  };

  json cells_metrics = json::object();
  if (a.parallel <= 1) {
    for (const auto& cell : cells) {
      std::cout << "[grid] running cell " << cell.name << "\n";
      cells_metrics[cell.name] = run_cell(cell);
    }
  } else {
    std::vector<std::pair<std::string, std::future<double>>> futures;
    std::size_t next = 0;
    while (next < cells.size() || !futures.empty()) {
      while (next < cells.size() &&
             futures.size() < static_cast<std::size_t>(a.parallel)) {
        const auto& cell = cells[next++];
        futures.emplace_back(cell.name,
                             std::async(std::launch::async, run_cell, cell));
      }
      cells_metrics[futures.front().first] = futures.front().second.get();
      futures.erase(futures.begin());
    }
  }
  finish_manifest(manifest, {{"cells", cells_metrics}}, a.out);
  std::cout << "grid complete: " << cells_metrics.dump() << "\n";
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"single-datum knowledge distillation toolkit"};
  app.require_subcommand(1);

  GenPatchesArgs gp;
  auto* gen_patches = app.add_subcommand(
      "gen-patches", "generate an augmented patch dataset from one image");
  gen_patches
      ->add_option("--image", gp.image,
                   "source image path, noise:WxH:SEED or synth:WxH:SEED")
      ->required();
  gen_patches->add_option("--size", gp.size, "patch side length");
  gen_patches->add_option("--count", gp.count, "number of patches");
  gen_patches->add_option("--seed", gp.seed, "generation seed");
  gen_patches->add_option("--out", gp.out, "output directory")->required();
  gen_patches->add_flag("--png", gp.png, "also write one PNG per patch");
  gen_patches->add_flag("--strict", gp.strict, "reject non-RGB inputs");
  gen_patches->add_option("--workers", gp.workers, "generation threads");

  GenAudioArgs ga;
  auto* gen_audio = app.add_subcommand(
      "gen-audio", "generate an augmented clip dataset from one recording");
  gen_audio
      ->add_option("--clip", ga.clip,
                   "source WAV path or synthaudio:SECONDS:SEED")
      ->required();
  gen_audio->add_option("--count", ga.count, "number of clips");
  gen_audio->add_option("--segment-seconds", ga.segment_seconds,
                        "segment length (fixed at 2)");
  gen_audio->add_option("--seed", ga.seed, "generation seed");
  gen_audio->add_option("--out", ga.out, "output directory")->required();
  gen_audio->add_option("--workers", ga.workers, "generation threads");

  TrainTeacherArgs tt;
  auto* train_teacher = app.add_subcommand(
      "train-teacher", "supervised training of a teacher network");
  train_teacher->add_option("--dataset", tt.dataset,
                            "cifar10|cifar100|synth10|synthspeech");
  train_teacher->add_option("--arch", tt.arch, "architecture name");
  train_teacher->add_option("--out", tt.out, "run directory")->required();
  train_teacher->add_option("--budget", tt.budget, "pilot|paper");
  train_teacher->add_option("--epochs", tt.epochs, "override epochs");
  train_teacher->add_option("--batch", tt.batch, "override batch size");
  train_teacher->add_option("--lr", tt.lr, "override learning rate");
  train_teacher->add_option("--seed", tt.seed, "training seed");

  DistillArgs di;
  auto* distill = app.add_subcommand(
      "distill", "train a student against a frozen teacher");
  distill->add_option("--teacher", di.teacher, "teacher checkpoint")
      ->required();
  distill->add_option("--data", di.dataset_dir, "patch/clip dataset dir")
      ->required();
  distill->add_option("--arch", di.arch, "student architecture");
  distill->add_option("--temperature", di.temperature, "softmax temperature");
  distill->add_option("--loss", di.loss, "kl|l1|l2");
  distill->add_option("--signal", di.signal, "full|top5|topK|hard");
  distill->add_option("--top-k", di.top_k, "k for top-k signal");
  distill->add_option("--mix", di.mix, "none|mixup|cutmix");
  distill->add_option("--epochs", di.epochs, "training epochs");
  distill->add_option("--batch", di.batch, "batch size");
  distill->add_option("--lr", di.lr, "learning rate");
  distill->add_option("--weight-decay", di.weight_decay, "weight decay");
  distill->add_option("--optimizer", di.optimizer, "adam|adamw|sgd");
  distill->add_option("--schedule", di.schedule, "fixed|cosine");
  distill->add_option("--seed", di.seed, "training seed");
  distill->add_option("--student-seed", di.student_seed, "student init seed");
  distill->add_option("--eval", di.eval, "evaluation dataset");
  distill->add_option("--budget", di.budget, "pilot|paper preset");
  distill->add_option("--config", di.config_file, "JSON config file");
  distill->add_flag("--per-class", di.per_class,
                    "record per-class accuracies");
  distill->add_option("--out", di.out, "run directory")->required();
  di.cmd = distill;

  CompressArgs cp;
  auto* compress_cmd = app.add_subcommand(
      "compress", "data-free pruning/quantization with self-distillation");
  compress_cmd->add_option("--model", cp.model, "pretrained checkpoint")
      ->required();
  compress_cmd->add_option("--method", cp.method, "prune|quantize");
  compress_cmd->add_option("--sparsity", cp.sparsity, "prune fraction");
  compress_cmd->add_option("--data", cp.dataset_dir, "patch dataset dir")
      ->required();
  compress_cmd->add_option("--epochs", cp.epochs, "finetune epochs");
  compress_cmd->add_option("--batch", cp.batch, "finetune batch size");
  compress_cmd->add_option("--eval", cp.eval, "evaluation dataset");
  compress_cmd->add_option("--seed", cp.seed, "finetune seed");
  compress_cmd->add_option("--out", cp.out, "run directory")->required();

  AnalyzeArgs an;
  auto* analyze = app.add_subcommand("analyze", "analysis reports");
  analyze->add_option("what", an.what, "confidence|cka|gist|embed|perclass")
      ->required();
  analyze->add_option("--run", an.run, "run directory for reports")
      ->required();
  analyze->add_option("--model", an.model, "model checkpoint");
  analyze->add_option("--model-b", an.model_b, "second model (cka)");
  analyze->add_option("--data", an.dataset_dir, "patch dataset dir");
  analyze->add_option("--eval", an.eval, "evaluation dataset");
  analyze->add_option("--tau", an.tau, "temperature");
  analyze->add_option("--bins", an.bins, "histogram bins");
  analyze->add_option("--count", an.count, "patch sample size");
  analyze->add_option("--eval-count", an.eval_count, "eval sample size");
  analyze->add_option("--seed", an.seed, "embedding seed");
  analyze->add_option("--gist-size", an.gist_size, "gist resolution");

  GridArgs gr;
  auto* grid = app.add_subcommand("grid", "run a named ablation grid");
  grid->add_option("name", gr.grid,
                   "source-image|dataset-size|augmentation|signal|loss")
      ->required();
  grid->add_option("--teacher", gr.teacher, "teacher checkpoint")->required();
  grid->add_option("--out", gr.out, "grid output directory")->required();
  grid->add_option("--budget", gr.budget, "pilot|paper");
  grid->add_option("--eval", gr.eval, "evaluation dataset");
  grid->add_option("--source", gr.sources,
                   "name=spec source mapping (repeatable)");
  grid->add_option("--count", gr.count, "patches per cell");
  grid->add_option("--size", gr.size, "patch side length");
  grid->add_option("--epochs", gr.epochs, "override epochs");
  grid->add_option("--parallel", gr.parallel, "concurrent cells");
  grid->add_option("--seed", gr.seed, "shared seed");

  try {
    app.parse(argc, argv);
    if (*gen_patches) return run_gen_patches(gp);
    if (*gen_audio) return run_gen_audio(ga);
    if (*train_teacher) return run_train_teacher(tt);
    if (*distill) return run_distill(di);
    if (*compress_cmd) return run_compress(cp);
    if (*analyze) return run_analyze(an);
    if (*grid) return run_grid(gr);
  } catch (const CLI::ParseError& e) {
    int code = app.exit(e);
    return code == 0 ? 0 : 1;
  } catch (const ConfigError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return 1;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  }
  return 0;
}
