// SPDX-License-Identifier: Apache-2.0
#include "onedatum/patchforge/patchforge.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdio>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <mutex>
#include <thread>

#include <nlohmann/json.hpp>

#include "onedatum/core/binio.hpp"
#include "onedatum/core/hash.hpp"
#include "onedatum/core/rng.hpp"

namespace fs = std::filesystem;
using json = nlohmann::json;

namespace onedatum::patchforge {

namespace {

std::string pixel_hash(const img::ImageU8& px) {
  hash::Fnv1a64 h;
  std::uint32_t dims[3] = {static_cast<std::uint32_t>(px.height),
                           static_cast<std::uint32_t>(px.width),
                           static_cast<std::uint32_t>(px.channels)};
  h.update(dims, sizeof(dims));
  h.update(px.data.data(), px.data.size());
  return h.hex();
}

// Random-resized-crop parameter sampling: target area uniform in
// scale * input area, aspect ratio log-uniform in [3/4, 4/3], ten
// attempts, then a centered fallback clamped to the valid ratio range.
struct CropBox {
  int top, left, h, w;
};

CropBox sample_rrc_box(rng::Stream& rs, int in_h, int in_w,
                       std::pair<double, double> scale) {
  const double ratio_lo = 3.0 / 4.0;
  const double ratio_hi = 4.0 / 3.0;
  double area = static_cast<double>(in_h) * in_w;
  for (int attempt = 0; attempt < 10; ++attempt) {
    double target = area * rs.uniform(scale.first, scale.second);
    double log_ratio = rs.uniform(std::log(ratio_lo), std::log(ratio_hi));
    double ratio = std::exp(log_ratio);
    int w = static_cast<int>(std::lround(std::sqrt(target * ratio)));
    int h = static_cast<int>(std::lround(std::sqrt(target / ratio)));
    if (w > 0 && h > 0 && w <= in_w && h <= in_h) {
      int top = static_cast<int>(rs.uniform_int(
          static_cast<std::uint32_t>(in_h - h + 1)));
      int left = static_cast<int>(rs.uniform_int(
          static_cast<std::uint32_t>(in_w - w + 1)));
      return {top, left, h, w};
    }
  }
  // fallback: clamp aspect, center crop
  double in_ratio = static_cast<double>(in_w) / in_h;
  int w, h;
  if (in_ratio < ratio_lo) {
    w = in_w;
    h = static_cast<int>(std::lround(w / ratio_lo));
  } else if (in_ratio > ratio_hi) {
    h = in_h;
    w = static_cast<int>(std::lround(h * ratio_hi));
  } else {
    w = in_w;
    h = in_h;
  }
  return {(in_h - h) / 2, (in_w - w) / 2, h, w};
}

void apply_color_jitter(img::ImageF& im, rng::Stream& rs,
                        const PatchConfig& cfg) {
  int order[4] = {0, 1, 2, 3};
  rs.shuffle(order, order + 4);
  for (int op : order) {
    switch (op) {
      case 0:
        if (cfg.jitter_brightness > 0.0) {
          double f = rs.uniform(std::max(0.0, 1.0 - cfg.jitter_brightness),
                                1.0 + cfg.jitter_brightness);
          im = img::adjust_brightness(im, f);
        }
        break;
      case 1:
        if (cfg.jitter_contrast > 0.0) {
          double f = rs.uniform(std::max(0.0, 1.0 - cfg.jitter_contrast),
                                1.0 + cfg.jitter_contrast);
          im = img::adjust_contrast(im, f);
        }
        break;
      case 2:
        if (cfg.jitter_saturation > 0.0) {
          double f = rs.uniform(std::max(0.0, 1.0 - cfg.jitter_saturation),
                                1.0 + cfg.jitter_saturation);
          im = img::adjust_saturation(im, f);
        }
        break;
      default:
        if (cfg.jitter_hue > 0.0) {
          double f = rs.uniform(-cfg.jitter_hue, cfg.jitter_hue);
          im = img::adjust_hue(im, f);
        }
        break;
    }
  }
}

}  // namespace

void PatchConfig::validate() const {
  if (patch_size <= 0) throw ConfigError("patch_size must be positive");
  if (count <= 0) throw ConfigError("count must be positive");
  if (!(rrc_scale.first > 0.0) || rrc_scale.first > rrc_scale.second ||
      rrc_scale.second > 1.0) {
    throw ConfigError("rrc_scale must satisfy 0 < lo <= hi <= 1");
  }
  if (flip_prob < 0.0 || flip_prob > 1.0 || jitter_prob < 0.0 ||
      jitter_prob > 1.0) {
    throw ConfigError("probabilities must lie in [0, 1]");
  }
  if (jitter_brightness < 0.0 || jitter_contrast < 0.0 ||
      jitter_saturation < 0.0 || jitter_hue < 0.0 || jitter_hue > 0.5) {
    throw ConfigError("invalid jitter strengths");
  }
}

SourceImage from_pixels(img::ImageU8 rgb, std::string name) {
  if (rgb.channels != 3) throw ConfigError("SourceImage must be RGB");
  SourceImage src;
  src.content_hash = pixel_hash(rgb);
  src.pixels = std::move(rgb);
  src.name = std::move(name);
  return src;
}

SourceImage load_source_image(const std::string& path, bool strict) {
  img::ImageU8 decoded = img::decode_image_file(path);
  if (decoded.channels != 3) {
    if (strict) {
      throw ConfigError(path + ": expected an RGB image, got " +
                        std::to_string(decoded.channels) + " channel(s)");
    }
    std::cerr << "warning: " << path << " has " << decoded.channels
              << " channel(s); converting to RGB\n";
    decoded = img::force_rgb(decoded);
  }
  return from_pixels(std::move(decoded), fs::path(path).stem().string());
}

SourceImage make_noise_image(int height, int width, std::uint64_t seed) {
  if (height <= 0 || width <= 0) {
    throw ConfigError("noise image dimensions must be positive");
  }
  img::ImageU8 px(height, width, 3);
  rng::Stream rs(rng::derive(seed, 0));
  for (auto& v : px.data) {
    v = static_cast<std::uint8_t>(rs.uniform_int(256));
  }
  return from_pixels(std::move(px), "noise");
}

img::ImageU8 generate_patch(const SourceImage& src, std::int64_t index,
                            const PatchConfig& cfg) {
  cfg.validate();
  const int P = cfg.patch_size;
  if (src.height() < 2 * P || src.width() < 2 * P) {
    throw ConfigError("source image must be at least 2P on each side");
  }
  if (index < 0) throw ConfigError("patch index must be non-negative");

  rng::Stream rs(rng::derive(cfg.global_seed,
                             static_cast<std::uint64_t>(index)));

  // 1. random square crop of side 0.5*min(H, W)
  int side = std::min(src.height(), src.width()) / 2;
  int top = static_cast<int>(
      rs.uniform_int(static_cast<std::uint32_t>(src.height() - side + 1)));
  int left = static_cast<int>(
      rs.uniform_int(static_cast<std::uint32_t>(src.width() - side + 1)));

  // 2. random-resized-crop to side round(1.42*P). The two crops compose,
  // so the step-1 crop is never materialized.
  int rrc_side = static_cast<int>(std::lround(1.42 * P));
  CropBox box = sample_rrc_box(rs, side, side, cfg.rrc_scale);
  img::ImageF im =
      img::crop_resize_bilinear(src.pixels, top + box.top, left + box.left,
                                box.h, box.w, rrc_side, rrc_side);

  // 3. random rotation and shear
  double angle = rs.uniform(-cfg.affine_degrees, cfg.affine_degrees);
  double shear = rs.uniform(-cfg.affine_shear, cfg.affine_shear);
  im = img::rotate_shear(im, angle, shear);

  // 4-5. flips
  if (rs.bernoulli(cfg.flip_prob)) im = img::flip_vertical(im);
  if (rs.bernoulli(cfg.flip_prob)) im = img::flip_horizontal(im);

  // 6. center crop to P×P
  im = img::center_crop(im, P, P);

  // 7. color jitter
  if (rs.bernoulli(cfg.jitter_prob)) apply_color_jitter(im, rs, cfg);

  return img::to_u8_clamped(im);
}

PatchDataset generate_dataset(const SourceImage& src, const PatchConfig& cfg,
                              int workers) {
  cfg.validate();
  if (workers < 1) workers = 1;
  PatchDataset ds;
  ds.patch_size = cfg.patch_size;
  ds.manifest.source_name = src.name;
  ds.manifest.source_hash = src.content_hash;
  ds.manifest.config = cfg;
  std::size_t rec = ds.record_bytes();
  ds.records.resize(rec * static_cast<std::size_t>(cfg.count));

  std::atomic<std::int64_t> next{0};
  std::exception_ptr first_error;
  std::mutex err_mu;
  auto work = [&]() {
    try {
      for (;;) {
        std::int64_t i = next.fetch_add(1);
        if (i >= cfg.count) break;
        img::ImageU8 patch = generate_patch(src, i, cfg);
        std::copy(patch.data.begin(), patch.data.end(),
                  ds.records.begin() + static_cast<std::size_t>(i) * rec);
      }
    } catch (...) {
      std::lock_guard<std::mutex> lock(err_mu);
      if (!first_error) first_error = std::current_exception();
      next.store(cfg.count);
    }
  };
  if (workers == 1) {
    work();
  } else {
    std::vector<std::thread> pool;
    pool.reserve(static_cast<std::size_t>(workers));
    for (int t = 0; t < workers; ++t) pool.emplace_back(work);
    for (auto& th : pool) th.join();
  }
  if (first_error) std::rethrow_exception(first_error);
  return ds;
}

std::string DatasetManifest::to_json() const {
  json j;
  j["format_version"] = format_version;
  j["source"] = {{"name", source_name}, {"content_hash", source_hash}};
  j["config"] = {
      {"patch_size", config.patch_size},
      {"count", config.count},
      {"global_seed", config.global_seed},
      {"jitter",
       {config.jitter_brightness, config.jitter_contrast,
        config.jitter_saturation, config.jitter_hue}},
      {"affine_degrees", config.affine_degrees},
      {"affine_shear", config.affine_shear},
      {"rrc_scale", {config.rrc_scale.first, config.rrc_scale.second}},
      {"flip_prob", config.flip_prob},
      {"jitter_prob", config.jitter_prob},
  };
  return j.dump(2);
}

DatasetManifest DatasetManifest::from_json(const std::string& text) {
  json j = json::parse(text);
  DatasetManifest m;
  m.format_version = j.at("format_version").get<int>();
  m.source_name = j.at("source").at("name").get<std::string>();
  m.source_hash = j.at("source").at("content_hash").get<std::string>();
  const auto& c = j.at("config");
  m.config.patch_size = c.at("patch_size").get<int>();
  m.config.count = c.at("count").get<std::int64_t>();
  m.config.global_seed = c.at("global_seed").get<std::uint64_t>();
  m.config.jitter_brightness = c.at("jitter").at(0).get<double>();
  m.config.jitter_contrast = c.at("jitter").at(1).get<double>();
  m.config.jitter_saturation = c.at("jitter").at(2).get<double>();
  m.config.jitter_hue = c.at("jitter").at(3).get<double>();
  m.config.affine_degrees = c.at("affine_degrees").get<double>();
  m.config.affine_shear = c.at("affine_shear").get<double>();
  m.config.rrc_scale = {c.at("rrc_scale").at(0).get<double>(),
                        c.at("rrc_scale").at(1).get<double>()};
  m.config.flip_prob = c.at("flip_prob").get<double>();
  m.config.jitter_prob = c.at("jitter_prob").get<double>();
  return m;
}

void save_dataset(const PatchDataset& ds, const std::string& dir,
                  bool png_mode) {
  fs::create_directories(dir);
  fs::path sid_path = fs::path(dir) / "patches.sid";
  fs::path tmp_path = fs::path(dir) / "patches.sid.tmp";
  {
    std::ofstream os(tmp_path, std::ios::binary);
    if (!os) throw IoError("cannot open " + tmp_path.string());
    os.write("SID1", 4);
    binio::put_u32(os, static_cast<std::uint32_t>(ds.count()));
    binio::put_u32(os, static_cast<std::uint32_t>(ds.patch_size));
    binio::put_u32(os, static_cast<std::uint32_t>(ds.patch_size));
    binio::put_u32(os, 3);
    binio::put_u8(os, 0);  // dtype: uint8
    os.write(reinterpret_cast<const char*>(ds.records.data()),
             static_cast<std::streamsize>(ds.records.size()));
    if (!os) {
      os.close();
      std::error_code ec;
      fs::remove(tmp_path, ec);
      throw IoError("failed writing " + sid_path.string());
    }
  }
  fs::rename(tmp_path, sid_path);
  binio::write_file((fs::path(dir) / "patches.manifest.json").string(),
                    ds.manifest.to_json());
  if (png_mode) {
    fs::path png_dir = fs::path(dir) / "png";
    fs::create_directories(png_dir);
    for (std::int64_t i = 0; i < ds.count(); ++i) {
      img::ImageU8 patch(ds.patch_size, ds.patch_size, 3);
      auto r = ds.record(i);
      std::copy(r.begin(), r.end(), patch.data.begin());
      char name[32];
      std::snprintf(name, sizeof(name), "%06lld.png",
                    static_cast<long long>(i));
      img::encode_png(patch, (png_dir / name).string());
    }
  }
}

PatchDataset load_dataset(const std::string& dir_or_file) {
  fs::path sid_path = dir_or_file;
  if (fs::is_directory(sid_path)) sid_path /= "patches.sid";
  std::ifstream is(sid_path, std::ios::binary);
  if (!is) throw IoError("cannot open " + sid_path.string());
  char magic[4];
  if (!is.read(magic, 4) || std::memcmp(magic, "SID1", 4) != 0) {
    throw IoError(sid_path.string() + ": not a SID1 file");
  }
  std::uint32_t count = binio::get_u32(is);
  std::uint32_t height = binio::get_u32(is);
  std::uint32_t width = binio::get_u32(is);
  std::uint32_t channels = binio::get_u32(is);
  std::uint8_t dtype = binio::get_u8(is);
  if (height != width || channels != 3 || dtype != 0) {
    throw IoError(sid_path.string() + ": unsupported SID layout");
  }
  PatchDataset ds;
  ds.patch_size = static_cast<int>(height);
  ds.records.resize(static_cast<std::size_t>(count) * ds.record_bytes());
  if (!is.read(reinterpret_cast<char*>(ds.records.data()),
               static_cast<std::streamsize>(ds.records.size()))) {
    throw IoError(sid_path.string() + ": truncated record payload");
  }
  fs::path manifest_path = sid_path.parent_path() / "patches.manifest.json";
  if (fs::exists(manifest_path)) {
    auto bytes = binio::read_file(manifest_path.string());
    ds.manifest = DatasetManifest::from_json(
        std::string(bytes.begin(), bytes.end()));
  } else {
    ds.manifest.config.patch_size = ds.patch_size;
    ds.manifest.config.count = static_cast<std::int64_t>(count);
  }
  return ds;
}

}  // namespace onedatum::patchforge
