// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "onedatum/core/image.hpp"

namespace onedatum::patchforge {

/// The single source datum: decoded RGB pixels plus a provenance hash
/// computed over the pixel buffer (container-independent). Immutable
/// after load and safe to share across generation workers.
struct SourceImage {
  img::ImageU8 pixels;  // H×W×3
  std::string content_hash;
  std::string name;

  int height() const { return pixels.height; }
  int width() const { return pixels.width; }
};

/// Parameters of the patch pipeline. The defaults are the fixed
/// generation recipe; changing them changes the dataset identity, which
/// is why the full config is embedded in the dataset manifest.
struct PatchConfig {
  int patch_size = 32;
  std::int64_t count = 50000;
  std::uint64_t global_seed = 0;

  // photometric jitter strengths: brightness, contrast, saturation, hue
  double jitter_brightness = 0.4;
  double jitter_contrast = 0.4;
  double jitter_saturation = 0.4;
  double jitter_hue = 0.1;

  double affine_degrees = 30.0;
  double affine_shear = 30.0;
  std::pair<double, double> rrc_scale = {2e-3, 1.0};
  double flip_prob = 0.5;
  double jitter_prob = 0.5;

  /// Throws ConfigError on out-of-range values.
  void validate() const;
};

inline constexpr int kDatasetFormatVersion = 1;

struct DatasetManifest {
  std::string source_name;
  std::string source_hash;
  PatchConfig config;
  int format_version = kDatasetFormatVersion;

  std::string to_json() const;
  static DatasetManifest from_json(const std::string& text);
};

/// A packed, seed-reproducible patch dataset. Records are P×P×3 u8,
/// row-major, channel-last, in index order.
struct PatchDataset {
  int patch_size = 0;
  std::vector<std::uint8_t> records;
  DatasetManifest manifest;

  std::int64_t count() const {
    std::size_t rec = record_bytes();
    return rec == 0 ? 0 : static_cast<std::int64_t>(records.size() / rec);
  }
  std::size_t record_bytes() const {
    return static_cast<std::size_t>(patch_size) * patch_size * 3;
  }
  std::span<const std::uint8_t> record(std::int64_t i) const {
    return {records.data() + static_cast<std::size_t>(i) * record_bytes(),
            record_bytes()};
  }
};

/// Decodes an image file into a SourceImage. Non-RGB inputs are
/// converted to 3 channels with a warning, or rejected when `strict`.
SourceImage load_source_image(const std::string& path, bool strict = false);

/// Wraps an in-memory RGB raster as a source.
SourceImage from_pixels(img::ImageU8 rgb, std::string name);

/// I.i.d. uniform-[0,255] pixels; deterministic under `seed`.
SourceImage make_noise_image(int height, int width, std::uint64_t seed);

/// One patch. Pure function of (src, index, cfg): all randomness comes
/// from a per-index stream, so indices can be generated in any order or
/// in parallel. The pipeline, in order:
///   1. random crop of side 0.5*min(H, W)
///   2. random-resized-crop to side round(1.42*P), area scale rrc_scale
///   3. random rotation <= ±affine_degrees with shear <= ±affine_shear
///   4. vertical flip with p = flip_prob
///   5. horizontal flip with p = flip_prob
///   6. center crop to P×P
///   7. color jitter applied with p = jitter_prob
img::ImageU8 generate_patch(const SourceImage& src, std::int64_t index,
                            const PatchConfig& cfg);

/// Generates all cfg.count patches (optionally across `workers` threads;
/// the output is identical for any worker count).
PatchDataset generate_dataset(const SourceImage& src, const PatchConfig& cfg,
                              int workers = 1);

/// Persists a dataset under `dir` as patches.sid + patches.manifest.json
/// (plus one PNG per record under dir/png when `png_mode`). Cleans up
/// partial output on failure.
void save_dataset(const PatchDataset& ds, const std::string& dir,
                  bool png_mode = false);

/// Loads a dataset from a directory (or a direct path to a .sid file).
PatchDataset load_dataset(const std::string& dir_or_file);

}  // namespace onedatum::patchforge
