// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "onedatum/core/error.hpp"

namespace onedatum::img {

/// Interleaved HWC 8-bit image.
struct ImageU8 {
  int height = 0;
  int width = 0;
  int channels = 0;
  std::vector<std::uint8_t> data;

  ImageU8() = default;
  ImageU8(int h, int w, int c)
      : height(h), width(w), channels(c),
        data(static_cast<std::size_t>(h) * w * c, 0) {}

  std::uint8_t& at(int y, int x, int c) {
    return data[(static_cast<std::size_t>(y) * width + x) * channels + c];
  }
  std::uint8_t at(int y, int x, int c) const {
    return data[(static_cast<std::size_t>(y) * width + x) * channels + c];
  }
};

/// Interleaved HWC float image. Intensity range [0, 255] throughout the
/// augmentation pipeline; conversion back to u8 clamps.
struct ImageF {
  int height = 0;
  int width = 0;
  int channels = 0;
  std::vector<float> data;

  ImageF() = default;
  ImageF(int h, int w, int c)
      : height(h), width(w), channels(c),
        data(static_cast<std::size_t>(h) * w * c, 0.0f) {}

  float& at(int y, int x, int c) {
    return data[(static_cast<std::size_t>(y) * width + x) * channels + c];
  }
  float at(int y, int x, int c) const {
    return data[(static_cast<std::size_t>(y) * width + x) * channels + c];
  }
};

ImageF to_float(const ImageU8& in);
ImageU8 to_u8_clamped(const ImageF& in);

ImageF crop(const ImageF& in, int top, int left, int h, int w);
ImageF center_crop(const ImageF& in, int h, int w);
ImageF flip_horizontal(const ImageF& in);
ImageF flip_vertical(const ImageF& in);

/// Bilinear resize with half-pixel-centered sampling.
ImageF resize_bilinear(const ImageF& in, int out_h, int out_w);

/// crop(in, top, left, h, w) followed by resize_bilinear, fused so the
/// crop is never materialized. Samples the 8-bit source directly;
/// numerically identical to the two-step form.
ImageF crop_resize_bilinear(const ImageU8& in, int top, int left, int h,
                            int w, int out_h, int out_w);

/// Rotation + x-shear about the image center, bilinear sampling with
/// mirrored (reflect-101) borders. Angles in degrees.
ImageF rotate_shear(const ImageF& in, double angle_deg, double shear_deg);

// Photometric ops on RGB float images; factors as in the common
// torch-style jitter semantics. Outputs are NOT clamped; the pipeline
// clamps once on the final u8 conversion.
ImageF adjust_brightness(const ImageF& in, double factor);
ImageF adjust_contrast(const ImageF& in, double factor);
ImageF adjust_saturation(const ImageF& in, double factor);
/// `shift` is a fraction of the hue circle in [-0.5, 0.5].
ImageF adjust_hue(const ImageF& in, double shift);

/// Luminance (Rec.601) grayscale, single channel.
ImageF rgb_to_gray(const ImageF& in);

// --- codecs -------------------------------------------------------------
// Supported containers: PNG (8-bit, non-interlaced), PPM/PGM (binary),
// BMP (24/32-bit uncompressed). Decoded output is always 8-bit.

ImageU8 decode_image_file(const std::string& path);
ImageU8 decode_image(const std::uint8_t* bytes, std::size_t len);

/// Converts to 3 channels: gray replicated, alpha dropped.
ImageU8 force_rgb(const ImageU8& in);

void encode_ppm(const ImageU8& rgb, const std::string& path);
void encode_png(const ImageU8& img, const std::string& path);

}  // namespace onedatum::img
