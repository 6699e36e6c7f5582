// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "onedatum/core/error.hpp"

namespace onedatum::data {

/// Labeled images, record-major, HWC interleaved u8.
struct LabeledImages {
  int height = 0;
  int width = 0;
  int channels = 0;
  int num_classes = 0;
  std::vector<std::uint8_t> pixels;
  std::vector<std::int32_t> labels;
  std::string content_hash;

  std::int64_t count() const { return static_cast<std::int64_t>(labels.size()); }
  std::size_t record_bytes() const {
    return static_cast<std::size_t>(height) * width * channels;
  }
  std::span<const std::uint8_t> record(std::int64_t i) const {
    return {pixels.data() + static_cast<std::size_t>(i) * record_bytes(),
            record_bytes()};
  }
  void compute_hash();
};

/// Labeled fixed-length waveforms (mono float).
struct LabeledClips {
  int samples_per_clip = 0;
  int sample_rate = 16000;
  int num_classes = 0;
  std::vector<float> samples;
  std::vector<std::int32_t> labels;
  std::string content_hash;

  std::int64_t count() const { return static_cast<std::int64_t>(labels.size()); }
  std::span<const float> record(std::int64_t i) const {
    return {samples.data() + static_cast<std::size_t>(i) * samples_per_clip,
            static_cast<std::size_t>(samples_per_clip)};
  }
};

/// Data cache root: $ONEDATUM_DATA if set, else ./data.
std::string default_data_root();

/// Loads the standard CIFAR binary distribution from
/// `<root>/cifar-10-batches-bin` or `<root>/cifar-100-binary`. Validates
/// the exact file layout and record counts; a missing or malformed file
/// raises an IoError with download instructions.
LabeledImages load_cifar(const std::string& root, const std::string& name,
                         bool train);

/// Loads a class-per-subdirectory tree of WAV files (SpeechCommands
/// style), resampled to 16 kHz and padded/cropped to 1 s.
LabeledClips load_wav_tree(const std::string& root,
                           std::size_t max_per_class = 0);

}  // namespace onedatum::data
