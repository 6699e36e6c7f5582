// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstdint>
#include <functional>
#include <span>
#include <string>
#include <vector>

#include "onedatum/core/error.hpp"
#include "onedatum/core/rng.hpp"

namespace onedatum::audioforge {

inline constexpr int kSampleRate = 16000;  // all sources resampled on load
inline constexpr double kSegmentSeconds = 2.0;
inline constexpr int kClipFormatVersion = 1;

/// The single source recording: mono float waveform in [-1, 1].
struct SourceClip {
  std::vector<float> samples;
  int sample_rate = kSampleRate;
  std::string content_hash;
  std::string name;

  double duration() const {
    return static_cast<double>(samples.size()) / sample_rate;
  }
};

/// The augmentation vocabulary. Names follow the published op list; two
/// of them (harmonic, percussive) are declared but not implemented here
/// and are rejected by apply_augmentation.
enum class AudioOp {
  kAddBackgroundNoise,
  kChangeVolume,
  kClicks,
  kClip,
  kHarmonic,
  kHighPassFilter,
  kLowPassFilter,
  kNormalize,
  kPeakingEqualizer,
  kPercussive,
  kPitchShift,
  kReverb,
  kSpeed,
  kTimeStretch,
};

const char* op_name(AudioOp op);
AudioOp op_from_name(const std::string& name);

/// All 14 vocabulary ops.
std::span<const AudioOp> all_ops();
/// The ops this build implements; generate_clip samples uniformly
/// from this set, in this order.
std::span<const AudioOp> implemented_ops();

/// Applies one augmentation with parameters drawn from `rs` (documented
/// ranges; see the implementation). Output has the input's length and is
/// clipped to [-1, 1]. Throws ConfigError for unimplemented ops.
std::vector<float> apply_augmentation(AudioOp op,
                                      const std::vector<float>& samples,
                                      int sample_rate, rng::Stream& rs);

// waveform building blocks, used by the augmentations and exposed for
// tests
std::vector<float> resample_linear(const std::vector<float>& x, double factor);
std::vector<float> time_stretch(const std::vector<float>& x, double factor);
void clip_in_place(std::vector<float>& x, float limit = 1.0f);

/// Loads a WAV file (PCM 16/24/32-bit or float32), mixes to mono and
/// resamples to 16 kHz.
SourceClip load_source_clip(const std::string& path);
SourceClip from_samples(std::vector<float> samples, int sample_rate,
                        std::string name);

/// One augmented 2-second segment: random 2 s crop of the source, then
/// exactly one augmentation drawn uniformly from implemented_ops().
/// Deterministic per (global_seed, index).
std::vector<float> generate_clip(const SourceClip& src, std::int64_t index,
                                 std::uint64_t global_seed);

struct ClipManifest {
  std::string source_name;
  std::string source_hash;
  std::uint64_t global_seed = 0;
  double segment_seconds = kSegmentSeconds;
  int format_version = kClipFormatVersion;

  std::string to_json() const;
  static ClipManifest from_json(const std::string& text);
};

/// Packed clip dataset; records are float32 waveforms of equal length.
struct ClipDataset {
  int samples_per_clip = 0;
  int sample_rate = kSampleRate;
  std::vector<float> records;
  ClipManifest manifest;

  std::int64_t count() const {
    return samples_per_clip == 0
               ? 0
               : static_cast<std::int64_t>(records.size() / samples_per_clip);
  }
  std::span<const float> record(std::int64_t i) const {
    return {records.data() +
                static_cast<std::size_t>(i) * samples_per_clip,
            static_cast<std::size_t>(samples_per_clip)};
  }
};

ClipDataset generate_clip_dataset(const SourceClip& src, std::int64_t count,
                                  std::uint64_t global_seed, int workers = 1);

/// clips.sad + clips.manifest.json under `dir`.
void save_clip_dataset(const ClipDataset& ds, const std::string& dir);
ClipDataset load_clip_dataset(const std::string& dir_or_file);

// --- log-Mel spectrograms -------------------------------------------------

struct SpectrogramConfig {
  double window_ms = 25.0;
  double hop_ms = 10.0;
  int mel_bins = 64;
  double log_floor = 1e-6;   // epsilon added to the power spectrogram
  double fmin_hz = 60.0;     // filterbank span: [fmin, Nyquist]

  void validate() const;
};

/// Row-major T×mel_bins matrix.
struct Spectrogram {
  int frames = 0;
  int bins = 0;
  std::vector<float> data;

  float at(int t, int b) const { return data[static_cast<std::size_t>(t) * bins + b]; }
};

/// Precomputes the Hann window and Mel filterbank for a sample rate.
class LogMelExtractor {
 public:
  LogMelExtractor(const SpectrogramConfig& cfg, int sample_rate);

  /// frames = floor((len - window) / hop) + 1; no padding.
  Spectrogram compute(std::span<const float> waveform) const;

  int window_samples() const { return window_; }
  int hop_samples() const { return hop_; }
  int fft_size() const { return nfft_; }
  /// filterbank weight of mel bin `m` for FFT bin `k`
  const std::vector<float>& filter_row(int m) const { return filters_[m]; }
  /// center frequency (Hz) of mel bin `m`
  double filter_center_hz(int m) const { return centers_hz_[m]; }

 private:
  SpectrogramConfig cfg_;
  int sample_rate_;
  int window_;
  int hop_;
  int nfft_;
  std::vector<float> hann_;
  std::vector<std::vector<float>> filters_;
  std::vector<double> centers_hz_;
};

Spectrogram compute_logmel(std::span<const float> waveform,
                           const SpectrogramConfig& cfg,
                           int sample_rate = kSampleRate);

/// Contiguous 1-second crop at a uniform offset.
std::vector<float> training_view(std::span<const float> clip,
                                 rng::Stream& rs, int sample_rate = kSampleRate);

/// Splits the clip into consecutive non-overlapping 1 s segments
/// (remainder dropped) and averages `predict` outputs across segments.
/// `predict` maps a 1 s waveform to class probabilities.
std::vector<float> evaluate_clip(
    const std::function<std::vector<float>(std::span<const float>)>& predict,
    std::span<const float> clip, int sample_rate = kSampleRate);

// --- WAV ------------------------------------------------------------------

struct WavData {
  std::vector<float> samples;  // mono after mixdown
  int sample_rate = 0;
};

WavData read_wav(const std::string& path);
void write_wav_pcm16(const std::string& path, std::span<const float> samples,
                     int sample_rate);

}  // namespace onedatum::audioforge
