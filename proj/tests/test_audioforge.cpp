// SPDX-License-Identifier: Apache-2.0
#include <doctest.h>

#include <cmath>
#include <complex>
#include <filesystem>
#include <fstream>

#include "onedatum/audioforge/audioforge.hpp"
#include "onedatum/core/fft.hpp"

using namespace onedatum;
namespace af = onedatum::audioforge;

namespace {

std::vector<float> sine(double freq_hz, double seconds, int sr = 16000,
                        double amp = 0.5) {
  auto n = static_cast<std::size_t>(seconds * sr);
  std::vector<float> x(n);
  for (std::size_t i = 0; i < n; ++i) {
    x[i] = static_cast<float>(
        amp * std::sin(2.0 * M_PI * freq_hz * static_cast<double>(i) / sr));
  }
  return x;
}

af::SourceClip noisy_clip(double seconds, std::uint64_t seed = 1) {
  rng::Stream rs(seed);
  auto n = static_cast<std::size_t>(seconds * af::kSampleRate);
  std::vector<float> x(n);
  for (auto& v : x) v = static_cast<float>(rs.uniform(-0.5, 0.5));
  return af::from_samples(std::move(x), af::kSampleRate, "noise-clip");
}

double dominant_freq(const std::vector<float>& x, int sr) {
  std::size_t nfft = 8192;
  auto bins = fft::real_forward(x.data(), std::min(x.size(), nfft), nfft);
  std::size_t best = 1;
  for (std::size_t k = 1; k < bins.size(); ++k) {
    if (std::abs(bins[k]) > std::abs(bins[best])) best = k;
  }
  return static_cast<double>(best) * sr / static_cast<double>(nfft);
}

}  // namespace

TEST_CASE("generate_clip: length, determinism, precondition") {
  auto src = noisy_clip(10.0);
  auto a = af::generate_clip(src, 3, 42);
  auto b = af::generate_clip(src, 3, 42);
  CHECK(a.size() == 32000);
  CHECK(a == b);
  auto c = af::generate_clip(src, 4, 42);
  CHECK(a != c);

  auto tiny = noisy_clip(1.5);
  CHECK_THROWS_AS(af::generate_clip(tiny, 0, 1), ConfigError);
}

TEST_CASE("augmentations: outputs finite, bounded, length-preserving") {
  auto src = noisy_clip(2.0, 9);
  for (af::AudioOp op : af::implemented_ops()) {
    rng::Stream rs(7);
    auto y = af::apply_augmentation(op, src.samples, af::kSampleRate, rs);
    REQUIRE(y.size() == src.samples.size());
    for (float v : y) {
      REQUIRE(std::isfinite(v));
      REQUIRE(v >= -1.0f);
      REQUIRE(v <= 1.0f);
    }
  }
}

TEST_CASE("augmentations: unimplemented ops are rejected") {
  auto src = noisy_clip(2.0);
  rng::Stream rs(1);
  CHECK_THROWS_AS(af::apply_augmentation(af::AudioOp::kHarmonic, src.samples,
                                         af::kSampleRate, rs),
                  ConfigError);
  CHECK_THROWS_AS(af::apply_augmentation(af::AudioOp::kPercussive, src.samples,
                                         af::kSampleRate, rs),
                  ConfigError);
  CHECK(af::all_ops().size() == 14);
  CHECK(af::implemented_ops().size() == 12);
  CHECK(af::op_from_name("pitch-shift") == af::AudioOp::kPitchShift);
  CHECK_THROWS_AS(af::op_from_name("no-such-op"), ConfigError);
}

TEST_CASE("normalize is idempotent on peak-normalized input") {
  auto x = sine(500.0, 2.0, af::kSampleRate, 0.37);
  rng::Stream rs1(5), rs2(5);
  auto once = af::apply_augmentation(af::AudioOp::kNormalize, x,
                                     af::kSampleRate, rs1);
  auto twice = af::apply_augmentation(af::AudioOp::kNormalize, once,
                                      af::kSampleRate, rs2);
  REQUIRE(once.size() == twice.size());
  for (std::size_t i = 0; i < once.size(); ++i) {
    CHECK(std::abs(once[i] - twice[i]) < 1e-6f);
  }
}

TEST_CASE("change-volume equals direct scalar multiplication") {
  auto x = sine(313.0, 2.0, af::kSampleRate, 0.2);
  rng::Stream rs(99);
  auto y = af::apply_augmentation(af::AudioOp::kChangeVolume, x,
                                  af::kSampleRate, rs);
  rng::Stream oracle_rs(99);  // same stream: first draw is the gain
  auto gain = static_cast<float>(oracle_rs.uniform(0.25, 4.0));
  for (std::size_t i = 0; i < x.size(); ++i) {
    float expect = std::clamp(x[i] * gain, -1.0f, 1.0f);
    REQUIRE(std::abs(y[i] - expect) < 1e-6f);
  }
}

TEST_CASE("resample: identity factor and length scaling") {
  auto x = sine(440.0, 1.0);
  auto same = af::resample_linear(x, 1.0);
  CHECK(same == x);
  auto half = af::resample_linear(x, 0.5);
  CHECK(half.size() == x.size() / 2);
  // reading twice as fast doubles the observed frequency
  CHECK(dominant_freq(half, 16000) == doctest::Approx(880.0).epsilon(0.02));
}

TEST_CASE("time_stretch preserves pitch while changing length") {
  auto x = sine(1000.0, 1.0);
  auto stretched = af::time_stretch(x, 1.25);
  CHECK(std::abs(static_cast<double>(stretched.size()) - 20000.0) < 2.0);
  // analyze the middle to avoid edge transients
  std::vector<float> mid(stretched.begin() + 4000, stretched.begin() + 14000);
  CHECK(dominant_freq(mid, 16000) == doctest::Approx(1000.0).epsilon(0.02));

  auto compressed = af::time_stretch(x, 0.8);
  CHECK(std::abs(static_cast<double>(compressed.size()) - 12800.0) < 2.0);
  std::vector<float> mid2(compressed.begin() + 2000,
                          compressed.begin() + 10000);
  CHECK(dominant_freq(mid2, 16000) == doctest::Approx(1000.0).epsilon(0.02));
}

TEST_CASE("logmel: 1 s at 16 kHz gives 98x64") {
  af::SpectrogramConfig cfg;
  auto x = sine(440.0, 1.0);
  auto spec = af::compute_logmel(x, cfg);
  CHECK(spec.frames == 98);  // floor((16000-400)/160)+1
  CHECK(spec.bins == 64);
}

TEST_CASE("logmel: silence is a constant log(eps) matrix") {
  af::SpectrogramConfig cfg;
  std::vector<float> zeros(16000, 0.0f);
  auto spec = af::compute_logmel(zeros, cfg);
  float expect = std::log(1e-6f);
  for (float v : spec.data) CHECK(v == doctest::Approx(expect).epsilon(1e-6));
}

TEST_CASE("logmel: pure tone at a filter center dominates that filter") {
  af::SpectrogramConfig cfg;
  af::LogMelExtractor ex(cfg, af::kSampleRate);
  const int target_bin = 40;
  double freq = ex.filter_center_hz(target_bin);
  auto x = sine(freq, 1.0);
  auto spec = ex.compute(x);
  for (int t = 0; t < spec.frames; ++t) {
    int argmax = 0;
    for (int b = 1; b < spec.bins; ++b) {
      if (spec.at(t, b) > spec.at(t, argmax)) argmax = b;
    }
    REQUIRE(argmax == target_bin);
  }
}

TEST_CASE("logmel: filterbank rows are positive and cover the band") {
  af::SpectrogramConfig cfg;
  af::LogMelExtractor ex(cfg, af::kSampleRate);
  for (int m = 0; m < cfg.mel_bins; ++m) {
    const auto& row = ex.filter_row(m);
    double sum = 0.0;
    for (float w : row) {
      REQUIRE(w >= 0.0f);
      sum += w;
    }
    // flat magnitude spectrum -> strictly positive energy in every bin
    REQUIRE(sum > 0.0);
  }
}

TEST_CASE("logmel: time reversal reverses frame order on aligned input") {
  af::SpectrogramConfig cfg;
  // length = window + k*hop exactly => frames tile the signal
  const std::size_t len = 400 + 20 * 160;
  rng::Stream rs(17);
  std::vector<float> x(len);
  for (auto& v : x) v = static_cast<float>(rs.uniform(-0.8, 0.8));
  std::vector<float> rev(x.rbegin(), x.rend());

  auto a = af::compute_logmel(x, cfg);
  auto b = af::compute_logmel(rev, cfg);
  REQUIRE(a.frames == b.frames);
  for (int t = 0; t < a.frames; ++t) {
    for (int m = 0; m < a.bins; ++m) {
      REQUIRE(a.at(t, m) ==
              doctest::Approx(b.at(a.frames - 1 - t, m)).epsilon(1e-3));
    }
  }
}

TEST_CASE("training_view: 1 s crop, reproducible under a fixed stream") {
  auto src = noisy_clip(2.0);
  rng::Stream rs(5);
  auto v1 = af::training_view(src.samples, rs);
  CHECK(v1.size() == 16000);
  rng::Stream rs2(5);
  auto v2 = af::training_view(src.samples, rs2);
  CHECK(v1 == v2);
  // exactly 1 s of input has a single valid offset: the prefix
  std::vector<float> one_second(src.samples.begin(),
                                src.samples.begin() + 16000);
  rng::Stream rs3(8);
  auto v3 = af::training_view(one_second, rs3);
  CHECK(v3 == one_second);
}

TEST_CASE("evaluate_clip: averages non-overlapping 1 s segments") {
  // predictor returns [mean, 1-mean] of the segment
  auto predict = [](std::span<const float> seg) {
    double m = 0.0;
    for (float v : seg) m += v;
    m = m / static_cast<double>(seg.size()) * 0.5 + 0.5;
    return std::vector<float>{static_cast<float>(m), static_cast<float>(1.0 - m)};
  };

  std::vector<float> clip(static_cast<std::size_t>(3.5 * 16000), 0.0f);
  std::fill(clip.begin(), clip.begin() + 16000, 0.4f);
  std::fill(clip.begin() + 16000, clip.begin() + 32000, -0.4f);
  // remaining 1.5 s stays zero; only 3 whole segments count
  auto probs = af::evaluate_clip(predict, clip);
  REQUIRE(probs.size() == 2);
  double e0 = ((0.4 * 0.5 + 0.5) + (-0.4 * 0.5 + 0.5) + 0.5) / 3.0;
  CHECK(probs[0] == doctest::Approx(e0).epsilon(1e-6));

  // 1 s clip: identical to a single forward pass
  std::vector<float> one(16000, 0.25f);
  auto p1 = af::evaluate_clip(predict, one);
  auto direct = predict(one);
  CHECK(p1[0] == doctest::Approx(direct[0]));

  std::vector<float> tooshort(100, 0.0f);
  CHECK_THROWS_AS(af::evaluate_clip(predict, tooshort), ConfigError);
}

TEST_CASE("clip dataset: determinism and sad round trip") {
  auto src = noisy_clip(5.0);
  auto ds1 = af::generate_clip_dataset(src, 8, 77, 1);
  auto ds4 = af::generate_clip_dataset(src, 8, 77, 4);
  CHECK(ds1.records == ds4.records);
  CHECK(ds1.count() == 8);
  CHECK(ds1.samples_per_clip == 32000);

  auto dir = std::filesystem::temp_directory_path() / "onedatum_sad_test";
  std::filesystem::remove_all(dir);
  af::save_clip_dataset(ds1, dir.string());
  auto back = af::load_clip_dataset(dir.string());
  CHECK(back.records == ds1.records);
  CHECK(back.sample_rate == 16000);
  CHECK(back.manifest.source_hash == src.content_hash);
  std::filesystem::remove_all(dir);
}

TEST_CASE("wav: write/read round trip within quantization error") {
  auto x = sine(700.0, 0.25, 16000, 0.8);
  auto path = std::filesystem::temp_directory_path() / "onedatum_rt.wav";
  af::write_wav_pcm16(path.string(), x, 16000);
  auto wav = af::read_wav(path.string());
  REQUIRE(wav.sample_rate == 16000);
  REQUIRE(wav.samples.size() == x.size());
  for (std::size_t i = 0; i < x.size(); ++i) {
    CHECK(std::abs(wav.samples[i] - x[i]) < 2.0f / 32767.0f);
  }
  std::filesystem::remove(path);
}
