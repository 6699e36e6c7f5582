// SPDX-License-Identifier: Apache-2.0
#include "onedatum/audioforge/audioforge.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <mutex>
#include <thread>

#include <nlohmann/json.hpp>

#include "onedatum/core/binio.hpp"
#include "onedatum/core/fft.hpp"
#include "onedatum/core/hash.hpp"

namespace fs = std::filesystem;
using json = nlohmann::json;

namespace onedatum::audioforge {

namespace {

constexpr double kPi = 3.14159265358979323846;

const AudioOp kAllOps[] = {
    AudioOp::kAddBackgroundNoise, AudioOp::kChangeVolume, AudioOp::kClicks,
    AudioOp::kClip,               AudioOp::kHarmonic,     AudioOp::kHighPassFilter,
    AudioOp::kLowPassFilter,      AudioOp::kNormalize,    AudioOp::kPeakingEqualizer,
    AudioOp::kPercussive,         AudioOp::kPitchShift,   AudioOp::kReverb,
    AudioOp::kSpeed,              AudioOp::kTimeStretch,
};

// Sampling order at generation time is the order of this table.
const AudioOp kImplementedOps[] = {
    AudioOp::kAddBackgroundNoise, AudioOp::kChangeVolume,
    AudioOp::kClicks,             AudioOp::kClip,
    AudioOp::kHighPassFilter,     AudioOp::kLowPassFilter,
    AudioOp::kNormalize,          AudioOp::kPeakingEqualizer,
    AudioOp::kPitchShift,         AudioOp::kReverb,
    AudioOp::kSpeed,              AudioOp::kTimeStretch,
};

struct Biquad {
  double b0, b1, b2, a1, a2;  // normalized by a0

  std::vector<float> apply(const std::vector<float>& x) const {
    std::vector<float> y(x.size());
    double x1 = 0, x2 = 0, y1 = 0, y2 = 0;
    for (std::size_t i = 0; i < x.size(); ++i) {
      double v = b0 * x[i] + b1 * x1 + b2 * x2 - a1 * y1 - a2 * y2;
      x2 = x1;
      x1 = x[i];
      y2 = y1;
      y1 = v;
      y[i] = static_cast<float>(v);
    }
    return y;
  }
};

// RBJ audio-EQ-cookbook designs, Q = 1/sqrt(2) for the LP/HP pair.
Biquad design_lowpass(double fc, double fs) {
  double w0 = 2.0 * kPi * fc / fs;
  double alpha = std::sin(w0) / (2.0 * 0.70710678118654752440);
  double c = std::cos(w0);
  double a0 = 1.0 + alpha;
  return {(1.0 - c) / 2.0 / a0, (1.0 - c) / a0, (1.0 - c) / 2.0 / a0,
          -2.0 * c / a0, (1.0 - alpha) / a0};
}

Biquad design_highpass(double fc, double fs) {
  double w0 = 2.0 * kPi * fc / fs;
  double alpha = std::sin(w0) / (2.0 * 0.70710678118654752440);
  double c = std::cos(w0);
  double a0 = 1.0 + alpha;
  return {(1.0 + c) / 2.0 / a0, -(1.0 + c) / a0, (1.0 + c) / 2.0 / a0,
          -2.0 * c / a0, (1.0 - alpha) / a0};
}

Biquad design_peaking(double fc, double fs, double gain_db, double q) {
  double a = std::pow(10.0, gain_db / 40.0);
  double w0 = 2.0 * kPi * fc / fs;
  double alpha = std::sin(w0) / (2.0 * q);
  double c = std::cos(w0);
  double a0 = 1.0 + alpha / a;
  return {(1.0 + alpha * a) / a0, -2.0 * c / a0, (1.0 - alpha * a) / a0,
          -2.0 * c / a0, (1.0 - alpha / a) / a0};
}

std::vector<float> fit_length(std::vector<float> x, std::size_t n) {
  x.resize(n, 0.0f);  // crop or zero-pad at the tail
  return x;
}

double peak_abs(const std::vector<float>& x) {
  double p = 0.0;
  for (float v : x) p = std::max(p, static_cast<double>(std::fabs(v)));
  return p;
}

std::vector<float> fft_convolve_same(const std::vector<float>& x,
                                     const std::vector<float>& h) {
  std::size_t full = x.size() + h.size() - 1;
  std::size_t nfft = 1;
  while (nfft < full) nfft <<= 1;
  std::vector<fft::cfloat> X(nfft, {0, 0}), H(nfft, {0, 0});
  for (std::size_t i = 0; i < x.size(); ++i) X[i] = {x[i], 0};
  for (std::size_t i = 0; i < h.size(); ++i) H[i] = {h[i], 0};
  fft::transform(X);
  fft::transform(H);
  for (std::size_t i = 0; i < nfft; ++i) X[i] *= H[i];
  fft::transform(X, true);
  std::vector<float> y(x.size());
  for (std::size_t i = 0; i < x.size(); ++i) y[i] = X[i].real();
  return y;
}

}  // namespace

const char* op_name(AudioOp op) {
  switch (op) {
    case AudioOp::kAddBackgroundNoise: return "add-background-noise";
    case AudioOp::kChangeVolume: return "change-volume";
    case AudioOp::kClicks: return "clicks";
    case AudioOp::kClip: return "clip";
    case AudioOp::kHarmonic: return "harmonic";
    case AudioOp::kHighPassFilter: return "high-pass-filter";
    case AudioOp::kLowPassFilter: return "low-pass-filter";
    case AudioOp::kNormalize: return "normalize";
    case AudioOp::kPeakingEqualizer: return "peaking-equalizer";
    case AudioOp::kPercussive: return "percussive";
    case AudioOp::kPitchShift: return "pitch-shift";
    case AudioOp::kReverb: return "reverb";
    case AudioOp::kSpeed: return "speed";
    case AudioOp::kTimeStretch: return "time-stretch";
  }
  return "?";
}

AudioOp op_from_name(const std::string& name) {
  for (AudioOp op : kAllOps) {
    if (name == op_name(op)) return op;
  }
  throw ConfigError("unknown audio op: " + name);
}

std::span<const AudioOp> all_ops() { return kAllOps; }
std::span<const AudioOp> implemented_ops() { return kImplementedOps; }

void clip_in_place(std::vector<float>& x, float limit) {
  for (auto& v : x) {
    if (!std::isfinite(v)) v = 0.0f;
    v = std::clamp(v, -limit, limit);
  }
}

std::vector<float> resample_linear(const std::vector<float>& x,
                                   double factor) {
  if (factor <= 0.0) throw ConfigError("resample factor must be positive");
  if (x.empty()) return {};
  auto out_len = static_cast<std::size_t>(
      std::max<double>(1.0, std::round(static_cast<double>(x.size()) * factor)));
  std::vector<float> y(out_len);
  double step = 1.0 / factor;
  for (std::size_t i = 0; i < out_len; ++i) {
    double pos = static_cast<double>(i) * step;
    auto i0 = static_cast<std::size_t>(pos);
    if (i0 >= x.size() - 1) {
      y[i] = x.back();
      continue;
    }
    double w = pos - static_cast<double>(i0);
    y[i] = static_cast<float>(x[i0] * (1.0 - w) + x[i0 + 1] * w);
  }
  return y;
}

// Phase vocoder: analysis window 1024, synthesis hop 256, per-bin phase
// propagation with the instantaneous-frequency estimate.
std::vector<float> time_stretch(const std::vector<float>& x, double factor) {
  if (factor <= 0.0) throw ConfigError("stretch factor must be positive");
  if (x.empty()) return {};
  if (std::fabs(factor - 1.0) < 1e-9) return x;

  constexpr std::size_t N = 1024;
  constexpr std::size_t Hs = 256;
  const std::size_t in_len = x.size();
  const auto out_len = static_cast<std::size_t>(
      std::max<double>(1.0, std::round(in_len * factor)));

  std::vector<double> window(N);
  for (std::size_t i = 0; i < N; ++i) {
    window[i] = 0.5 * (1.0 - std::cos(2.0 * kPi * i / N));
  }

  std::size_t nframes = out_len > N ? (out_len - N + Hs - 1) / Hs + 1 : 1;
  std::vector<float> out(out_len + N, 0.0f);
  std::vector<float> wsum(out_len + N, 0.0f);
  std::vector<double> prev_phase(N, 0.0), synth_phase(N, 0.0);
  std::vector<fft::cfloat> frame(N);
  long prev_pos = 0;

  for (std::size_t k = 0; k < nframes; ++k) {
    long pos = static_cast<long>(std::floor(k * Hs / factor));
    for (std::size_t i = 0; i < N; ++i) {
      std::size_t idx = static_cast<std::size_t>(pos) + i;
      float v = idx < in_len ? x[idx] : 0.0f;
      frame[i] = fft::cfloat(static_cast<float>(v * window[i]), 0.0f);
    }
    fft::transform(frame.data(), N, false);

    std::vector<double> mag(N / 2 + 1), phase(N / 2 + 1);
    for (std::size_t b = 0; b <= N / 2; ++b) {
      mag[b] = std::abs(frame[b]);
      phase[b] = std::arg(frame[b]);
    }
    if (k == 0) {
      for (std::size_t b = 0; b <= N / 2; ++b) synth_phase[b] = phase[b];
    } else {
      double dp = static_cast<double>(std::max<long>(1, pos - prev_pos));
      for (std::size_t b = 0; b <= N / 2; ++b) {
        double omega = 2.0 * kPi * static_cast<double>(b) / N;
        double delta = phase[b] - prev_phase[b] - omega * dp;
        delta -= 2.0 * kPi * std::round(delta / (2.0 * kPi));
        double inst = omega + delta / dp;
        synth_phase[b] += inst * Hs;
      }
    }
    for (std::size_t b = 0; b <= N / 2; ++b) prev_phase[b] = phase[b];
    prev_pos = pos;

    // rebuild a Hermitian spectrum and resynthesize
    for (std::size_t b = 0; b <= N / 2; ++b) {
      frame[b] = std::polar(static_cast<float>(mag[b]),
                            static_cast<float>(synth_phase[b]));
    }
    for (std::size_t b = N / 2 + 1; b < N; ++b) {
      frame[b] = std::conj(frame[N - b]);
    }
    fft::transform(frame.data(), N, true);
    std::size_t off = k * Hs;
    for (std::size_t i = 0; i < N && off + i < out.size(); ++i) {
      out[off + i] += static_cast<float>(frame[i].real() * window[i]);
      wsum[off + i] += static_cast<float>(window[i] * window[i]);
    }
  }
  out.resize(out_len);
  for (std::size_t i = 0; i < out_len; ++i) {
    if (wsum[i] > 1e-8f) out[i] /= wsum[i];
  }
  return out;
}

std::vector<float> apply_augmentation(AudioOp op,
                                      const std::vector<float>& samples,
                                      int sample_rate, rng::Stream& rs) {
  const std::size_t n = samples.size();
  std::vector<float> y;
  switch (op) {
    case AudioOp::kAddBackgroundNoise: {
      // white noise at a uniform SNR in [5, 30] dB
      double snr_db = rs.uniform(5.0, 30.0);
      double power = 0.0;
      for (float v : samples) power += static_cast<double>(v) * v;
      power = n > 0 ? power / static_cast<double>(n) : 0.0;
      if (power <= 0.0) power = 1e-4;
      double noise_std = std::sqrt(power / std::pow(10.0, snr_db / 10.0));
      y = samples;
      for (auto& v : y) v += static_cast<float>(noise_std * rs.normal());
      break;
    }
    case AudioOp::kChangeVolume: {
      double gain = rs.uniform(0.25, 4.0);
      y = samples;
      for (auto& v : y) v = static_cast<float>(v * gain);
      break;
    }
    case AudioOp::kClicks: {
      // impulse train at 1-5 Hz with a random phase
      double rate = rs.uniform(1.0, 5.0);
      double phase = rs.uniform(0.0, 1.0 / rate);
      y = samples;
      static const float kClickKernel[3] = {0.8f, -0.5f, 0.2f};
      for (double t = phase; t * sample_rate < static_cast<double>(n);
           t += 1.0 / rate) {
        auto at = static_cast<std::size_t>(t * sample_rate);
        for (std::size_t j = 0; j < 3 && at + j < n; ++j) {
          y[at + j] += kClickKernel[j];
        }
      }
      break;
    }
    case AudioOp::kClip: {
      auto limit = static_cast<float>(rs.uniform(0.3, 0.9));
      y = samples;
      for (auto& v : y) v = std::clamp(v, -limit, limit);
      break;
    }
    case AudioOp::kHighPassFilter: {
      double fc = std::exp(rs.uniform(std::log(100.0), std::log(4000.0)));
      y = design_highpass(fc, sample_rate).apply(samples);
      break;
    }
    case AudioOp::kLowPassFilter: {
      double fc = std::exp(rs.uniform(std::log(1000.0), std::log(8000.0)));
      fc = std::min(fc, sample_rate / 2.0 * 0.999);
      y = design_lowpass(fc, sample_rate).apply(samples);
      break;
    }
    case AudioOp::kNormalize: {
      double p = peak_abs(samples);
      y = samples;
      if (p > 0.0) {
        for (auto& v : y) v = static_cast<float>(v / p);
      }
      break;
    }
    case AudioOp::kPeakingEqualizer: {
      double fc = std::exp(rs.uniform(std::log(100.0), std::log(6000.0)));
      double gain_db = rs.uniform(-12.0, 12.0);
      y = design_peaking(fc, sample_rate, gain_db, 1.0).apply(samples);
      break;
    }
    case AudioOp::kPitchShift: {
      double semitones = rs.uniform(-4.0, 4.0);
      double f = std::pow(2.0, semitones / 12.0);
      // stretch duration by f, then resample back: same length, pitch * f
      y = fit_length(resample_linear(time_stretch(samples, f), 1.0 / f), n);
      break;
    }
    case AudioOp::kReverb: {
      double rt60 = rs.uniform(0.1, 0.6);
      auto ir_len = static_cast<std::size_t>(rt60 * sample_rate);
      std::vector<float> ir(std::max<std::size_t>(ir_len, 2), 0.0f);
      ir[0] = 1.0f;
      double tau = rt60 / 6.91;
      for (std::size_t i = 1; i < ir.size(); ++i) {
        double env = std::exp(-static_cast<double>(i) / (sample_rate * tau));
        ir[i] = static_cast<float>(0.3 * rs.normal() * env);
      }
      y = fft_convolve_same(samples, ir);
      double p = peak_abs(y);
      if (p > 1.0) {
        for (auto& v : y) v = static_cast<float>(v / p);
      }
      break;
    }
    case AudioOp::kSpeed: {
      double factor = rs.uniform(0.8, 1.2);
      y = fit_length(resample_linear(samples, 1.0 / factor), n);
      break;
    }
    case AudioOp::kTimeStretch: {
      double factor = rs.uniform(0.8, 1.2);
      y = fit_length(time_stretch(samples, factor), n);
      break;
    }
    case AudioOp::kHarmonic:
    case AudioOp::kPercussive:
      throw ConfigError(std::string(op_name(op)) +
                        " is not implemented in this build");
  }
  clip_in_place(y);
  return y;
}

SourceClip from_samples(std::vector<float> samples, int sample_rate,
                        std::string name) {
  if (sample_rate <= 0) throw ConfigError("sample_rate must be positive");
  SourceClip clip;
  for (auto& v : samples) {
    if (!std::isfinite(v)) v = 0.0f;
    v = std::clamp(v, -1.0f, 1.0f);
  }
  hash::Fnv1a64 h;
  h.update_value(sample_rate);
  h.update(samples.data(), samples.size() * sizeof(float));
  clip.content_hash = h.hex();
  clip.samples = std::move(samples);
  clip.sample_rate = sample_rate;
  clip.name = std::move(name);
  return clip;
}

SourceClip load_source_clip(const std::string& path) {
  WavData wav = read_wav(path);
  std::vector<float> samples = std::move(wav.samples);
  if (wav.sample_rate != kSampleRate) {
    samples = resample_linear(
        samples, static_cast<double>(kSampleRate) / wav.sample_rate);
  }
  return from_samples(std::move(samples), kSampleRate,
                      fs::path(path).stem().string());
}

std::vector<float> generate_clip(const SourceClip& src, std::int64_t index,
                                 std::uint64_t global_seed) {
  auto seg_len = static_cast<std::size_t>(
      std::lround(kSegmentSeconds * src.sample_rate));
  if (src.samples.size() < seg_len) {
    throw ConfigError("source clip shorter than the 2 s segment length");
  }
  rng::Stream rs(rng::derive(global_seed, static_cast<std::uint64_t>(index)));
  auto start = rs.uniform_int(
      static_cast<std::uint32_t>(src.samples.size() - seg_len + 1));
  std::vector<float> segment(src.samples.begin() + start,
                             src.samples.begin() + start + seg_len);
  auto ops = implemented_ops();
  AudioOp op = ops[rs.uniform_int(static_cast<std::uint32_t>(ops.size()))];
  return apply_augmentation(op, segment, src.sample_rate, rs);
}

ClipDataset generate_clip_dataset(const SourceClip& src, std::int64_t count,
                                  std::uint64_t global_seed, int workers) {
  if (count <= 0) throw ConfigError("count must be positive");
  if (workers < 1) workers = 1;
  ClipDataset ds;
  ds.samples_per_clip = static_cast<int>(
      std::lround(kSegmentSeconds * src.sample_rate));
  ds.sample_rate = src.sample_rate;
  ds.manifest.source_name = src.name;
  ds.manifest.source_hash = src.content_hash;
  ds.manifest.global_seed = global_seed;
  ds.records.resize(static_cast<std::size_t>(count) * ds.samples_per_clip);

  std::atomic<std::int64_t> next{0};
  std::exception_ptr first_error;
  std::mutex err_mu;
  auto work = [&]() {
    try {
      for (;;) {
        std::int64_t i = next.fetch_add(1);
        if (i >= count) break;
        auto clip = generate_clip(src, i, global_seed);
        std::copy(clip.begin(), clip.end(),
                  ds.records.begin() +
                      static_cast<std::size_t>(i) * ds.samples_per_clip);
      }
    } catch (...) {
      std::lock_guard<std::mutex> lock(err_mu);
      if (!first_error) first_error = std::current_exception();
      next.store(count);
    }
  };
  if (workers == 1) {
    work();
  } else {
    std::vector<std::thread> pool;
    for (int t = 0; t < workers; ++t) pool.emplace_back(work);
    for (auto& th : pool) th.join();
  }
  if (first_error) std::rethrow_exception(first_error);
  return ds;
}

std::string ClipManifest::to_json() const {
  json j;
  j["format_version"] = format_version;
  j["source"] = {{"name", source_name}, {"content_hash", source_hash}};
  j["global_seed"] = global_seed;
  j["segment_seconds"] = segment_seconds;
  return j.dump(2);
}

ClipManifest ClipManifest::from_json(const std::string& text) {
  json j = json::parse(text);
  ClipManifest m;
  m.format_version = j.at("format_version").get<int>();
  m.source_name = j.at("source").at("name").get<std::string>();
  m.source_hash = j.at("source").at("content_hash").get<std::string>();
  m.global_seed = j.at("global_seed").get<std::uint64_t>();
  m.segment_seconds = j.at("segment_seconds").get<double>();
  return m;
}

void save_clip_dataset(const ClipDataset& ds, const std::string& dir) {
  fs::create_directories(dir);
  fs::path sad_path = fs::path(dir) / "clips.sad";
  fs::path tmp_path = fs::path(dir) / "clips.sad.tmp";
  {
    std::ofstream os(tmp_path, std::ios::binary);
    if (!os) throw IoError("cannot open " + tmp_path.string());
    os.write("SAD1", 4);
    binio::put_u32(os, static_cast<std::uint32_t>(ds.count()));
    binio::put_u32(os, static_cast<std::uint32_t>(ds.samples_per_clip));
    binio::put_u32(os, static_cast<std::uint32_t>(ds.sample_rate));
    binio::put_u8(os, 1);  // dtype: float32
    os.write(reinterpret_cast<const char*>(ds.records.data()),
             static_cast<std::streamsize>(ds.records.size() * sizeof(float)));
    if (!os) {
      os.close();
      std::error_code ec;
      fs::remove(tmp_path, ec);
      throw IoError("failed writing " + sad_path.string());
    }
  }
  fs::rename(tmp_path, sad_path);
  binio::write_file((fs::path(dir) / "clips.manifest.json").string(),
                    ds.manifest.to_json());
}

ClipDataset load_clip_dataset(const std::string& dir_or_file) {
  fs::path sad_path = dir_or_file;
  if (fs::is_directory(sad_path)) sad_path /= "clips.sad";
  std::ifstream is(sad_path, std::ios::binary);
  if (!is) throw IoError("cannot open " + sad_path.string());
  char magic[4];
  if (!is.read(magic, 4) || std::memcmp(magic, "SAD1", 4) != 0) {
    throw IoError(sad_path.string() + ": not a SAD1 file");
  }
  std::uint32_t count = binio::get_u32(is);
  std::uint32_t spc = binio::get_u32(is);
  std::uint32_t rate = binio::get_u32(is);
  std::uint8_t dtype = binio::get_u8(is);
  if (dtype != 1) throw IoError("unsupported SAD dtype");
  ClipDataset ds;
  ds.samples_per_clip = static_cast<int>(spc);
  ds.sample_rate = static_cast<int>(rate);
  ds.records.resize(static_cast<std::size_t>(count) * spc);
  if (!is.read(reinterpret_cast<char*>(ds.records.data()),
               static_cast<std::streamsize>(ds.records.size() * sizeof(float)))) {
    throw IoError(sad_path.string() + ": truncated record payload");
  }
  fs::path manifest_path = sad_path.parent_path() / "clips.manifest.json";
  if (fs::exists(manifest_path)) {
    auto bytes = binio::read_file(manifest_path.string());
    ds.manifest =
        ClipManifest::from_json(std::string(bytes.begin(), bytes.end()));
  }
  return ds;
}

// --- log-Mel ---------------------------------------------------------------

void SpectrogramConfig::validate() const {
  if (!(window_ms > hop_ms) || !(hop_ms > 0.0)) {
    throw ConfigError("window must exceed hop and both must be positive");
  }
  if (mel_bins <= 0) throw ConfigError("mel_bins must be positive");
  if (log_floor <= 0.0) throw ConfigError("log floor must be positive");
}

namespace {
double hz_to_mel(double f) { return 2595.0 * std::log10(1.0 + f / 700.0); }
double mel_to_hz(double m) { return 700.0 * (std::pow(10.0, m / 2595.0) - 1.0); }
}  // namespace

LogMelExtractor::LogMelExtractor(const SpectrogramConfig& cfg, int sample_rate)
    : cfg_(cfg), sample_rate_(sample_rate) {
  cfg.validate();
  window_ = static_cast<int>(std::lround(cfg.window_ms * sample_rate / 1000.0));
  hop_ = static_cast<int>(std::lround(cfg.hop_ms * sample_rate / 1000.0));
  nfft_ = 1;
  while (nfft_ < window_) nfft_ <<= 1;

  // symmetric Hann so that a reversed frame has the same window
  hann_.resize(window_);
  for (int i = 0; i < window_; ++i) {
    hann_[i] = static_cast<float>(
        0.5 * (1.0 - std::cos(2.0 * kPi * i / (window_ - 1))));
  }

  // triangular filters on mel-spaced corner points over [fmin, Nyquist]
  double nyquist = sample_rate / 2.0;
  double mel_lo = hz_to_mel(cfg.fmin_hz);
  double mel_hi = hz_to_mel(nyquist);
  std::vector<double> corners(cfg.mel_bins + 2);
  for (int i = 0; i < cfg.mel_bins + 2; ++i) {
    corners[i] = mel_to_hz(mel_lo + (mel_hi - mel_lo) * i / (cfg.mel_bins + 1));
  }
  centers_hz_.assign(corners.begin() + 1, corners.end() - 1);
  int nbins = nfft_ / 2 + 1;
  filters_.assign(cfg.mel_bins, std::vector<float>(nbins, 0.0f));
  for (int m = 0; m < cfg.mel_bins; ++m) {
    double lo = corners[m], mid = corners[m + 1], hi = corners[m + 2];
    for (int k = 0; k < nbins; ++k) {
      double f = static_cast<double>(k) * sample_rate / nfft_;
      if (f > lo && f < mid) {
        filters_[m][k] = static_cast<float>((f - lo) / (mid - lo));
      } else if (f >= mid && f < hi) {
        filters_[m][k] = static_cast<float>((hi - f) / (hi - mid));
      }
    }
  }
}

Spectrogram LogMelExtractor::compute(std::span<const float> waveform) const {
  if (static_cast<int>(waveform.size()) < window_) {
    throw ConfigError("waveform shorter than one analysis window");
  }
  Spectrogram spec;
  spec.frames =
      static_cast<int>((waveform.size() - window_) / hop_) + 1;
  spec.bins = cfg_.mel_bins;
  spec.data.resize(static_cast<std::size_t>(spec.frames) * spec.bins);

  std::vector<float> frame(window_);
  for (int t = 0; t < spec.frames; ++t) {
    const float* src = waveform.data() + static_cast<std::size_t>(t) * hop_;
    for (int i = 0; i < window_; ++i) frame[i] = src[i] * hann_[i];
    auto bins = fft::real_forward(frame.data(), frame.size(),
                                  static_cast<std::size_t>(nfft_));
    for (int m = 0; m < cfg_.mel_bins; ++m) {
      const auto& fr = filters_[m];
      double acc = 0.0;
      for (std::size_t k = 0; k < bins.size(); ++k) {
        if (fr[k] != 0.0f) acc += fr[k] * std::norm(bins[k]);
      }
      spec.data[static_cast<std::size_t>(t) * spec.bins + m] =
          static_cast<float>(std::log(acc + cfg_.log_floor));
    }
  }
  return spec;
}

Spectrogram compute_logmel(std::span<const float> waveform,
                           const SpectrogramConfig& cfg, int sample_rate) {
  return LogMelExtractor(cfg, sample_rate).compute(waveform);
}

std::vector<float> training_view(std::span<const float> clip,
                                 rng::Stream& rs, int sample_rate) {
  auto view_len = static_cast<std::size_t>(sample_rate);  // 1 second
  if (clip.size() < view_len) {
    throw ConfigError("clip shorter than the 1 s training view");
  }
  auto start =
      rs.uniform_int(static_cast<std::uint32_t>(clip.size() - view_len + 1));
  return {clip.begin() + start, clip.begin() + start + view_len};
}

std::vector<float> evaluate_clip(
    const std::function<std::vector<float>(std::span<const float>)>& predict,
    std::span<const float> clip, int sample_rate) {
  auto seg = static_cast<std::size_t>(sample_rate);
  std::size_t nseg = clip.size() / seg;
  if (nseg == 0) throw ConfigError("clip shorter than 1 s");
  std::vector<float> mean;
  for (std::size_t s = 0; s < nseg; ++s) {
    auto probs = predict(clip.subspan(s * seg, seg));
    if (mean.empty()) mean.assign(probs.size(), 0.0f);
    if (probs.size() != mean.size()) {
      throw RuntimeFailure("segment predictions disagree in length");
    }
    for (std::size_t i = 0; i < probs.size(); ++i) mean[i] += probs[i];
  }
  for (auto& v : mean) v /= static_cast<float>(nseg);
  return mean;
}

}  // namespace onedatum::audioforge
