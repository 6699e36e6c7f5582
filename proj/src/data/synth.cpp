// SPDX-License-Identifier: Apache-2.0
#include "onedatum/data/synth.hpp"

#include <cmath>

#include "onedatum/core/rng.hpp"

namespace onedatum::data {

namespace {
constexpr double kPi = 3.14159265358979323846;
}

LabeledImages make_synth_images(std::int64_t n, std::uint64_t seed,
                                int side) {
  LabeledImages out;
  out.height = out.width = side;
  out.channels = 3;
  out.num_classes = 10;
  out.pixels.reserve(static_cast<std::size_t>(n) * side * side * 3);
  rng::Stream rs(seed);
  for (std::int64_t i = 0; i < n; ++i) {
    int k = static_cast<int>(rs.uniform_int(10));
    out.labels.push_back(k);
    double hue = k / 10.0;
    double theta = k * kPi / 10.0;
    double phase = rs.uniform(0.0, 2.0 * kPi);
    double bright = rs.uniform(0.8, 1.2);
    double r, g, b;
    {
      double h6 = hue * 6.0;
      int seg = static_cast<int>(h6) % 6;
      double f = h6 - std::floor(h6);
      double p = 0.3, q = 1.0 - 0.7 * f, t = 0.3 + 0.7 * f;
      switch (seg) {
        case 0: r = 1; g = t; b = p; break;
        case 1: r = q; g = 1; b = p; break;
        case 2: r = p; g = 1; b = t; break;
        case 3: r = p; g = q; b = 1; break;
        case 4: r = t; g = p; b = 1; break;
        default: r = 1; g = p; b = q; break;
      }
    }
    double cs = std::cos(theta), sn = std::sin(theta);
    for (int y = 0; y < side; ++y) {
      for (int x = 0; x < side; ++x) {
        double u = (x * cs + y * sn) * (2.0 * kPi / 6.0);
        double grate = 0.5 + 0.5 * std::sin(u + phase);
        double noise = rs.uniform(-20.0, 20.0);
        double scale = bright * (110.0 + 110.0 * grate);
        auto px = [&](double base) {
          double v = base * scale + noise;
          return static_cast<std::uint8_t>(std::min(255.0, std::max(0.0, v)));
        };
        out.pixels.push_back(px(r));
        out.pixels.push_back(px(g));
        out.pixels.push_back(px(b));
      }
    }
  }
  out.compute_hash();
  return out;
}

patchforge::SourceImage make_synth_source(int height, int width,
                                          std::uint64_t seed) {
  img::ImageU8 px(height, width, 3);
  rng::Stream rs(seed);
  double p1 = rs.uniform(0.0, 2.0 * kPi);
  double p2 = rs.uniform(0.0, 2.0 * kPi);
  double p3 = rs.uniform(0.0, 2.0 * kPi);
  for (int y = 0; y < height; ++y) {
    for (int x = 0; x < width; ++x) {
      double fx = static_cast<double>(x) / width;
      double fy = static_cast<double>(y) / height;
      double r = 0.5 + 0.5 * std::sin(2 * kPi * (3.0 * fx + 1.0 * fy) + p1);
      double g = 0.5 + 0.5 * std::sin(2 * kPi * (1.0 * fx + 4.0 * fy) + p2);
      double b = 0.5 + 0.5 * std::sin(2 * kPi * (5.0 * fx - 2.0 * fy) + p3);
      double t1 = std::sin((x * 0.9 + y * 0.2) * 1.1);
      double t2 = std::sin((x * 0.1 - y * 0.8) * 1.7);
      double t3 = ((x / 7 + y / 11) % 2 == 0) ? 0.12 : -0.12;
      double noise = rs.uniform(-0.06, 0.06);
      auto emit = [&](double v, double tex) {
        double out =
            255.0 * std::min(1.0, std::max(0.0, v + 0.18 * tex + noise));
        return static_cast<std::uint8_t>(out);
      };
      px.at(y, x, 0) = emit(r, t1 + t3);
      px.at(y, x, 1) = emit(g, t2 - t3);
      px.at(y, x, 2) = emit(b, t1 * t2);
    }
  }
  return patchforge::from_pixels(std::move(px), "synth-standin");
}

LabeledClips make_synth_clips(std::int64_t n, std::uint64_t seed) {
  LabeledClips out;
  out.sample_rate = 16000;
  out.samples_per_clip = 16000;
  out.num_classes = 10;
  rng::Stream rs(seed);
  for (std::int64_t i = 0; i < n; ++i) {
    int k = static_cast<int>(rs.uniform_int(10));
    out.labels.push_back(k);
    double f0 = 200.0 * std::pow(1.35, k);       // class base tone
    double fm = 2.0 + (k % 5);                   // modulation rate
    double phase = rs.uniform(0.0, 2.0 * kPi);
    double amp = rs.uniform(0.3, 0.7);
    for (int t = 0; t < out.samples_per_clip; ++t) {
      double ts = static_cast<double>(t) / out.sample_rate;
      double mod = 1.0 + 0.3 * std::sin(2.0 * kPi * fm * ts);
      double v = amp * std::sin(2.0 * kPi * f0 * mod * ts + phase) +
                 rs.uniform(-0.02, 0.02);
      out.samples.push_back(static_cast<float>(v));
    }
  }
  return out;
}

audioforge::SourceClip make_synth_recording(double seconds,
                                            std::uint64_t seed) {
  const int sr = 16000;
  auto n = static_cast<std::size_t>(seconds * sr);
  rng::Stream rs(seed);
  std::vector<float> x(n, 0.0f);
  // three wandering tones
  double freqs[3] = {rs.uniform(150, 400), rs.uniform(500, 1200),
                     rs.uniform(1500, 3500)};
  double phases[3] = {0.0, 0.0, 0.0};
  double drift[3] = {rs.uniform(-0.3, 0.3), rs.uniform(-0.8, 0.8),
                     rs.uniform(-2.0, 2.0)};
  double lp = 0.0;
  for (std::size_t t = 0; t < n; ++t) {
    double ts = static_cast<double>(t) / sr;
    double v = 0.0;
    for (int k = 0; k < 3; ++k) {
      double f = freqs[k] * (1.0 + 0.05 * std::sin(2.0 * kPi * 0.2 * ts) +
                             drift[k] * 0.01 * ts);
      phases[k] += 2.0 * kPi * f / sr;
      double env = 0.55 + 0.45 * std::sin(2.0 * kPi * (0.07 + 0.05 * k) * ts);
      v += (0.22 - 0.05 * k) * env * std::sin(phases[k]);
    }
    lp = 0.995 * lp + 0.005 * rs.uniform(-1.0, 1.0);  // slow colored noise
    v += 1.5 * lp;
    x[t] = static_cast<float>(std::clamp(v, -1.0, 1.0));
  }
  return audioforge::from_samples(std::move(x), sr, "synth-recording");
}

}  // namespace onedatum::data
