// SPDX-License-Identifier: Apache-2.0
#include <cmath>

#include "onedatum/core/fft.hpp"
#include "onedatum/lens/lens.hpp"

namespace onedatum::lens {

namespace {
constexpr double kPi = 3.14159265358979323846;

// Log-Gabor transfer function at normalized frequency radius r (cycles
// per pixel) and angle phi, for center frequency f0 and orientation
// theta. Radial log-sigma 0.55 (about 1.4 octaves); angular sigma
// 0.9 * pi / orientations; orientation distance taken modulo pi so the
// filter is even-symmetric and its spatial response is real.
double gabor_weight(double r, double phi, double f0, double theta,
                    double sigma_phi) {
  if (r <= 0.0) return 0.0;
  double radial =
      std::exp(-std::pow(std::log(r / f0), 2.0) / (2.0 * 0.55 * 0.55));
  double d = std::fmod(std::fabs(phi - theta), kPi);
  d = std::min(d, kPi - d);
  double angular = std::exp(-d * d / (2.0 * sigma_phi * sigma_phi));
  return radial * angular;
}
}  // namespace

GistBank::GistBank(const GistConfig& cfg) : cfg_(cfg) {
  const int n = cfg.size;
  if ((n & (n - 1)) != 0) throw ConfigError("gist size must be a power of 2");
  const double sigma_phi = 0.9 * kPi / cfg.orientations;
  filters_.reserve(static_cast<std::size_t>(cfg.scales) * cfg.orientations);
  for (int s = 0; s < cfg.scales; ++s) {
    double f0 = 0.25 / std::pow(2.0, s);
    for (int o = 0; o < cfg.orientations; ++o) {
      double theta = o * kPi / cfg.orientations;
      std::vector<float> filter(static_cast<std::size_t>(n) * n);
      for (int y = 0; y < n; ++y) {
        double v = (y <= n / 2 ? y : y - n) / static_cast<double>(n);
        for (int x = 0; x < n; ++x) {
          double u = (x <= n / 2 ? x : x - n) / static_cast<double>(n);
          double r = std::sqrt(u * u + v * v);
          double phi = std::atan2(v, u);
          filter[static_cast<std::size_t>(y) * n + x] =
              static_cast<float>(gabor_weight(r, phi, f0, theta, sigma_phi));
        }
      }
      filters_.push_back(std::move(filter));
    }
  }
}

std::vector<float> GistBank::describe(const img::ImageU8& image) const {
  const int n = cfg_.size;
  img::ImageF gray = img::rgb_to_gray(
      img::resize_bilinear(img::to_float(img::force_rgb(image)), n, n));

  std::vector<fft::cfloat> freq(static_cast<std::size_t>(n) * n);
  for (int y = 0; y < n; ++y) {
    for (int x = 0; x < n; ++x) {
      freq[static_cast<std::size_t>(y) * n + x] =
          fft::cfloat(gray.at(y, x, 0) / 255.0f, 0.0f);
    }
  }
  fft::transform_2d(freq, n, n, false);

  const int cell = n / cfg_.grid;
  std::vector<float> descriptor;
  descriptor.reserve(static_cast<std::size_t>(cfg_.descriptor_length()));
  std::vector<fft::cfloat> filtered(freq.size());
  for (const auto& filter : filters_) {
    for (std::size_t i = 0; i < freq.size(); ++i) {
      filtered[i] = freq[i] * filter[i];
    }
    fft::transform_2d(filtered, n, n, true);
    for (int gy = 0; gy < cfg_.grid; ++gy) {
      for (int gx = 0; gx < cfg_.grid; ++gx) {
        double acc = 0.0;
        for (int y = gy * cell; y < (gy + 1) * cell; ++y) {
          for (int x = gx * cell; x < (gx + 1) * cell; ++x) {
            acc += std::abs(filtered[static_cast<std::size_t>(y) * n + x]);
          }
        }
        descriptor.push_back(
            static_cast<float>(acc / (static_cast<double>(cell) * cell)));
      }
    }
  }
  return descriptor;
}

std::vector<float> gist_descriptor(const img::ImageU8& image,
                                   const GistConfig& cfg) {
  return GistBank(cfg).describe(image);
}

GistDistances gist_distance_histogram(std::span<const img::ImageU8> images,
                                      const GistConfig& cfg, int bins) {
  if (images.size() < 2) {
    throw ConfigError("gist distance histogram needs at least 2 images");
  }
  GistBank bank(cfg);
  std::vector<std::vector<float>> descs(images.size());
#pragma omp parallel for schedule(dynamic)
  for (std::size_t i = 0; i < images.size(); ++i) {
    auto d = bank.describe(images[i]);
    double norm = 0.0;
    for (float v : d) norm += static_cast<double>(v) * v;
    norm = std::sqrt(norm);
    if (norm > 0.0) {
      for (auto& v : d) v = static_cast<float>(v / norm);
    }
    descs[i] = std::move(d);
  }
  GistDistances out;
  out.histogram = Histogram::regular(0.0, 2.0, bins);
  out.distances.reserve(images.size() * (images.size() - 1) / 2);
  for (std::size_t i = 0; i < descs.size(); ++i) {
    for (std::size_t j = i + 1; j < descs.size(); ++j) {
      double acc = 0.0;
      for (std::size_t k = 0; k < descs[i].size(); ++k) {
        double d = static_cast<double>(descs[i][k]) - descs[j][k];
        acc += d * d;
      }
      double dist = std::sqrt(acc);
      out.distances.push_back(dist);
      out.histogram.add(dist);
    }
  }
  return out;
}

}  // namespace onedatum::lens
