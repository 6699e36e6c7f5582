// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <array>
#include <span>
#include <string>
#include <vector>

#include "onedatum/core/image.hpp"
#include "onedatum/distillery/distill.hpp"
#include "onedatum/nn/model.hpp"
#include "onedatum/patchforge/patchforge.hpp"

namespace onedatum::lens {

/// n examples by d activation features.
struct FeatureMatrix {
  int rows = 0;
  int cols = 0;
  std::vector<float> data;  // row-major
  std::string layer_tag;

  FeatureMatrix() = default;
  FeatureMatrix(int r, int c)
      : rows(r), cols(c), data(static_cast<std::size_t>(r) * c, 0.0f) {}
  float& at(int r, int c) { return data[static_cast<std::size_t>(r) * cols + c]; }
  float at(int r, int c) const {
    return data[static_cast<std::size_t>(r) * cols + c];
  }
};

/// Linear centered kernel alignment:
///   ||Yc' Xc||_F^2 / (||Xc' Xc||_F * ||Yc' Yc||_F)
/// over column-centered copies. Returns 0 when either norm vanishes.
double linear_cka(const FeatureMatrix& x, const FeatureMatrix& y);

/// Runs the probe inputs through the model and returns one matrix per
/// representation tap, spatial maps pooled to channel vectors.
std::vector<FeatureMatrix> collect_features(nn::Model& model,
                                            const nn::Tensor& probe,
                                            int batch_size = 64);

struct CkaHeatmap {
  std::vector<std::string> taps_a;
  std::vector<std::string> taps_b;
  std::vector<double> values;  // row-major taps_a x taps_b

  double at(std::size_t i, std::size_t j) const {
    return values[i * taps_b.size() + j];
  }
  std::string to_json() const;
};

CkaHeatmap cka_heatmap(nn::Model& model_a, nn::Model& model_b,
                       const nn::Tensor& probe);

// --- histograms ---------------------------------------------------------------

struct Histogram {
  std::vector<double> edges;          // bins + 1, monotone
  std::vector<std::int64_t> counts;   // bins
  std::int64_t total = 0;

  static Histogram regular(double lo, double hi, int bins);
  void add(double v);  // values outside [lo, hi] land in the edge bins
  std::string to_json() const;
};

/// Max temperature-scaled softmax score of the predicted class, per
/// input, binned over [0, 1].
Histogram confidence_histogram(nn::Model& model, const nn::Tensor& inputs,
                               double tau, int bins,
                               int batch_size = 256);

// --- GIST ----------------------------------------------------------------------

struct GistConfig {
  int scales = 4;
  int orientations = 8;
  int grid = 4;           // grid x grid pooling cells
  int size = 256;         // analysis resolution

  int descriptor_length() const { return scales * orientations * grid * grid; }
};

/// Precomputed log-Gabor filter bank for a GistConfig; building it once
/// amortizes the transcendental evaluations across many images.
class GistBank {
 public:
  explicit GistBank(const GistConfig& cfg = {});

  /// Gabor-bank scene descriptor: grayscale at the analysis resolution,
  /// filters applied in the frequency domain, filter energy averaged
  /// over a grid x grid partition. Not L2-normalized; normalization
  /// happens in the distance pipeline. Thread-safe.
  std::vector<float> describe(const img::ImageU8& image) const;

  const GistConfig& config() const { return cfg_; }

 private:
  GistConfig cfg_;
  std::vector<std::vector<float>> filters_;  // scales*orientations, n*n
};

/// One-shot convenience around GistBank.
std::vector<float> gist_descriptor(const img::ImageU8& image,
                                   const GistConfig& cfg = {});

struct GistDistances {
  std::vector<double> distances;  // m(m-1)/2 pairwise euclidean distances
  Histogram histogram;            // over [0, 2]
};

/// Pairwise distances of L2-normalized descriptors.
GistDistances gist_distance_histogram(std::span<const img::ImageU8> images,
                                      const GistConfig& cfg = {},
                                      int bins = 50);

// --- 2-D embedding ---------------------------------------------------------------

struct TsneConfig {
  double perplexity = 30.0;
  int iters = 500;
  double learning_rate = 200.0;
  int exaggeration_iters = 100;
  double exaggeration = 12.0;
};

/// Exact (quadratic) stochastic neighbor embedding to 2-D; deterministic
/// under `seed`.
std::vector<std::array<double, 2>> embed_2d(const FeatureMatrix& features,
                                            std::uint64_t seed,
                                            const TsneConfig& cfg = {});

// --- per-class diagnostics --------------------------------------------------------

struct PerClassReport {
  std::vector<std::vector<double>> accuracy_curves;  // [class][epoch], percent
  std::vector<std::int64_t> teacher_top1_freq;       // [class]

  std::string to_json() const;
};

/// Accuracy curves come from the per-epoch metrics (requires runs made
/// with per-class tracking); the frequency table counts each class as
/// the teacher's argmax over one pass of the training patches.
PerClassReport per_class_report(
    const std::vector<distillery::EpochMetrics>& history, nn::Model& teacher,
    const patchforge::PatchDataset& data, int batch_size = 256);

// --- rendering ----------------------------------------------------------------

void write_histogram_svg(const Histogram& h, const std::string& title,
                         const std::string& path);
void write_scatter_svg(std::span<const std::array<double, 2>> points,
                       std::span<const std::int32_t> labels,
                       const std::string& title, const std::string& path);
void write_heatmap_svg(const CkaHeatmap& map, const std::string& title,
                       const std::string& path);

}  // namespace onedatum::lens
