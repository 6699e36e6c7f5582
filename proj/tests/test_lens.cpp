// SPDX-License-Identifier: Apache-2.0
#include <doctest.h>

#include <cmath>
#include <filesystem>
#include <numeric>

#include "onedatum/lens/lens.hpp"
#include "onedatum/modelzoo/modelzoo.hpp"
#include "support/synth_data.hpp"

using namespace onedatum;
namespace ln = onedatum::lens;

namespace {

ln::FeatureMatrix random_features(int n, int d, std::uint64_t seed) {
  ln::FeatureMatrix f(n, d);
  rng::Stream rs(seed);
  for (auto& v : f.data) v = static_cast<float>(rs.normal());
  return f;
}

// Gram-Schmidt orthogonalization of a random square matrix.
std::vector<std::vector<double>> random_orthogonal(int d, std::uint64_t seed) {
  rng::Stream rs(seed);
  std::vector<std::vector<double>> q(d, std::vector<double>(d));
  for (auto& row : q) {
    for (auto& v : row) v = rs.normal();
  }
  for (int i = 0; i < d; ++i) {
    for (int j = 0; j < i; ++j) {
      double dot = 0.0;
      for (int k = 0; k < d; ++k) dot += q[i][k] * q[j][k];
      for (int k = 0; k < d; ++k) q[i][k] -= dot * q[j][k];
    }
    double norm = 0.0;
    for (int k = 0; k < d; ++k) norm += q[i][k] * q[i][k];
    norm = std::sqrt(norm);
    for (int k = 0; k < d; ++k) q[i][k] /= norm;
  }
  return q;
}

}  // namespace

TEST_CASE("cka: self-similarity is 1") {
  auto x = random_features(64, 12, 1);
  CHECK(ln::linear_cka(x, x) == doctest::Approx(1.0).epsilon(1e-9));
}

TEST_CASE("cka: invariant to orthogonal maps and isotropic scaling") {
  const int n = 48, d = 10;
  auto x = random_features(n, d, 2);
  auto q = random_orthogonal(d, 3);
  ln::FeatureMatrix y(n, d);
  for (int r = 0; r < n; ++r) {
    for (int c = 0; c < d; ++c) {
      double acc = 0.0;
      for (int k = 0; k < d; ++k) acc += x.at(r, k) * q[k][c];
      y.at(r, c) = static_cast<float>(-3.7 * acc);  // scale c = -3.7
    }
  }
  CHECK(ln::linear_cka(x, y) == doctest::Approx(1.0).epsilon(1e-6));
  CHECK(std::abs(ln::linear_cka(x, y) - ln::linear_cka(y, x)) <= 1e-9);
}

TEST_CASE("cka: symmetric and bounded on random inputs") {
  for (std::uint64_t s = 10; s < 16; ++s) {
    auto x = random_features(40, 8, s);
    auto y = random_features(40, 14, s + 100);
    double a = ln::linear_cka(x, y);
    double b = ln::linear_cka(y, x);
    CHECK(std::abs(a - b) <= 1e-9);
    CHECK(a >= 0.0);
    CHECK(a <= 1.0 + 1e-12);
  }
}

TEST_CASE("cka: independent gaussians score low") {
  auto x = random_features(1000, 64, 21);
  auto y = random_features(1000, 64, 22);
  CHECK(ln::linear_cka(x, y) < 0.15);
}

TEST_CASE("cka: mismatched rows and constant features handled") {
  auto x = random_features(10, 4, 30);
  auto y = random_features(12, 4, 31);
  CHECK_THROWS_AS(ln::linear_cka(x, y), ConfigError);
  ln::FeatureMatrix z(10, 4);  // all zeros -> centered norm 0
  CHECK(ln::linear_cka(x, z) == 0.0);
}

TEST_CASE("cka_heatmap: identical models have a unit diagonal") {
  auto model = modelzoo::build_model(
      modelzoo::ModelSpec::parse("resnet8", 10), 5);
  auto clone = modelzoo::clone_model(model);
  nn::Tensor probe(24, 3, 16, 16);
  rng::Stream rs(7);
  for (auto& v : probe.data) v = static_cast<float>(rs.uniform(-1, 1));

  auto map = ln::cka_heatmap(model, clone, probe);
  REQUIRE(map.taps_a.size() == map.taps_b.size());
  REQUIRE(map.taps_a.size() >= 3);  // 3 blocks + pool
  for (std::size_t i = 0; i < map.taps_a.size(); ++i) {
    CHECK(map.at(i, i) == doctest::Approx(1.0).epsilon(1e-6));
  }
  auto json_text = map.to_json();
  CHECK(json_text.find("cka") != std::string::npos);
}

TEST_CASE("confidence histogram: counts sum to inputs; constant model mass") {
  // an untrained model with equal logits puts every max-prob at 1/C
  auto model = modelzoo::build_model(
      modelzoo::ModelSpec::parse("resnet8", 10), 6);
  // zero the final layer: logits all equal -> softened max 0.1
  auto params = model.params();
  for (auto& p : params) {
    if (p.name.find("weight") != std::string::npos &&
        p.value->shape[0] == 10 && p.value->shape[1] == 64) {
      p.value->fill(0.0f);
    }
  }
  nn::Tensor probe(40, 3, 16, 16);
  rng::Stream rs(8);
  for (auto& v : probe.data) v = static_cast<float>(rs.uniform(-1, 1));
  auto h = ln::confidence_histogram(model, probe, 8.0, 20);
  CHECK(h.total == 40);
  CHECK(std::accumulate(h.counts.begin(), h.counts.end(), std::int64_t{0}) ==
        40);
  // all mass in the bin containing 0.1 (bin 2 of 20 over [0,1])
  CHECK(h.counts[2] == 40);
  // edges monotone
  for (std::size_t i = 1; i < h.edges.size(); ++i) {
    CHECK(h.edges[i] > h.edges[i - 1]);
  }
}

TEST_CASE("gist: descriptor length and determinism") {
  auto src = testsupport::make_dense_source(128, 160, 3);
  ln::GistConfig cfg;
  CHECK(cfg.descriptor_length() == 512);
  auto d1 = ln::gist_descriptor(src.pixels, cfg);
  auto d2 = ln::gist_descriptor(src.pixels, cfg);
  REQUIRE(d1.size() == 512);
  CHECK(d1 == d2);
  for (float v : d1) {
    CHECK(std::isfinite(v));
    CHECK(v >= 0.0f);
  }
}

TEST_CASE("gist: identical images at distance zero; histogram layout") {
  auto src = testsupport::make_dense_source(96, 96, 4);
  std::vector<img::ImageU8> pair{src.pixels, src.pixels};
  auto gd = ln::gist_distance_histogram(pair, {}, 20);
  REQUIRE(gd.distances.size() == 1);
  CHECK(gd.distances[0] == doctest::Approx(0.0).epsilon(1e-9));
  CHECK(gd.histogram.total == 1);
  CHECK(gd.histogram.edges.front() == 0.0);
  CHECK(gd.histogram.edges.back() == 2.0);
}

TEST_CASE("gist: m images yield m(m-1)/2 distances; normalized descriptors") {
  patchforge::PatchConfig pcfg;
  pcfg.patch_size = 32;
  pcfg.count = 12;
  pcfg.global_seed = 5;
  auto src = testsupport::make_dense_source(128, 128, 9);
  auto ds = patchforge::generate_dataset(src, pcfg);
  std::vector<img::ImageU8> images;
  for (int i = 0; i < 12; ++i) {
    img::ImageU8 im(32, 32, 3);
    auto r = ds.record(i);
    std::copy(r.begin(), r.end(), im.data.begin());
    images.push_back(std::move(im));
  }
  ln::GistConfig cfg;
  cfg.size = 64;  // desk-scale resolution for speed
  auto gd = ln::gist_distance_histogram(images, cfg, 24);
  CHECK(gd.distances.size() == 12 * 11 / 2);
  for (double d : gd.distances) {
    CHECK(d >= 0.0);
    CHECK(d <= 2.0 + 1e-9);
  }
}

TEST_CASE("embed_2d: shape, determinism, cluster separation") {
  // two well-separated gaussian blobs must stay separated in 2-D
  const int n = 60;
  ln::FeatureMatrix f(n, 8);
  rng::Stream rs(11);
  for (int i = 0; i < n; ++i) {
    double center = i < n / 2 ? -8.0 : 8.0;
    for (int c = 0; c < 8; ++c) {
      f.at(i, c) = static_cast<float>(center + rs.normal());
    }
  }
  auto y1 = ln::embed_2d(f, 42);
  auto y2 = ln::embed_2d(f, 42);
  REQUIRE(y1.size() == static_cast<std::size_t>(n));
  CHECK(y1 == y2);  // deterministic under the seed
  auto y3 = ln::embed_2d(f, 43);
  CHECK(y1 != y3);

  // mean distance within blobs < between blobs
  auto dist = [&](int a, int b) {
    double dx = y1[a][0] - y1[b][0], dy = y1[a][1] - y1[b][1];
    return std::sqrt(dx * dx + dy * dy);
  };
  double within = 0.0, between = 0.0;
  int wc = 0, bc = 0;
  for (int a = 0; a < n; ++a) {
    for (int b = a + 1; b < n; ++b) {
      bool same = (a < n / 2) == (b < n / 2);
      if (same) {
        within += dist(a, b);
        ++wc;
      } else {
        between += dist(a, b);
        ++bc;
      }
    }
  }
  CHECK(within / wc < between / bc);

  ln::FeatureMatrix tiny(3, 4);
  CHECK_THROWS_AS(ln::embed_2d(tiny, 1), ConfigError);
}

TEST_CASE("per-class report: frequencies sum to dataset size") {
  auto teacher = modelzoo::build_model(
      modelzoo::ModelSpec::parse("resnet8", 10), 15);
  auto src = testsupport::make_dense_source(80, 80, 21);
  patchforge::PatchConfig pcfg;
  pcfg.patch_size = 16;
  pcfg.count = 40;
  auto patches = patchforge::generate_dataset(src, pcfg);

  std::vector<distillery::EpochMetrics> history(3);
  for (int e = 0; e < 3; ++e) {
    history[e].epoch = e + 1;
    history[e].per_class.assign(10, 10.0 * e);
  }
  auto report = ln::per_class_report(history, teacher, patches);
  CHECK(std::accumulate(report.teacher_top1_freq.begin(),
                        report.teacher_top1_freq.end(), std::int64_t{0}) ==
        40);
  REQUIRE(report.accuracy_curves.size() == 10);
  CHECK(report.accuracy_curves[0].size() == 3);

  // missing per-class data -> instructive error
  std::vector<distillery::EpochMetrics> bare(2);
  CHECK_THROWS_AS(ln::per_class_report(bare, teacher, patches), ConfigError);
}

TEST_CASE("report rendering: svg files are written") {
  auto dir = std::filesystem::temp_directory_path() / "onedatum_svg";
  std::filesystem::create_directories(dir);
  auto h = ln::Histogram::regular(0.0, 1.0, 10);
  for (int i = 0; i < 100; ++i) h.add(i / 100.0);
  ln::write_histogram_svg(h, "test histogram", (dir / "h.svg").string());
  std::vector<std::array<double, 2>> pts{{0, 0}, {1, 1}, {2, 0.5}};
  std::vector<std::int32_t> labels{0, 1, 2};
  ln::write_scatter_svg(pts, labels, "test scatter", (dir / "s.svg").string());
  CHECK(std::filesystem::file_size(dir / "h.svg") > 200);
  CHECK(std::filesystem::file_size(dir / "s.svg") > 200);
  std::filesystem::remove_all(dir);
}
