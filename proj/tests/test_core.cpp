// SPDX-License-Identifier: Apache-2.0
#include <doctest.h>

#include <cmath>
#include <complex>
#include <cstdio>
#include <filesystem>

#include "onedatum/core/fft.hpp"
#include "onedatum/core/hash.hpp"
#include "onedatum/core/image.hpp"
#include "onedatum/core/rng.hpp"

using namespace onedatum;

TEST_CASE("rng: derive gives order-independent per-index streams") {
  // identical seed+index -> identical stream; different index -> different
  rng::Stream a(rng::derive(42, 7));
  rng::Stream b(rng::derive(42, 7));
  rng::Stream c(rng::derive(42, 8));
  bool all_eq = true, any_diff = false;
  for (int i = 0; i < 64; ++i) {
    auto va = a.raw().next();
    all_eq = all_eq && (va == b.raw().next());
    any_diff = any_diff || (va != c.raw().next());
  }
  CHECK(all_eq);
  CHECK(any_diff);
}

TEST_CASE("rng: uniform_int is in range and roughly uniform") {
  rng::Stream s(123);
  int counts[10] = {0};
  for (int i = 0; i < 100000; ++i) {
    auto v = s.uniform_int(10);
    REQUIRE(v < 10);
    counts[v]++;
  }
  for (int k = 0; k < 10; ++k) {
    CHECK(counts[k] > 9000);
    CHECK(counts[k] < 11000);
  }
}

TEST_CASE("rng: normal moments") {
  rng::Stream s(99);
  double sum = 0.0, sq = 0.0;
  const int n = 200000;
  for (int i = 0; i < n; ++i) {
    double v = s.normal();
    sum += v;
    sq += v * v;
  }
  CHECK(std::abs(sum / n) < 0.01);
  CHECK(std::abs(sq / n - 1.0) < 0.02);
}

TEST_CASE("rng: beta(0.25, 0.25) moments match closed form") {
  // mean a/(a+b) = 0.5, var ab/((a+b)^2 (a+b+1)) = 1/6
  rng::Stream s(7);
  double sum = 0.0, sq = 0.0;
  const int n = 200000;
  for (int i = 0; i < n; ++i) {
    double v = s.beta(0.25, 0.25);
    REQUIRE(v >= 0.0);
    REQUIRE(v <= 1.0);
    sum += v;
    sq += v * v;
  }
  double mean = sum / n;
  double var = sq / n - mean * mean;
  CHECK(std::abs(mean - 0.5) < 0.01);
  CHECK(std::abs(var - 1.0 / 6.0) < 0.01);
}

TEST_CASE("fft: matches direct DFT on a small input") {
  const std::size_t n = 16;
  std::vector<fft::cfloat> x(n);
  rng::Stream s(5);
  for (auto& v : x) {
    v = fft::cfloat(static_cast<float>(s.uniform(-1, 1)),
                    static_cast<float>(s.uniform(-1, 1)));
  }
  auto y = x;
  fft::transform(y);
  for (std::size_t k = 0; k < n; ++k) {
    std::complex<double> ref(0.0, 0.0);
    for (std::size_t t = 0; t < n; ++t) {
      double ang = -2.0 * M_PI * static_cast<double>(k * t) / n;
      ref += std::complex<double>(x[t].real(), x[t].imag()) *
             std::complex<double>(std::cos(ang), std::sin(ang));
    }
    CHECK(std::abs(y[k].real() - ref.real()) < 1e-4);
    CHECK(std::abs(y[k].imag() - ref.imag()) < 1e-4);
  }
}

TEST_CASE("fft: forward+inverse round trip") {
  std::vector<fft::cfloat> x(256);
  rng::Stream s(11);
  for (auto& v : x) v = fft::cfloat(static_cast<float>(s.normal()), 0.0f);
  auto y = x;
  fft::transform(y, false);
  fft::transform(y, true);
  for (std::size_t i = 0; i < x.size(); ++i) {
    CHECK(std::abs(y[i].real() - x[i].real()) < 1e-4);
    CHECK(std::abs(y[i].imag()) < 1e-4);
  }
}

TEST_CASE("image: flips and crops") {
  img::ImageF im(4, 6, 3);
  for (int y = 0; y < 4; ++y)
    for (int x = 0; x < 6; ++x)
      for (int c = 0; c < 3; ++c) im.at(y, x, c) = float(y * 100 + x * 10 + c);

  auto fh = img::flip_horizontal(im);
  CHECK(fh.at(1, 0, 2) == im.at(1, 5, 2));
  auto fv = img::flip_vertical(im);
  CHECK(fv.at(0, 3, 1) == im.at(3, 3, 1));
  CHECK(img::flip_vertical(fv).at(2, 2, 0) == im.at(2, 2, 0));

  auto cr = img::crop(im, 1, 2, 2, 3);
  CHECK(cr.height == 2);
  CHECK(cr.width == 3);
  CHECK(cr.at(0, 0, 0) == im.at(1, 2, 0));
  CHECK_THROWS_AS(img::crop(im, 3, 0, 2, 2), ConfigError);
}

TEST_CASE("image: resize identity and constant preservation") {
  img::ImageF im(8, 8, 3);
  for (auto& v : im.data) v = 77.0f;
  auto up = img::resize_bilinear(im, 17, 13);
  for (auto v : up.data) CHECK(v == doctest::Approx(77.0f));
  // identity resize returns the same pixels
  auto same = img::resize_bilinear(im, 8, 8);
  for (std::size_t i = 0; i < im.data.size(); ++i) {
    CHECK(same.data[i] == doctest::Approx(im.data[i]));
  }
}

TEST_CASE("image: fused crop_resize matches two-step path") {
  img::ImageU8 src(24, 31, 3);
  rng::Stream s(3);
  for (auto& v : src.data) v = static_cast<std::uint8_t>(s.uniform_int(256));
  auto fused = img::crop_resize_bilinear(src, 4, 5, 15, 20, 9, 9);
  auto two = img::resize_bilinear(img::crop(img::to_float(src), 4, 5, 15, 20),
                                  9, 9);
  REQUIRE(fused.data.size() == two.data.size());
  for (std::size_t i = 0; i < fused.data.size(); ++i) {
    CHECK(fused.data[i] == doctest::Approx(two.data[i]).epsilon(1e-6));
  }
}

TEST_CASE("image: rotation by 0 degrees is identity") {
  img::ImageF im(9, 9, 3);
  rng::Stream s(8);
  for (auto& v : im.data) v = static_cast<float>(s.uniform(0, 255));
  auto r = img::rotate_shear(im, 0.0, 0.0);
  for (std::size_t i = 0; i < im.data.size(); ++i) {
    CHECK(r.data[i] == doctest::Approx(im.data[i]).epsilon(1e-5));
  }
}

TEST_CASE("image: hue shift by a full turn is identity") {
  img::ImageF im(5, 5, 3);
  rng::Stream s(21);
  for (auto& v : im.data) v = static_cast<float>(s.uniform(0, 255));
  auto shifted = img::adjust_hue(im, 1.0);
  for (std::size_t i = 0; i < im.data.size(); ++i) {
    CHECK(shifted.data[i] == doctest::Approx(im.data[i]).epsilon(1e-4));
  }
}

TEST_CASE("image: png round trip") {
  img::ImageU8 im(13, 17, 3);
  rng::Stream s(17);
  for (auto& v : im.data) v = static_cast<std::uint8_t>(s.uniform_int(256));
  auto path = std::filesystem::temp_directory_path() / "onedatum_rt.png";
  img::encode_png(im, path.string());
  auto back = img::decode_image_file(path.string());
  REQUIRE(back.height == im.height);
  REQUIRE(back.width == im.width);
  REQUIRE(back.channels == 3);
  CHECK(back.data == im.data);
  std::filesystem::remove(path);
}

TEST_CASE("hash: stable and content sensitive") {
  std::uint8_t a[4] = {1, 2, 3, 4};
  std::uint8_t b[4] = {1, 2, 3, 5};
  CHECK(hash::hex_digest(a, 4) == hash::hex_digest(a, 4));
  CHECK(hash::hex_digest(a, 4) != hash::hex_digest(b, 4));
  CHECK(hash::hex_digest(a, 4).size() == 16);
}
