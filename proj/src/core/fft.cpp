// SPDX-License-Identifier: Apache-2.0
#include "onedatum/core/fft.hpp"

#include <cmath>
#include <cstring>

namespace onedatum::fft {

namespace {
constexpr double kPi = 3.14159265358979323846;
}

void transform(cfloat* data, std::size_t n, bool inverse) {
  if (!is_pow2(n)) throw ConfigError("fft size must be a power of two");
  // bit-reversal permutation
  for (std::size_t i = 1, j = 0; i < n; ++i) {
    std::size_t bit = n >> 1;
    for (; j & bit; bit >>= 1) j ^= bit;
    j ^= bit;
    if (i < j) std::swap(data[i], data[j]);
  }
  for (std::size_t len = 2; len <= n; len <<= 1) {
    double ang = 2.0 * kPi / static_cast<double>(len) * (inverse ? 1.0 : -1.0);
    cfloat wlen(static_cast<float>(std::cos(ang)),
                static_cast<float>(std::sin(ang)));
    for (std::size_t i = 0; i < n; i += len) {
      cfloat w(1.0f, 0.0f);
      for (std::size_t k = 0; k < len / 2; ++k) {
        cfloat u = data[i + k];
        cfloat v = data[i + k + len / 2] * w;
        data[i + k] = u + v;
        data[i + k + len / 2] = u - v;
        w *= wlen;
      }
    }
  }
  if (inverse) {
    float inv = 1.0f / static_cast<float>(n);
    for (std::size_t i = 0; i < n; ++i) data[i] *= inv;
  }
}

std::vector<cfloat> real_forward(const float* x, std::size_t n,
                                 std::size_t nfft) {
  if (n > nfft) throw ConfigError("real_forward: signal longer than nfft");
  std::vector<cfloat> buf(nfft, cfloat(0.0f, 0.0f));
  for (std::size_t i = 0; i < n; ++i) buf[i] = cfloat(x[i], 0.0f);
  transform(buf.data(), nfft, false);
  buf.resize(nfft / 2 + 1);
  return buf;
}

void transform_2d(std::vector<cfloat>& data, std::size_t h, std::size_t w,
                  bool inverse) {
  if (data.size() != h * w) throw ConfigError("transform_2d: bad size");
  for (std::size_t r = 0; r < h; ++r) {
    transform(data.data() + r * w, w, inverse);
  }
  std::vector<cfloat> col(h);
  for (std::size_t c = 0; c < w; ++c) {
    for (std::size_t r = 0; r < h; ++r) col[r] = data[r * w + c];
    transform(col.data(), h, inverse);
    for (std::size_t r = 0; r < h; ++r) data[r * w + c] = col[r];
  }
}

}  // namespace onedatum::fft
