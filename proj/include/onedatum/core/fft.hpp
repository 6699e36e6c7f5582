// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <complex>
#include <vector>

#include "onedatum/core/error.hpp"

namespace onedatum::fft {

using cfloat = std::complex<float>;

inline bool is_pow2(std::size_t n) { return n != 0 && (n & (n - 1)) == 0; }

/// In-place iterative radix-2 Cooley-Tukey. n must be a power of two.
void transform(cfloat* data, std::size_t n, bool inverse);

inline void transform(std::vector<cfloat>& data, bool inverse = false) {
  transform(data.data(), data.size(), inverse);
}

/// Forward FFT of a real signal zero-padded to `nfft`; returns the
/// nfft/2 + 1 non-redundant bins.
std::vector<cfloat> real_forward(const float* x, std::size_t n,
                                 std::size_t nfft);

/// 2-D FFT over a row-major h*w complex grid (h, w powers of two).
void transform_2d(std::vector<cfloat>& data, std::size_t h, std::size_t w,
                  bool inverse);

}  // namespace onedatum::fft
