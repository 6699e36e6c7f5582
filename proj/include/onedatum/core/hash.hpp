// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstddef>
#include <cstdint>
#include <string>

namespace onedatum::hash {

/// Streaming FNV-1a (64-bit). Stable digest for content hashes and
/// teacher-immutability checks; not cryptographic.
class Fnv1a64 {
 public:
  void update(const void* data, std::size_t len) {
    auto p = static_cast<const unsigned char*>(data);
    for (std::size_t i = 0; i < len; ++i) {
      state_ ^= p[i];
      state_ *= 0x100000001b3ull;
    }
  }

  template <typename T>
  void update_value(const T& v) {
    update(&v, sizeof(v));
  }

  std::uint64_t digest() const { return state_; }

  std::string hex() const {
    static const char* k = "0123456789abcdef";
    std::string out(16, '0');
    std::uint64_t v = state_;
    for (int i = 15; i >= 0; --i) {
      out[static_cast<std::size_t>(i)] = k[v & 0xf];
      v >>= 4;
    }
    return out;
  }

 private:
  std::uint64_t state_ = 0xcbf29ce484222325ull;
};

inline std::string hex_digest(const void* data, std::size_t len) {
  Fnv1a64 h;
  h.update(data, len);
  return h.hex();
}

}  // namespace onedatum::hash
