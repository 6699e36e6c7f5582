// SPDX-License-Identifier: Apache-2.0
#include <algorithm>
#include <cstring>
#include <fstream>

#include "onedatum/audioforge/audioforge.hpp"
#include "onedatum/core/binio.hpp"

namespace onedatum::audioforge {

WavData read_wav(const std::string& path) {
  auto bytes = binio::read_file(path);
  if (bytes.size() < 44 || std::memcmp(bytes.data(), "RIFF", 4) != 0 ||
      std::memcmp(bytes.data() + 8, "WAVE", 4) != 0) {
    throw IoError(path + ": not a RIFF/WAVE file");
  }
  auto rd16 = [&](std::size_t o) {
    return static_cast<std::uint16_t>(bytes[o] | (bytes[o + 1] << 8));
  };
  auto rd32 = [&](std::size_t o) {
    return static_cast<std::uint32_t>(bytes[o]) |
           (static_cast<std::uint32_t>(bytes[o + 1]) << 8) |
           (static_cast<std::uint32_t>(bytes[o + 2]) << 16) |
           (static_cast<std::uint32_t>(bytes[o + 3]) << 24);
  };

  std::uint16_t format = 0, channels = 0, bits = 0;
  std::uint32_t rate = 0;
  std::size_t data_off = 0, data_len = 0;
  std::size_t pos = 12;
  while (pos + 8 <= bytes.size()) {
    std::uint32_t chunk_len = rd32(pos + 4);
    if (std::memcmp(bytes.data() + pos, "fmt ", 4) == 0) {
      format = rd16(pos + 8);
      channels = rd16(pos + 10);
      rate = rd32(pos + 12);
      bits = rd16(pos + 22);
    } else if (std::memcmp(bytes.data() + pos, "data", 4) == 0) {
      data_off = pos + 8;
      data_len = std::min<std::size_t>(chunk_len, bytes.size() - data_off);
    }
    pos += 8 + chunk_len + (chunk_len & 1);
  }
  if (rate == 0 || channels == 0 || data_off == 0) {
    throw IoError(path + ": missing fmt or data chunk");
  }

  std::size_t bytes_per_sample = bits / 8;
  std::size_t frame_bytes = bytes_per_sample * channels;
  if (frame_bytes == 0) throw IoError(path + ": zero frame size");
  std::size_t frames = data_len / frame_bytes;

  WavData out;
  out.sample_rate = static_cast<int>(rate);
  out.samples.resize(frames);
  const std::uint8_t* d = bytes.data() + data_off;
  for (std::size_t f = 0; f < frames; ++f) {
    double acc = 0.0;
    for (unsigned c = 0; c < channels; ++c) {
      const std::uint8_t* p = d + f * frame_bytes + c * bytes_per_sample;
      double v;
      if (format == 1 && bits == 16) {
        std::int16_t s = static_cast<std::int16_t>(p[0] | (p[1] << 8));
        v = s / 32768.0;
      } else if (format == 1 && bits == 24) {
        std::int32_t s = (p[0] << 8) | (p[1] << 16) | (p[2] << 24);
        v = (s >> 8) / 8388608.0;
      } else if (format == 1 && bits == 32) {
        std::int32_t s = static_cast<std::int32_t>(
            p[0] | (p[1] << 8) | (p[2] << 16) |
            (static_cast<std::uint32_t>(p[3]) << 24));
        v = s / 2147483648.0;
      } else if (format == 3 && bits == 32) {
        float fv;
        std::memcpy(&fv, p, 4);
        v = fv;
      } else {
        throw IoError(path + ": unsupported WAV encoding (format " +
                      std::to_string(format) + ", " + std::to_string(bits) +
                      " bits)");
      }
      acc += v;
    }
    out.samples[f] = static_cast<float>(acc / channels);
  }
  return out;
}

void write_wav_pcm16(const std::string& path, std::span<const float> samples,
                     int sample_rate) {
  std::ofstream os(path, std::ios::binary);
  if (!os) throw IoError("cannot open for write: " + path);
  std::uint32_t data_len = static_cast<std::uint32_t>(samples.size() * 2);
  os.write("RIFF", 4);
  binio::put_u32(os, 36 + data_len);
  os.write("WAVE", 4);
  os.write("fmt ", 4);
  binio::put_u32(os, 16);
  binio::put_u32(os, 1u | (1u << 16));  // PCM, mono
  binio::put_u32(os, static_cast<std::uint32_t>(sample_rate));
  binio::put_u32(os, static_cast<std::uint32_t>(sample_rate * 2));
  binio::put_u32(os, 2u | (16u << 16));  // block align, bits
  os.write("data", 4);
  binio::put_u32(os, data_len);
  for (float v : samples) {
    float c = std::clamp(v, -1.0f, 1.0f);
    auto s = static_cast<std::int16_t>(std::lround(c * 32767.0f));
    os.put(static_cast<char>(s & 0xff));
    os.put(static_cast<char>((s >> 8) & 0xff));
  }
  if (!os) throw IoError("failed writing: " + path);
}

}  // namespace onedatum::audioforge
