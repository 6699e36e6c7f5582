// SPDX-License-Identifier: Apache-2.0
#include "onedatum/data/datasets.hpp"

#include <algorithm>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <map>

#include "onedatum/audioforge/audioforge.hpp"
#include "onedatum/core/binio.hpp"
#include "onedatum/core/hash.hpp"

namespace fs = std::filesystem;

namespace onedatum::data {

void LabeledImages::compute_hash() {
  hash::Fnv1a64 h;
  h.update(pixels.data(), pixels.size());
  h.update(labels.data(), labels.size() * sizeof(std::int32_t));
  content_hash = h.hex();
}

std::string default_data_root() {
  const char* env = std::getenv("ONEDATUM_DATA");
  if (env != nullptr && *env != '\0') return env;
  return "data";
}

namespace {

constexpr std::size_t kCifarRecords = 10000;
constexpr std::size_t kCifarPixelBytes = 3072;  // 32*32*3, planar CHW

void append_cifar_file(LabeledImages& out, const std::string& path,
                       int label_bytes, int label_offset) {
  auto bytes = binio::read_file(path);
  std::size_t rec = static_cast<std::size_t>(label_bytes) + kCifarPixelBytes;
  if (bytes.size() != kCifarRecords * rec) {
    throw IoError(path + ": unexpected size " + std::to_string(bytes.size()) +
                  " (corrupt download? expected " +
                  std::to_string(kCifarRecords * rec) + ")");
  }
  for (std::size_t r = 0; r < kCifarRecords; ++r) {
    const std::uint8_t* p = bytes.data() + r * rec;
    out.labels.push_back(p[label_offset]);
    const std::uint8_t* pix = p + label_bytes;
    // planar RGB -> interleaved HWC
    for (int y = 0; y < 32; ++y) {
      for (int x = 0; x < 32; ++x) {
        out.pixels.push_back(pix[y * 32 + x]);
        out.pixels.push_back(pix[1024 + y * 32 + x]);
        out.pixels.push_back(pix[2048 + y * 32 + x]);
      }
    }
  }
}

}  // namespace

LabeledImages load_cifar(const std::string& root, const std::string& name,
                         bool train) {
  LabeledImages out;
  out.height = out.width = 32;
  out.channels = 3;
  std::vector<std::string> files;
  int label_bytes, label_offset;
  fs::path dir;
  if (name == "cifar10") {
    out.num_classes = 10;
    dir = fs::path(root) / "cifar-10-batches-bin";
    label_bytes = 1;
    label_offset = 0;
    if (train) {
      for (int i = 1; i <= 5; ++i) {
        files.push_back((dir / ("data_batch_" + std::to_string(i) + ".bin"))
                            .string());
      }
    } else {
      files.push_back((dir / "test_batch.bin").string());
    }
  } else if (name == "cifar100") {
    out.num_classes = 100;
    dir = fs::path(root) / "cifar-100-binary";
    label_bytes = 2;
    label_offset = 1;  // fine label
    files.push_back((dir / (train ? "train.bin" : "test.bin")).string());
    if (train) {
      // train.bin holds 50000 records in one file; handled below
    }
  } else {
    throw ConfigError("unknown dataset: " + name +
                      " (expected cifar10 or cifar100)");
  }

  for (const auto& f : files) {
    if (!fs::exists(f)) {
      throw IoError(
          f + " not found. Fetch the binary CIFAR release "
              "(https://www.cs.toronto.edu/~kriz/" +
          std::string(name == "cifar10" ? "cifar-10-binary.tar.gz"
                                        : "cifar-100-binary.tar.gz") +
          ") and extract it under " + root);
    }
  }
  if (name == "cifar100" && train) {
    // one 50000-record file: read it as five logical chunks
    auto bytes = binio::read_file(files[0]);
    std::size_t rec = 2 + kCifarPixelBytes;
    if (bytes.size() != 50000 * rec) {
      throw IoError(files[0] + ": unexpected size (corrupt download?)");
    }
    out.pixels.reserve(50000 * kCifarPixelBytes);
    for (std::size_t r = 0; r < 50000; ++r) {
      const std::uint8_t* p = bytes.data() + r * rec;
      out.labels.push_back(p[1]);
      const std::uint8_t* pix = p + 2;
      for (int y = 0; y < 32; ++y) {
        for (int x = 0; x < 32; ++x) {
          out.pixels.push_back(pix[y * 32 + x]);
          out.pixels.push_back(pix[1024 + y * 32 + x]);
          out.pixels.push_back(pix[2048 + y * 32 + x]);
        }
      }
    }
  } else {
    out.pixels.reserve(files.size() * kCifarRecords * kCifarPixelBytes);
    for (const auto& f : files) {
      append_cifar_file(out, f, label_bytes, label_offset);
    }
  }
  out.compute_hash();
  return out;
}

LabeledClips load_wav_tree(const std::string& root,
                           std::size_t max_per_class) {
  if (!fs::is_directory(root)) {
    throw IoError(root + " is not a directory of class subdirectories");
  }
  std::vector<std::string> classes;
  for (const auto& e : fs::directory_iterator(root)) {
    if (e.is_directory() && e.path().filename().string()[0] != '_') {
      classes.push_back(e.path().filename().string());
    }
  }
  std::sort(classes.begin(), classes.end());
  if (classes.empty()) throw IoError(root + ": no class subdirectories");

  LabeledClips out;
  out.sample_rate = audioforge::kSampleRate;
  out.samples_per_clip = audioforge::kSampleRate;  // 1 s
  out.num_classes = static_cast<int>(classes.size());
  hash::Fnv1a64 h;
  for (std::size_t ci = 0; ci < classes.size(); ++ci) {
    std::vector<std::string> wavs;
    for (const auto& e :
         fs::directory_iterator(fs::path(root) / classes[ci])) {
      if (e.path().extension() == ".wav") wavs.push_back(e.path().string());
    }
    std::sort(wavs.begin(), wavs.end());
    if (max_per_class > 0 && wavs.size() > max_per_class) {
      wavs.resize(max_per_class);
    }
    for (const auto& w : wavs) {
      auto clip = audioforge::load_source_clip(w);
      clip.samples.resize(out.samples_per_clip, 0.0f);  // crop or pad
      out.samples.insert(out.samples.end(), clip.samples.begin(),
                         clip.samples.end());
      out.labels.push_back(static_cast<std::int32_t>(ci));
      h.update(clip.samples.data(), clip.samples.size() * sizeof(float));
    }
  }
  out.content_hash = h.hex();
  return out;
}

}  // namespace onedatum::data
