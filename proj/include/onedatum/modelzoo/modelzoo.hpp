// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <string>

#include "onedatum/nn/checkpoint.hpp"
#include "onedatum/nn/model.hpp"

namespace onedatum::modelzoo {

/// Architecture identity. Families:
///   cifar-resnet  depth = 6n+2 (resnet20, resnet56, ...)
///   wideresnet    depth = 6n+4 with width factor k (wrn16-2, wrn40-4, ...)
///   vgg           depth 11 or 19, batch-normalized
///   audio-cnn     the four-block time/frequency CNN
struct ModelSpec {
  std::string family;
  int depth = 0;
  int width = 1;
  int num_classes = 10;
  std::array<int, 3> input_shape{3, 32, 32};

  /// Parses names like "resnet20", "wrn16-2", "vgg11", "audio-cnn".
  static ModelSpec parse(const std::string& arch, int num_classes);

  std::string canonical_name() const;
  void validate() const;
};

nn::Model build_model(const ModelSpec& spec, std::uint64_t seed);

/// Four blocks of paired temporal/frequency convolutions (kernel 4),
/// channels 24/32/64/128, group norm, ceil-halving max pools, spatial
/// dropout 0.2, global max pool, linear head.
nn::Model build_audio_cnn(int num_classes, std::uint64_t seed);

/// Rebuilds the architecture recorded in a checkpoint and loads its
/// weights and statistics.
nn::Model build_from_checkpoint(const nn::Checkpoint& ck);

/// Structural copy with identical weights and statistics.
nn::Model clone_model(nn::Model& model);

}  // namespace onedatum::modelzoo
