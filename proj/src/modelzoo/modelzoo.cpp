// SPDX-License-Identifier: Apache-2.0
#include "onedatum/modelzoo/modelzoo.hpp"

#include <cstdio>

#include "onedatum/core/hash.hpp"

namespace onedatum::modelzoo {

using nn::Layer;
using nn::Model;
using nn::Sequential;

ModelSpec ModelSpec::parse(const std::string& arch, int num_classes) {
  ModelSpec spec;
  spec.num_classes = num_classes;
  int d = 0, k = 0;
  if (std::sscanf(arch.c_str(), "resnet%d", &d) == 1) {
    spec.family = "cifar-resnet";
    spec.depth = d;
  } else if (std::sscanf(arch.c_str(), "wrn%d-%d", &d, &k) == 2 ||
             std::sscanf(arch.c_str(), "wideresnet%d-%d", &d, &k) == 2) {
    spec.family = "wideresnet";
    spec.depth = d;
    spec.width = k;
  } else if (std::sscanf(arch.c_str(), "vgg%d", &d) == 1) {
    spec.family = "vgg";
    spec.depth = d;
  } else if (arch == "audio-cnn") {
    spec.family = "audio-cnn";
    spec.input_shape = {1, 98, 64};
  } else {
    throw ConfigError("unknown architecture: " + arch);
  }
  spec.validate();
  return spec;
}

std::string ModelSpec::canonical_name() const {
  if (family == "cifar-resnet") return "resnet" + std::to_string(depth);
  if (family == "wideresnet") {
    return "wrn" + std::to_string(depth) + "-" + std::to_string(width);
  }
  if (family == "vgg") return "vgg" + std::to_string(depth);
  return family;
}

void ModelSpec::validate() const {
  if (num_classes < 2) throw ConfigError("num_classes must be at least 2");
  if (family == "cifar-resnet") {
    if (depth < 8 || (depth - 2) % 6 != 0) {
      throw ConfigError("cifar-resnet depth must be 6n+2, got " +
                        std::to_string(depth));
    }
  } else if (family == "wideresnet") {
    if (depth < 10 || (depth - 4) % 6 != 0 || width < 1) {
      throw ConfigError("wideresnet depth must be 6n+4 with width >= 1");
    }
  } else if (family == "vgg") {
    if (depth != 11 && depth != 19) {
      throw ConfigError("vgg presets: 11 or 19");
    }
  } else if (family != "audio-cnn") {
    throw ConfigError("unknown model family: " + family);
  }
}

namespace {

std::uint64_t sub_seed(std::uint64_t seed, int& counter) {
  return rng::derive(seed, static_cast<std::uint64_t>(counter++));
}

std::unique_ptr<Sequential> make_cifar_resnet(int depth, int classes,
                                              std::uint64_t seed) {
  int n = (depth - 2) / 6;
  int ctr = 0;
  auto net = std::make_unique<Sequential>();
  auto stem = std::make_unique<nn::Conv2d>(3, 16, 3, 3, 1, 1, false);
  rng::Stream rs(sub_seed(seed, ctr));
  stem->init(rs);
  net->add(std::move(stem));
  net->add(std::make_unique<nn::BatchNorm2d>(16));
  net->add(std::make_unique<nn::ReLU>());
  int cin = 16;
  const int widths[3] = {16, 32, 64};
  for (int stage = 0; stage < 3; ++stage) {
    for (int b = 0; b < n; ++b) {
      int stride = (stage > 0 && b == 0) ? 2 : 1;
      net->add(std::make_unique<nn::BasicBlock>(cin, widths[stage], stride,
                                                sub_seed(seed, ctr)));
      cin = widths[stage];
    }
  }
  net->add(std::make_unique<nn::GlobalAvgPool>());
  auto fc = std::make_unique<nn::Linear>(cin, classes);
  rng::Stream frs(sub_seed(seed, ctr));
  fc->init(frs);
  net->add(std::move(fc));
  return net;
}

std::unique_ptr<Sequential> make_wideresnet(int depth, int k, int classes,
                                            std::uint64_t seed) {
  int n = (depth - 4) / 6;
  int ctr = 0;
  auto net = std::make_unique<Sequential>();
  auto stem = std::make_unique<nn::Conv2d>(3, 16, 3, 3, 1, 1, false);
  rng::Stream rs(sub_seed(seed, ctr));
  stem->init(rs);
  net->add(std::move(stem));
  int cin = 16;
  const int widths[3] = {16 * k, 32 * k, 64 * k};
  for (int stage = 0; stage < 3; ++stage) {
    for (int b = 0; b < n; ++b) {
      int stride = (stage > 0 && b == 0) ? 2 : 1;
      net->add(std::make_unique<nn::PreActBlock>(cin, widths[stage], stride,
                                                 sub_seed(seed, ctr)));
      cin = widths[stage];
    }
  }
  net->add(std::make_unique<nn::BatchNorm2d>(cin));
  net->add(std::make_unique<nn::ReLU>());
  net->add(std::make_unique<nn::GlobalAvgPool>());
  auto fc = std::make_unique<nn::Linear>(cin, classes);
  rng::Stream frs(sub_seed(seed, ctr));
  fc->init(frs);
  net->add(std::move(fc));
  return net;
}

std::unique_ptr<Sequential> make_vgg(int depth, int classes,
                                     std::uint64_t seed) {
  // channel plan; 0 marks a pooling stage
  std::vector<int> plan;
  if (depth == 11) {
    plan = {64, 0, 128, 0, 256, 256, 0, 512, 512, 0, 512, 512, 0};
  } else {
    plan = {64, 64, 0, 128, 128, 0, 256, 256, 256, 256, 0,
            512, 512, 512, 512, 0, 512, 512, 512, 512, 0};
  }
  int ctr = 0;
  auto net = std::make_unique<Sequential>();
  int cin = 3;
  for (int c : plan) {
    if (c == 0) {
      net->add(std::make_unique<nn::MaxPool2d>(2, 2));
      continue;
    }
    auto conv = std::make_unique<nn::Conv2d>(cin, c, 3, 3, 1, 1, false);
    rng::Stream rs(sub_seed(seed, ctr));
    conv->init(rs);
    net->add(std::move(conv));
    net->add(std::make_unique<nn::BatchNorm2d>(c));
    net->add(std::make_unique<nn::ReLU>());
    cin = c;
  }
  net->add(std::make_unique<nn::GlobalAvgPool>());
  auto fc = std::make_unique<nn::Linear>(cin, classes);
  rng::Stream frs(sub_seed(seed, ctr));
  fc->init(frs);
  net->add(std::move(fc));
  return net;
}

std::unique_ptr<Sequential> make_audio_cnn(int classes, std::uint64_t seed) {
  int ctr = 0;
  auto net = std::make_unique<Sequential>();
  const int widths[4] = {24, 32, 64, 128};
  int cin = 1;
  for (int w : widths) {
    net->add(std::make_unique<nn::AudioBlock>(cin, w, sub_seed(seed, ctr)));
    net->add(std::make_unique<nn::MaxPool2d>(2, 2));
    net->add(std::make_unique<nn::Dropout2d>(0.2, sub_seed(seed, ctr)));
    cin = w;
  }
  net->add(std::make_unique<nn::GlobalMaxPool>());
  auto fc = std::make_unique<nn::Linear>(cin, classes);
  rng::Stream frs(sub_seed(seed, ctr));
  fc->init(frs);
  net->add(std::move(fc));
  return net;
}

}  // namespace

Model build_model(const ModelSpec& spec, std::uint64_t seed) {
  spec.validate();
  Model m;
  m.arch = spec.canonical_name();
  m.num_classes = spec.num_classes;
  m.input_shape = spec.input_shape;
  m.init_seed = seed;
  if (spec.family == "cifar-resnet") {
    m.net = make_cifar_resnet(spec.depth, spec.num_classes, seed);
  } else if (spec.family == "wideresnet") {
    m.net = make_wideresnet(spec.depth, spec.width, spec.num_classes, seed);
  } else if (spec.family == "vgg") {
    m.net = make_vgg(spec.depth, spec.num_classes, seed);
  } else {
    m.net = make_audio_cnn(spec.num_classes, seed);
  }
  return m;
}

Model build_audio_cnn(int num_classes, std::uint64_t seed) {
  ModelSpec spec;
  spec.family = "audio-cnn";
  spec.num_classes = num_classes;
  spec.input_shape = {1, 98, 64};
  return build_model(spec, seed);
}

Model build_from_checkpoint(const nn::Checkpoint& ck) {
  ModelSpec spec = ModelSpec::parse(ck.arch, ck.num_classes);
  spec.input_shape = ck.input_shape;
  Model m = build_model(spec, ck.init_seed);
  nn::load_into_model(ck, m);
  return m;
}

Model clone_model(nn::Model& model) {
  auto snapshot = nn::snapshot_model(model);
  return build_from_checkpoint(snapshot);
}

}  // namespace onedatum::modelzoo
