// SPDX-License-Identifier: Apache-2.0
#include "onedatum/nn/checkpoint.hpp"

#include <cstring>
#include <fstream>

#include "onedatum/core/binio.hpp"

using json = nlohmann::json;

namespace onedatum::nn {

void save_checkpoint(const std::string& path, const Checkpoint& ck) {
  json j;
  j["format_version"] = kCheckpointVersion;
  j["arch"] = ck.arch;
  j["num_classes"] = ck.num_classes;
  j["input_shape"] = {ck.input_shape[0], ck.input_shape[1], ck.input_shape[2]};
  j["init_seed"] = ck.init_seed;
  j["meta"] = ck.meta;
  json tensors = json::array();
  std::uint64_t offset = 0;
  for (const auto& [name, t] : ck.tensors) {
    tensors.push_back({{"name", name},
                       {"shape", {t.shape[0], t.shape[1], t.shape[2], t.shape[3]}},
                       {"offset", offset}});
    offset += t.numel();
  }
  j["tensors"] = tensors;
  std::string header = j.dump();

  std::ofstream os(path, std::ios::binary);
  if (!os) throw IoError("cannot open for write: " + path);
  os.write("ODCK", 4);
  binio::put_u32(os, kCheckpointVersion);
  binio::put_u64(os, header.size());
  os.write(header.data(), static_cast<std::streamsize>(header.size()));
  // float32 payload, little-endian host assumed (x86/aarch64-le)
  for (const auto& [name, t] : ck.tensors) {
    os.write(reinterpret_cast<const char*>(t.data.data()),
             static_cast<std::streamsize>(t.data.size() * sizeof(float)));
  }
  if (!os) throw IoError("failed writing checkpoint: " + path);
}

Checkpoint load_checkpoint(const std::string& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw IoError("cannot open checkpoint: " + path);
  char magic[4];
  if (!is.read(magic, 4) || std::memcmp(magic, "ODCK", 4) != 0) {
    throw IoError(path + ": not a checkpoint file");
  }
  std::uint32_t version = binio::get_u32(is);
  if (version != kCheckpointVersion) {
    throw IoError(path + ": unsupported checkpoint version " +
                  std::to_string(version));
  }
  std::uint64_t hlen = binio::get_u64(is);
  std::string header(hlen, '\0');
  if (!is.read(header.data(), static_cast<std::streamsize>(hlen))) {
    throw IoError(path + ": truncated header");
  }
  json j = json::parse(header);

  Checkpoint ck;
  ck.arch = j.at("arch").get<std::string>();
  ck.num_classes = j.at("num_classes").get<int>();
  auto shape = j.at("input_shape");
  ck.input_shape = {shape.at(0).get<int>(), shape.at(1).get<int>(),
                    shape.at(2).get<int>()};
  ck.init_seed = j.at("init_seed").get<std::uint64_t>();
  ck.meta = j.value("meta", json::object());
  for (const auto& entry : j.at("tensors")) {
    auto s = entry.at("shape");
    Tensor t(s.at(0).get<int>(), s.at(1).get<int>(), s.at(2).get<int>(),
             s.at(3).get<int>());
    if (!is.read(reinterpret_cast<char*>(t.data.data()),
                 static_cast<std::streamsize>(t.data.size() * sizeof(float)))) {
      throw IoError(path + ": truncated tensor payload");
    }
    ck.tensors.emplace_back(entry.at("name").get<std::string>(), std::move(t));
  }
  return ck;
}

Checkpoint snapshot_model(Model& model, nlohmann::json meta) {
  Checkpoint ck;
  ck.arch = model.arch;
  ck.num_classes = model.num_classes;
  ck.input_shape = model.input_shape;
  ck.init_seed = model.init_seed;
  ck.meta = std::move(meta);
  for (const auto& p : model.params()) {
    ck.tensors.emplace_back(p.name, *p.value);
  }
  for (const auto& s : model.state()) {
    ck.tensors.emplace_back(s.name, *s.value);
  }
  return ck;
}

void load_into_model(const Checkpoint& ck, Model& model) {
  auto copy_named = [&](const std::string& name, Tensor* dst) {
    const Tensor* src = ck.find(name);
    if (src == nullptr) {
      throw IoError("checkpoint is missing tensor: " + name);
    }
    if (src->shape != dst->shape) {
      throw IoError("checkpoint shape mismatch for " + name);
    }
    dst->data = src->data;
  };
  for (auto& p : model.params()) copy_named(p.name, p.value);
  for (auto& s : model.state()) copy_named(s.name, s.value);
}

}  // namespace onedatum::nn
