// SPDX-License-Identifier: Apache-2.0
#include "onedatum/nn/model.hpp"

#include "onedatum/core/hash.hpp"

namespace onedatum::nn {

std::string Model::weights_hash() {
  hash::Fnv1a64 h;
  for (const auto& p : params()) {
    h.update(p.name.data(), p.name.size());
    h.update(p.value->data.data(), p.value->data.size() * sizeof(float));
  }
  for (const auto& s : state()) {
    h.update(s.name.data(), s.name.size());
    h.update(s.value->data.data(), s.value->data.size() * sizeof(float));
  }
  return h.hex();
}

}  // namespace onedatum::nn
