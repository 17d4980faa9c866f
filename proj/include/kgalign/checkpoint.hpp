/* Copyright 2026 The kgalign Authors. All Rights Reserved.

Licensed under the Apache License, Version 2.0 (the "License");
you may not use this file except in compliance with the License.
You may obtain a copy of the License at

http://www.apache.org/licenses/LICENSE-2.0

Unless required by applicable law or agreed to in writing, software
distributed under the License is distributed on an "AS IS" BASIS,
WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
See the License for the specific language governing permissions and
limitations under the License.
==============================================================================*/
#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <utility>
#include <vector>

#include "kgalign/encoder.hpp"
#include "kgalign/errors.hpp"

namespace kgalign {

/// In-memory form of the versioned binary checkpoint container (magic
/// "KGALNCP1"). Tensor data is held as double here and stored at the file's
/// declared precision (4 or 8 bytes per value, little-endian).
struct Checkpoint {
  int32_t precision_bytes = 8;  // 4 = 32-bit, 8 = 64-bit
  std::string config_text;      // fully-resolved key=value configuration
  std::vector<std::pair<std::string, std::string>> rng_states;
  int64_t epoch = 0;

  struct NamedTensor {
    std::string name;
    uint64_t rows = 0;
    uint64_t cols = 0;
    std::vector<double> data;
  };
  std::vector<NamedTensor> tensors;
};

void save_checkpoint(const std::filesystem::path& file, const Checkpoint& ckpt);
Checkpoint load_checkpoint(const std::filesystem::path& file);

/// Snapshot all named parameter tensors into a checkpoint.
template <typename Scalar>
void pack_params(const EncoderParams<Scalar>& params, Checkpoint& ckpt) {
  ckpt.tensors.clear();
  for (const auto& [name, tensor] : params.named_tensors()) {
    Checkpoint::NamedTensor nt;
    nt.name = name;
    nt.rows = tensor.rows();
    nt.cols = tensor.cols();
    nt.data.assign(tensor.values().begin(), tensor.values().end());
    ckpt.tensors.push_back(std::move(nt));
  }
}

/// Restore parameter values from a checkpoint; every named tensor must be
/// present with matching shape.
template <typename Scalar>
void unpack_params(const Checkpoint& ckpt, EncoderParams<Scalar>& params) {
  for (auto& [name, tensor] : params.named_tensors()) {
    const Checkpoint::NamedTensor* found = nullptr;
    for (const auto& nt : ckpt.tensors) {
      if (nt.name == name) {
        found = &nt;
        break;
      }
    }
    if (found == nullptr) {
      throw DataError("checkpoint: missing tensor '" + name + "'");
    }
    if (found->rows != tensor.rows() || found->cols != tensor.cols()) {
      throw DataError("checkpoint: tensor '" + name + "' is " + std::to_string(found->rows) +
                      "x" + std::to_string(found->cols) + ", expected " +
                      std::to_string(tensor.rows()) + "x" + std::to_string(tensor.cols()));
    }
    std::vector<Scalar> cast(found->data.size());
    for (std::size_t i = 0; i < cast.size(); ++i) cast[i] = static_cast<Scalar>(found->data[i]);
    tensor.assign_values(cast);
  }
}

}  // namespace kgalign
