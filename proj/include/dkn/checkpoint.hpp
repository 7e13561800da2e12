// Copyright 2026 The DKN Filtering Authors. All Rights Reserved.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

// Versioned little-endian checkpoint:
//
//   "DKNCKPT\0"  u32 version
//   u32 n, model config text (key=value lines)
//   u32 n, metadata text (key=value lines)
//   u32 tensor count, then per tensor:
//     u32 n, name; u32 rank; i32 dims[rank]; f32 values[numel]
//   u8 has_optimizer; if set: i64 timestep, u32 parameter count, then per
//     parameter u64 numel, f64 first moments[numel], f64 second moments[numel]
//
// The tensor table holds every parameter followed by the batch-norm
// running statistics, in store order.

#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <memory>
#include <string>
#include <utility>
#include <vector>

#include "dkn/networks.hpp"
#include "dkn/training.hpp"

namespace dkn {

inline constexpr std::uint32_t kCheckpointVersion = 1;

struct Checkpoint {
  ModelConfig config;
  std::map<std::string, std::string> metadata;
  std::vector<std::pair<std::string, TensorF>> tensors;
  bool has_optimizer = false;
  std::int64_t adam_timestep = 0;
  std::vector<std::vector<double>> adam_m, adam_v;
};

/// Snapshot of a model (and optionally its optimizer).
Checkpoint make_checkpoint(KernelNetwork<float>& model,
                           std::map<std::string, std::string> metadata,
                           const Adam* optimizer = nullptr);

std::string serialize_checkpoint(const Checkpoint& ckpt);
Checkpoint parse_checkpoint(const std::string& bytes,
                            const std::string& source = "<memory>");

void save_checkpoint(const std::filesystem::path& path, const Checkpoint& ckpt);
Checkpoint load_checkpoint(const std::filesystem::path& path);

/// Copies the tensor table into `model`; names and shapes must match.
void restore_parameters(KernelNetwork<float>& model, const Checkpoint& ckpt);

/// Builds a model from the checkpoint's config and restores it.
std::unique_ptr<KernelNetwork<float>> model_from_checkpoint(
    const Checkpoint& ckpt);

/// FNV-1a 64-bit digest, hex encoded; for reporting reproducibility.
std::string digest_hex(const std::string& bytes);

}  // namespace dkn
