// Copyright 2026 The sfd Authors
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

#pragma once

#include <cstdint>
#include <filesystem>

#include <json.hpp>

#include "sfd/backend.hpp"

namespace sfd {

inline constexpr std::uint32_t kCheckpointVersion = 1;

struct CheckpointMeta {
  int round = 0;
  int epoch = 0;
  double val_loss = 0.0;
  std::uint64_t seed = 0;
  nlohmann::json extra = nlohmann::json::object();

  friend bool operator==(const CheckpointMeta&, const CheckpointMeta&) = default;
};

struct Checkpoint {
  Architecture arch;
  Params<float> params;
  CheckpointMeta meta;
};

struct CheckpointHeader {
  std::uint32_t version = 0;
  Architecture arch;
  CheckpointMeta meta;
};

/// Layout (little-endian):
///   "SFCK" | u32 version | u32 header_len | header JSON
///   then per tensor: u32 name_len | name | u8 dtype (1 = f32) |
///   u32 ndim | u32 dims[ndim] | payload
/// The file is written to a temporary sibling and renamed into place.
void save_checkpoint(const std::filesystem::path& path, const Architecture& arch,
                     const Params<float>& params, const CheckpointMeta& meta);

/// Fully validates before returning; nothing is handed back on failure.
Checkpoint load_checkpoint(const std::filesystem::path& path);

/// Reads only the magic, version and JSON header.
CheckpointHeader read_checkpoint_header(const std::filesystem::path& path);

}  // namespace sfd
