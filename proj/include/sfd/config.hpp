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
#include <optional>
#include <string>

#include <json.hpp>

#include "sfd/backend.hpp"
#include "sfd/image.hpp"
#include "sfd/splice.hpp"

namespace sfd {

struct TrainConfig {
  double learning_rate = 0.0004;
  int batch_size = 200;
  int epochs_per_round = 100;
  std::uint64_t seed = 0;
  int threads = 1;

  void validate() const;
};

struct SelfLearnConfig {
  int max_rounds = 5;
  int min_region_area = 64;       // px^2; smaller trusted regions are dropped
  bool augment_validation = true;
};

struct PathsConfig {
  std::string run_dir = "run";
  std::string train_manifest;
  std::string val_manifest;
  std::string test_manifest;
};

/// Everything one pipeline run needs. Defaults follow the published
/// settings: theta 0.5, the basic-augment probabilities, learning rates
/// 4e-4 / 1e-7, batch 200, 100 epochs per round, threshold 0.5.
struct PipelineConfig {
  std::uint64_t seed = 0;
  AugmentConfig augment;
  bool splice = true;
  BasicAugmentConfig basic;
  double stage1_lr = 0.0004;
  double stage2_lr = 0.0000001;
  int batch_size = 200;
  int epochs_per_round = 100;
  int threads = 0;  // 0: hardware concurrency
  Architecture model;
  NormalizationSpec normalization;
  SelfLearnConfig selflearn;
  double threshold = 0.5;
  PathsConfig paths;

  void validate() const;
  TrainConfig stage1() const;
  TrainConfig stage2() const;

  nlohmann::json to_json() const;
  /// Overlays `j` on the defaults. In strict mode any key absent from the
  /// default schema is an error.
  static PipelineConfig from_json(const nlohmann::json& j, bool strict = true);
};

/// Defaults when `path` is empty.
PipelineConfig parse_config(const std::optional<std::filesystem::path>& path, bool strict = true);

/// Applies one dotted-key override, e.g. ("augment.theta", "0.3"). Ranges
/// are not checked here, since several overrides may only make sense
/// together; call validate() once they are all applied.
void apply_override(PipelineConfig& cfg, const std::string& dotted_key, const std::string& json_value,
                    bool strict = true);

}  // namespace sfd
