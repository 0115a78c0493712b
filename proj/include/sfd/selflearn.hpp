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

#include <filesystem>
#include <functional>
#include <span>
#include <string>
#include <vector>

#include <json.hpp>

#include "sfd/backend.hpp"
#include "sfd/cam.hpp"
#include "sfd/config.hpp"
#include "sfd/corpus.hpp"
#include "sfd/splice.hpp"

namespace sfd {

struct LoadedSample {
  std::string id;
  Image image;
  LabelVector label;
  Partition partition = Partition::SimpleNegative;
};

/// Decodes every image (forced to RGB). Training sets must be complete,
/// so an undecodable file is an error here.
std::vector<LoadedSample> load_samples(const Manifest& m);

/// How one training stage augments its data.
struct StageAugment {
  bool splice = true;
  AugmentConfig splice_cfg;
  BasicAugmentConfig basic;
  NormalizationSpec norm;
  bool augment_validation = true;
  // I_c candidates, empty in stage 1. A positive only draws from regions
  // whose source carries the same label, so the copied label stays true.
  std::span<const TrustedRegion> regions;
  std::span<const TrustedRegion> val_regions;  // from validation positives
  std::uint64_t salt = 0;                  // distinguishes rounds
};

struct StageResult {
  Model<float> best;
  double best_val_loss = 0.0;
  int best_epoch = 0;  // 1-based
  double initial_val_loss = 0.0;
  std::vector<double> val_losses;  // one per epoch
  std::size_t train_items = 0;     // last epoch, after splicing
  std::size_t val_items = 0;
};

/// Positives plus their spliced variants. Stitched images stay at
/// 2 x canvas; everything is compressed to the model input later.
struct AugmentedItem {
  Image image;
  LabelVector label;
  std::string source_id;
};

std::vector<AugmentedItem> build_augmented_set(std::span<const LoadedSample> samples,
                                               const StageAugment& aug, std::uint64_t seed,
                                               std::uint64_t epoch);

/// Runs cfg.epochs_per_round epochs of SGD and keeps the epoch whose
/// validation loss is lowest (first one on ties). Splicing is applied to
/// the validation set too when aug.augment_validation is set; it is drawn
/// once per stage so epochs are compared on identical data.
StageResult train_stage(std::span<const LoadedSample> train, std::span<const LoadedSample> val,
                        const Model<float>& init, const TrainConfig& cfg, const StageAugment& aug,
                        const std::function<void(int, double, double)>& on_epoch = {});

/// True iff the last two entries each failed to strictly improve on the
/// minimum of everything before them.
bool should_stop(std::span<const double> best_val_losses);

struct RoundRecord {
  int round_index = 0;  // 0 = stage 1
  double best_val_loss = 0.0;
  int best_epoch = 0;
  std::string checkpoint_path;  // relative to the run dir
  int region_count = 0;
  double wall_time = 0.0;  // seconds
};

enum class LoopStatus { Running, Converged, MaxRounds };

const char* to_string(LoopStatus s);

struct LoopState {
  std::vector<RoundRecord> history;
  std::vector<TrustedRegion> trusted_regions;  // current generation only
  std::vector<TrustedRegion> val_regions;
  LoopStatus status = LoopStatus::Running;
  int best_round = 0;  // global minimum of best_val_loss

  std::vector<double> losses() const;
  nlohmann::json to_json() const;
  static LoopState from_json(const nlohmann::json& j);
};

/// CAMs for every positive in `samples` under `model`, then trusted
/// regions, dropping those with bbox area below min_area.
std::vector<TrustedRegion> extract_regions(const Model<float>& model,
                                           std::span<const LoadedSample> samples,
                                           const NormalizationSpec& norm, int min_area);

StageAugment stage_augment(const PipelineConfig& cfg, std::uint64_t salt,
                           std::span<const TrustedRegion> regions = {},
                           std::span<const TrustedRegion> val_regions = {});

/// Stage 1: trains from a seeded initialization with the stage-1 rate and
/// splicing only. Writes rounds/0/checkpoint.sfck and history.json.
LoopState run_stage1(const PipelineConfig& cfg, std::span<const LoadedSample> train,
                     std::span<const LoadedSample> val, const std::filesystem::path& run_dir);

/// Stage 2. Resumes from history.json under run_dir (running stage 1 first
/// if it is absent). Round r >= 1 extracts trusted regions with the round
/// r-1 model, feeds them to splicing, retrains from that model with the
/// stage-2 rate, and persists rounds/<r>/. Stops on should_stop or after
/// max_rounds self-learning rounds.
LoopState selflearn_loop(const PipelineConfig& cfg, std::span<const LoadedSample> train,
                         std::span<const LoadedSample> val, const std::filesystem::path& run_dir,
                         int max_rounds);

LoopState read_history(const std::filesystem::path& run_dir);

/// Path to the checkpoint of the round with the lowest validation loss.
std::filesystem::path best_checkpoint(const std::filesystem::path& run_dir);

}  // namespace sfd
