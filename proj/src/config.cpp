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

#include "sfd/config.hpp"

#include <fstream>
#include <thread>

#include "sfd/error.hpp"

namespace sfd {

using nlohmann::json;

namespace {

void overlay(json& base, const json& patch, bool strict, const std::string& where) {
  if (!patch.is_object()) fail(ErrorKind::Format, "config" + where + ": expected an object");
  for (auto it = patch.begin(); it != patch.end(); ++it) {
    const std::string key = where + "." + it.key();
    if (!base.contains(it.key())) {
      if (strict) fail(ErrorKind::InvalidArgument, "config: unknown key '" + key.substr(1) + "'");
      continue;
    }
    json& slot = base[it.key()];
    if (slot.is_object() && it.value().is_object())
      overlay(slot, it.value(), strict, key);
    else
      slot = it.value();
  }
}

template <class T>
T get(const json& j, const char* key, const std::string& where) {
  try {
    return j.at(key).get<T>();
  } catch (const json::exception& e) {
    fail(ErrorKind::Format, "config: bad value for '" + where + key + "': " + e.what());
  }
}

}  // namespace

void TrainConfig::validate() const {
  require(learning_rate > 0.0, "train: learning_rate must be > 0");
  require(batch_size >= 1, "train: batch_size must be >= 1");
  require(epochs_per_round >= 1, "train: epochs_per_round must be >= 1");
}

void PipelineConfig::validate() const {
  augment.validate();
  basic.validate();
  model.validate();
  normalization.validate();
  require(stage1_lr > 0.0 && stage2_lr > 0.0, "train: learning rates must be > 0");
  require(batch_size >= 1, "train: batch_size must be >= 1");
  require(epochs_per_round >= 1, "train: epochs_per_round must be >= 1");
  require(threads >= 0, "train: threads must be >= 0");
  require(selflearn.max_rounds >= 0, "selflearn: max_rounds must be >= 0");
  require(selflearn.min_region_area >= 1, "selflearn: min_region_area must be >= 1");
  require(threshold >= 0.0 && threshold <= 1.0, "eval: threshold must lie in [0,1]");
}

TrainConfig PipelineConfig::stage1() const {
  TrainConfig t;
  t.learning_rate = stage1_lr;
  t.batch_size = batch_size;
  t.epochs_per_round = epochs_per_round;
  t.seed = seed;
  t.threads = threads > 0 ? threads : static_cast<int>(std::max(1u, std::thread::hardware_concurrency()));
  return t;
}

TrainConfig PipelineConfig::stage2() const {
  TrainConfig t = stage1();
  t.learning_rate = stage2_lr;
  return t;
}

json PipelineConfig::to_json() const {
  const auto& b = basic;
  return {
      {"seed", seed},
      {"augment",
       {{"theta", augment.theta},
        {"max_negatives", augment.max_negatives},
        {"canvas_size", augment.canvas_size},
        {"region_scale", {augment.region_lo, augment.region_hi}},
        {"splice", splice},
        {"basic",
         {{"p_gray", b.p_gray},
          {"p_vflip", b.p_vflip},
          {"p_hflip", b.p_hflip},
          {"p_rotate", b.p_rotate},
          {"max_rotate_deg", b.max_rotate_deg},
          {"p_brightness", b.p_brightness},
          {"brightness_delta", b.brightness_delta},
          {"p_contrast", b.p_contrast},
          {"contrast_delta", b.contrast_delta},
          {"p_saturation", b.p_saturation},
          {"saturation_range", {b.saturation_lo, b.saturation_hi}},
          {"p_hue", b.p_hue},
          {"hue_delta", b.hue_delta}}}}},
      {"train",
       {{"stage1_lr", stage1_lr},
        {"stage2_lr", stage2_lr},
        {"batch_size", batch_size},
        {"epochs_per_round", epochs_per_round},
        {"threads", threads}}},
      {"model", model.to_json()},
      {"normalization", {{"mean", normalization.mean}, {"scale", normalization.scale}}},
      {"selflearn",
       {{"max_rounds", selflearn.max_rounds},
        {"min_region_area", selflearn.min_region_area},
        {"augment_validation", selflearn.augment_validation}}},
      {"eval", {{"threshold", threshold}}},
      {"paths",
       {{"run_dir", paths.run_dir},
        {"train_manifest", paths.train_manifest},
        {"val_manifest", paths.val_manifest},
        {"test_manifest", paths.test_manifest}}},
  };
}

namespace {

// Reads a fully populated config tree without range checks.
PipelineConfig decode(const json& m) {
  PipelineConfig c;
  c.seed = get<std::uint64_t>(m, "seed", "");
  const json& a = m["augment"];
  c.augment.theta = get<double>(a, "theta", "augment.");
  c.augment.max_negatives = get<int>(a, "max_negatives", "augment.");
  c.augment.canvas_size = get<int>(a, "canvas_size", "augment.");
  const auto rs = get<std::vector<int>>(a, "region_scale", "augment.");
  require(rs.size() == 2, "config: augment.region_scale must be [lo, hi]");
  c.augment.region_lo = rs[0];
  c.augment.region_hi = rs[1];
  c.splice = get<bool>(a, "splice", "augment.");
  const json& b = a["basic"];
  const std::string bw = "augment.basic.";
  c.basic.p_gray = get<double>(b, "p_gray", bw);
  c.basic.p_vflip = get<double>(b, "p_vflip", bw);
  c.basic.p_hflip = get<double>(b, "p_hflip", bw);
  c.basic.p_rotate = get<double>(b, "p_rotate", bw);
  c.basic.max_rotate_deg = get<double>(b, "max_rotate_deg", bw);
  c.basic.p_brightness = get<double>(b, "p_brightness", bw);
  c.basic.brightness_delta = get<double>(b, "brightness_delta", bw);
  c.basic.p_contrast = get<double>(b, "p_contrast", bw);
  c.basic.contrast_delta = get<double>(b, "contrast_delta", bw);
  c.basic.p_saturation = get<double>(b, "p_saturation", bw);
  const auto sr = get<std::vector<double>>(b, "saturation_range", bw);
  require(sr.size() == 2, "config: augment.basic.saturation_range must be [lo, hi]");
  c.basic.saturation_lo = sr[0];
  c.basic.saturation_hi = sr[1];
  c.basic.p_hue = get<double>(b, "p_hue", bw);
  c.basic.hue_delta = get<double>(b, "hue_delta", bw);

  const json& t = m["train"];
  c.stage1_lr = get<double>(t, "stage1_lr", "train.");
  c.stage2_lr = get<double>(t, "stage2_lr", "train.");
  c.batch_size = get<int>(t, "batch_size", "train.");
  c.epochs_per_round = get<int>(t, "epochs_per_round", "train.");
  c.threads = get<int>(t, "threads", "train.");

  c.model = Architecture::from_json(m["model"]);
  c.normalization.mean = get<std::array<double, 3>>(m["normalization"], "mean", "normalization.");
  c.normalization.scale = get<std::array<double, 3>>(m["normalization"], "scale", "normalization.");

  const json& s = m["selflearn"];
  c.selflearn.max_rounds = get<int>(s, "max_rounds", "selflearn.");
  c.selflearn.min_region_area = get<int>(s, "min_region_area", "selflearn.");
  c.selflearn.augment_validation = get<bool>(s, "augment_validation", "selflearn.");
  c.threshold = get<double>(m["eval"], "threshold", "eval.");

  const json& p = m["paths"];
  c.paths.run_dir = get<std::string>(p, "run_dir", "paths.");
  c.paths.train_manifest = get<std::string>(p, "train_manifest", "paths.");
  c.paths.val_manifest = get<std::string>(p, "val_manifest", "paths.");
  c.paths.test_manifest = get<std::string>(p, "test_manifest", "paths.");
  return c;
}

}  // namespace

PipelineConfig PipelineConfig::from_json(const json& j, bool strict) {
  json m = PipelineConfig{}.to_json();
  overlay(m, j, strict, "");
  PipelineConfig c = decode(m);
  c.validate();
  return c;
}

PipelineConfig parse_config(const std::optional<std::filesystem::path>& path, bool strict) {
  if (!path || path->empty()) return PipelineConfig{};
  std::ifstream in(*path);
  if (!in) fail(ErrorKind::Io, "cannot open config " + path->string());
  json j;
  try {
    j = json::parse(in);
  } catch (const json::parse_error& e) {
    fail(ErrorKind::Format, "config " + path->string() + ": " + e.what());
  }
  return PipelineConfig::from_json(j, strict);
}

void apply_override(PipelineConfig& cfg, const std::string& dotted_key, const std::string& json_value,
                    bool strict) {
  json value;
  try {
    value = json::parse(json_value);
  } catch (const json::parse_error&) {
    value = json_value;  // bare strings need no quoting on the command line
  }
  json patch = value;
  std::string rest = dotted_key;
  std::vector<std::string> parts;
  for (std::size_t pos; (pos = rest.find('.')) != std::string::npos; rest = rest.substr(pos + 1))
    parts.push_back(rest.substr(0, pos));
  parts.push_back(rest);
  for (auto it = parts.rbegin(); it != parts.rend(); ++it) patch = json{{*it, patch}};
  json merged = cfg.to_json();
  overlay(merged, patch, strict, "");
  cfg = decode(merged);
}

}  // namespace sfd
