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

#include "sfd/selflearn.hpp"

#include <array>
#include <chrono>
#include <cmath>
#include <fstream>
#include <iostream>
#include <numeric>

#include "sfd/checkpoint.hpp"
#include "sfd/error.hpp"
#include "sfd/image_io.hpp"

namespace sfd {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

constexpr std::uint64_t kValEpoch = 0xFFFFFFFFull;

std::uint64_t stage_seed(std::uint64_t seed, std::uint64_t salt) { return mix64(seed ^ mix64(salt + 0x51)); }

Tensor<float> to_tensor(const Image& img, const Architecture& arch, const NormalizationSpec& norm,
                        const BasicAugmentConfig* basic, Rng* rng) {
  Image x = resize_bilinear(img, arch.input_size, arch.input_size);
  if (basic) x = apply_basic_augments(x, *basic, *rng);
  return prepare_input<float>(x, arch, norm);
}

void write_json(const fs::path& path, const json& j) {
  const auto tmp = fs::path(path.string() + ".tmp");
  {
    std::ofstream out(tmp);
    if (!out) fail(ErrorKind::Io, "cannot write " + tmp.string());
    out << j.dump(2) << '\n';
  }
  fs::rename(tmp, path);
}

fs::path round_dir(const fs::path& run_dir, int r) { return run_dir / "rounds" / std::to_string(r); }

void save_regions(const fs::path& dir, const std::string& name, std::span<const TrustedRegion> regions) {
  fs::create_directories(dir / name);
  json list = json::array();
  for (const auto& r : regions) {
    const std::string file = name + "/" + r.source_id + ".png";
    write_png(dir / file, r.crop);
    list.push_back({{"source_id", r.source_id},
                    {"bbox", {r.bbox.x, r.bbox.y, r.bbox.w, r.bbox.h}},
                    {"mask_area", r.mask_area},
                    {"labels", {{"smoke", r.label.smoke}, {"fire", r.label.fire}}},
                    {"file", file}});
  }
  write_json(dir / (name + ".json"), list);
}

}  // namespace

std::vector<LoadedSample> load_samples(const Manifest& m) {
  std::vector<LoadedSample> out;
  out.reserve(m.size());
  for (const auto& s : m.samples()) out.push_back({s.id, read_rgb(s.image_path), s.label, s.partition});
  return out;
}

std::vector<AugmentedItem> build_augmented_set(std::span<const LoadedSample> samples,
                                               const StageAugment& aug, std::uint64_t seed,
                                               std::uint64_t epoch) {
  NegativePool pool;
  if (aug.splice)
    for (const auto& s : samples)
      if (s.partition == Partition::SimpleNegative) pool.add(s.id, s.partition, s.image);

  // Region indices bucketed by label (smoke bit | fire bit << 1).
  std::array<std::vector<std::size_t>, 4> by_label;
  for (std::size_t i = 0; i < aug.regions.size(); ++i)
    by_label[static_cast<std::size_t>(aug.regions[i].label.smoke | (aug.regions[i].label.fire << 1))].push_back(i);

  std::vector<AugmentedItem> items;
  items.reserve(samples.size() * 2);
  for (const auto& s : samples) {
    items.push_back({s.image, s.label, s.id});
    if (!aug.splice || s.partition != Partition::Positive || pool.empty()) continue;
    const std::uint64_t stream = stable_hash(s.id) ^ epoch;
    Rng rng = Rng::derive(seed, stream, aug.salt);
    const Image* region = nullptr;
    const auto& bucket = by_label[static_cast<std::size_t>(s.label.smoke | (s.label.fire << 1))];
    if (!bucket.empty()) {
      Rng pick = Rng::derive(seed ^ 0x7265676eull, stream, aug.salt);
      region = &aug.regions[bucket[static_cast<std::size_t>(
                                pick.uniform_int(0, static_cast<std::int64_t>(bucket.size()) - 1))]]
                    .crop;
    }
    SpliceOutput out = splice_augment(s.image, s.label, pool, region, aug.splice_cfg, rng);
    for (auto& img : out.images) items.push_back({std::move(img), out.label, s.id});
  }
  return items;
}

StageResult train_stage(std::span<const LoadedSample> train, std::span<const LoadedSample> val,
                        const Model<float>& init, const TrainConfig& cfg, const StageAugment& aug,
                        const std::function<void(int, double, double)>& on_epoch) {
  cfg.validate();
  require(!train.empty(), "train_stage: empty training set");
  require(!val.empty(), "train_stage: empty validation set");
  const Architecture& arch = init.arch();
  const std::uint64_t seed = stage_seed(cfg.seed, aug.salt);

  StageAugment val_aug = aug;
  val_aug.splice = aug.splice && aug.augment_validation;
  val_aug.regions = aug.val_regions;
  std::vector<Tensor<float>> val_x;
  std::vector<LabelVector> val_y;
  for (const auto& item : build_augmented_set(val, val_aug, seed, kValEpoch)) {
    val_x.push_back(to_tensor(item.image, arch, aug.norm, nullptr, nullptr));
    val_y.push_back(item.label);
  }

  Model<float> model = init;
  StageResult result{init, 0.0, 0, 0.0, {}, 0, val_x.size()};
  result.initial_val_loss = model.loss(val_x, val_y);
  result.best_val_loss = std::numeric_limits<double>::infinity();

  for (int epoch = 1; epoch <= cfg.epochs_per_round; ++epoch) {
    const auto items = build_augmented_set(train, aug, seed, static_cast<std::uint64_t>(epoch));
    std::vector<Tensor<float>> xs;
    std::vector<LabelVector> ys;
    xs.reserve(items.size());
    for (std::size_t i = 0; i < items.size(); ++i) {
      Rng rng = Rng::derive(seed ^ 0x6261736963ull, static_cast<std::uint64_t>(epoch), i);
      xs.push_back(to_tensor(items[i].image, arch, aug.norm, &aug.basic, &rng));
      ys.push_back(items[i].label);
    }
    std::vector<std::size_t> order(items.size());
    std::iota(order.begin(), order.end(), 0);
    Rng shuffle = Rng::derive(seed ^ 0x73687566ull, static_cast<std::uint64_t>(epoch));
    for (std::size_t i = order.size(); i > 1; --i)
      std::swap(order[i - 1], order[static_cast<std::size_t>(shuffle.uniform_int(0, static_cast<std::int64_t>(i) - 1))]);

    double train_loss = 0.0;
    std::size_t seen = 0;
    std::vector<Tensor<float>> bx;
    std::vector<LabelVector> by;
    for (std::size_t start = 0; start < order.size(); start += static_cast<std::size_t>(cfg.batch_size)) {
      const std::size_t end = std::min(order.size(), start + static_cast<std::size_t>(cfg.batch_size));
      bx.clear();
      by.clear();
      for (std::size_t k = start; k < end; ++k) {
        bx.push_back(xs[order[k]]);
        by.push_back(ys[order[k]]);
      }
      try {
        train_loss += model.train_step(bx, by, cfg.learning_rate, cfg.threads).loss * static_cast<double>(end - start);
      } catch (const Error& e) {
        fail(e.kind(), "epoch " + std::to_string(epoch) + ": " + e.what());
      }
      seen += end - start;
    }
    const double v = model.loss(val_x, val_y);
    if (!std::isfinite(v)) fail(ErrorKind::Numeric, "epoch " + std::to_string(epoch) + ": non-finite validation loss");
    result.val_losses.push_back(v);
    result.train_items = items.size();
    if (v < result.best_val_loss) {
      result.best_val_loss = v;
      result.best_epoch = epoch;
      result.best = model;
    }
    if (on_epoch) on_epoch(epoch, train_loss / static_cast<double>(seen), v);
  }
  return result;
}

bool should_stop(std::span<const double> h) {
  if (h.size() < 3) return false;
  const std::size_t n = h.size();
  double before = h[0];
  for (std::size_t i = 1; i + 2 < n; ++i) before = std::min(before, h[i]);
  const bool first_failed = !(h[n - 2] < before);
  const bool second_failed = !(h[n - 1] < std::min(before, h[n - 2]));
  return first_failed && second_failed;
}

const char* to_string(LoopStatus s) {
  switch (s) {
    case LoopStatus::Running: return "running";
    case LoopStatus::Converged: return "converged";
    case LoopStatus::MaxRounds: return "max_rounds";
  }
  return "?";
}

std::vector<double> LoopState::losses() const {
  std::vector<double> v;
  for (const auto& r : history) v.push_back(r.best_val_loss);
  return v;
}

json LoopState::to_json() const {
  json h = json::array();
  for (const auto& r : history)
    h.push_back({{"round_index", r.round_index},
                 {"best_val_loss", r.best_val_loss},
                 {"best_epoch", r.best_epoch},
                 {"checkpoint_path", r.checkpoint_path},
                 {"region_count", r.region_count},
                 {"wall_time", r.wall_time}});
  json j = {{"history", h}, {"status", to_string(status)}, {"best_round", best_round}};
  if (!history.empty()) j["best_checkpoint"] = history[static_cast<std::size_t>(best_round)].checkpoint_path;
  return j;
}

LoopState LoopState::from_json(const json& j) {
  LoopState s;
  try {
    for (const auto& r : j.at("history"))
      s.history.push_back({r.at("round_index").get<int>(), r.at("best_val_loss").get<double>(),
                           r.at("best_epoch").get<int>(), r.at("checkpoint_path").get<std::string>(),
                           r.at("region_count").get<int>(), r.at("wall_time").get<double>()});
    const auto st = j.at("status").get<std::string>();
    s.status = st == "converged" ? LoopStatus::Converged
               : st == "max_rounds" ? LoopStatus::MaxRounds
                                    : LoopStatus::Running;
    s.best_round = j.at("best_round").get<int>();
  } catch (const json::exception& e) {
    fail(ErrorKind::Format, std::string("history.json: ") + e.what());
  }
  for (std::size_t i = 0; i < s.history.size(); ++i)
    if (s.history[i].round_index != static_cast<int>(i))
      fail(ErrorKind::Format, "history.json: rounds out of order");
  return s;
}

LoopState read_history(const fs::path& run_dir) {
  std::ifstream in(run_dir / "history.json");
  if (!in) fail(ErrorKind::Io, "cannot open " + (run_dir / "history.json").string());
  try {
    return LoopState::from_json(json::parse(in));
  } catch (const json::parse_error& e) {
    fail(ErrorKind::Format, std::string("history.json: ") + e.what());
  }
}

fs::path best_checkpoint(const fs::path& run_dir) {
  const LoopState s = read_history(run_dir);
  if (s.history.empty()) fail(ErrorKind::Format, "history.json: no rounds recorded");
  return run_dir / s.history[static_cast<std::size_t>(s.best_round)].checkpoint_path;
}

std::vector<TrustedRegion> extract_regions(const Model<float>& model,
                                           std::span<const LoadedSample> samples,
                                           const NormalizationSpec& norm, int min_area) {
  std::vector<TrustedRegion> out;
  for (const auto& s : samples) {
    if (s.partition != Partition::Positive) continue;
    const auto fwd = model.forward(prepare_input<float>(s.image, model.arch(), norm));
    std::vector<CamMap> cams;
    for (int c = 0; c < kNumClasses; ++c)
      if (s.label[c]) cams.push_back(compute_cam(model, fwd, c, s.image.height, s.image.width));
    auto region = extract_trusted_region(s.image, cams, s.label, s.id);
    if (region && region->bbox.area() >= min_area) out.push_back(std::move(*region));
  }
  return out;
}

StageAugment stage_augment(const PipelineConfig& cfg, std::uint64_t salt,
                           std::span<const TrustedRegion> regions,
                           std::span<const TrustedRegion> val_regions) {
  StageAugment a;
  a.splice = cfg.splice;
  a.splice_cfg = cfg.augment;
  a.basic = cfg.basic;
  a.norm = cfg.normalization;
  a.augment_validation = cfg.selflearn.augment_validation;
  a.regions = regions;
  a.val_regions = val_regions;
  a.salt = salt;
  return a;
}

static nlohmann::json ckpt_extra(const PipelineConfig& cfg, int stage) {
  return {{"stage", stage},
          {"normalization", {{"mean", cfg.normalization.mean}, {"scale", cfg.normalization.scale}}}};
}

LoopState run_stage1(const PipelineConfig& cfg, std::span<const LoadedSample> train,
                     std::span<const LoadedSample> val, const fs::path& run_dir) {
  cfg.validate();
  const auto t0 = std::chrono::steady_clock::now();
  const Model<float> init(cfg.model, cfg.seed);
  const StageResult res = train_stage(train, val, init, cfg.stage1(), stage_augment(cfg, 0));

  LoopState state;
  RoundRecord rec;
  rec.round_index = 0;
  rec.best_val_loss = res.best_val_loss;
  rec.best_epoch = res.best_epoch;
  rec.checkpoint_path = "rounds/0/checkpoint.sfck";
  save_checkpoint(run_dir / rec.checkpoint_path, cfg.model, res.best.params(),
                  {0, res.best_epoch, res.best_val_loss, cfg.seed, ckpt_extra(cfg, 1)});
  rec.wall_time = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  state.history.push_back(rec);
  write_json(run_dir / "history.json", state.to_json());
  return state;
}

LoopState selflearn_loop(const PipelineConfig& cfg, std::span<const LoadedSample> train,
                         std::span<const LoadedSample> val, const fs::path& run_dir, int max_rounds) {
  cfg.validate();
  require(max_rounds >= 0, "selflearn: max_rounds must be >= 0");
  LoopState state = fs::exists(run_dir / "history.json") ? read_history(run_dir)
                                                          : run_stage1(cfg, train, val, run_dir);
  if (state.history.empty()) fail(ErrorKind::Format, "history.json: no stage-1 record");

  for (int r = static_cast<int>(state.history.size());; ++r) {
    if (should_stop(state.losses())) {
      state.status = LoopStatus::Converged;
      break;
    }
    if (r > max_rounds) {
      state.status = LoopStatus::MaxRounds;
      break;
    }
    const auto t0 = std::chrono::steady_clock::now();
    const Checkpoint prev = load_checkpoint(run_dir / state.history.back().checkpoint_path);
    if (!(prev.arch == cfg.model))
      fail(ErrorKind::InvalidArgument, "selflearn: checkpoint architecture differs from config");
    const Model<float> prev_model(prev.arch, prev.params);

    state.trusted_regions = extract_regions(prev_model, train, cfg.normalization, cfg.selflearn.min_region_area);
    if (state.trusted_regions.empty())
      std::cerr << "selflearn: round " << r << ": no trusted regions; training without them\n";
    state.val_regions.clear();
    if (cfg.selflearn.augment_validation)
      state.val_regions = extract_regions(prev_model, val, cfg.normalization, cfg.selflearn.min_region_area);
    const fs::path dir = round_dir(run_dir, r);
    save_regions(dir, "regions", state.trusted_regions);
    save_regions(dir, "val_regions", state.val_regions);

    const StageResult res =
        train_stage(train, val, prev_model, cfg.stage2(),
                    stage_augment(cfg, static_cast<std::uint64_t>(r), state.trusted_regions, state.val_regions));
    RoundRecord rec;
    rec.round_index = r;
    rec.best_val_loss = res.best_val_loss;
    rec.best_epoch = res.best_epoch;
    rec.region_count = static_cast<int>(state.trusted_regions.size());
    rec.checkpoint_path = "rounds/" + std::to_string(r) + "/checkpoint.sfck";
    save_checkpoint(run_dir / rec.checkpoint_path, cfg.model, res.best.params(),
                    {r, res.best_epoch, res.best_val_loss, cfg.seed, ckpt_extra(cfg, 2)});
    rec.wall_time = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    state.history.push_back(rec);
    if (rec.best_val_loss < state.history[static_cast<std::size_t>(state.best_round)].best_val_loss)
      state.best_round = r;
    state.status = LoopStatus::Running;
    write_json(run_dir / "history.json", state.to_json());
  }
  write_json(run_dir / "history.json", state.to_json());
  return state;
}

}  // namespace sfd
