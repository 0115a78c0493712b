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


#include "sfd/sfd.h"

#include <cmath>
#include <cstdlib>
#include <cstring>
#include <fstream>
#include <iostream>
#include <memory>
#include <new>
#include <optional>
#include <string>

#include <json.hpp>

#include "sfd/cam.hpp"
#include "sfd/checkpoint.hpp"
#include "sfd/config.hpp"
#include "sfd/corpus.hpp"
#include "sfd/error.hpp"
#include "sfd/eval.hpp"
#include "sfd/image_io.hpp"
#include "sfd/selflearn.hpp"
#include "sfd/splice.hpp"
#include "sfd/synth.hpp"

namespace fs = std::filesystem;
using nlohmann::json;

struct sfd_config {
  sfd::PipelineConfig cfg;
};

struct sfd_model {
  sfd::Model<float> model;
  sfd::NormalizationSpec norm;
  int round = 0;
};

namespace {

thread_local std::string g_last_error;

sfd_status status_of(sfd::ErrorKind k) {
  switch (k) {
    case sfd::ErrorKind::InvalidArgument: return SFD_ERR_INVALID_ARGUMENT;
    case sfd::ErrorKind::Io: return SFD_ERR_IO;
    case sfd::ErrorKind::Format: return SFD_ERR_FORMAT;
    case sfd::ErrorKind::Numeric: return SFD_ERR_NUMERIC;
    case sfd::ErrorKind::Internal: return SFD_ERR_INTERNAL;
  }
  return SFD_ERR_INTERNAL;
}

template <class F>
sfd_status guard(F&& f) {
  try {
    f();
    g_last_error.clear();
    return SFD_OK;
  } catch (const sfd::Error& e) {
    g_last_error = e.what();
    return status_of(e.kind());
  } catch (const json::exception& e) {
    g_last_error = e.what();
    return SFD_ERR_FORMAT;
  } catch (const fs::filesystem_error& e) {
    g_last_error = e.what();
    return SFD_ERR_IO;
  } catch (const std::bad_alloc&) {
    g_last_error = "out of memory";
    return SFD_ERR_INTERNAL;
  } catch (const std::exception& e) {
    g_last_error = e.what();
    return SFD_ERR_INTERNAL;
  } catch (...) {
    g_last_error = "unknown error";
    return SFD_ERR_INTERNAL;
  }
}

char* dup_string(const std::string& s) {
  char* p = static_cast<char*>(std::malloc(s.size() + 1));
  if (!p) throw std::bad_alloc();
  std::memcpy(p, s.c_str(), s.size() + 1);
  return p;
}

void need(const void* p, const char* what) {
  if (!p) sfd::fail(sfd::ErrorKind::InvalidArgument, std::string(what) + " must not be null");
}

void write_text(const fs::path& path, const std::string& text) {
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  std::ofstream f(path, std::ios::binary);
  if (!f) sfd::fail(sfd::ErrorKind::Io, "cannot write " + path.string());
  f << text;
  if (!f) sfd::fail(sfd::ErrorKind::Io, "write failed: " + path.string());
}

fs::path resolve_checkpoint(const fs::path& p) {
  if (fs::is_directory(p)) return sfd::best_checkpoint(p);
  return p;
}

sfd::NormalizationSpec norm_from(const sfd::CheckpointMeta& meta, const sfd::NormalizationSpec& fallback) {
  if (!meta.extra.contains("normalization")) return fallback;
  const json& n = meta.extra.at("normalization");
  sfd::NormalizationSpec spec;
  spec.mean = n.at("mean").get<std::array<double, 3>>();
  spec.scale = n.at("scale").get<std::array<double, 3>>();
  spec.validate();
  return spec;
}

std::vector<sfd::LoadedSample> load_set(const char* manifest) {
  need(manifest, "manifest");
  return sfd::load_samples(sfd::load_manifest(manifest));
}

// Echo of the resolved configuration so the run dir alone can replay it.
void record_config(sfd::PipelineConfig cfg, const char* train, const char* val, const fs::path& run_dir) {
  cfg.paths.run_dir = fs::absolute(run_dir).string();
  cfg.paths.train_manifest = fs::absolute(train).string();
  cfg.paths.val_manifest = fs::absolute(val).string();
  write_text(run_dir / "config.json", cfg.to_json().dump(2) + "\n");
}

const char* class_name(int c) { return c == 0 ? "smoke" : "fire"; }

}  // namespace

extern "C" {

const char* sfd_version(void) { return "0.1.0"; }

const char* sfd_status_name(sfd_status status) {
  switch (status) {
    case SFD_OK: return "ok";
    case SFD_ERR_INVALID_ARGUMENT: return "invalid_argument";
    case SFD_ERR_IO: return "io";
    case SFD_ERR_FORMAT: return "format";
    case SFD_ERR_NUMERIC: return "numeric";
    case SFD_ERR_INTERNAL: return "internal";
  }
  return "unknown";
}

const char* sfd_last_error(void) { return g_last_error.c_str(); }

void sfd_string_free(char* s) { std::free(s); }

sfd_status sfd_config_load(const char* path, int strict, sfd_config** out) {
  return guard([&] {
    need(out, "out");
    *out = nullptr;
    std::optional<fs::path> p;
    if (path && *path) p = fs::path(path);
    auto holder = std::make_unique<sfd_config>();
    holder->cfg = sfd::parse_config(p, strict != 0);
    *out = holder.release();
  });
}

sfd_status sfd_config_set(sfd_config* cfg, const char* dotted_key, const char* json_value) {
  return guard([&] {
    need(cfg, "config");
    need(dotted_key, "key");
    need(json_value, "value");
    sfd::apply_override(cfg->cfg, dotted_key, json_value, true);
  });
}

sfd_status sfd_config_validate(const sfd_config* cfg) {
  return guard([&] {
    need(cfg, "config");
    cfg->cfg.validate();
  });
}

sfd_status sfd_config_to_json(const sfd_config* cfg, char** out_json) {
  return guard([&] {
    need(cfg, "config");
    need(out_json, "out_json");
    *out_json = dup_string(cfg->cfg.to_json().dump(2));
  });
}

sfd_status sfd_config_save(const sfd_config* cfg, const char* path) {
  return guard([&] {
    need(cfg, "config");
    need(path, "path");
    write_text(path, cfg->cfg.to_json().dump(2) + "\n");
  });
}

void sfd_config_destroy(sfd_config* cfg) { delete cfg; }

sfd_status sfd_synth(const sfd_synth_params* params, const char* out_dir, size_t* written) {
  return guard([&] {
    need(params, "params");
    need(out_dir, "out_dir");
    sfd::SynthSpec spec;
    spec.counts = {params->fire, params->smoke, params->both, params->simple_negative,
                   params->complex_negative};
    spec.image_size = params->image_size;
    spec.seed = params->seed;
    spec.domain = params->shifted ? sfd::SynthDomain::Shifted : sfd::SynthDomain::Train;
    if (params->id_prefix) spec.id_prefix = params->id_prefix;
    const auto res = sfd::synth_generate(spec, out_dir);
    if (written) *written = res.manifest.size();
  });
}

sfd_status sfd_split(const char* manifest, const char* out_dir, double train_fraction, uint64_t seed,
                     char** warnings) {
  return guard([&] {
    need(manifest, "manifest");
    need(out_dir, "out_dir");
    const auto m = sfd::load_manifest(manifest);
    const auto res = sfd::split_train_val(m, {train_fraction, seed});
    fs::create_directories(out_dir);
    sfd::save_manifest(res.train, fs::path(out_dir) / "train.jsonl");
    sfd::save_manifest(res.val, fs::path(out_dir) / "val.jsonl");
    if (warnings) {
      std::string w;
      for (const auto& s : res.warnings) w += s + "\n";
      *warnings = dup_string(w);
    }
  });
}

sfd_status sfd_train(const sfd_config* cfg, const char* train_manifest, const char* val_manifest,
                     const char* run_dir, double* best_val_loss) {
  return guard([&] {
    need(cfg, "config");
    need(run_dir, "run_dir");
    cfg->cfg.validate();
    const auto train = load_set(train_manifest);
    const auto val = load_set(val_manifest);
    fs::create_directories(run_dir);
    record_config(cfg->cfg, train_manifest, val_manifest, run_dir);
    const auto state = sfd::run_stage1(cfg->cfg, train, val, run_dir);
    if (best_val_loss) *best_val_loss = state.history.front().best_val_loss;
  });
}

sfd_status sfd_selflearn(const sfd_config* cfg, const char* train_manifest, const char* val_manifest,
                         const char* run_dir, int max_rounds, char** history_json) {
  return guard([&] {
    need(cfg, "config");
    need(run_dir, "run_dir");
    const auto train = load_set(train_manifest);
    const auto val = load_set(val_manifest);
    fs::create_directories(run_dir);
    record_config(cfg->cfg, train_manifest, val_manifest, run_dir);
    const auto state = sfd::selflearn_loop(cfg->cfg, train, val, run_dir, max_rounds);
    if (history_json) *history_json = dup_string(state.to_json().dump(2));
  });
}

sfd_status sfd_evaluate(const sfd_config* cfg, const char* checkpoint, const char* manifest,
                        char** report_json, char** table) {
  return guard([&] {
    need(cfg, "config");
    cfg->cfg.validate();
    need(checkpoint, "checkpoint");
    need(manifest, "manifest");
    const auto ck = sfd::load_checkpoint(resolve_checkpoint(checkpoint));
    const sfd::Model<float> model(ck.arch, ck.params);
    const auto data = sfd::load_manifest(manifest);
    const auto report =
        sfd::evaluate(model, data, norm_from(ck.meta, cfg->cfg.normalization), cfg->cfg.threshold);
    if (report_json) *report_json = dup_string(report.to_json().dump(2));
    if (table) *table = dup_string(report.table(fs::path(checkpoint).filename().string()));
  });
}

sfd_status sfd_model_load(const char* checkpoint, sfd_model** out) {
  return guard([&] {
    need(checkpoint, "checkpoint");
    need(out, "out");
    *out = nullptr;
    auto ck = sfd::load_checkpoint(resolve_checkpoint(checkpoint));
    const auto norm = norm_from(ck.meta, sfd::NormalizationSpec{});
    *out = new sfd_model{sfd::Model<float>(ck.arch, std::move(ck.params)), norm, ck.meta.round};
  });
}

int sfd_model_input_size(const sfd_model* model) { return model ? model->model.arch().input_size : -1; }

sfd_status sfd_model_round(const sfd_model* model, int* round) {
  return guard([&] {
    need(model, "model");
    need(round, "round");
    *round = model->round;
  });
}

sfd_status sfd_model_predict(const sfd_model* model, const double* pixels, int height, int width,
                             int channels, double out_probs[2]) {
  return guard([&] {
    need(model, "model");
    need(pixels, "pixels");
    need(out_probs, "out_probs");
    sfd::require(height > 0 && width > 0 && (channels == 1 || channels == 3),
                 "predict: image must be HxWx1 or HxWx3 with positive size");
    sfd::Image img;
    img.height = height;
    img.width = width;
    img.channels = channels;
    const std::size_t n = static_cast<std::size_t>(height) * static_cast<std::size_t>(width) *
                          static_cast<std::size_t>(channels);
    img.data.assign(pixels, pixels + n);
    const auto p = model->model.predict_proba(
        sfd::prepare_input<float>(img, model->model.arch(), model->norm));
    out_probs[0] = p[0];
    out_probs[1] = p[1];
  });
}

sfd_status sfd_model_predict_file(const sfd_model* model, const char* image_path, double out_probs[2]) {
  return guard([&] {
    need(model, "model");
    need(image_path, "image_path");
    need(out_probs, "out_probs");
    const auto p = model->model.predict_proba(
        sfd::prepare_input<float>(sfd::read_rgb(image_path), model->model.arch(), model->norm));
    out_probs[0] = p[0];
    out_probs[1] = p[1];
  });
}

void sfd_model_destroy(sfd_model* model) { delete model; }

sfd_status sfd_augment_preview(const sfd_config* cfg, const char* manifest, const char* out_dir,
                               int count, uint64_t seed) {
  return guard([&] {
    need(cfg, "config");
    cfg->cfg.validate();
    need(out_dir, "out_dir");
    sfd::require(count >= 0, "augment-preview: count must be >= 0");
    const auto samples = load_set(manifest);
    sfd::NegativePool pool;
    std::vector<const sfd::LoadedSample*> positives;
    for (const auto& s : samples) {
      if (s.partition == sfd::Partition::SimpleNegative) pool.add(s.id, s.partition, s.image);
      if (s.partition == sfd::Partition::Positive) positives.push_back(&s);
    }
    sfd::require(!positives.empty(), "augment-preview: manifest has no positives");
    const fs::path dir(out_dir);
    fs::create_directories(dir);
    json list = json::array();
    for (int i = 0; i < count; ++i) {
      const auto& pos = *positives[static_cast<std::size_t>(i) % positives.size()];
      sfd::Rng rng = sfd::Rng::derive(seed, static_cast<std::uint64_t>(i));
      const auto out = sfd::splice_augment(pos.image, pos.label, pool, nullptr, cfg->cfg.augment, rng);
      json rec = {{"index", i},
                  {"positive_id", pos.id},
                  {"gate_draw", out.trace.gate_draw},
                  {"fired", out.trace.fired},
                  {"n", out.trace.n},
                  {"labels", {{"smoke", out.label.smoke}, {"fire", out.label.fire}}}};
      json stitches = json::array();
      for (std::size_t k = 0; k < out.images.size(); ++k) {
        const auto& sd = out.trace.stitches[k];
        const std::string file = "preview_" + std::to_string(i) + "_" + std::to_string(k) + ".png";
        sfd::write_png(dir / file, out.images[k]);
        stitches.push_back({{"file", file},
                            {"negative_id", pool.id(static_cast<std::size_t>(sd.neg_index))},
                            {"direction", sfd::to_string(sd.dir)}});
      }
      rec["stitches"] = stitches;
      list.push_back(rec);
    }
    write_text(dir / "preview.json", json{{"seed", seed}, {"items", list}}.dump(2) + "\n");
  });
}

sfd_status sfd_cam_overlay(const sfd_config* cfg, const char* checkpoint, const char* manifest,
                           const char* sample_id, const char* out_dir, double alpha) {
  return guard([&] {
    need(cfg, "config");
    cfg->cfg.validate();
    need(checkpoint, "checkpoint");
    need(manifest, "manifest");
    need(out_dir, "out_dir");
    sfd::require(alpha >= 0.0 && alpha <= 1.0, "cam-overlay: alpha must lie in [0, 1]");
    const auto ck = sfd::load_checkpoint(resolve_checkpoint(checkpoint));
    const sfd::Model<float> model(ck.arch, ck.params);
    const auto norm = norm_from(ck.meta, cfg->cfg.normalization);
    const auto data = sfd::load_manifest(manifest);
    const fs::path dir(out_dir);
    fs::create_directories(dir);
    json list = json::array();
    const auto& bias = model.params().head_bias().values;
    for (const auto& s : data.samples()) {
      if (sample_id ? s.id != sample_id : s.partition != sfd::Partition::Positive) continue;
      const sfd::Image img = sfd::read_rgb(s.image_path);
      const auto fwd = model.forward(sfd::prepare_input<float>(img, model.arch(), norm));
      std::vector<sfd::CamMap> cams;
      json rec = {{"id", s.id}, {"labels", {{"smoke", s.label.smoke}, {"fire", s.label.fire}}}};
      for (int c = 0; c < sfd::kNumClasses; ++c) {
        cams.push_back(sfd::compute_cam(model, fwd, c, img.height, img.width));
        const std::string file = s.id + "_" + class_name(c) + ".png";
        sfd::write_png(dir / file, sfd::render_overlay(img, cams.back(), alpha));
        const double logit = fwd.logits[static_cast<std::size_t>(c)];
        rec[class_name(c)] = {{"file", file},
                              {"logit", logit},
                              {"probability", 1.0 / (1.0 + std::exp(-logit))},
                              {"residual", sfd::grid_mean(cams.back()) +
                                               static_cast<double>(bias[static_cast<std::size_t>(c)]) - logit}};
      }
      const auto region = sfd::extract_trusted_region(img, cams, s.label, s.id);
      if (region) {
        rec["bbox"] = {region->bbox.x, region->bbox.y, region->bbox.w, region->bbox.h};
        rec["mask_area"] = region->mask_area;
      } else {
        rec["bbox"] = nullptr;
        rec["mask_area"] = 0;
      }
      list.push_back(rec);
    }
    if (sample_id && list.empty())
      sfd::fail(sfd::ErrorKind::InvalidArgument, std::string("cam-overlay: no sample with id ") + sample_id);
    write_text(dir / "cam.json", json{{"alpha", alpha}, {"samples", list}}.dump(2) + "\n");
  });
}

}  // extern "C"
