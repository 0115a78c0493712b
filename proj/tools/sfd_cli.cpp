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


#include <cstdint>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "sfd/sfd.h"

namespace {

// One machine-parsable line on stderr per failure.
int report_failure(const char* status, const std::string& message) {
  std::string flat = message;
  for (char& c : flat)
    if (c == '\n' || c == '\r') c = ' ';
  std::cerr << "error status=" << status << " message=" << nlohmann::json(flat).dump() << "\n";
  return 1;
}

struct Failure {
  sfd_status status;
};

void check(sfd_status s) {
  if (s != SFD_OK) throw Failure{s};
}

std::string take(char* s) {
  std::string out = s ? s : "";
  sfd_string_free(s);
  return out;
}

struct Common {
  std::uint64_t seed = 0;
  bool seed_given = false;
  std::string config_path;
  std::vector<std::string> overrides;
};

struct ConfigHandle {
  sfd_config* ptr = nullptr;
  nlohmann::json resolved;
  ~ConfigHandle() { sfd_config_destroy(ptr); }
};

// Loads --config, then --seed, then each --set in order. Logs the seed.
void load_config(const Common& common, ConfigHandle& h) {
  check(sfd_config_load(common.config_path.empty() ? nullptr : common.config_path.c_str(), 1, &h.ptr));
  if (common.seed_given) check(sfd_config_set(h.ptr, "seed", std::to_string(common.seed).c_str()));
  for (const auto& kv : common.overrides) {
    const auto eq = kv.find('=');
    if (eq == std::string::npos || eq == 0) {
      std::cerr << "error status=invalid_argument message="
                << nlohmann::json("--set expects key=value, got '" + kv + "'").dump() << "\n";
      std::exit(1);
    }
    std::string value = kv.substr(eq + 1);
    // Bare words are taken as strings so --set paths.run_dir=out works.
    if (!nlohmann::json::accept(value)) value = nlohmann::json(value).dump();
    check(sfd_config_set(h.ptr, kv.substr(0, eq).c_str(), value.c_str()));
  }
  check(sfd_config_validate(h.ptr));
  char* text = nullptr;
  check(sfd_config_to_json(h.ptr, &text));
  h.resolved = nlohmann::json::parse(take(text));
  std::cerr << "seed=" << h.resolved.at("seed").get<std::uint64_t>() << "\n";
}

std::string or_config(const std::string& flag, const nlohmann::json& cfg, const char* key) {
  if (!flag.empty()) return flag;
  return cfg.at("paths").at(key).get<std::string>();
}

void require_path(const std::string& value, const char* what) {
  if (value.empty()) {
    std::cerr << "error status=invalid_argument message="
              << nlohmann::json(std::string(what) + " is required (flag or config paths)").dump() << "\n";
    std::exit(1);
  }
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Smoke and fire detection with random splicing and CAM self-learning"};
  app.require_subcommand(1);
  app.fallthrough();

  Common common;
  app.add_option_function<std::uint64_t>(
         "--seed",
         [&](const std::uint64_t& s) {
           common.seed = s;
           common.seed_given = true;
         },
         "Random seed (default 0)")
      ->default_str("0");
  app.add_option("--config", common.config_path, "JSON config file");
  app.add_option("--set", common.overrides, "Override a config key, e.g. --set augment.theta=0.3");

  std::string out_dir, manifest, train_manifest, val_manifest, run_dir, checkpoint, sample_id,
      report_path;

  auto* synth = app.add_subcommand("synth", "Generate a synthetic labelled corpus");
  int n_fire = 20, n_smoke = 20, n_both = 20, n_simple = 40, n_complex = 20, size = 64;
  bool shifted = false;
  std::string prefix;
  synth->add_option("--out", out_dir, "Output directory")->required();
  synth->add_option("--fire", n_fire, "Fire-only positives")->capture_default_str();
  synth->add_option("--smoke", n_smoke, "Smoke-only positives")->capture_default_str();
  synth->add_option("--both", n_both, "Fire-and-smoke positives")->capture_default_str();
  synth->add_option("--simple", n_simple, "Simple negatives")->capture_default_str();
  synth->add_option("--complex", n_complex, "Complex negatives")->capture_default_str();
  synth->add_option("--size", size, "Image side in pixels")->capture_default_str();
  synth->add_flag("--shifted", shifted, "Small objects over unseen backgrounds");
  synth->add_option("--prefix", prefix, "Sample id prefix");

  auto* split = app.add_subcommand("split", "Stratified train/validation split");
  double fraction = 0.8;
  split->add_option("--manifest", manifest, "Input manifest")->required();
  split->add_option("--out", out_dir, "Directory for train.jsonl and val.jsonl")->required();
  split->add_option("--fraction", fraction, "Train fraction per category")->capture_default_str();

  auto* train = app.add_subcommand("train", "Stage 1: random splicing only");
  auto* selflearn = app.add_subcommand("selflearn", "Stage 2: CAM self-learning rounds");
  int max_rounds = -1;
  for (auto* sub : {train, selflearn}) {
    sub->add_option("--train", train_manifest, "Training manifest");
    sub->add_option("--val", val_manifest, "Validation manifest");
    sub->add_option("--run-dir", run_dir, "Run directory");
  }
  selflearn->add_option("--max-rounds", max_rounds, "Self-learning rounds (default from config)");

  auto* eval = app.add_subcommand("eval", "TPR/FPR/AUC on a test manifest");
  eval->add_option("--checkpoint", checkpoint, "Checkpoint file or run directory")->required();
  eval->add_option("--manifest", manifest, "Test manifest (default from config)");
  eval->add_option("--out", report_path, "Write the JSON report here");

  auto* preview = app.add_subcommand("augment-preview", "Write spliced examples for inspection");
  int count = 8;
  preview->add_option("--manifest", manifest, "Manifest with positives and simple negatives")->required();
  preview->add_option("--out", out_dir, "Output directory")->required();
  preview->add_option("--count", count, "Number of positives to splice")->capture_default_str();

  auto* cam = app.add_subcommand("cam-overlay", "Per-class CAM overlays and trusted regions");
  double alpha = 0.5;
  cam->add_option("--checkpoint", checkpoint, "Checkpoint file or run directory")->required();
  cam->add_option("--manifest", manifest, "Manifest containing the sample(s)")->required();
  cam->add_option("--id", sample_id, "Sample id (default: every positive)");
  cam->add_option("--out", out_dir, "Output directory")->required();
  cam->add_option("--alpha", alpha, "Overlay opacity")->capture_default_str();

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    std::cerr << app.help() << "\n";
    report_failure("usage", e.what());
    return 2;
  }

  try {
    ConfigHandle cfg;
    load_config(common, cfg);
    const std::uint64_t seed = cfg.resolved.at("seed").get<std::uint64_t>();

    if (*synth) {
      const sfd_synth_params p{n_fire, n_smoke, n_both, n_simple, n_complex, size, seed,
                               shifted ? 1 : 0, prefix.c_str()};
      size_t written = 0;
      check(sfd_synth(&p, out_dir.c_str(), &written));
      std::cout << "wrote " << written << " samples to " << out_dir << "\n";
    } else if (*split) {
      char* warnings = nullptr;
      check(sfd_split(manifest.c_str(), out_dir.c_str(), fraction, seed, &warnings));
      std::cerr << take(warnings);
      std::cout << "wrote " << out_dir << "/train.jsonl and " << out_dir << "/val.jsonl\n";
    } else if (*train || *selflearn) {
      train_manifest = or_config(train_manifest, cfg.resolved, "train_manifest");
      val_manifest = or_config(val_manifest, cfg.resolved, "val_manifest");
      run_dir = or_config(run_dir, cfg.resolved, "run_dir");
      require_path(train_manifest, "--train");
      require_path(val_manifest, "--val");
      if (*train) {
        double best = 0.0;
        check(sfd_train(cfg.ptr, train_manifest.c_str(), val_manifest.c_str(), run_dir.c_str(), &best));
        std::cout << "stage 1 best validation loss " << best << " -> " << run_dir << "\n";
      } else {
        if (max_rounds < 0) max_rounds = cfg.resolved.at("selflearn").at("max_rounds").get<int>();
        char* history = nullptr;
        check(sfd_selflearn(cfg.ptr, train_manifest.c_str(), val_manifest.c_str(), run_dir.c_str(),
                            max_rounds, &history));
        std::cout << take(history) << "\n";
      }
    } else if (*eval) {
      manifest = or_config(manifest, cfg.resolved, "test_manifest");
      require_path(manifest, "--manifest");
      char* report = nullptr;
      char* table = nullptr;
      check(sfd_evaluate(cfg.ptr, checkpoint.c_str(), manifest.c_str(), &report, &table));
      const std::string json_text = take(report);
      std::cout << take(table);
      if (!report_path.empty()) {
        std::ofstream f(report_path);
        f << json_text << "\n";
        if (!f) return report_failure("io", "cannot write " + report_path);
      }
    } else if (*preview) {
      check(sfd_augment_preview(cfg.ptr, manifest.c_str(), out_dir.c_str(), count, seed));
      std::cout << "wrote " << out_dir << "/preview.json\n";
    } else if (*cam) {
      check(sfd_cam_overlay(cfg.ptr, checkpoint.c_str(), manifest.c_str(),
                            sample_id.empty() ? nullptr : sample_id.c_str(), out_dir.c_str(), alpha));
      std::cout << "wrote " << out_dir << "/cam.json\n";
    }
  } catch (const Failure& f) {
    return report_failure(sfd_status_name(f.status), sfd_last_error());
  }
  return 0;
}
