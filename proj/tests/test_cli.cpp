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


#include <doctest.h>

#include <sys/wait.h>

#include <cstdio>
#include <fstream>
#include <sstream>

#include "sfd/config.hpp"
#include "sfd/error.hpp"
#include "sfd/image_io.hpp"
#include "sfd/sfd.h"
#include "test_util.hpp"

using namespace sfd;
namespace fs = std::filesystem;

namespace {

struct Proc {
  int status = -1;
  std::string output;  // stdout and stderr
};

Proc run_cli(const std::string& args) {
  const std::string cmd = std::string(SFD_CLI_PATH) + " " + args + " 2>&1";
  Proc p;
  FILE* f = popen(cmd.c_str(), "r");
  REQUIRE(f != nullptr);
  char buf[4096];
  while (std::size_t n = fread(buf, 1, sizeof buf, f)) p.output.append(buf, n);
  const int raw = pclose(f);
  p.status = WIFEXITED(raw) ? WEXITSTATUS(raw) : -1;
  return p;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream os;
  os << in.rdbuf();
  return os.str();
}

// Relative path -> contents for every regular file below `dir`.
std::map<std::string, std::string> tree(const fs::path& dir) {
  std::map<std::string, std::string> out;
  for (const auto& e : fs::recursive_directory_iterator(dir))
    if (e.is_regular_file()) out[fs::relative(e.path(), dir).string()] = slurp(e.path());
  return out;
}

std::string take(char* s) {
  std::string out = s ? s : "";
  sfd_string_free(s);
  return out;
}

}  // namespace

TEST_CASE("config defaults") {
  const PipelineConfig cfg;
  CHECK(cfg.augment.theta == 0.5);
  CHECK(cfg.basic.p_hflip == 0.5);
  CHECK(cfg.stage1_lr == 0.0004);
  CHECK(cfg.batch_size == 200);
  CHECK(cfg.epochs_per_round == 100);
  CHECK_NOTHROW(cfg.validate());
  const auto parsed = parse_config(std::nullopt);
  CHECK(parsed.to_json() == cfg.to_json());
}

TEST_CASE("config validation and strict keys") {
  CHECK_THROWS_AS(PipelineConfig::from_json({{"augment", {{"theta", 1.5}}}}), Error);
  CHECK_THROWS_AS(PipelineConfig::from_json({{"augment", {{"thetta", 0.5}}}}), Error);
  CHECK_NOTHROW(PipelineConfig::from_json({{"augment", {{"thetta", 0.5}}}}, false));
  CHECK_THROWS_AS(PipelineConfig::from_json({{"train", {{"batch_size", 0}}}}), Error);

  PipelineConfig cfg;
  apply_override(cfg, "augment.theta", "0.25");
  CHECK(cfg.augment.theta == 0.25);
  CHECK_THROWS_AS(apply_override(cfg, "augment.nope", "1"), Error);
  // Overrides are validated as a whole afterwards, so order does not matter.
  apply_override(cfg, "augment.canvas_size", "32");
  apply_override(cfg, "augment.region_scale", "[14, 32]");
  CHECK_NOTHROW(cfg.validate());
}

TEST_CASE("config JSON round trip") {
  test::TempDir dir("cfg");
  PipelineConfig cfg;
  cfg.seed = 99;
  cfg.augment.theta = 0.7;
  cfg.model.blocks = {{3, true}, {5, false}};
  cfg.paths.run_dir = "elsewhere";
  const auto j = cfg.to_json();
  const auto back = PipelineConfig::from_json(nlohmann::json::parse(j.dump()));
  CHECK(back.to_json() == j);
  {
    std::ofstream(dir.path() / "c.json") << j.dump(2);
  }
  CHECK(parse_config(dir.path() / "c.json").to_json() == j);
}

TEST_CASE("C API reports errors through status codes") {
  sfd_config* cfg = nullptr;
  CHECK(sfd_config_load("/nonexistent/config.json", 1, &cfg) != SFD_OK);
  CHECK(cfg == nullptr);
  CHECK(std::string(sfd_last_error()).size() > 0);
  REQUIRE(sfd_config_load(nullptr, 1, &cfg) == SFD_OK);
  CHECK(sfd_config_set(cfg, "augment.theta", "1.5") == SFD_OK);
  CHECK(sfd_config_validate(cfg) == SFD_ERR_INVALID_ARGUMENT);
  CHECK(sfd_config_set(cfg, "augment.theta", "0.3") == SFD_OK);
  CHECK(sfd_config_validate(cfg) == SFD_OK);
  CHECK(sfd_config_set(cfg, "augment.theta", "{not json") == SFD_ERR_FORMAT);
  CHECK(sfd_config_set(cfg, nullptr, "1") == SFD_ERR_INVALID_ARGUMENT);
  char* text = nullptr;
  REQUIRE(sfd_config_to_json(cfg, &text) == SFD_OK);
  CHECK(nlohmann::json::parse(take(text))["augment"]["theta"] == 0.3);
  sfd_config_destroy(cfg);

  sfd_model* model = nullptr;
  CHECK(sfd_model_load("/nonexistent.sfck", &model) == SFD_ERR_IO);
  CHECK(model == nullptr);
  CHECK(std::string(sfd_status_name(SFD_ERR_NUMERIC)) == "numeric");
  CHECK(sfd_synth(nullptr, "x", nullptr) == SFD_ERR_INVALID_ARGUMENT);
}

TEST_CASE("C API predictions agree with file predictions") {
  test::TempDir dir("capi");
  sfd_synth_params p{2, 2, 2, 4, 2, 32, 3, 0, nullptr};
  size_t written = 0;
  REQUIRE(sfd_synth(&p, dir.path().c_str(), &written) == SFD_OK);
  CHECK(written == 12);
  REQUIRE(sfd_split((dir.path() / "manifest.jsonl").c_str(), dir.path().c_str(), 0.5, 3, nullptr) == SFD_OK);
  sfd_config* cfg = nullptr;
  REQUIRE(sfd_config_load(nullptr, 1, &cfg) == SFD_OK);
  for (const auto& [k, v] : std::vector<std::pair<const char*, const char*>>{
           {"model.input_size", "16"},
           {"model.blocks", R"([{"out_channels": 2, "pool": true}])"},
           {"augment.canvas_size", "16"},
           {"augment.region_scale", "[8, 16]"},
           {"train.epochs_per_round", "2"},
           {"train.batch_size", "4"}})
    REQUIRE_MESSAGE(sfd_config_set(cfg, k, v) == SFD_OK, sfd_last_error());
  const auto run = dir.path() / "run";
  double best = 0;
  REQUIRE_MESSAGE(sfd_train(cfg, (dir.path() / "train.jsonl").c_str(), (dir.path() / "val.jsonl").c_str(),
                            run.c_str(), &best) == SFD_OK,
                  sfd_last_error());
  CHECK(std::isfinite(best));
  sfd_model* model = nullptr;
  REQUIRE(sfd_model_load(run.c_str(), &model) == SFD_OK);
  CHECK(sfd_model_input_size(model) == 16);
  int round = -1;
  CHECK(sfd_model_round(model, &round) == SFD_OK);
  CHECK(round == 0);
  std::vector<double> px(16 * 16 * 3, 0.25);
  double a[2], b[2];
  CHECK(sfd_model_predict(model, px.data(), 16, 16, 3, a) == SFD_OK);
  CHECK(sfd_model_predict(model, px.data(), 16, 16, 4, a) == SFD_ERR_INVALID_ARGUMENT);
  CHECK(sfd_model_predict(model, px.data(), 16, 16, 3, a) == SFD_OK);
  const std::string first = (dir.path() / "images" / "fire_only_00000.png").string();
  REQUIRE(sfd_model_predict_file(model, first.c_str(), b) == SFD_OK);
  const Image img = read_image(first);
  CHECK(sfd_model_predict(model, img.data.data(), img.height, img.width, img.channels, a) == SFD_OK);
  CHECK(a[0] == b[0]);
  CHECK(a[1] == b[1]);
  sfd_model_destroy(model);
  sfd_config_destroy(cfg);
}

TEST_CASE("CLI rejects unknown subcommands") {
  const auto p = run_cli("badcmd");
  CHECK(p.status != 0);
  CHECK(p.output.find("synth") != std::string::npos);
  CHECK(run_cli("").status != 0);
  const auto bad = run_cli("--set augment.theta=1.5 synth --out /tmp/sfd_never");
  CHECK(bad.status == 1);
  CHECK(bad.output.find("status=invalid_argument") != std::string::npos);
}

TEST_CASE("CLI synth is deterministic under a fixed seed") {
  test::TempDir dir("clisynth");
  const auto a = run_cli("--seed 7 synth --out " + (dir.path() / "a").string() + " --fire 3 --smoke 3 --both 3 --simple 4 --complex 2 --size 32");
  const auto b = run_cli("--seed 7 synth --out " + (dir.path() / "b").string() + " --fire 3 --smoke 3 --both 3 --simple 4 --complex 2 --size 32");
  REQUIRE_MESSAGE(a.status == 0, a.output);
  REQUIRE(b.status == 0);
  CHECK(a.output.find("seed=7") != std::string::npos);
  const auto ta = tree(dir.path() / "a"), tb = tree(dir.path() / "b");
  CHECK(ta.size() == 17);  // 15 images, manifest, objects
  CHECK(ta == tb);
  const auto c = run_cli("--seed 8 synth --out " + (dir.path() / "c").string() + " --fire 3 --smoke 3 --both 3 --simple 4 --complex 2 --size 32");
  REQUIRE(c.status == 0);
  CHECK(tree(dir.path() / "c") != ta);
}

TEST_CASE("CLI pipeline: synth, split, train, selflearn, eval") {
  test::TempDir dir("clipipe");
  const std::string d = dir.path().string();
  const std::string small =
      " --set model.input_size=16 --set 'model.blocks=[{\"out_channels\":3,\"pool\":true}]'"
      " --set augment.canvas_size=16 --set 'augment.region_scale=[8,16]' --set selflearn.min_region_area=4"
      " --set train.epochs_per_round=2 --set train.batch_size=8 --set train.threads=1 ";
  REQUIRE(run_cli("--seed 3 synth --out " + d + "/data --fire 4 --smoke 4 --both 4 --simple 8 --complex 4 --size 32").status == 0);
  REQUIRE(run_cli("--seed 3 synth --out " + d + "/test --fire 3 --smoke 3 --both 3 --simple 3 --complex 3 --size 32 --prefix t").status == 0);
  REQUIRE(run_cli("--seed 3 split --manifest " + d + "/data/manifest.jsonl --out " + d + "/data").status == 0);
  const std::string io = " --train " + d + "/data/train.jsonl --val " + d + "/data/val.jsonl --run-dir " + d + "/run";
  const auto t = run_cli("--seed 3" + small + "train" + io);
  REQUIRE_MESSAGE(t.status == 0, t.output);
  const auto s = run_cli("--seed 3" + small + "selflearn --max-rounds 2" + io);
  REQUIRE_MESSAGE(s.status == 0, s.output);
  const auto hist = nlohmann::json::parse(slurp(dir.path() / "run/history.json"));
  CHECK(hist["history"].size() >= 1);
  CHECK(hist["history"].size() <= 3);
  CHECK(fs::exists(dir.path() / "run/config.json"));
  const auto e = run_cli("--seed 3" + small + "eval --checkpoint " + d + "/run --manifest " + d +
                         "/test/manifest.jsonl --out " + d + "/report.json");
  REQUIRE_MESSAGE(e.status == 0, e.output);
  CHECK(e.output.find("Smoke AUC") != std::string::npos);
  const auto rep = nlohmann::json::parse(slurp(dir.path() / "report.json"));
  CHECK(rep["evaluated"] == 15);
  CHECK(rep["smoke"].contains("auc"));
}
