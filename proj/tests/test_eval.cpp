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

#include <cmath>
#include <fstream>

#include "sfd/error.hpp"
#include "sfd/eval.hpp"
#include "sfd/image_io.hpp"
#include "test_util.hpp"

using namespace sfd;

namespace {

// Mann-Whitney by explicit pair counting, ties worth one half.
double pairwise_auc(const std::vector<double>& s, const std::vector<int>& y) {
  double wins = 0.0, pairs = 0.0;
  for (std::size_t i = 0; i < s.size(); ++i)
    for (std::size_t j = 0; j < s.size(); ++j)
      if (y[i] && !y[j]) {
        pairs += 1.0;
        wins += s[i] > s[j] ? 1.0 : (s[i] == s[j] ? 0.5 : 0.0);
      }
  return wins / pairs;
}

// One feature equal to relu(normalized red); smoke rises with brightness, fire falls.
Model<float> brightness_model() {
  Architecture arch;
  arch.input_size = 8;
  arch.blocks = {{1, false}};
  auto p = zero_params<float>(arch);
  p.conv_weight(0).values[4] = 1.0f;  // out 0, in 0, centre tap
  p.head_weight().values = {10.0f, -10.0f};
  p.head_bias().values = {-2.0f, 2.0f};
  return Model<float>(arch, p);
}

}  // namespace

TEST_CASE("threshold rates on tiny cases") {
  const std::vector<double> s = {0.9, 0.1};
  const std::vector<int> y = {1, 0};
  const auto r = tpr_fpr_at_threshold(s, y);
  CHECK(r.tpr == 1.0);
  CHECK(r.fpr == 0.0);
  CHECK(r.counts == ConfusionCounts{1, 0, 1, 0});

  const std::vector<double> flat = {0.5, 0.5, 0.5, 0.5};
  const std::vector<int> y2 = {1, 0, 0, 1};
  const auto f = tpr_fpr_at_threshold(flat, y2);
  CHECK(f.fpr == 1.0);  // >= threshold counts as positive
  CHECK(f.tpr == 1.0);

  const std::vector<int> bad = {1};
  CHECK_THROWS_AS(tpr_fpr_at_threshold(s, bad), Error);
}

TEST_CASE("confusion counts match a direct loop and sum to n") {
  for (int k = 0; k < 50; ++k) {
    Rng rng = Rng::derive(11, static_cast<std::uint64_t>(k));
    const std::size_t n = 1 + rng.uniform_int(0, 60);
    std::vector<double> s(n);
    std::vector<int> y(n);
    for (std::size_t i = 0; i < n; ++i) {
      s[i] = std::round(rng.uniform() * 10) / 10;
      y[i] = rng.uniform() < 0.4;
    }
    const double t = std::round(rng.uniform() * 10) / 10;
    ConfusionCounts c;
    for (std::size_t i = 0; i < n; ++i) {
      if (y[i] == 1 && s[i] >= t) ++c.tp;
      if (y[i] == 0 && s[i] >= t) ++c.fp;
      if (y[i] == 0 && s[i] < t) ++c.tn;
      if (y[i] == 1 && s[i] < t) ++c.fn;
    }
    const auto r = tpr_fpr_at_threshold(s, y, t);
    CHECK(r.counts == c);
    CHECK(static_cast<std::size_t>(c.tp + c.fp + c.tn + c.fn) == n);
  }
}

TEST_CASE("rates are non-increasing in the threshold") {
  Rng rng(12);
  std::vector<double> s(200);
  std::vector<int> y(200);
  for (std::size_t i = 0; i < s.size(); ++i) {
    s[i] = rng.uniform();
    y[i] = i % 3 == 0;
  }
  double prev_tpr = 2.0, prev_fpr = 2.0;
  for (double t = 0.0; t <= 1.0; t += 0.05) {
    const auto r = tpr_fpr_at_threshold(s, y, t);
    CHECK(r.tpr <= prev_tpr);
    CHECK(r.fpr <= prev_fpr);
    prev_tpr = r.tpr, prev_fpr = r.fpr;
  }
}

TEST_CASE("AUC reference values") {
  const std::vector<int> y = {0, 0, 1, 1};
  CHECK(roc_auc(std::vector<double>{0.1, 0.2, 0.8, 0.9}, y) == 1.0);
  CHECK(roc_auc(std::vector<double>{0.9, 0.8, 0.2, 0.1}, y) == 0.0);
  CHECK(roc_auc(std::vector<double>{0.5, 0.5, 0.5, 0.5}, y) == 0.5);
  try {
    roc_auc(std::vector<double>{0.1, 0.2}, std::vector<int>{1, 1});
    FAIL("expected throw");
  } catch (const Error& e) {
    CHECK(std::string(e.what()).find("AUC undefined") != std::string::npos);
  }
}

TEST_CASE("AUC matches pair counting and ignores monotone transforms") {
  for (int k = 0; k < 100; ++k) {
    Rng rng = Rng::derive(13, static_cast<std::uint64_t>(k));
    std::vector<double> s(100);
    std::vector<int> y(100);
    for (std::size_t i = 0; i < s.size(); ++i) {
      s[i] = std::round(rng.uniform() * 20) / 20;
      y[i] = rng.uniform() < 0.5;
    }
    y[0] = 1, y[1] = 0;
    const double a = roc_auc(s, y);
    CHECK(std::abs(a - pairwise_auc(s, y)) < 1e-12);
    std::vector<double> t(s.size());
    for (std::size_t i = 0; i < s.size(); ++i) t[i] = std::exp(3 * s[i]) - 7;
    CHECK(std::abs(roc_auc(t, y) - a) < 1e-12);
  }
}

TEST_CASE("make_report leaves undefined metrics as NaN and JSON null") {
  const std::vector<std::array<double, 2>> p = {{0.9, 0.2}, {0.1, 0.7}};
  const std::vector<LabelVector> l = {{true, false}, {false, false}};
  const auto rep = make_report(p, l);
  CHECK(rep.classes[0].auc == 1.0);
  CHECK(std::isnan(rep.classes[1].auc));
  CHECK(std::isnan(rep.classes[1].tpr));
  CHECK(rep.classes[1].fpr == 0.5);
  const auto j = rep.to_json();
  CHECK(j["fire"]["auc"].is_null());
  CHECK(j["smoke"]["auc"] == 1.0);
  CHECK(j["evaluated"] == 2);
  const std::string tab = rep.table("base");
  for (const char* h : {"Smoke TPR", "Fire TPR", "Smoke FPR", "Fire FPR", "Smoke AUC", "Fire AUC", "base"})
    CHECK(tab.find(h) != std::string::npos);
}

TEST_CASE("evaluate runs the model over a manifest and skips undecodable images") {
  test::TempDir dir("eval");
  Manifest m;
  auto add = [&](const std::string& id, double v, LabelVector l, Partition p) {
    const auto path = dir.path() / (id + ".png");
    write_png(path, Image(8, 8, 3, v));
    m.push_back({id, path, l, p});
  };
  add("bright", 1.0, {true, false}, Partition::Positive);
  add("dim", 0.5, {false, true}, Partition::Positive);
  {
    std::ofstream(dir.path() / "broken.png") << "not an image";
    m.push_back({"broken", dir.path() / "broken.png", {}, Partition::SimpleNegative});
  }
  const auto rep = evaluate(brightness_model(), m);
  CHECK(rep.evaluated == 2);
  REQUIRE(rep.skipped.size() == 1);
  CHECK(rep.skipped[0] == "broken");
  CHECK(rep.classes[0].auc == 1.0);
  CHECK(rep.classes[1].auc == 1.0);
  CHECK(rep.classes[0].tpr == 1.0);
  CHECK(rep.classes[0].fpr == 0.0);

  CHECK_THROWS_AS(evaluate(brightness_model(), Manifest{}), Error);
}

TEST_CASE("evaluate AUC agrees with pair counting over model scores") {
  test::TempDir dir("eval100");
  Rng rng(14);
  Manifest m;
  std::vector<double> scores;
  std::vector<int> y;
  const auto model = brightness_model();
  for (int i = 0; i < 100; ++i) {
    const double v = std::round(rng.uniform(0.5, 1.0) * 255) / 255;
    const bool smoke = rng.uniform() < 0.3 + 0.5 * (v - 0.5);
    const auto path = dir.path() / ("s" + std::to_string(i) + ".png");
    write_png(path, Image(8, 8, 3, v));
    m.push_back({"s" + std::to_string(i), path, {smoke, false},
                 smoke ? Partition::Positive : Partition::SimpleNegative});
    scores.push_back(model.predict_proba(prepare_input<float>(read_image(path), model.arch()))[0]);
    y.push_back(smoke);
  }
  const auto rep = evaluate(model, m);
  CHECK(std::abs(rep.classes[0].auc - pairwise_auc(scores, y)) < 1e-12);
  CHECK(std::isnan(rep.classes[1].auc));
}
