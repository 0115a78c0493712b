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

#include <algorithm>
#include <cmath>
#include <fstream>
#include <functional>
#include <iterator>
#include <map>
#include <set>

#include "sfd/corpus.hpp"
#include "sfd/error.hpp"
#include "sfd/image_io.hpp"
#include "sfd/synth.hpp"
#include "test_util.hpp"

using namespace sfd;
using sfd::test::TempDir;
namespace fs = std::filesystem;

namespace {

std::string record(const std::string& id, bool smoke, bool fire, const std::string& partition,
                   const std::string& path = "") {
  return R"({"id": ")" + id + R"(", "image_path": ")" + (path.empty() ? id + ".png" : path) +
         R"(", "smoke": )" + (smoke ? "true" : "false") + R"(, "fire": )" + (fire ? "true" : "false") +
         R"(, "partition": ")" + partition + "\"}";
}

fs::path write_lines(const TempDir& dir, const std::vector<std::string>& lines, const std::string& name = "m.jsonl") {
  const auto p = dir / name;
  std::ofstream out(p);
  for (const auto& l : lines) out << l << "\n";
  return p;
}

std::string error_of(const std::function<void()>& f) {
  try {
    f();
  } catch (const Error& e) {
    return e.what();
  }
  return "";
}

Manifest category_manifest(const std::map<Category, int>& counts) {
  Manifest m;
  int n = 0;
  for (const auto& [cat, k] : counts)
    for (int i = 0; i < k; ++i) {
      Sample s;
      s.id = std::string(to_string(cat)) + "_" + std::to_string(n++);
      s.image_path = s.id + ".png";
      switch (cat) {
        case Category::FireOnly: s.label = {false, true}; s.partition = Partition::Positive; break;
        case Category::SmokeOnly: s.label = {true, false}; s.partition = Partition::Positive; break;
        case Category::FireAndSmoke: s.label = {true, true}; s.partition = Partition::Positive; break;
        case Category::SimpleNegative: s.partition = Partition::SimpleNegative; break;
        case Category::ComplexNegative: s.partition = Partition::ComplexNegative; break;
      }
      m.push_back(s);
    }
  return m;
}

std::set<std::string> ids(const Manifest& m) {
  std::set<std::string> out;
  for (const auto& s : m.samples()) out.insert(s.id);
  return out;
}

}  // namespace

TEST_CASE("label vector is multi-label") {
  const LabelVector both{true, true}, none{};
  CHECK(both[0]);
  CHECK(both[1]);
  CHECK(both.any());
  CHECK_FALSE(none.any());
}

TEST_CASE("five-record manifest loads with a matching tally") {
  TempDir dir("man");
  const auto p = write_lines(dir, {record("a", false, true, "positive"), record("b", true, false, "positive"),
                                   record("c", true, true, "positive"), "",
                                   record("d", false, false, "simple_negative"),
                                   record("e", false, false, "complex_negative")});
  const Manifest m = load_manifest(p);
  REQUIRE(m.size() == 5);
  CHECK(m[0].id == "a");
  CHECK(m[4].id == "e");
  CHECK(m[0].image_path == dir / "a.png");
  std::size_t total = 0;
  for (const auto& [cat, n] : m.category_counts()) {
    total += n;
    CHECK(n == 1);
  }
  CHECK(total == 5);
  CHECK(m.category_counts().size() == 5);
}

TEST_CASE("manifest errors") {
  TempDir dir("manerr");
  CHECK(error_of([&] { load_manifest(write_lines(dir, {}, "empty.jsonl")); }).find("empty manifest") != std::string::npos);
  CHECK(error_of([&] { load_manifest(write_lines(dir, {record("a", true, false, "simple_negative")}, "c.jsonl")); })
            .find("c.jsonl:1") != std::string::npos);
  CHECK_THROWS_AS(load_manifest(write_lines(dir, {record("a", false, false, "positive")}, "c2.jsonl")), Error);
  const std::string malformed =
      error_of([&] { load_manifest(write_lines(dir, {record("a", true, false, "positive"), "{oops"}, "bad.jsonl")); });
  CHECK(malformed.find("bad.jsonl:2") != std::string::npos);
  CHECK_THROWS_AS(load_manifest(write_lines(dir, {R"({"id": "a", "smoke": true, "fire": false, "partition": "positive"})"}, "miss.jsonl")), Error);
  CHECK_THROWS_AS(load_manifest(write_lines(dir, {record("a", true, false, "weird")}, "part.jsonl")), Error);
  CHECK_THROWS_AS(load_manifest(write_lines(dir, {R"({"id": "a", "image_path": "a.png", "smoke": 1, "fire": false, "partition": "positive"})"}, "type.jsonl")), Error);
  CHECK_THROWS_AS(load_manifest(write_lines(dir, {record("a", true, false, "positive"), record("a", true, false, "positive")}, "dup.jsonl")), Error);
  CHECK_THROWS_AS(load_manifest(dir / "nope.jsonl"), Error);
}

TEST_CASE("manifest save and reload round trip") {
  TempDir dir("rt");
  const Manifest m = category_manifest({{Category::FireOnly, 2}, {Category::SimpleNegative, 3}});
  Manifest abs;
  for (auto s : m.samples()) {
    s.image_path = dir / "img" / s.image_path;
    abs.push_back(s);
  }
  save_manifest(abs, dir / "out" / "m.jsonl");
  const Manifest back = load_manifest(dir / "out" / "m.jsonl");
  REQUIRE(back.size() == abs.size());
  for (std::size_t i = 0; i < back.size(); ++i) {
    CHECK(back[i].id == abs[i].id);
    CHECK(back[i].label == abs[i].label);
    CHECK(back[i].partition == abs[i].partition);
    CHECK(fs::weakly_canonical(back[i].image_path) == fs::weakly_canonical(abs[i].image_path));
  }
}

TEST_CASE("split sends floor(0.8 n) of each category to train") {
  const Manifest m = category_manifest({{Category::FireOnly, 10}, {Category::SmokeOnly, 7}, {Category::FireAndSmoke, 3},
                                        {Category::SimpleNegative, 25}, {Category::ComplexNegative, 1}});
  const auto r = split_train_val(m, {0.8, 42});
  const std::map<Category, std::size_t> want_train = {{Category::FireOnly, 8}, {Category::SmokeOnly, 5},
                                                      {Category::FireAndSmoke, 2}, {Category::SimpleNegative, 20},
                                                      {Category::ComplexNegative, 0}};
  for (const auto& [cat, n] : m.category_counts()) {
    const std::size_t tr = r.train.category_counts().count(cat) ? r.train.category_counts().at(cat) : 0;
    const std::size_t va = r.val.category_counts().count(cat) ? r.val.category_counts().at(cat) : 0;
    CHECK(tr == want_train.at(cat));
    CHECK(tr + va == n);
  }
  // Union and disjointness.
  const auto a = ids(r.train), b = ids(r.val), all = ids(m);
  std::vector<std::string> common;
  std::set_intersection(a.begin(), a.end(), b.begin(), b.end(), std::back_inserter(common));
  CHECK(common.empty());
  std::set<std::string> uni = a;
  uni.insert(b.begin(), b.end());
  CHECK(uni == all);
  // The single complex negative lands in validation with a warning.
  REQUIRE(r.warnings.size() == 1);
  CHECK(r.warnings[0].find("complex_negative") != std::string::npos);
}

TEST_CASE("split is deterministic and order preserving") {
  const Manifest m = category_manifest({{Category::FireOnly, 30}, {Category::SmokeOnly, 30}, {Category::FireAndSmoke, 30},
                                        {Category::SimpleNegative, 30}, {Category::ComplexNegative, 30}});
  const auto a = split_train_val(m, {0.8, 7});
  const auto b = split_train_val(m, {0.8, 7});
  CHECK(ids(a.train) == ids(b.train));
  CHECK(ids(a.val) == ids(b.val));
  const auto c = split_train_val(m, {0.8, 8});
  CHECK(ids(a.train) != ids(c.train));
  // File order survives within each output.
  auto position = [&](const std::string& id) {
    for (std::size_t i = 0; i < m.size(); ++i)
      if (m[i].id == id) return i;
    return m.size();
  };
  for (std::size_t i = 1; i < a.train.size(); ++i) CHECK(position(a.train[i - 1].id) < position(a.train[i].id));
}

TEST_CASE("split property over random category sizes") {
  for (int k = 0; k < 25; ++k) {
    Rng rng = Rng::derive(17, static_cast<std::uint64_t>(k));
    std::map<Category, int> counts;
    for (Category c : kAllCategories) counts[c] = static_cast<int>(rng.uniform_int(1, 40));
    const double f = rng.uniform(0.05, 0.95);
    const Manifest m = category_manifest(counts);
    const auto r = split_train_val(m, {f, rng.next()});
    for (Category c : kAllCategories) {
      const std::size_t tr = r.train.category_counts().count(c) ? r.train.category_counts().at(c) : 0;
      CHECK(tr == static_cast<std::size_t>(std::floor(f * counts[c] + 1e-9)));
    }
    CHECK(r.train.size() + r.val.size() == m.size());
  }
}

TEST_CASE("split rejects an empty category by name") {
  const Manifest m = category_manifest({{Category::FireOnly, 3}, {Category::SmokeOnly, 3}, {Category::FireAndSmoke, 3},
                                        {Category::SimpleNegative, 3}});
  CHECK(error_of([&] { split_train_val(m, {0.8, 1}); }).find("complex_negative") != std::string::npos);
  CHECK_THROWS_AS(split_train_val(m, {1.0, 1}), Error);
}

TEST_CASE("manifest rejects contradictory or duplicate samples") {
  Manifest m;
  Sample s{"x", "x.png", {true, false}, Partition::SimpleNegative};
  CHECK_THROWS_AS(m.push_back(s), Error);
  s.partition = Partition::Positive;
  m.push_back(s);
  CHECK_THROWS_AS(m.push_back(s), Error);
  CHECK(m.category_counts().at(Category::SmokeOnly) == 1);
}

TEST_CASE("synth with all-zero counts writes nothing") {
  TempDir dir("synth0");
  SynthSpec spec;
  const auto r = synth_generate(spec, dir / "out");
  CHECK(r.manifest.empty());
  CHECK((!fs::exists(dir / "out") || fs::is_empty(dir / "out")));
}

TEST_CASE("synth counts, partitions, and determinism") {
  TempDir a("synth_a"), b("synth_b");
  SynthSpec spec;
  spec.counts = {5, 5, 5, 20, 5};
  spec.image_size = 32;
  spec.seed = 11;
  const auto ra = synth_generate(spec, a.path());
  synth_generate(spec, b.path());
  REQUIRE(ra.manifest.size() == 40);
  const auto& counts = ra.manifest.category_counts();
  CHECK(counts.at(Category::FireOnly) == 5);
  CHECK(counts.at(Category::SmokeOnly) == 5);
  CHECK(counts.at(Category::FireAndSmoke) == 5);
  CHECK(counts.at(Category::SimpleNegative) == 20);
  CHECK(counts.at(Category::ComplexNegative) == 5);
  const Manifest reread = load_manifest(a / "manifest.jsonl");
  CHECK(reread.size() == 40);
  for (const auto& s : reread.samples()) {
    std::ifstream fa(s.image_path, std::ios::binary), fb(b / "images" / s.image_path.filename(), std::ios::binary);
    const std::string ba((std::istreambuf_iterator<char>(fa)), {}), bb((std::istreambuf_iterator<char>(fb)), {});
    CHECK(!ba.empty());
    CHECK(ba == bb);
    const Image img = read_image(s.image_path);
    CHECK(img.height == 32);
    CHECK(img.width == 32);
    CHECK(img.channels == 3);
  }
}

TEST_CASE("synth ground-truth boxes match labels and stay inside the frame") {
  Rng rng(21);
  for (Category cat : kAllCategories)
    for (SynthDomain dom : {SynthDomain::Train, SynthDomain::Shifted}) {
      const auto img = render_synthetic(cat, 48, dom, rng);
      bool smoke = false, fire = false;
      for (const auto& o : img.objects) {
        CHECK(o.x >= 0);
        CHECK(o.y >= 0);
        CHECK(o.w >= 1);
        CHECK(o.h >= 1);
        CHECK(o.x + o.w <= 48);
        CHECK(o.y + o.h <= 48);
        smoke |= o.cls == 0;
        fire |= o.cls == 1;
      }
      CHECK(smoke == (cat == Category::SmokeOnly || cat == Category::FireAndSmoke));
      CHECK(fire == (cat == Category::FireOnly || cat == Category::FireAndSmoke));
      for (double v : img.image.data) CHECK((v >= 0.0 && v <= 1.0));
    }
}

TEST_CASE("synth rejects tiny images and negative counts") {
  TempDir dir("synthbad");
  SynthSpec spec;
  spec.counts = {1, 0, 0, 0, 0};
  spec.image_size = 16;
  CHECK_THROWS_AS(synth_generate(spec, dir.path()), Error);
  spec.image_size = 32;
  spec.counts.fire = -1;
  CHECK_THROWS_AS(synth_generate(spec, dir.path()), Error);
}
