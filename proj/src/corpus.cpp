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

#include "sfd/corpus.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numeric>
#include <set>

#include <json.hpp>

#include "sfd/error.hpp"
#include "sfd/rng.hpp"

namespace sfd {

using nlohmann::json;

const char* to_string(Partition p) {
  switch (p) {
    case Partition::Positive: return "positive";
    case Partition::SimpleNegative: return "simple_negative";
    case Partition::ComplexNegative: return "complex_negative";
  }
  return "?";
}

std::optional<Partition> parse_partition(const std::string& s) {
  if (s == "positive") return Partition::Positive;
  if (s == "simple_negative") return Partition::SimpleNegative;
  if (s == "complex_negative") return Partition::ComplexNegative;
  return std::nullopt;
}

const char* to_string(Category c) {
  switch (c) {
    case Category::FireOnly: return "fire_only";
    case Category::SmokeOnly: return "smoke_only";
    case Category::FireAndSmoke: return "fire_and_smoke";
    case Category::SimpleNegative: return "simple_negative";
    case Category::ComplexNegative: return "complex_negative";
  }
  return "?";
}

Category Sample::category() const {
  if (label.fire && label.smoke) return Category::FireAndSmoke;
  if (label.fire) return Category::FireOnly;
  if (label.smoke) return Category::SmokeOnly;
  return partition == Partition::ComplexNegative ? Category::ComplexNegative
                                                 : Category::SimpleNegative;
}

void check_consistent(const Sample& s) {
  const bool positive = s.partition == Partition::Positive;
  if (positive != s.label.any())
    fail(ErrorKind::InvalidArgument,
         "sample '" + s.id + "': label (smoke=" + (s.label.smoke ? "true" : "false") +
             ", fire=" + (s.label.fire ? "true" : "false") + ") contradicts partition " +
             to_string(s.partition));
}

Manifest::Manifest(std::vector<Sample> samples) {
  samples_.reserve(samples.size());
  for (auto& s : samples) push_back(std::move(s));
}

void Manifest::push_back(Sample s) {
  check_consistent(s);
  if (!ids_.insert(s.id).second)
    fail(ErrorKind::InvalidArgument, "duplicate sample id '" + s.id + "'");
  ++counts_[s.category()];
  samples_.push_back(std::move(s));
}

Manifest load_manifest(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) fail(ErrorKind::Io, "cannot open manifest " + path.string());
  const auto base = path.parent_path();
  std::vector<Sample> samples;
  std::set<std::string> ids;
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    const std::string where = path.string() + ":" + std::to_string(lineno) + ": ";
    json rec;
    try {
      rec = json::parse(line);
    } catch (const json::parse_error& e) {
      fail(ErrorKind::Format, where + "malformed record: " + e.what());
    }
    if (!rec.is_object()) fail(ErrorKind::Format, where + "record is not an object");
    for (const char* key : {"id", "image_path", "smoke", "fire", "partition"})
      if (!rec.contains(key)) fail(ErrorKind::Format, where + "missing field '" + key + "'");
    if (!rec["id"].is_string() || !rec["image_path"].is_string() || !rec["smoke"].is_boolean() ||
        !rec["fire"].is_boolean() || !rec["partition"].is_string())
      fail(ErrorKind::Format, where + "field has wrong type");
    Sample s;
    s.id = rec["id"].get<std::string>();
    std::filesystem::path p = rec["image_path"].get<std::string>();
    s.image_path = p.is_absolute() ? p : (base / p).lexically_normal();
    s.label = {rec["smoke"].get<bool>(), rec["fire"].get<bool>()};
    const auto part = parse_partition(rec["partition"].get<std::string>());
    if (!part) fail(ErrorKind::Format, where + "unknown partition '" + rec["partition"].get<std::string>() + "'");
    s.partition = *part;
    try {
      check_consistent(s);
    } catch (const Error& e) {
      fail(ErrorKind::InvalidArgument, where + e.what());
    }
    if (!ids.insert(s.id).second) fail(ErrorKind::Format, where + "duplicate id '" + s.id + "'");
    samples.push_back(std::move(s));
  }
  if (samples.empty()) fail(ErrorKind::Format, "empty manifest: " + path.string());
  return Manifest(std::move(samples));
}

void save_manifest(const Manifest& m, const std::filesystem::path& path) {
  const auto dir = path.parent_path().empty() ? std::filesystem::path(".") : path.parent_path();
  std::error_code ec;
  std::filesystem::create_directories(dir, ec);
  std::ofstream out(path, std::ios::binary);
  if (!out) fail(ErrorKind::Io, "cannot write manifest " + path.string());
  for (const auto& s : m.samples()) {
    std::filesystem::path p = s.image_path;
    if (!p.empty()) {
      const auto rel = std::filesystem::proximate(p, dir, ec);
      if (!ec && !rel.empty()) p = rel;
    }
    json rec = json::object();
    rec["id"] = s.id;
    rec["image_path"] = p.generic_string();
    rec["smoke"] = s.label.smoke;
    rec["fire"] = s.label.fire;
    rec["partition"] = to_string(s.partition);
    out << rec.dump() << '\n';
  }
  if (!out) fail(ErrorKind::Io, "failed writing manifest " + path.string());
}

SplitResult split_train_val(const Manifest& m, const SplitSpec& spec) {
  require(spec.train_fraction > 0.0 && spec.train_fraction < 1.0,
          "train_fraction must lie in (0,1)");
  std::map<Category, std::vector<std::size_t>> by_cat;
  for (std::size_t i = 0; i < m.size(); ++i) by_cat[m[i].category()].push_back(i);

  SplitResult result;
  std::vector<bool> to_train(m.size(), false);
  for (Category c : kAllCategories) {
    auto it = by_cat.find(c);
    if (it == by_cat.end() || it->second.empty())
      fail(ErrorKind::InvalidArgument, std::string("split: category '") + to_string(c) + "' is empty");
    auto idx = it->second;
    const std::size_t n = idx.size();
    const auto n_train =
        static_cast<std::size_t>(std::floor(spec.train_fraction * static_cast<double>(n) + 1e-9));
    // Independent stream per category so one category's size never
    // perturbs another's membership.
    Rng rng = Rng::derive(spec.seed, static_cast<std::uint64_t>(c) + 1);
    for (std::size_t i = n; i > 1; --i) {
      const auto j = static_cast<std::size_t>(rng.uniform_int(0, static_cast<std::int64_t>(i) - 1));
      std::swap(idx[i - 1], idx[j]);
    }
    for (std::size_t k = 0; k < n_train; ++k) to_train[idx[k]] = true;
    if (n_train == 0)
      result.warnings.push_back(std::string("category '") + to_string(c) + "' has " +
                                std::to_string(n) + " sample(s); none go to training");
  }
  for (std::size_t i = 0; i < m.size(); ++i)
    (to_train[i] ? result.train : result.val).push_back(m[i]);
  return result;
}

}  // namespace sfd
