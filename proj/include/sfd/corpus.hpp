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

#include <array>
#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <unordered_set>
#include <vector>

namespace sfd {

/// Two independent binary targets; not one-hot.
struct LabelVector {
  bool smoke = false;
  bool fire = false;

  bool any() const { return smoke || fire; }
  bool operator[](int cls) const { return cls == 0 ? smoke : fire; }
  friend bool operator==(const LabelVector&, const LabelVector&) = default;
};

enum class Partition { Positive, SimpleNegative, ComplexNegative };

const char* to_string(Partition p);
std::optional<Partition> parse_partition(const std::string& s);

/// Stratification key: fire-only, smoke-only, both, and the two negative kinds.
enum class Category { FireOnly, SmokeOnly, FireAndSmoke, SimpleNegative, ComplexNegative };

inline constexpr std::array<Category, 5> kAllCategories = {
    Category::FireOnly, Category::SmokeOnly, Category::FireAndSmoke, Category::SimpleNegative,
    Category::ComplexNegative};

const char* to_string(Category c);

struct Sample {
  std::string id;
  std::filesystem::path image_path;
  LabelVector label;
  Partition partition = Partition::SimpleNegative;

  Category category() const;
  friend bool operator==(const Sample&, const Sample&) = default;
};

/// Throws if the partition disagrees with the label flags.
void check_consistent(const Sample& s);

class Manifest {
 public:
  Manifest() = default;
  explicit Manifest(std::vector<Sample> samples);

  const std::vector<Sample>& samples() const { return samples_; }
  const std::map<Category, std::size_t>& category_counts() const { return counts_; }
  std::size_t size() const { return samples_.size(); }
  bool empty() const { return samples_.empty(); }
  const Sample& operator[](std::size_t i) const { return samples_[i]; }

  void push_back(Sample s);

 private:
  std::vector<Sample> samples_;
  std::map<Category, std::size_t> counts_;
  std::unordered_set<std::string> ids_;
};

/// Reads newline-delimited JSON records. Relative image paths resolve
/// against the manifest's directory.
Manifest load_manifest(const std::filesystem::path& path);

/// Writes image paths relative to the manifest's directory where possible.
void save_manifest(const Manifest& m, const std::filesystem::path& path);

struct SplitSpec {
  double train_fraction = 0.8;
  std::uint64_t seed = 0;
};

struct SplitResult {
  Manifest train;
  Manifest val;
  std::vector<std::string> warnings;
};

/// Stratified per Category: floor(fraction * n) to train, remainder to
/// validation. Membership is seeded-random; file order is preserved
/// within each output.
SplitResult split_train_val(const Manifest& m, const SplitSpec& spec);

}  // namespace sfd
