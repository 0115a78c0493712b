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

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "sfd/corpus.hpp"
#include "sfd/image.hpp"
#include "sfd/rng.hpp"

namespace sfd {

struct SynthCounts {
  int fire = 0;
  int smoke = 0;
  int both = 0;
  int simple = 0;
  int complex = 0;

  int total() const { return fire + smoke + both + simple + complex; }
};

/// Train: objects 30-55% of the frame over four background palettes, with
/// positives skewed toward dark scenes and simple negatives toward bright
/// ones. Shifted: objects 12-25% of the frame over two palettes never used
/// in Train.
enum class SynthDomain { Train, Shifted };

struct SynthSpec {
  SynthCounts counts;
  int image_size = 64;
  std::uint64_t seed = 0;
  SynthDomain domain = SynthDomain::Train;
  std::string id_prefix;
};

/// Ground-truth extent of one rendered object (alpha > 0.05).
struct ObjectBox {
  int cls = 0;  // 0 smoke, 1 fire, -1 distractor
  int x = 0, y = 0, w = 0, h = 0;
};

struct SynthImage {
  Image image;
  std::vector<ObjectBox> objects;
};

struct SynthResult {
  Manifest manifest;
  std::vector<std::vector<ObjectBox>> objects;  // parallel to manifest
};

SynthImage render_synthetic(Category category, int image_size, SynthDomain domain, Rng& rng);

/// Writes images/<id>.png, manifest.jsonl and objects.json under out_dir.
/// All-zero counts write nothing and return an empty manifest.
SynthResult synth_generate(const SynthSpec& spec, const std::filesystem::path& out_dir);

}  // namespace sfd
