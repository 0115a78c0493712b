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

#include <string>
#include <vector>

#include "sfd/corpus.hpp"
#include "sfd/image.hpp"
#include "sfd/rng.hpp"

namespace sfd {

struct AugmentConfig {
  double theta = 0.5;     // probability of performing the splice
  int max_negatives = 2;  // N: n is drawn uniformly from {0..N}
  int canvas_size = 224;
  int region_lo = 100;  // trusted-region side lengths are drawn from [lo, hi]
  int region_hi = 224;

  void validate() const;
};

/// Background images eligible for stitching. Only simple negatives are
/// admitted; anything else is rejected at insertion.
class NegativePool {
 public:
  void add(const Sample& sample, Image image);
  void add(std::string id, Partition partition, Image image);

  std::size_t size() const { return images_.size(); }
  bool empty() const { return images_.empty(); }
  const Image& image(std::size_t i) const { return images_[i]; }
  const std::string& id(std::size_t i) const { return ids_[i]; }

 private:
  std::vector<Image> images_;
  std::vector<std::string> ids_;
};

struct RegionDraw {
  int neg_index = -1;
  int h = 0, w = 0;
  int x = 0, y = 0;
};

struct StitchDraw {
  int neg_index = -1;
  Direction dir = Direction::Right;
};

struct SpliceTrace {
  double gate_draw = 0.0;
  bool fired = false;
  bool used_region = false;
  RegionDraw region;
  int n = 0;
  std::vector<StitchDraw> stitches;
};

struct SpliceOutput {
  std::vector<Image> images;
  LabelVector label;
  SpliceTrace trace;
};

/// Scales `region` to an independently drawn (h, w) in [lo, hi] and pastes
/// it at a uniform in-bounds position onto `negative`, which must already
/// be canvas_size x canvas_size. Draw order: h, w, x, y.
Image make_positive_from_region(const Image& region, const Image& negative,
                                const AugmentConfig& cfg, Rng& rng, RegionDraw* draw = nullptr);

/// Random splicing. The gate consumes the first draw; the splice runs when
/// it is below theta. When `region` is non-null the positive is first
/// replaced by a region-on-negative composite. Every stitched image pairs
/// the canvas-sized positive with a fresh negative on a random side and
/// carries the positive's labels unchanged.
SpliceOutput splice_augment(const Image& positive, const LabelVector& label,
                            const NegativePool& pool, const Image* region,
                            const AugmentConfig& cfg, Rng& rng);

}  // namespace sfd
