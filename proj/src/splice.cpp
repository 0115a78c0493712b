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

#include "sfd/splice.hpp"

#include "sfd/error.hpp"

namespace sfd {

void AugmentConfig::validate() const {
  require(theta >= 0.0 && theta <= 1.0, "augment.theta must lie in [0,1]");
  require(max_negatives >= 0, "augment.max_negatives must be >= 0");
  require(canvas_size >= 1, "augment.canvas_size must be >= 1");
  require(region_lo >= 1 && region_lo <= region_hi && region_hi <= canvas_size,
          "augment.region_scale must satisfy 1 <= lo <= hi <= canvas_size");
}

void NegativePool::add(const Sample& sample, Image image) {
  add(sample.id, sample.partition, std::move(image));
}

void NegativePool::add(std::string id, Partition partition, Image image) {
  if (partition != Partition::SimpleNegative)
    fail(ErrorKind::InvalidArgument, "negative pool accepts simple negatives only; '" + id +
                                         "' is " + to_string(partition));
  require(!image.empty(), "negative pool: empty image for '" + id + "'");
  images_.push_back(std::move(image));
  ids_.push_back(std::move(id));
}

Image make_positive_from_region(const Image& region, const Image& negative,
                                const AugmentConfig& cfg, Rng& rng, RegionDraw* draw) {
  cfg.validate();
  if (region.height < 1 || region.width < 1 || region.empty())
    fail(ErrorKind::InvalidArgument, "trusted region has zero area");
  require(negative.height == cfg.canvas_size && negative.width == cfg.canvas_size,
          "make_positive_from_region: negative must be canvas-sized");
  require(negative.channels == region.channels, "make_positive_from_region: channel mismatch");
  RegionDraw d;
  d.h = static_cast<int>(rng.uniform_int(cfg.region_lo, cfg.region_hi));
  d.w = static_cast<int>(rng.uniform_int(cfg.region_lo, cfg.region_hi));
  d.x = static_cast<int>(rng.uniform_int(0, cfg.canvas_size - d.w));
  d.y = static_cast<int>(rng.uniform_int(0, cfg.canvas_size - d.h));
  if (draw) {
    d.neg_index = draw->neg_index;
    *draw = d;
  }
  return paste_region(negative, resize_bilinear(region, d.h, d.w), d.x, d.y);
}

SpliceOutput splice_augment(const Image& positive, const LabelVector& label,
                            const NegativePool& pool, const Image* region,
                            const AugmentConfig& cfg, Rng& rng) {
  cfg.validate();
  require(label.any(), "splice_augment: positive must carry at least one label");
  SpliceOutput out;
  out.label = label;
  out.trace.gate_draw = rng.uniform();
  out.trace.fired = out.trace.gate_draw < cfg.theta;
  if (!out.trace.fired) return out;

  const int S = cfg.canvas_size;
  auto draw_negative = [&]() {
    if (pool.empty()) fail(ErrorKind::InvalidArgument, "splice_augment: negative pool is empty");
    return static_cast<int>(rng.uniform_int(0, static_cast<std::int64_t>(pool.size()) - 1));
  };

  Image pos = resize_bilinear(positive, S, S);
  if (region) {
    if (region->empty() || region->height < 1 || region->width < 1)
      fail(ErrorKind::InvalidArgument, "trusted region has zero area");
    out.trace.used_region = true;
    out.trace.region.neg_index = draw_negative();
    const Image bg = resize_bilinear(pool.image(static_cast<std::size_t>(out.trace.region.neg_index)), S, S);
    pos = make_positive_from_region(*region, bg, cfg, rng, &out.trace.region);
  }

  out.trace.n = static_cast<int>(rng.uniform_int(0, cfg.max_negatives));
  for (int k = 0; k < out.trace.n; ++k) {
    StitchDraw sd;
    sd.neg_index = draw_negative();
    sd.dir = static_cast<Direction>(rng.uniform_int(0, 3));
    const Image neg = resize_bilinear(pool.image(static_cast<std::size_t>(sd.neg_index)), S, S);
    require(neg.channels == pos.channels, "splice_augment: channel mismatch with negative");
    out.images.push_back(concat_images(pos, neg, sd.dir));
    out.trace.stitches.push_back(sd);
  }
  return out;
}

}  // namespace sfd
