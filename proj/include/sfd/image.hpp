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
#include <cstddef>
#include <vector>

#include "sfd/rng.hpp"

namespace sfd {

/// H x W x C raster, row-major with interleaved channels. Pixel values live
/// in [0, 1] until normalize() is applied; CAM planes reuse the type as a
/// single-channel grid of arbitrary reals.
struct Image {
  int height = 0;
  int width = 0;
  int channels = 0;
  std::vector<double> data;

  Image() = default;
  Image(int h, int w, int c, double fill = 0.0);

  bool empty() const { return data.empty(); }
  std::size_t size() const { return data.size(); }
  std::size_t index(int y, int x, int c) const {
    return (static_cast<std::size_t>(y) * width + x) * channels + c;
  }
  double& at(int y, int x, int c) { return data[index(y, x, c)]; }
  double at(int y, int x, int c) const { return data[index(y, x, c)]; }

  friend bool operator==(const Image& a, const Image& b) = default;
};

enum class Direction { Up, Down, Left, Right };

const char* to_string(Direction d);

/// Half-pixel-center bilinear resampling: source coordinate is
/// (i + 0.5) * in / out - 0.5, clamped to the valid range.
Image resize_bilinear(const Image& img, int out_h, int out_w);

/// Attaches `neg` on side `dir` of `pos`. Both must share dimensions.
Image concat_images(const Image& pos, const Image& neg, Direction dir);

/// Overwrites the rectangle [x, x+w) x [y, y+h) of `bg` with `patch`.
Image paste_region(const Image& bg, const Image& patch, int x, int y);

Image crop(const Image& img, int x, int y, int w, int h);

struct NormalizationSpec {
  std::array<double, 3> mean{0.5, 0.5, 0.5};
  std::array<double, 3> scale{0.5, 0.5, 0.5};

  void validate() const;
};

/// (x - mean) / scale per channel. Output may leave [0, 1].
Image normalize(const Image& img, const NormalizationSpec& spec = {});
Image denormalize(const Image& img, const NormalizationSpec& spec = {});

// Photometric / geometric primitives used by the basic augment stack.
Image to_grayscale(const Image& img);
Image flip_vertical(const Image& img);
Image flip_horizontal(const Image& img);
Image rotate(const Image& img, double angle_deg);
Image adjust_brightness(const Image& img, double factor);
Image adjust_contrast(const Image& img, double factor);
Image adjust_saturation(const Image& img, double factor);
Image adjust_hue(const Image& img, double factor);
Image clip01(Image img);

void rgb_to_hsv(double r, double g, double b, double& h, double& s, double& v);
void hsv_to_rgb(double h, double s, double v, double& r, double& g, double& b);

struct BasicAugmentConfig {
  double p_gray = 0.01;
  double p_vflip = 0.02;
  double p_hflip = 0.5;
  double p_rotate = 0.3;
  double max_rotate_deg = 30.0;
  double p_brightness = 0.5;
  double brightness_delta = 0.3;
  double p_contrast = 0.5;
  double contrast_delta = 0.3;
  double p_saturation = 1.0;
  double saturation_lo = 0.2;
  double saturation_hi = 1.6;
  double p_hue = 0.1;
  double hue_delta = 0.01;

  void validate() const;
  static BasicAugmentConfig disabled();
};

/// Which sub-transforms fired, and with which drawn parameters.
struct AugmentTrace {
  bool gray = false, vflip = false, hflip = false, rotate = false;
  bool brightness = false, contrast = false, saturation = false, hue = false;
  double angle_deg = 0.0;
  double brightness_factor = 1.0;
  double contrast_factor = 1.0;
  double saturation_factor = 1.0;
  double hue_factor = 1.0;
};

/// Fixed order: gray, vflip, hflip, rotate, brightness, contrast,
/// saturation, hue. Each stage consumes one Bernoulli draw, then its
/// parameter draw only when it fires.
Image apply_basic_augments(const Image& img, const BasicAugmentConfig& cfg, Rng& rng,
                           AugmentTrace* trace = nullptr);

}  // namespace sfd
