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

#include "sfd/image.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <string>

#include "sfd/error.hpp"

namespace sfd {

namespace {

constexpr double kLumaR = 0.299;
constexpr double kLumaG = 0.587;
constexpr double kLumaB = 0.114;

struct Tap {
  int i0;
  int i1;
  double t;
};

std::vector<Tap> bilinear_taps(int in, int out) {
  std::vector<Tap> taps(out);
  const double scale = static_cast<double>(in) / out;
  for (int i = 0; i < out; ++i) {
    double src = (i + 0.5) * scale - 0.5;
    src = std::clamp(src, 0.0, static_cast<double>(in - 1));
    const int i0 = static_cast<int>(std::floor(src));
    const int i1 = std::min(i0 + 1, in - 1);
    taps[i] = {i0, i1, src - i0};
  }
  return taps;
}

void check_valid(const Image& img, const char* what) {
  if (img.height <= 0 || img.width <= 0 || img.channels <= 0 || img.empty())
    fail(ErrorKind::InvalidArgument, std::string(what) + ": zero-sized image");
}

}  // namespace

Image::Image(int h, int w, int c, double fill)
    : height(h), width(w), channels(c),
      data(static_cast<std::size_t>(std::max(h, 0)) * std::max(w, 0) * std::max(c, 0), fill) {}

const char* to_string(Direction d) {
  switch (d) {
    case Direction::Up: return "up";
    case Direction::Down: return "down";
    case Direction::Left: return "left";
    case Direction::Right: return "right";
  }
  return "?";
}

Image resize_bilinear(const Image& img, int out_h, int out_w) {
  check_valid(img, "resize_bilinear");
  require(out_h >= 1 && out_w >= 1, "resize_bilinear: target size must be >= 1");
  if (out_h == img.height && out_w == img.width) return img;

  const auto ty = bilinear_taps(img.height, out_h);
  const auto tx = bilinear_taps(img.width, out_w);
  const int C = img.channels;
  Image out(out_h, out_w, C);
  for (int y = 0; y < out_h; ++y) {
    const Tap& a = ty[y];
    for (int x = 0; x < out_w; ++x) {
      const Tap& b = tx[x];
      for (int c = 0; c < C; ++c) {
        const double p00 = img.at(a.i0, b.i0, c), p01 = img.at(a.i0, b.i1, c);
        const double p10 = img.at(a.i1, b.i0, c), p11 = img.at(a.i1, b.i1, c);
        const double top = p00 + (p01 - p00) * b.t;
        const double bot = p10 + (p11 - p10) * b.t;
        out.at(y, x, c) = top + (bot - top) * a.t;
      }
    }
  }
  return out;
}

Image concat_images(const Image& pos, const Image& neg, Direction dir) {
  check_valid(pos, "concat_images");
  check_valid(neg, "concat_images");
  if (pos.height != neg.height || pos.width != neg.width || pos.channels != neg.channels)
    fail(ErrorKind::InvalidArgument, "concat_images: dimension mismatch");
  const bool horizontal = dir == Direction::Left || dir == Direction::Right;
  Image out(horizontal ? pos.height : 2 * pos.height, horizontal ? 2 * pos.width : pos.width,
            pos.channels);
  const Image& first = (dir == Direction::Right || dir == Direction::Down) ? pos : neg;
  const Image& second = (&first == &pos) ? neg : pos;
  out = paste_region(out, first, 0, 0);
  return horizontal ? paste_region(out, second, pos.width, 0)
                    : paste_region(out, second, 0, pos.height);
}

Image paste_region(const Image& bg, const Image& patch, int x, int y) {
  check_valid(bg, "paste_region");
  check_valid(patch, "paste_region");
  require(bg.channels == patch.channels, "paste_region: channel mismatch");
  if (x < 0 || y < 0 || x + patch.width > bg.width || y + patch.height > bg.height)
    fail(ErrorKind::InvalidArgument, "paste_region: patch " + std::to_string(patch.width) + "x" +
                                         std::to_string(patch.height) + " at (" +
                                         std::to_string(x) + "," + std::to_string(y) +
                                         ") out of bounds");
  Image out = bg;
  const std::size_t row = static_cast<std::size_t>(patch.width) * patch.channels;
  for (int r = 0; r < patch.height; ++r) {
    const auto src = patch.data.begin() + static_cast<std::ptrdiff_t>(r * row);
    std::copy(src, src + static_cast<std::ptrdiff_t>(row),
              out.data.begin() + static_cast<std::ptrdiff_t>(out.index(y + r, x, 0)));
  }
  return out;
}

Image crop(const Image& img, int x, int y, int w, int h) {
  check_valid(img, "crop");
  if (w < 1 || h < 1 || x < 0 || y < 0 || x + w > img.width || y + h > img.height)
    fail(ErrorKind::InvalidArgument, "crop: rectangle out of bounds");
  Image out(h, w, img.channels);
  const std::size_t row = static_cast<std::size_t>(w) * img.channels;
  for (int r = 0; r < h; ++r) {
    const auto src = img.data.begin() + static_cast<std::ptrdiff_t>(img.index(y + r, x, 0));
    std::copy(src, src + static_cast<std::ptrdiff_t>(row),
              out.data.begin() + static_cast<std::ptrdiff_t>(r * row));
  }
  return out;
}

void NormalizationSpec::validate() const {
  for (double s : scale) require(s > 0.0 && std::isfinite(s), "normalization scale must be > 0");
  for (double m : mean) require(std::isfinite(m), "normalization mean must be finite");
}

Image normalize(const Image& img, const NormalizationSpec& spec) {
  spec.validate();
  require(img.channels <= 3, "normalize: at most 3 channels");
  Image out = img;
  const int C = img.channels;
  for (std::size_t i = 0; i < out.data.size(); ++i) {
    const auto c = i % C;
    out.data[i] = (out.data[i] - spec.mean[c]) / spec.scale[c];
  }
  return out;
}

Image denormalize(const Image& img, const NormalizationSpec& spec) {
  spec.validate();
  require(img.channels <= 3, "denormalize: at most 3 channels");
  Image out = img;
  const int C = img.channels;
  for (std::size_t i = 0; i < out.data.size(); ++i) {
    const auto c = i % C;
    out.data[i] = out.data[i] * spec.scale[c] + spec.mean[c];
  }
  return out;
}

Image to_grayscale(const Image& img) {
  if (img.channels != 3) return img;
  Image out = img;
  for (std::size_t i = 0; i < out.data.size(); i += 3) {
    const double g = kLumaR * img.data[i] + kLumaG * img.data[i + 1] + kLumaB * img.data[i + 2];
    out.data[i] = out.data[i + 1] = out.data[i + 2] = g;
  }
  return out;
}

Image flip_vertical(const Image& img) {
  Image out = img;
  for (int y = 0; y < img.height; ++y)
    for (int x = 0; x < img.width; ++x)
      for (int c = 0; c < img.channels; ++c) out.at(y, x, c) = img.at(img.height - 1 - y, x, c);
  return out;
}

Image flip_horizontal(const Image& img) {
  Image out = img;
  for (int y = 0; y < img.height; ++y)
    for (int x = 0; x < img.width; ++x)
      for (int c = 0; c < img.channels; ++c) out.at(y, x, c) = img.at(y, img.width - 1 - x, c);
  return out;
}

// Rotation about the image center; samples falling outside the frame read as 0.
Image rotate(const Image& img, double angle_deg) {
  const double rad = angle_deg * std::numbers::pi / 180.0;
  const double cs = std::cos(rad), sn = std::sin(rad);
  const double cx = 0.5 * (img.width - 1), cy = 0.5 * (img.height - 1);
  Image out(img.height, img.width, img.channels, 0.0);
  auto sample = [&](int y, int x, int c) {
    if (y < 0 || x < 0 || y >= img.height || x >= img.width) return 0.0;
    return img.at(y, x, c);
  };
  for (int y = 0; y < img.height; ++y) {
    for (int x = 0; x < img.width; ++x) {
      const double dx = x - cx, dy = y - cy;
      const double sx = cs * dx + sn * dy + cx;
      const double sy = -sn * dx + cs * dy + cy;
      if (sx <= -1.0 || sy <= -1.0 || sx >= img.width || sy >= img.height) continue;
      const int x0 = static_cast<int>(std::floor(sx)), y0 = static_cast<int>(std::floor(sy));
      const double tx = sx - x0, ty = sy - y0;
      for (int c = 0; c < img.channels; ++c) {
        const double top = sample(y0, x0, c) * (1 - tx) + sample(y0, x0 + 1, c) * tx;
        const double bot = sample(y0 + 1, x0, c) * (1 - tx) + sample(y0 + 1, x0 + 1, c) * tx;
        out.at(y, x, c) = top * (1 - ty) + bot * ty;
      }
    }
  }
  return out;
}

Image adjust_brightness(const Image& img, double factor) {
  Image out = img;
  for (double& v : out.data) v *= factor;
  return clip01(std::move(out));
}

Image adjust_contrast(const Image& img, double factor) {
  Image out = img;
  const int C = img.channels;
  const std::size_t n = static_cast<std::size_t>(img.height) * img.width;
  for (int c = 0; c < C; ++c) {
    double sum = 0.0;
    for (std::size_t p = 0; p < n; ++p) sum += img.data[p * C + c];
    const double mean = n ? sum / static_cast<double>(n) : 0.0;
    for (std::size_t p = 0; p < n; ++p) {
      double& v = out.data[p * C + c];
      v = (v - mean) * factor + mean;
    }
  }
  return clip01(std::move(out));
}

Image adjust_saturation(const Image& img, double factor) {
  if (img.channels != 3) return img;
  Image out = img;
  for (std::size_t i = 0; i < out.data.size(); i += 3) {
    const double g = kLumaR * img.data[i] + kLumaG * img.data[i + 1] + kLumaB * img.data[i + 2];
    for (int c = 0; c < 3; ++c) out.data[i + c] = g + factor * (img.data[i + c] - g);
  }
  return clip01(std::move(out));
}

Image adjust_hue(const Image& img, double factor) {
  if (img.channels != 3) return img;
  Image out = img;
  for (std::size_t i = 0; i < out.data.size(); i += 3) {
    double h, s, v;
    rgb_to_hsv(img.data[i], img.data[i + 1], img.data[i + 2], h, s, v);
    h = std::fmod(h * factor, 1.0);
    if (h < 0) h += 1.0;
    hsv_to_rgb(h, s, v, out.data[i], out.data[i + 1], out.data[i + 2]);
  }
  return clip01(std::move(out));
}

Image clip01(Image img) {
  for (double& v : img.data) v = std::clamp(v, 0.0, 1.0);
  return img;
}

void rgb_to_hsv(double r, double g, double b, double& h, double& s, double& v) {
  const double mx = std::max({r, g, b});
  const double mn = std::min({r, g, b});
  const double d = mx - mn;
  v = mx;
  s = mx > 0.0 ? d / mx : 0.0;
  if (d <= 0.0) {
    h = 0.0;
    return;
  }
  if (mx == r)
    h = (g - b) / d;
  else if (mx == g)
    h = 2.0 + (b - r) / d;
  else
    h = 4.0 + (r - g) / d;
  h /= 6.0;
  if (h < 0.0) h += 1.0;
}

void hsv_to_rgb(double h, double s, double v, double& r, double& g, double& b) {
  const double hh = (h - std::floor(h)) * 6.0;
  const int sector = static_cast<int>(hh) % 6;
  const double f = hh - std::floor(hh);
  const double p = v * (1 - s), q = v * (1 - s * f), t = v * (1 - s * (1 - f));
  switch (sector) {
    case 0: r = v, g = t, b = p; break;
    case 1: r = q, g = v, b = p; break;
    case 2: r = p, g = v, b = t; break;
    case 3: r = p, g = q, b = v; break;
    case 4: r = t, g = p, b = v; break;
    default: r = v, g = p, b = q; break;
  }
}

void BasicAugmentConfig::validate() const {
  for (double p : {p_gray, p_vflip, p_hflip, p_rotate, p_brightness, p_contrast, p_saturation, p_hue})
    require(p >= 0.0 && p <= 1.0, "augment probability outside [0,1]");
  require(max_rotate_deg >= 0.0, "max_rotate_deg must be >= 0");
  require(brightness_delta >= 0.0 && contrast_delta >= 0.0 && hue_delta >= 0.0,
          "augment factor deltas must be >= 0");
  require(saturation_lo >= 0.0 && saturation_lo <= saturation_hi, "saturation range invalid");
}

BasicAugmentConfig BasicAugmentConfig::disabled() {
  BasicAugmentConfig c;
  c.p_gray = c.p_vflip = c.p_hflip = c.p_rotate = 0.0;
  c.p_brightness = c.p_contrast = c.p_saturation = c.p_hue = 0.0;
  return c;
}

Image apply_basic_augments(const Image& img, const BasicAugmentConfig& cfg, Rng& rng,
                           AugmentTrace* trace) {
  AugmentTrace t;
  Image out = img;
  if ((t.gray = rng.bernoulli(cfg.p_gray))) out = to_grayscale(out);
  if ((t.vflip = rng.bernoulli(cfg.p_vflip))) out = flip_vertical(out);
  if ((t.hflip = rng.bernoulli(cfg.p_hflip))) out = flip_horizontal(out);
  if ((t.rotate = rng.bernoulli(cfg.p_rotate))) {
    t.angle_deg = rng.uniform(-cfg.max_rotate_deg, cfg.max_rotate_deg);
    out = rotate(out, t.angle_deg);
  }
  if ((t.brightness = rng.bernoulli(cfg.p_brightness))) {
    t.brightness_factor = rng.uniform(1.0 - cfg.brightness_delta, 1.0 + cfg.brightness_delta);
    out = adjust_brightness(out, t.brightness_factor);
  }
  if ((t.contrast = rng.bernoulli(cfg.p_contrast))) {
    t.contrast_factor = rng.uniform(1.0 - cfg.contrast_delta, 1.0 + cfg.contrast_delta);
    out = adjust_contrast(out, t.contrast_factor);
  }
  if ((t.saturation = rng.bernoulli(cfg.p_saturation))) {
    t.saturation_factor = rng.uniform(cfg.saturation_lo, cfg.saturation_hi);
    out = adjust_saturation(out, t.saturation_factor);
  }
  if ((t.hue = rng.bernoulli(cfg.p_hue))) {
    t.hue_factor = rng.uniform(1.0 - cfg.hue_delta, 1.0 + cfg.hue_delta);
    out = adjust_hue(out, t.hue_factor);
  }
  if (trace) *trace = t;
  return clip01(std::move(out));
}

}  // namespace sfd
