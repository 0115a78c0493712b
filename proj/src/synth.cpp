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

#include "sfd/synth.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <sstream>

#include <json.hpp>

#include "sfd/error.hpp"
#include "sfd/image_io.hpp"

namespace sfd {

namespace {

using Rgb = std::array<double, 3>;

struct Palette {
  Rgb top;
  Rgb bottom;
};

// 0-3 appear in Train, 4-5 only in Shifted.
constexpr std::array<Palette, 6> kPalettes = {{
    {{0.55, 0.70, 0.90}, {0.25, 0.45, 0.20}},  // meadow
    {{0.70, 0.75, 0.80}, {0.35, 0.32, 0.30}},  // urban
    {{0.08, 0.08, 0.18}, {0.15, 0.12, 0.10}},  // night
    {{0.85, 0.80, 0.65}, {0.75, 0.60, 0.40}},  // desert
    {{0.35, 0.25, 0.50}, {0.15, 0.45, 0.45}},  // violet / teal
    {{0.80, 0.85, 0.90}, {0.60, 0.62, 0.70}},  // overcast snow
}};

double smoothstep(double e0, double e1, double x) {
  const double t = std::clamp((x - e0) / (e1 - e0), 0.0, 1.0);
  return t * t * (3 - 2 * t);
}

int pick_weighted(const std::vector<double>& w, Rng& rng) {
  double total = 0;
  for (double v : w) total += v;
  double u = rng.uniform() * total;
  for (std::size_t i = 0; i < w.size(); ++i) {
    if (u < w[i]) return static_cast<int>(i);
    u -= w[i];
  }
  return static_cast<int>(w.size()) - 1;
}

// Smooth value noise in [0,1]: a random coarse grid upsampled bilinearly.
Image value_noise(int size, int cells, Rng& rng) {
  Image grid(cells, cells, 1);
  for (double& v : grid.data) v = rng.uniform();
  return resize_bilinear(grid, size, size);
}

Image background(int S, int family, Rng& rng) {
  const Palette& p = kPalettes[static_cast<std::size_t>(family)];
  Rgb top = p.top, bottom = p.bottom;
  for (int c = 0; c < 3; ++c) {
    top[c] = std::clamp(top[c] + rng.uniform(-0.08, 0.08), 0.0, 1.0);
    bottom[c] = std::clamp(bottom[c] + rng.uniform(-0.08, 0.08), 0.0, 1.0);
  }
  const double horizon = rng.uniform(0.35, 0.75);
  const Image lowf = value_noise(S, 4, rng);
  const Image grain = value_noise(S, std::max(4, S / 3), rng);
  Image img(S, S, 3);
  for (int y = 0; y < S; ++y) {
    const double t = smoothstep(horizon - 0.3, horizon + 0.3, (y + 0.5) / S);
    for (int x = 0; x < S; ++x) {
      const double n = 0.10 * (lowf.at(y, x, 0) - 0.5) + 0.04 * (grain.at(y, x, 0) - 0.5);
      for (int c = 0; c < 3; ++c)
        img.at(y, x, c) = std::clamp(top[c] + (bottom[c] - top[c]) * t + n, 0.0, 1.0);
    }
  }
  return img;
}

// Sum of a few anisotropic Gaussians around (cx, cy), modulated by noise.
Image blob_field(int S, double cx, double cy, double w, double h, int comps, double turbulence,
                 Rng& rng) {
  struct Comp {
    double x, y, sx, sy;
  };
  std::vector<Comp> cs;
  for (int k = 0; k < comps; ++k)
    cs.push_back({cx + rng.uniform(-0.22, 0.22) * w, cy + rng.uniform(-0.22, 0.22) * h,
                  w * rng.uniform(0.18, 0.30), h * rng.uniform(0.18, 0.30)});
  const Image noise = value_noise(S, std::max(3, S / 6), rng);
  Image f(S, S, 1);
  for (int y = 0; y < S; ++y)
    for (int x = 0; x < S; ++x) {
      double v = 0;
      for (const auto& c : cs) {
        const double dx = (x + 0.5 - c.x) / c.sx, dy = (y + 0.5 - c.y) / c.sy;
        v += std::exp(-0.5 * (dx * dx + dy * dy));
      }
      v *= 1.0 - turbulence + turbulence * 2.0 * noise.at(y, x, 0);
      f.at(y, x, 0) = std::clamp(v, 0.0, 1.0);
    }
  return f;
}

ObjectBox composite(Image& img, const Image& alpha, const Image& color, int cls) {
  int x0 = img.width, y0 = img.height, x1 = -1, y1 = -1;
  for (int y = 0; y < img.height; ++y)
    for (int x = 0; x < img.width; ++x) {
      const double a = alpha.at(y, x, 0);
      if (a <= 0.0) continue;
      for (int c = 0; c < 3; ++c)
        img.at(y, x, c) = (1 - a) * img.at(y, x, c) + a * color.at(y, x, c);
      if (a > 0.05) {
        x0 = std::min(x0, x), y0 = std::min(y0, y);
        x1 = std::max(x1, x), y1 = std::max(y1, y);
      }
    }
  if (x1 < 0) return {cls, 0, 0, 0, 0};
  return {cls, x0, y0, x1 - x0 + 1, y1 - y0 + 1};
}

struct Placement {
  double cx, cy, w, h;
};

Placement place(int S, SynthDomain domain, double aspect, Rng& rng) {
  const auto [lo, hi] = domain == SynthDomain::Train ? std::pair{0.30, 0.55} : std::pair{0.12, 0.25};
  const double base = rng.uniform(lo, hi) * S;
  const double w = base * rng.uniform(0.85, 1.15);
  const double h = base * aspect * rng.uniform(0.85, 1.15);
  const double cx = rng.uniform(0.5 * w, S - 0.5 * w);
  const double cy = rng.uniform(std::min(0.5 * h, 0.5 * S), std::max(S - 0.5 * h, 0.5 * S));
  return {cx, cy, w, h};
}

ObjectBox draw_fire(Image& img, const Placement& p, Rng& rng) {
  const int S = img.width;
  const Image f = blob_field(S, p.cx, p.cy, p.w, p.h, 4, 0.45, rng);
  const Image flicker = value_noise(S, std::max(4, S / 4), rng);
  Image alpha(S, S, 1), color(S, S, 3);
  for (int y = 0; y < S; ++y)
    for (int x = 0; x < S; ++x) {
      const double v = f.at(y, x, 0);
      alpha.at(y, x, 0) = smoothstep(0.30, 0.50, v);
      const double core = smoothstep(0.55, 1.0, v) * (0.7 + 0.3 * flicker.at(y, x, 0));
      color.at(y, x, 0) = 0.95 + 0.05 * core;
      color.at(y, x, 1) = 0.30 + 0.60 * core;
      color.at(y, x, 2) = 0.03 + 0.25 * core * core;
    }
  return composite(img, alpha, color, 1);
}

ObjectBox draw_smoke(Image& img, const Placement& p, Rng& rng) {
  const int S = img.width;
  const Image f = blob_field(S, p.cx, p.cy, p.w, p.h, 5, 0.6, rng);
  const Image tex = value_noise(S, std::max(4, S / 4), rng);
  const double gray = rng.uniform(0.50, 0.72);
  const double opacity = rng.uniform(0.55, 0.8);
  Image alpha(S, S, 1), color(S, S, 3);
  for (int y = 0; y < S; ++y)
    for (int x = 0; x < S; ++x) {
      const double t = tex.at(y, x, 0);
      alpha.at(y, x, 0) = opacity * smoothstep(0.15, 0.55, f.at(y, x, 0)) * (0.6 + 0.4 * t);
      const double g = std::clamp(gray + 0.15 * (t - 0.5), 0.0, 1.0);
      color.at(y, x, 0) = g;
      color.at(y, x, 1) = g;
      color.at(y, x, 2) = std::min(1.0, g + 0.02);
    }
  return composite(img, alpha, color, 0);
}

// Smooth bright cloud / haze: gray-toned, untextured.
ObjectBox draw_cloud(Image& img, const Placement& p, Rng& rng) {
  const int S = img.width;
  const Image f = blob_field(S, p.cx, p.cy, p.w * 1.2, p.h * 0.8, 2, 0.0, rng);
  const double level = rng.uniform(0.82, 0.97);
  Image alpha(S, S, 1), color(S, S, 3, level);
  for (int y = 0; y < S; ++y)
    for (int x = 0; x < S; ++x) alpha.at(y, x, 0) = 0.9 * smoothstep(0.2, 0.7, f.at(y, x, 0));
  return composite(img, alpha, color, -1);
}

// Lamp / sunset glow: warm-toned, smooth, round, low saturation.
ObjectBox draw_glow(Image& img, const Placement& p, Rng& rng) {
  const int S = img.width;
  const double r = 0.5 * std::min(p.w, p.h);
  const Image f = blob_field(S, p.cx, p.cy, r * 1.6, r * 1.6, 1, 0.0, rng);
  Image alpha(S, S, 1), color(S, S, 3);
  for (int y = 0; y < S; ++y)
    for (int x = 0; x < S; ++x) {
      const double v = f.at(y, x, 0);
      alpha.at(y, x, 0) = smoothstep(0.1, 0.6, v);
      color.at(y, x, 0) = 1.0;
      color.at(y, x, 1) = 0.78 + 0.2 * v;
      color.at(y, x, 2) = 0.50 + 0.4 * v;
    }
  return composite(img, alpha, color, -1);
}

std::string sample_id(const std::string& prefix, Category c, int i) {
  std::ostringstream os;
  os << prefix << to_string(c) << "_" << std::setw(5) << std::setfill('0') << i;
  return os.str();
}

}  // namespace

SynthImage render_synthetic(Category category, int S, SynthDomain domain, Rng& rng) {
  require(S >= 32, "synth: image_size must be >= 32");
  const bool positive = category == Category::FireOnly || category == Category::SmokeOnly ||
                        category == Category::FireAndSmoke;
  int family;
  if (domain == SynthDomain::Shifted) {
    family = 4 + static_cast<int>(rng.uniform_int(0, 1));
  } else if (positive) {
    family = pick_weighted({1.0, 1.0, 3.0, 1.0}, rng);
  } else if (category == Category::SimpleNegative) {
    family = pick_weighted({3.0, 3.0, 0.6, 3.0}, rng);
  } else {
    family = pick_weighted({1.0, 1.0, 1.0, 1.0}, rng);
  }
  SynthImage out{background(S, family, rng), {}};
  switch (category) {
    case Category::FireOnly:
      out.objects.push_back(draw_fire(out.image, place(S, domain, 1.2, rng), rng));
      break;
    case Category::SmokeOnly:
      out.objects.push_back(draw_smoke(out.image, place(S, domain, 1.4, rng), rng));
      break;
    case Category::FireAndSmoke: {
      const Placement fire = place(S, domain, 1.1, rng);
      Placement smoke = fire;
      smoke.w *= 1.3;
      smoke.h *= 1.3;
      smoke.cy = std::max(0.3 * smoke.h, fire.cy - 0.6 * fire.h);
      out.objects.push_back(draw_smoke(out.image, smoke, rng));
      out.objects.push_back(draw_fire(out.image, fire, rng));
      break;
    }
    case Category::SimpleNegative:
      break;
    case Category::ComplexNegative:
      if (rng.bernoulli(0.5))
        out.objects.push_back(draw_cloud(out.image, place(S, domain, 0.8, rng), rng));
      else
        out.objects.push_back(draw_glow(out.image, place(S, domain, 1.0, rng), rng));
      break;
  }
  return out;
}

SynthResult synth_generate(const SynthSpec& spec, const std::filesystem::path& out_dir) {
  const SynthCounts& n = spec.counts;
  require(n.fire >= 0 && n.smoke >= 0 && n.both >= 0 && n.simple >= 0 && n.complex >= 0,
          "synth: counts must be >= 0");
  require(spec.image_size >= 32, "synth: image_size must be >= 32");
  SynthResult result;
  if (n.total() == 0) return result;

  std::error_code ec;
  std::filesystem::create_directories(out_dir / "images", ec);
  if (ec) fail(ErrorKind::Io, "synth: cannot create " + (out_dir / "images").string() + ": " + ec.message());

  const std::pair<Category, int> plan[] = {{Category::FireOnly, n.fire},
                                           {Category::SmokeOnly, n.smoke},
                                           {Category::FireAndSmoke, n.both},
                                           {Category::SimpleNegative, n.simple},
                                           {Category::ComplexNegative, n.complex}};
  nlohmann::json objects = nlohmann::json::object();
  for (const auto& [cat, count] : plan) {
    for (int i = 0; i < count; ++i) {
      Rng rng = Rng::derive(spec.seed, static_cast<std::uint64_t>(cat) + 101,
                            static_cast<std::uint64_t>(i) * 2 + (spec.domain == SynthDomain::Shifted));
      SynthImage si = render_synthetic(cat, spec.image_size, spec.domain, rng);
      Sample s;
      s.id = sample_id(spec.id_prefix, cat, i);
      s.image_path = out_dir / "images" / (s.id + ".png");
      s.label = {cat == Category::SmokeOnly || cat == Category::FireAndSmoke,
                 cat == Category::FireOnly || cat == Category::FireAndSmoke};
      s.partition = s.label.any() ? Partition::Positive
                    : cat == Category::ComplexNegative ? Partition::ComplexNegative
                                                       : Partition::SimpleNegative;
      write_png(s.image_path, si.image);
      auto& rec = objects[s.id] = nlohmann::json::array();
      for (const auto& b : si.objects)
        rec.push_back({{"class", b.cls}, {"x", b.x}, {"y", b.y}, {"w", b.w}, {"h", b.h}});
      result.manifest.push_back(std::move(s));
      result.objects.push_back(std::move(si.objects));
    }
  }
  save_manifest(result.manifest, out_dir / "manifest.jsonl");
  std::ofstream(out_dir / "objects.json") << objects.dump(1) << '\n';
  return result;
}

}  // namespace sfd
