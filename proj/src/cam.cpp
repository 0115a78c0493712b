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

#include "sfd/cam.hpp"

#include <algorithm>
#include <cmath>

#include "sfd/error.hpp"
#include "sfd/image_io.hpp"

namespace sfd {

double iou(const BBox& a, const BBox& b) {
  const int x0 = std::max(a.x, b.x), y0 = std::max(a.y, b.y);
  const int x1 = std::min(a.x + a.w, b.x + b.w), y1 = std::min(a.y + a.h, b.y + b.h);
  const double inter = std::max(0, x1 - x0) * static_cast<double>(std::max(0, y1 - y0));
  const double uni = static_cast<double>(a.area()) + b.area() - inter;
  return uni > 0 ? inter / uni : 0.0;
}

template <class T>
CamMap compute_cam(const Tensor<T>& features, std::span<const T> head_weight, int class_id,
                   int target_h, int target_w) {
  if (class_id < 0 || class_id >= kNumClasses)
    fail(ErrorKind::InvalidArgument, "compute_cam: class_id " + std::to_string(class_id) + " out of range");
  if (head_weight.size() != static_cast<std::size_t>(features.c) * kNumClasses)
    fail(ErrorKind::InvalidArgument, "compute_cam: head has " + std::to_string(head_weight.size() / kNumClasses) +
                                         " inputs but feature maps have " + std::to_string(features.c) +
                                         " channels");
  CamMap cam;
  cam.class_id = class_id;
  cam.grid = Image(features.h, features.w, 1, 0.0);
  for (int k = 0; k < features.c; ++k) {
    const double w = head_weight[static_cast<std::size_t>(k) * kNumClasses + class_id];
    const T* f = features.plane(k);
    for (std::size_t i = 0; i < cam.grid.data.size(); ++i) cam.grid.data[i] += w * static_cast<double>(f[i]);
  }
  cam.upsampled = resize_bilinear(cam.grid, target_h, target_w);
  return cam;
}

double grid_mean(const CamMap& cam) {
  double s = 0.0;
  for (double v : cam.grid.data) s += v;
  return cam.grid.data.empty() ? 0.0 : s / static_cast<double>(cam.grid.data.size());
}

std::optional<TrustedRegion> extract_trusted_region(const Image& image,
                                                    std::span<const CamMap> cams,
                                                    const LabelVector& label,
                                                    std::string source_id) {
  const int H = image.height, W = image.width;
  TrustedRegion tr;
  tr.mask.assign(static_cast<std::size_t>(H) * W, 0);
  for (const auto& cam : cams) {
    if (!label[cam.class_id]) continue;
    if (cam.upsampled.height != H || cam.upsampled.width != W)
      fail(ErrorKind::InvalidArgument, "extract_trusted_region: cam not upsampled to image size");
    for (std::size_t i = 0; i < tr.mask.size(); ++i)
      if (cam.upsampled.data[i] > 0.0) tr.mask[i] = 1;
  }
  int x0 = W, y0 = H, x1 = -1, y1 = -1;
  for (int y = 0; y < H; ++y)
    for (int x = 0; x < W; ++x)
      if (tr.mask[static_cast<std::size_t>(y) * W + x]) {
        ++tr.mask_area;
        x0 = std::min(x0, x), x1 = std::max(x1, x);
        y0 = std::min(y0, y), y1 = std::max(y1, y);
      }
  if (tr.mask_area == 0) return std::nullopt;
  tr.bbox = {x0, y0, x1 - x0 + 1, y1 - y0 + 1};
  tr.crop = crop(image, tr.bbox.x, tr.bbox.y, tr.bbox.w, tr.bbox.h);
  tr.source_id = std::move(source_id);
  tr.label = label;
  return tr;
}

void jet(double t, double& r, double& g, double& b) {
  t = std::clamp(t, 0.0, 1.0);
  r = std::clamp(1.5 - std::abs(4.0 * t - 3.0), 0.0, 1.0);
  g = std::clamp(1.5 - std::abs(4.0 * t - 2.0), 0.0, 1.0);
  b = std::clamp(1.5 - std::abs(4.0 * t - 1.0), 0.0, 1.0);
}

Image render_overlay(const Image& image, const CamMap& cam, double alpha) {
  require(alpha >= 0.0 && alpha <= 1.0, "render_overlay: alpha must lie in [0,1]");
  if (cam.upsampled.height != image.height || cam.upsampled.width != image.width)
    fail(ErrorKind::InvalidArgument, "render_overlay: cam and image dimensions differ");
  const Image rgb = to_rgb(image);
  const auto [lo_it, hi_it] = std::minmax_element(cam.upsampled.data.begin(), cam.upsampled.data.end());
  const double lo = *lo_it, span = *hi_it - *lo_it;
  Image out(image.height, image.width, 3);
  for (std::size_t p = 0; p < cam.upsampled.data.size(); ++p) {
    const double t = span > 0.0 ? (cam.upsampled.data[p] - lo) / span : 0.5;
    double c[3];
    jet(t, c[0], c[1], c[2]);
    for (int k = 0; k < 3; ++k)
      out.data[3 * p + k] = std::clamp((1.0 - alpha) * rgb.data[3 * p + k] + alpha * c[k], 0.0, 1.0);
  }
  return out;
}

template CamMap compute_cam<float>(const Tensor<float>&, std::span<const float>, int, int, int);
template CamMap compute_cam<double>(const Tensor<double>&, std::span<const double>, int, int, int);

}  // namespace sfd
