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

#include <optional>
#include <span>
#include <string>
#include <vector>

#include "sfd/backend.hpp"
#include "sfd/corpus.hpp"
#include "sfd/image.hpp"

namespace sfd {

struct CamMap {
  int class_id = 0;
  Image grid;       // H' x W' x 1, raw class-weighted feature sum
  Image upsampled;  // image resolution, bilinear from grid
};

struct BBox {
  int x = 0, y = 0, w = 0, h = 0;

  int area() const { return w * h; }
  friend bool operator==(const BBox&, const BBox&) = default;
};

double iou(const BBox& a, const BBox& b);

struct TrustedRegion {
  BBox bbox;
  Image crop;  // original image pixels inside bbox
  std::string source_id;
  LabelVector label;  // of the source sample
  std::vector<unsigned char> mask;  // image-sized, row-major; diagnostics only
  int mask_area = 0;
};

/// grid(y, x) = sum_k head_weight[k, class_id] * features_k(y, x), then
/// upsampled to (target_h, target_w). Under global average pooling the
/// grid mean equals logit - bias for the same forward pass.
template <class T>
CamMap compute_cam(const Tensor<T>& features, std::span<const T> head_weight, int class_id,
                   int target_h, int target_w);

template <class T>
CamMap compute_cam(const Model<T>& model, const ForwardResult<T>& fwd, int class_id,
                   int target_h, int target_w) {
  return compute_cam(fwd.features, std::span<const T>(model.params().head_weight().values),
                     class_id, target_h, target_w);
}

double grid_mean(const CamMap& cam);

/// Mask is the union over the label's true classes of {upsampled > 0};
/// cams for false classes are ignored. Returns nullopt for an empty mask.
std::optional<TrustedRegion> extract_trusted_region(const Image& image,
                                                    std::span<const CamMap> cams,
                                                    const LabelVector& label,
                                                    std::string source_id = {});

/// Jet colormap on [0, 1].
void jet(double t, double& r, double& g, double& b);

/// (1 - alpha) * image + alpha * jet(minmax(cam)). A constant cam maps to
/// the middle of the colormap.
Image render_overlay(const Image& image, const CamMap& cam, double alpha);

extern template CamMap compute_cam<float>(const Tensor<float>&, std::span<const float>, int, int, int);
extern template CamMap compute_cam<double>(const Tensor<double>&, std::span<const double>, int, int, int);

}  // namespace sfd
