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
#include <span>
#include <string>
#include <vector>

#include <json.hpp>

#include "sfd/corpus.hpp"
#include "sfd/image.hpp"

namespace sfd {

inline constexpr int kNumClasses = 2;  // 0 smoke, 1 fire

struct ConvBlockSpec {
  int out_channels = 0;
  bool pool = false;  // 2x2 max-pool, stride 2, after ReLU

  friend bool operator==(const ConvBlockSpec&, const ConvBlockSpec&) = default;
};

/// 3x3 / stride 1 / pad 1 conv blocks with ReLU, then global average
/// pooling and a linear head with one output per class.
struct Architecture {
  int input_size = 64;
  int input_channels = 3;
  std::vector<ConvBlockSpec> blocks = {{16, true}, {32, true}, {64, false}};

  int feature_channels() const;
  int feature_size() const;  // H' == W'
  void validate() const;
  std::size_t parameter_count() const;

  nlohmann::json to_json() const;
  static Architecture from_json(const nlohmann::json& j);

  friend bool operator==(const Architecture&, const Architecture&) = default;
};

/// Channel-major (C x H x W) activation tensor.
template <class T>
struct Tensor {
  int c = 0, h = 0, w = 0;
  std::vector<T> data;

  Tensor() = default;
  Tensor(int c_, int h_, int w_, T fill = T(0))
      : c(c_), h(h_), w(w_), data(static_cast<std::size_t>(c_) * h_ * w_, fill) {}
  T* plane(int k) { return data.data() + static_cast<std::size_t>(k) * h * w; }
  const T* plane(int k) const { return data.data() + static_cast<std::size_t>(k) * h * w; }
  T& at(int k, int y, int x) { return data[(static_cast<std::size_t>(k) * h + y) * w + x]; }
  T at(int k, int y, int x) const { return data[(static_cast<std::size_t>(k) * h + y) * w + x]; }
};

template <class T>
struct NamedTensor {
  std::string name;
  std::vector<int> shape;
  std::vector<T> values;
};

/// Parameter tensors in fixed order: conv<i>.weight [out, in, 3, 3],
/// conv<i>.bias [out] for every block, then head.weight [n_feat, 2] and
/// head.bias [2].
template <class T>
struct Params {
  std::vector<NamedTensor<T>> tensors;

  std::size_t block_count() const { return (tensors.size() - 2) / 2; }
  NamedTensor<T>& conv_weight(std::size_t b) { return tensors[2 * b]; }
  const NamedTensor<T>& conv_weight(std::size_t b) const { return tensors[2 * b]; }
  NamedTensor<T>& conv_bias(std::size_t b) { return tensors[2 * b + 1]; }
  const NamedTensor<T>& conv_bias(std::size_t b) const { return tensors[2 * b + 1]; }
  NamedTensor<T>& head_weight() { return tensors[tensors.size() - 2]; }
  const NamedTensor<T>& head_weight() const { return tensors[tensors.size() - 2]; }
  NamedTensor<T>& head_bias() { return tensors.back(); }
  const NamedTensor<T>& head_bias() const { return tensors.back(); }

  std::size_t size() const;
};

/// Zero-valued tensors with the names and shapes `arch` requires.
template <class T>
Params<T> zero_params(const Architecture& arch);

/// Fan-in scaled uniform weights (+-sqrt(6/fan_in)), zero biases.
template <class T>
Params<T> init_params(const Architecture& arch, std::uint64_t seed);

template <class U, class T>
Params<U> cast_params(const Params<T>& p) {
  Params<U> out;
  for (const auto& t : p.tensors)
    out.tensors.push_back({t.name, t.shape, std::vector<U>(t.values.begin(), t.values.end())});
  return out;
}

/// Throws naming the first tensor whose name or shape disagrees with `arch`.
template <class T>
void check_shapes(const Params<T>& p, const Architecture& arch);

template <class T>
struct ForwardResult {
  Tensor<T> features;  // n_feat x H' x W', input to global average pooling
  std::array<double, kNumClasses> pooled_logits{};  // sum_k W[k,c] * GAP(f_k)
  std::array<double, kNumClasses> logits{};         // pooled_logits + bias
};

struct StepResult {
  double loss = 0.0;
};

template <class T>
class Model {
 public:
  Model(Architecture arch, std::uint64_t seed);
  Model(Architecture arch, Params<T> params);

  const Architecture& arch() const { return arch_; }
  const Params<T>& params() const { return params_; }
  Params<T>& params() { return params_; }

  ForwardResult<T> forward(const Tensor<T>& input) const;
  std::vector<ForwardResult<T>> forward(std::span<const Tensor<T>> batch) const;

  /// Sigmoid of the logits, with logits clamped to [-50, 50].
  std::array<double, kNumClasses> predict_proba(const Tensor<T>& input) const;

  double loss(std::span<const Tensor<T>> batch, std::span<const LabelVector> labels) const;

  /// Mean BCE over the batch and both classes, and its exact gradient.
  /// Work is split into fixed 8-image chunks whose partial sums are
  /// combined in chunk order, so results do not depend on `threads`.
  double loss_and_gradient(std::span<const Tensor<T>> batch, std::span<const LabelVector> labels,
                           Params<double>& grad, int threads = 1) const;

  /// Plain SGD: params -= lr * grad. Throws on a non-finite gradient,
  /// naming the offending tensor, and leaves params untouched.
  StepResult train_step(std::span<const Tensor<T>> batch, std::span<const LabelVector> labels,
                        double learning_rate, int threads = 1);

 private:
  Architecture arch_;
  Params<T> params_;
};

/// Resizes to the model input size, normalizes, and reorders to C x H x W.
/// Single-channel images are replicated when the model expects three.
template <class T>
Tensor<T> prepare_input(const Image& img, const Architecture& arch,
                        const NormalizationSpec& norm = {});

/// Mean over samples and classes of the numerically stable BCE.
double bce_loss(std::span<const std::array<double, kNumClasses>> logits,
                std::span<const LabelVector> labels);

/// One term: max(z,0) - z*y + log1p(exp(-|z|)).
double bce_term(double logit, bool target);

double sigmoid(double z);

extern template class Model<float>;
extern template class Model<double>;

}  // namespace sfd
