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

#include "sfd/backend.hpp"

#include <algorithm>
#include <cmath>
#include <thread>

#include "sfd/error.hpp"
#include "sfd/rng.hpp"

namespace sfd {

namespace {

constexpr std::size_t kChunk = 8;

// Four fixed lanes keep the summation order deterministic while leaving
// the compiler room to vectorize.
template <class T>
double dot(const T* a, const T* b, int n) {
  double s0 = 0, s1 = 0, s2 = 0, s3 = 0;
  int k = 0;
  for (; k + 4 <= n; k += 4) {
    s0 += static_cast<double>(a[k]) * b[k];
    s1 += static_cast<double>(a[k + 1]) * b[k + 1];
    s2 += static_cast<double>(a[k + 2]) * b[k + 2];
    s3 += static_cast<double>(a[k + 3]) * b[k + 3];
  }
  for (; k < n; ++k) s0 += static_cast<double>(a[k]) * b[k];
  return (s0 + s1) + (s2 + s3);
}

template <class T>
double sum(const T* a, std::size_t n) {
  double s0 = 0, s1 = 0, s2 = 0, s3 = 0;
  std::size_t k = 0;
  for (; k + 4 <= n; k += 4) {
    s0 += a[k];
    s1 += a[k + 1];
    s2 += a[k + 2];
    s3 += a[k + 3];
  }
  for (; k < n; ++k) s0 += a[k];
  return (s0 + s1) + (s2 + s3);
}

template <class T>
struct LayerCache {
  Tensor<T> input;
  Tensor<T> relu;           // post-ReLU, pre-pool
  std::vector<int> argmax;  // per pooled output: flat index into its relu plane
};

// 3x3, stride 1, zero padding 1.
template <class T>
Tensor<T> conv3x3(const Tensor<T>& in, const std::vector<T>& weight, const std::vector<T>& bias,
                  int out_c) {
  const int H = in.h, W = in.w, C = in.c;
  Tensor<T> out(out_c, H, W);
  for (int o = 0; o < out_c; ++o) {
    T* dst = out.plane(o);
    std::fill(dst, dst + static_cast<std::size_t>(H) * W, bias[o]);
    for (int i = 0; i < C; ++i) {
      const T* src = in.plane(i);
      const T* wk = weight.data() + (static_cast<std::size_t>(o) * C + i) * 9;
      for (int ky = 0; ky < 3; ++ky) {
        const int dy = ky - 1;
        const int y0 = std::max(0, -dy), y1 = std::min(H, H - dy);
        for (int kx = 0; kx < 3; ++kx) {
          const int dx = kx - 1;
          const int x0 = std::max(0, -dx), x1 = std::min(W, W - dx);
          const T w = wk[ky * 3 + kx];
          for (int y = y0; y < y1; ++y) {
            T* d = dst + static_cast<std::size_t>(y) * W;
            const T* s = src + static_cast<std::size_t>(y + dy) * W + dx;
            for (int x = x0; x < x1; ++x) d[x] += w * s[x];
          }
        }
      }
    }
  }
  return out;
}

template <class T>
void conv3x3_backward(const Tensor<T>& in, const Tensor<T>& d_out, const std::vector<T>& weight,
                      double* d_weight, double* d_bias, Tensor<T>* d_in) {
  const int H = in.h, W = in.w, C = in.c;
  const std::size_t plane = static_cast<std::size_t>(H) * W;
  for (int o = 0; o < d_out.c; ++o) {
    const T* g = d_out.plane(o);
    d_bias[o] += sum(g, plane);
    for (int i = 0; i < C; ++i) {
      const T* src = in.plane(i);
      double* dwk = d_weight + (static_cast<std::size_t>(o) * C + i) * 9;
      const T* wk = weight.data() + (static_cast<std::size_t>(o) * C + i) * 9;
      T* din = d_in ? d_in->plane(i) : nullptr;
      for (int ky = 0; ky < 3; ++ky) {
        const int dy = ky - 1;
        const int y0 = std::max(0, -dy), y1 = std::min(H, H - dy);
        for (int kx = 0; kx < 3; ++kx) {
          const int dx = kx - 1;
          const int x0 = std::max(0, -dx), x1 = std::min(W, W - dx);
          double acc = 0.0;
          for (int y = y0; y < y1; ++y) {
            const T* gr = g + static_cast<std::size_t>(y) * W;
            const T* s = src + static_cast<std::size_t>(y + dy) * W + dx;
            acc += dot(gr + x0, s + x0, x1 - x0);
          }
          dwk[ky * 3 + kx] += acc;
          if (din) {
            const T w = wk[ky * 3 + kx];
            for (int y = y0; y < y1; ++y) {
              const T* gr = g + static_cast<std::size_t>(y) * W;
              T* d = din + static_cast<std::size_t>(y + dy) * W + dx;
              for (int x = x0; x < x1; ++x) d[x] += w * gr[x];
            }
          }
        }
      }
    }
  }
}

// 2x2 max-pool, stride 2; odd trailing rows/columns are dropped. Ties go to
// the first position in row-major scan order.
template <class T>
Tensor<T> maxpool2(const Tensor<T>& in, std::vector<int>& argmax) {
  const int oh = in.h / 2, ow = in.w / 2;
  Tensor<T> out(in.c, oh, ow);
  argmax.assign(out.data.size(), 0);
  for (int k = 0; k < in.c; ++k) {
    const T* src = in.plane(k);
    for (int y = 0; y < oh; ++y)
      for (int x = 0; x < ow; ++x) {
        int best = (2 * y) * in.w + 2 * x;
        for (int idx : {best + 1, best + in.w, best + in.w + 1})
          if (src[idx] > src[best]) best = idx;
        const std::size_t o = (static_cast<std::size_t>(k) * oh + y) * ow + x;
        out.data[o] = src[best];
        argmax[o] = best;
      }
  }
  return out;
}

template <class T>
ForwardResult<T> forward_impl(const Architecture& arch, const Params<T>& p, const Tensor<T>& input,
                              std::vector<LayerCache<T>>* cache) {
  if (input.c != arch.input_channels || input.h != arch.input_size || input.w != arch.input_size)
    fail(ErrorKind::InvalidArgument,
         "forward: input " + std::to_string(input.c) + "x" + std::to_string(input.h) + "x" +
             std::to_string(input.w) + " does not match architecture " +
             std::to_string(arch.input_channels) + "x" + std::to_string(arch.input_size) + "x" +
             std::to_string(arch.input_size));
  if (cache) cache->assign(arch.blocks.size(), {});
  Tensor<T> x = input;
  for (std::size_t b = 0; b < arch.blocks.size(); ++b) {
    Tensor<T> a = conv3x3(x, p.conv_weight(b).values, p.conv_bias(b).values,
                          arch.blocks[b].out_channels);
    for (T& v : a.data) v = v > T(0) ? v : T(0);
    Tensor<T> next;
    std::vector<int> argmax;
    if (arch.blocks[b].pool) next = maxpool2(a, argmax);
    if (cache) {
      auto& lc = (*cache)[b];
      lc.input = std::move(x);
      lc.argmax = std::move(argmax);
      if (arch.blocks[b].pool) {
        lc.relu = std::move(a);
      } else {
        lc.relu = a;
        next = std::move(a);
      }
    } else if (!arch.blocks[b].pool) {
      next = std::move(a);
    }
    x = std::move(next);
  }

  ForwardResult<T> r;
  const int F = x.c;
  const std::size_t plane = static_cast<std::size_t>(x.h) * x.w;
  const auto& hw = p.head_weight().values;
  for (int k = 0; k < F; ++k) {
    const double g = sum(x.plane(k), plane) / static_cast<double>(plane);
    for (int c = 0; c < kNumClasses; ++c) r.pooled_logits[c] += static_cast<double>(hw[k * kNumClasses + c]) * g;
  }
  for (int c = 0; c < kNumClasses; ++c)
    r.logits[c] = r.pooled_logits[c] + static_cast<double>(p.head_bias().values[c]);
  r.features = std::move(x);
  return r;
}

template <class T>
void backward_impl(const Architecture& arch, const Params<T>& p,
                   const std::vector<LayerCache<T>>& cache, const ForwardResult<T>& fwd,
                   const std::array<double, kNumClasses>& d_logits, Params<double>& grad) {
  const Tensor<T>& f = fwd.features;
  const int F = f.c;
  const std::size_t plane = static_cast<std::size_t>(f.h) * f.w;
  const auto& hw = p.head_weight().values;
  auto& ghw = grad.head_weight().values;
  auto& ghb = grad.head_bias().values;
  Tensor<T> d(F, f.h, f.w);
  for (int c = 0; c < kNumClasses; ++c) ghb[c] += d_logits[c];
  for (int k = 0; k < F; ++k) {
    const double g = sum(f.plane(k), plane) / static_cast<double>(plane);
    double dg = 0.0;
    for (int c = 0; c < kNumClasses; ++c) {
      ghw[k * kNumClasses + c] += g * d_logits[c];
      dg += static_cast<double>(hw[k * kNumClasses + c]) * d_logits[c];
    }
    std::fill(d.plane(k), d.plane(k) + plane, static_cast<T>(dg / static_cast<double>(plane)));
  }

  for (std::size_t bi = arch.blocks.size(); bi-- > 0;) {
    const LayerCache<T>& lc = cache[bi];
    Tensor<T> d_relu;
    if (arch.blocks[bi].pool) {
      d_relu = Tensor<T>(lc.relu.c, lc.relu.h, lc.relu.w);
      const std::size_t pooled = static_cast<std::size_t>(d.h) * d.w;
      for (int k = 0; k < d.c; ++k) {
        T* dst = d_relu.plane(k);
        for (std::size_t o = 0; o < pooled; ++o) {
          const std::size_t flat = static_cast<std::size_t>(k) * pooled + o;
          dst[lc.argmax[flat]] += d.data[flat];
        }
      }
    } else {
      d_relu = std::move(d);
    }
    for (std::size_t i = 0; i < d_relu.data.size(); ++i)
      if (!(lc.relu.data[i] > T(0))) d_relu.data[i] = T(0);

    Tensor<T> d_in;
    if (bi > 0) d_in = Tensor<T>(lc.input.c, lc.input.h, lc.input.w);
    conv3x3_backward(lc.input, d_relu, p.conv_weight(bi).values,
                     grad.conv_weight(bi).values.data(), grad.conv_bias(bi).values.data(),
                     bi > 0 ? &d_in : nullptr);
    d = std::move(d_in);
  }
}

template <class Fn>
void run_chunks(std::size_t chunks, int threads, Fn&& fn) {
  const auto workers = static_cast<std::size_t>(std::clamp(threads, 1, 64));
  if (workers <= 1 || chunks <= 1) {
    for (std::size_t c = 0; c < chunks; ++c) fn(c);
    return;
  }
  std::vector<std::jthread> pool;
  for (std::size_t w = 0; w < std::min(workers, chunks); ++w)
    pool.emplace_back([&, w] {
      for (std::size_t c = w; c < chunks; c += workers) fn(c);
    });
}

void accumulate(Params<double>& into, const Params<double>& from) {
  for (std::size_t t = 0; t < into.tensors.size(); ++t) {
    auto& a = into.tensors[t].values;
    const auto& b = from.tensors[t].values;
    for (std::size_t i = 0; i < a.size(); ++i) a[i] += b[i];
  }
}

}  // namespace

int Architecture::feature_channels() const { return blocks.empty() ? 0 : blocks.back().out_channels; }

int Architecture::feature_size() const {
  int s = input_size;
  for (const auto& b : blocks)
    if (b.pool) s /= 2;
  return s;
}

void Architecture::validate() const {
  require(input_size >= 1, "architecture: input_size must be >= 1");
  require(input_channels >= 1, "architecture: input_channels must be >= 1");
  require(!blocks.empty(), "architecture: at least one conv block required");
  for (const auto& b : blocks) require(b.out_channels >= 1, "architecture: out_channels must be >= 1");
  require(feature_size() >= 1, "architecture: pooling collapses the feature map below 1x1");
}

std::size_t Architecture::parameter_count() const {
  std::size_t n = 0;
  int in = input_channels;
  for (const auto& b : blocks) {
    n += static_cast<std::size_t>(b.out_channels) * in * 9 + b.out_channels;
    in = b.out_channels;
  }
  return n + static_cast<std::size_t>(in) * kNumClasses + kNumClasses;
}

nlohmann::json Architecture::to_json() const {
  nlohmann::json blocks_j = nlohmann::json::array();
  for (const auto& b : blocks) blocks_j.push_back({{"out_channels", b.out_channels}, {"pool", b.pool}});
  return {{"input_size", input_size}, {"input_channels", input_channels}, {"blocks", blocks_j}};
}

Architecture Architecture::from_json(const nlohmann::json& j) {
  Architecture a;
  try {
    a.input_size = j.at("input_size").get<int>();
    a.input_channels = j.at("input_channels").get<int>();
    a.blocks.clear();
    for (const auto& b : j.at("blocks"))
      a.blocks.push_back({b.at("out_channels").get<int>(), b.at("pool").get<bool>()});
  } catch (const nlohmann::json::exception& e) {
    fail(ErrorKind::Format, std::string("architecture descriptor: ") + e.what());
  }
  a.validate();
  return a;
}

template <class T>
std::size_t Params<T>::size() const {
  std::size_t n = 0;
  for (const auto& t : tensors) n += t.values.size();
  return n;
}

template <class T>
Params<T> zero_params(const Architecture& arch) {
  arch.validate();
  Params<T> p;
  int in = arch.input_channels;
  for (std::size_t b = 0; b < arch.blocks.size(); ++b) {
    const int out = arch.blocks[b].out_channels;
    const std::string pre = "conv" + std::to_string(b);
    p.tensors.push_back({pre + ".weight", {out, in, 3, 3},
                         std::vector<T>(static_cast<std::size_t>(out) * in * 9)});
    p.tensors.push_back({pre + ".bias", {out}, std::vector<T>(static_cast<std::size_t>(out))});
    in = out;
  }
  p.tensors.push_back({"head.weight", {in, kNumClasses},
                       std::vector<T>(static_cast<std::size_t>(in) * kNumClasses)});
  p.tensors.push_back({"head.bias", {kNumClasses}, std::vector<T>(kNumClasses)});
  return p;
}

template <class T>
Params<T> init_params(const Architecture& arch, std::uint64_t seed) {
  Params<T> p = zero_params<T>(arch);
  Rng rng = Rng::derive(seed, 0x1417);
  for (auto& t : p.tensors) {
    if (t.shape.size() == 1) continue;  // biases start at zero
    const int fan_in = t.shape.size() == 4 ? t.shape[1] * 9 : t.shape[0];
    const double bound = std::sqrt(6.0 / fan_in);
    for (T& v : t.values) v = static_cast<T>(rng.uniform(-bound, bound));
  }
  return p;
}

template <class T>
void check_shapes(const Params<T>& p, const Architecture& arch) {
  const Params<T> ref = zero_params<T>(arch);
  if (p.tensors.size() != ref.tensors.size())
    fail(ErrorKind::InvalidArgument, "parameter set has " + std::to_string(p.tensors.size()) +
                                         " tensors; architecture needs " +
                                         std::to_string(ref.tensors.size()));
  for (std::size_t i = 0; i < ref.tensors.size(); ++i) {
    const auto& a = p.tensors[i];
    const auto& b = ref.tensors[i];
    if (a.name != b.name || a.shape != b.shape || a.values.size() != b.values.size())
      fail(ErrorKind::InvalidArgument, "parameter tensor '" + a.name + "' disagrees with architecture (expected '" +
                                           b.name + "')");
  }
}

template <class T>
Model<T>::Model(Architecture arch, std::uint64_t seed)
    : arch_(std::move(arch)), params_(init_params<T>(arch_, seed)) {}

template <class T>
Model<T>::Model(Architecture arch, Params<T> params)
    : arch_(std::move(arch)), params_(std::move(params)) {
  arch_.validate();
  check_shapes(params_, arch_);
}

template <class T>
ForwardResult<T> Model<T>::forward(const Tensor<T>& input) const {
  return forward_impl(arch_, params_, input, static_cast<std::vector<LayerCache<T>>*>(nullptr));
}

template <class T>
std::vector<ForwardResult<T>> Model<T>::forward(std::span<const Tensor<T>> batch) const {
  std::vector<ForwardResult<T>> out;
  out.reserve(batch.size());
  for (const auto& x : batch) out.push_back(forward(x));
  return out;
}

template <class T>
std::array<double, kNumClasses> Model<T>::predict_proba(const Tensor<T>& input) const {
  const auto r = forward(input);
  std::array<double, kNumClasses> p{};
  for (int c = 0; c < kNumClasses; ++c) p[c] = sigmoid(std::clamp(r.logits[c], -50.0, 50.0));
  return p;
}

template <class T>
double Model<T>::loss(std::span<const Tensor<T>> batch, std::span<const LabelVector> labels) const {
  require(batch.size() == labels.size(), "loss: batch/label size mismatch");
  std::vector<std::array<double, kNumClasses>> logits;
  logits.reserve(batch.size());
  for (const auto& x : batch) logits.push_back(forward(x).logits);
  return bce_loss(logits, labels);
}

template <class T>
double Model<T>::loss_and_gradient(std::span<const Tensor<T>> batch,
                                   std::span<const LabelVector> labels, Params<double>& grad,
                                   int threads) const {
  require(batch.size() == labels.size(), "loss_and_gradient: batch/label size mismatch");
  require(!batch.empty(), "loss_and_gradient: empty batch");
  const std::size_t n = batch.size();
  const std::size_t chunks = (n + kChunk - 1) / kChunk;
  const double scale = 1.0 / (static_cast<double>(n) * kNumClasses);
  std::vector<Params<double>> partial(chunks, zero_params<double>(arch_));
  std::vector<double> partial_loss(chunks, 0.0);

  run_chunks(chunks, threads, [&](std::size_t c) {
    std::vector<LayerCache<T>> cache;
    for (std::size_t i = c * kChunk; i < std::min(n, (c + 1) * kChunk); ++i) {
      const auto fwd = forward_impl(arch_, params_, batch[i], &cache);
      std::array<double, kNumClasses> dz{};
      for (int k = 0; k < kNumClasses; ++k) {
        const bool y = labels[i][k];
        partial_loss[c] += bce_term(fwd.logits[k], y);
        dz[k] = (sigmoid(fwd.logits[k]) - (y ? 1.0 : 0.0)) * scale;
      }
      backward_impl(arch_, params_, cache, fwd, dz, partial[c]);
    }
  });

  grad = zero_params<double>(arch_);
  double total = 0.0;
  for (std::size_t c = 0; c < chunks; ++c) {
    accumulate(grad, partial[c]);
    total += partial_loss[c];
  }
  return total * scale;
}

template <class T>
StepResult Model<T>::train_step(std::span<const Tensor<T>> batch,
                                std::span<const LabelVector> labels, double learning_rate,
                                int threads) {
  require(learning_rate >= 0.0, "train_step: learning rate must be >= 0");
  Params<double> grad;
  StepResult r;
  r.loss = loss_and_gradient(batch, labels, grad, threads);
  if (!std::isfinite(r.loss)) fail(ErrorKind::Numeric, "train_step: non-finite loss");
  for (const auto& t : grad.tensors)
    for (double g : t.values)
      if (!std::isfinite(g)) fail(ErrorKind::Numeric, "train_step: non-finite gradient in '" + t.name + "'");
  if (learning_rate == 0.0) return r;
  for (std::size_t t = 0; t < grad.tensors.size(); ++t) {
    auto& v = params_.tensors[t].values;
    const auto& g = grad.tensors[t].values;
    for (std::size_t i = 0; i < v.size(); ++i)
      v[i] = static_cast<T>(static_cast<double>(v[i]) - learning_rate * g[i]);
  }
  return r;
}

template <class T>
Tensor<T> prepare_input(const Image& img, const Architecture& arch, const NormalizationSpec& norm) {
  Image src = img;
  if (src.channels == 1 && arch.input_channels == 3) {
    Image rgb(src.height, src.width, 3);
    for (std::size_t p = 0; p < src.data.size(); ++p)
      rgb.data[3 * p] = rgb.data[3 * p + 1] = rgb.data[3 * p + 2] = src.data[p];
    src = std::move(rgb);
  }
  if (src.channels != arch.input_channels)
    fail(ErrorKind::InvalidArgument, "prepare_input: image has " + std::to_string(src.channels) +
                                         " channels; model expects " +
                                         std::to_string(arch.input_channels));
  const Image z = normalize(resize_bilinear(src, arch.input_size, arch.input_size), norm);
  Tensor<T> t(z.channels, z.height, z.width);
  for (int y = 0; y < z.height; ++y)
    for (int x = 0; x < z.width; ++x)
      for (int c = 0; c < z.channels; ++c) t.at(c, y, x) = static_cast<T>(z.at(y, x, c));
  return t;
}

double sigmoid(double z) {
  if (z >= 0) return 1.0 / (1.0 + std::exp(-z));
  const double e = std::exp(z);
  return e / (1.0 + e);
}

double bce_term(double z, bool y) {
  return std::max(z, 0.0) - (y ? z : 0.0) + std::log1p(std::exp(-std::abs(z)));
}

double bce_loss(std::span<const std::array<double, kNumClasses>> logits,
                std::span<const LabelVector> labels) {
  require(logits.size() == labels.size(), "bce_loss: size mismatch");
  require(!logits.empty(), "bce_loss: empty batch");
  double total = 0.0;
  for (std::size_t i = 0; i < logits.size(); ++i)
    for (int c = 0; c < kNumClasses; ++c) total += bce_term(logits[i][c], labels[i][c]);
  return total / (static_cast<double>(logits.size()) * kNumClasses);
}

template struct Params<float>;
template struct Params<double>;
template Params<float> zero_params<float>(const Architecture&);
template Params<double> zero_params<double>(const Architecture&);
template Params<float> init_params<float>(const Architecture&, std::uint64_t);
template Params<double> init_params<double>(const Architecture&, std::uint64_t);
template void check_shapes<float>(const Params<float>&, const Architecture&);
template void check_shapes<double>(const Params<double>&, const Architecture&);
template Tensor<float> prepare_input<float>(const Image&, const Architecture&, const NormalizationSpec&);
template Tensor<double> prepare_input<double>(const Image&, const Architecture&, const NormalizationSpec&);
template class Model<float>;
template class Model<double>;

}  // namespace sfd
