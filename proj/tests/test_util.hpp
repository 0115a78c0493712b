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

#include <atomic>
#include <cstdint>
#include <filesystem>
#include <string>
#include <system_error>
#include <unistd.h>

#include "sfd/backend.hpp"
#include "sfd/image.hpp"
#include "sfd/rng.hpp"

namespace sfd::test {

// Scratch directory removed on destruction.
class TempDir {
 public:
  explicit TempDir(const std::string& tag = "t") {
    static std::atomic<int> counter{0};
    path_ = std::filesystem::temp_directory_path() /
            ("sfd_" + tag + "_" + std::to_string(::getpid()) + "_" + std::to_string(counter++));
    std::filesystem::remove_all(path_);
    std::filesystem::create_directories(path_);
  }
  ~TempDir() {
    std::error_code ec;
    std::filesystem::remove_all(path_, ec);
  }
  TempDir(const TempDir&) = delete;
  TempDir& operator=(const TempDir&) = delete;
  const std::filesystem::path& path() const { return path_; }
  std::filesystem::path operator/(const std::string& s) const { return path_ / s; }

 private:
  std::filesystem::path path_;
};

inline Image random_image(int h, int w, int c, Rng& rng) {
  Image img;
  img.height = h;
  img.width = w;
  img.channels = c;
  img.data.resize(static_cast<std::size_t>(h) * w * c);
  for (double& v : img.data) v = rng.uniform();
  return img;
}

inline Image constant_image(int h, int w, int c, double v) {
  Image img;
  img.height = h;
  img.width = w;
  img.channels = c;
  img.data.assign(static_cast<std::size_t>(h) * w * c, v);
  return img;
}

template <class T>
Tensor<T> random_tensor(int c, int h, int w, Rng& rng, double lo = -1.0, double hi = 1.0) {
  Tensor<T> t;
  t.c = c;
  t.h = h;
  t.w = w;
  t.data.resize(static_cast<std::size_t>(c) * h * w);
  for (T& v : t.data) v = static_cast<T>(rng.uniform(lo, hi));
  return t;
}

// Every parameter, biases included, drawn uniformly so no term is trivially zero.
template <class T>
Params<T> random_params(const Architecture& arch, Rng& rng, double scale = 0.5) {
  Params<T> p = zero_params<T>(arch);
  for (auto& t : p.tensors)
    for (T& v : t.values) v = static_cast<T>(rng.uniform(-scale, scale));
  return p;
}

inline Architecture tiny_arch(int size = 8, int channels = 2) {
  Architecture a;
  a.input_size = size;
  a.input_channels = channels;
  a.blocks = {{4, true}, {5, false}};
  return a;
}

}  // namespace sfd::test
