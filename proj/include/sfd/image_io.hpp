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

#include <cstdint>
#include <filesystem>
#include <vector>

#include "sfd/image.hpp"

namespace sfd {

/// Decodes PNG or JPEG (sniffed from the leading bytes). 8-bit channels map
/// to [0, 1] by /255; grayscale inputs stay single-channel, alpha is dropped.
Image read_image(const std::filesystem::path& path);

/// Decodes and forces 3 channels (gray is replicated).
Image read_rgb(const std::filesystem::path& path);

/// 8-bit PNG, 1 or 3 channels. Values are clipped to [0, 1] and rounded.
void write_png(const std::filesystem::path& path, const Image& img);

std::vector<std::uint8_t> to_bytes(const Image& img);

Image to_rgb(const Image& img);

}  // namespace sfd
