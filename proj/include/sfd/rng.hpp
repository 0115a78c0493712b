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
#include <random>
#include <string_view>

namespace sfd {

/// Seeded random stream. The engine is std::mt19937_64, whose output
/// sequence is fully specified by the standard; the distribution helpers
/// below are written out by hand because the std:: distributions are not
/// reproducible across library implementations.
class Rng {
 public:
  explicit Rng(std::uint64_t seed = 0) : engine_(seed) {}

  std::uint64_t next() { return engine_(); }

  /// Uniform double in [0, 1) with 53 random bits.
  double uniform() { return static_cast<double>(next() >> 11) * 0x1.0p-53; }

  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

  /// Uniform integer in the closed range [lo, hi].
  std::int64_t uniform_int(std::int64_t lo, std::int64_t hi);

  bool bernoulli(double p) { return uniform() < p; }

  /// Independent stream for a (seed, a, b) triple; the mixing is splitmix64.
  static Rng derive(std::uint64_t seed, std::uint64_t a, std::uint64_t b = 0);

 private:
  std::mt19937_64 engine_;
};

std::uint64_t mix64(std::uint64_t x);

/// FNV-1a; stable across platforms, unlike std::hash.
std::uint64_t stable_hash(std::string_view s);

}  // namespace sfd
