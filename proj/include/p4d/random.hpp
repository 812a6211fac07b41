// Copyright 2026 The p4d Authors. All Rights Reserved.
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

#include <cstddef>
#include <cstdint>
#include <random>
#include <span>
#include <vector>

namespace p4d {

/// Seeded generator with platform-independent derived draws.
///
/// Only the raw 64-bit engine output is used; every distribution is computed
/// here so that sampled indices are identical across standard libraries.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : engine_(seed) {}

  std::uint64_t next() { return engine_(); }
  /// Uniform in [0, 1) with 53 random bits.
  double uniform();
  /// Uniform in (0, 1].
  double uniform_open_zero() { return 1.0 - uniform(); }
  std::size_t index(std::size_t n);
  double normal();

  template <typename T>
  void shuffle(std::vector<T>& v) {
    for (std::size_t i = v.size(); i > 1; --i) {
      std::swap(v[i - 1], v[index(i)]);
    }
  }

 private:
  std::mt19937_64 engine_;
  bool has_spare_ = false;
  double spare_ = 0.0;
};

/// Stream-splitting helper (splitmix64 finalizer over seed and stream).
std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t stream);

/// Draws `k` distinct indices with selection weight proportional to
/// `weights` (Efraimidis-Spirakis keys). Zero-weight entries are taken only
/// after every positive-weight entry; all-zero weights degrade to uniform.
/// Returned indices are sorted ascending. k >= size returns every index.
std::vector<std::size_t> weighted_sample_without_replacement(std::span<const double> weights,
                                                             std::size_t k, Rng& rng);

/// k distinct indices out of [0, n), uniform, sorted ascending.
std::vector<std::size_t> uniform_sample_without_replacement(std::size_t n, std::size_t k, Rng& rng);

}  // namespace p4d
