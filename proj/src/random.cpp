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

#include "p4d/random.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

namespace p4d {

double Rng::uniform() {
  return static_cast<double>(engine_() >> 11) * 0x1.0p-53;
}

std::size_t Rng::index(std::size_t n) {
  if (n <= 1) return 0;
  // Rejection keeps the draw unbiased for any n.
  const std::uint64_t bound = static_cast<std::uint64_t>(n);
  const std::uint64_t limit = std::numeric_limits<std::uint64_t>::max() -
                              std::numeric_limits<std::uint64_t>::max() % bound;
  std::uint64_t x = engine_();
  while (x >= limit) x = engine_();
  return static_cast<std::size_t>(x % bound);
}

double Rng::normal() {
  if (has_spare_) {
    has_spare_ = false;
    return spare_;
  }
  const double u1 = uniform_open_zero();
  const double u2 = uniform();
  const double r = std::sqrt(-2.0 * std::log(u1));
  const double a = 2.0 * M_PI * u2;
  spare_ = r * std::sin(a);
  has_spare_ = true;
  return r * std::cos(a);
}

std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t stream) {
  std::uint64_t z = seed + 0x9e3779b97f4a7c15ULL * (stream + 1);
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

std::vector<std::size_t> weighted_sample_without_replacement(std::span<const double> weights,
                                                             std::size_t k, Rng& rng) {
  const std::size_t n = weights.size();
  std::vector<std::size_t> all(n);
  std::iota(all.begin(), all.end(), std::size_t{0});
  if (k >= n) return all;
  if (k == 0) return {};

  const bool any_positive = std::any_of(weights.begin(), weights.end(), [](double w) { return w > 0.0; });

  // key = log(u) / w; larger keys win. w = 0 maps to -inf.
  std::vector<double> keys(n);
  for (std::size_t i = 0; i < n; ++i) {
    const double w = any_positive ? weights[i] : 1.0;
    const double u = rng.uniform_open_zero();
    keys[i] = w > 0.0 ? std::log(u) / w : -std::numeric_limits<double>::infinity();
  }
  std::partial_sort(all.begin(), all.begin() + static_cast<std::ptrdiff_t>(k), all.end(),
                    [&](std::size_t a, std::size_t b) {
                      if (keys[a] != keys[b]) return keys[a] > keys[b];
                      return a < b;
                    });
  all.resize(k);
  std::sort(all.begin(), all.end());
  return all;
}

std::vector<std::size_t> uniform_sample_without_replacement(std::size_t n, std::size_t k, Rng& rng) {
  std::vector<std::size_t> all(n);
  std::iota(all.begin(), all.end(), std::size_t{0});
  if (k >= n) return all;
  for (std::size_t i = 0; i < k; ++i) {
    std::swap(all[i], all[i + rng.index(n - i)]);
  }
  all.resize(k);
  std::sort(all.begin(), all.end());
  return all;
}

}  // namespace p4d
