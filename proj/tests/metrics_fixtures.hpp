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

#include <cstdint>
#include <utility>
#include <vector>

#include "p4d/metrics.hpp"
#include "p4d/random.hpp"

namespace p4d::testing {

/// Classes 1..4 evaluated, 1 and 2 are things, 0 ignored, identity map.
inline EvalConfig toy_config() {
  EvalConfig c;
  c.classes = {1, 2, 3, 4};
  c.things = {1, 2};
  c.ignore = {0};
  c.names = {{1, "car"}, {2, "person"}, {3, "road"}, {4, "vegetation"}};
  return c;
}

inline PanopticLabels labels(std::vector<std::uint32_t> semantic, std::vector<std::uint32_t> instance) {
  PanopticLabels l;
  l.semantic = std::move(semantic);
  l.instance = std::move(instance);
  return l;
}

/// Random gt/pred streams: up to `max_scans` scans, `max_points` points per
/// scan and `max_ids` instance ids on each side.
inline LabelSequence random_sequence(Rng& rng, std::size_t max_scans = 10, std::size_t max_points = 50,
                                     std::uint32_t max_ids = 5) {
  LabelSequence seq;
  const std::size_t scans = 1 + rng.index(max_scans);
  for (std::size_t t = 0; t < scans; ++t) {
    const std::size_t n = rng.index(max_points + 1);
    ScanPair pair{PanopticLabels(n), PanopticLabels(n)};
    for (std::size_t i = 0; i < n; ++i) {
      pair.gt.semantic[i] = static_cast<std::uint32_t>(rng.index(5));
      pair.pred.semantic[i] = static_cast<std::uint32_t>(rng.index(5));
      pair.gt.instance[i] = static_cast<std::uint32_t>(rng.index(max_ids + 1));
      pair.pred.instance[i] = static_cast<std::uint32_t>(rng.index(max_ids + 1));
    }
    seq.push_back(std::move(pair));
  }
  return seq;
}

}  // namespace p4d::testing
