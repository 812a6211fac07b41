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
#include <span>
#include <vector>

#include "p4d/geometry.hpp"

namespace p4d {

/// Static 3-D k-d tree for exact nearest-neighbour queries.
///
/// Ties in distance are broken by the smaller `rank`, so results do not
/// depend on tree layout.
class KdTree3 {
 public:
  KdTree3(std::span<const Vec3> points, std::span<const std::uint64_t> ranks);

  std::size_t size() const { return points_.size(); }
  /// Index (into the constructor's arrays) of the nearest point.
  std::size_t nearest(const Vec3& query) const;

 private:
  struct Node {
    std::size_t index;
    int axis;
    std::ptrdiff_t left = -1;
    std::ptrdiff_t right = -1;
  };

  std::ptrdiff_t build(std::vector<std::size_t>& order, std::size_t lo, std::size_t hi, int depth);
  void search(std::ptrdiff_t node, const Vec3& q, std::size_t& best, double& best_d2) const;
  bool better(std::size_t cand, double d2, std::size_t best, double best_d2) const;

  std::vector<Vec3> points_;
  std::vector<std::uint64_t> ranks_;
  std::vector<Node> nodes_;
  std::ptrdiff_t root_ = -1;
};

}  // namespace p4d
