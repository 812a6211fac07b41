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

#include "p4d/kdtree.hpp"

#include <algorithm>
#include <limits>
#include <numeric>

#include "p4d/error.hpp"

namespace p4d {

namespace {

double coord(const Vec3& p, int axis) { return axis == 0 ? p.x : (axis == 1 ? p.y : p.z); }

}  // namespace

KdTree3::KdTree3(std::span<const Vec3> points, std::span<const std::uint64_t> ranks)
    : points_(points.begin(), points.end()), ranks_(ranks.begin(), ranks.end()) {
  if (points_.size() != ranks_.size()) throw_internal("k-d tree points and ranks differ in length");
  std::vector<std::size_t> order(points_.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  nodes_.reserve(points_.size());
  root_ = build(order, 0, order.size(), 0);
}

std::ptrdiff_t KdTree3::build(std::vector<std::size_t>& order, std::size_t lo, std::size_t hi, int depth) {
  if (lo >= hi) return -1;
  const int axis = depth % 3;
  const std::size_t mid = lo + (hi - lo) / 2;
  std::nth_element(order.begin() + static_cast<std::ptrdiff_t>(lo), order.begin() + static_cast<std::ptrdiff_t>(mid),
                   order.begin() + static_cast<std::ptrdiff_t>(hi), [&](std::size_t a, std::size_t b) {
                     return coord(points_[a], axis) < coord(points_[b], axis);
                   });
  const auto id = static_cast<std::ptrdiff_t>(nodes_.size());
  nodes_.push_back({order[mid], axis});
  const std::ptrdiff_t left = build(order, lo, mid, depth + 1);
  const std::ptrdiff_t right = build(order, mid + 1, hi, depth + 1);
  nodes_[static_cast<std::size_t>(id)].left = left;
  nodes_[static_cast<std::size_t>(id)].right = right;
  return id;
}

bool KdTree3::better(std::size_t cand, double d2, std::size_t best, double best_d2) const {
  if (d2 != best_d2) return d2 < best_d2;
  return ranks_[cand] < ranks_[best];
}

void KdTree3::search(std::ptrdiff_t node_id, const Vec3& q, std::size_t& best, double& best_d2) const {
  if (node_id < 0) return;
  const Node& node = nodes_[static_cast<std::size_t>(node_id)];
  const double d2 = squared_distance(points_[node.index], q);
  if (best == std::numeric_limits<std::size_t>::max() || better(node.index, d2, best, best_d2)) {
    best = node.index;
    best_d2 = d2;
  }
  const double diff = coord(q, node.axis) - coord(points_[node.index], node.axis);
  const std::ptrdiff_t near = diff < 0 ? node.left : node.right;
  const std::ptrdiff_t far = diff < 0 ? node.right : node.left;
  search(near, q, best, best_d2);
  // Equal distance must still be explored for the rank tie-break.
  if (diff * diff <= best_d2) search(far, q, best, best_d2);
}

std::size_t KdTree3::nearest(const Vec3& query) const {
  if (points_.empty()) throw_validation("nearest-neighbour query on an empty point set");
  std::size_t best = std::numeric_limits<std::size_t>::max();
  double best_d2 = std::numeric_limits<double>::infinity();
  search(root_, query, best, best_d2);
  return best;
}

}  // namespace p4d
