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
#include <string>
#include <vector>

#include "p4d/fields.hpp"
#include "p4d/matrix.hpp"
#include "p4d/volume4d.hpp"

namespace p4d {

enum class FeatureMode { kXyz, kXyzt, kEmb, kEmbXyz, kEmbXyzt };

FeatureMode parse_feature_mode(const std::string& name);
std::string to_string(FeatureMode mode);

struct ClusterParams {
  double assign_prob = 0.5;
  double seed_stop = 0.1;
  std::size_t min_points = 25;
  bool normalized_pdf = false;
  FeatureMode feature_mode = FeatureMode::kEmb;
  // Variances given to coordinate dimensions that the fields do not cover.
  double spatial_variance = 1.0;   // m²
  double temporal_variance = 1.0;  // slot²

  void validate() const;
};

/// Per-point clustering features with variances aligned column-for-column.
struct PointFeatures {
  Matrix features;
  Matrix variances;

  std::size_t dim() const { return features.cols(); }
};

/// Assembles the per-mode feature rows (embedding and/or x, y, z[, t]).
///
/// Variance columns come from `fields.variances` when it already has D
/// columns; when it has D_e columns the coordinate dimensions get the
/// configured defaults appended.
PointFeatures build_point_features(const Volume4D& volume, const ClusterFields& fields, const ClusterParams& params);

/// Gaussian membership of `query` under the seed's diagonal covariance.
/// Unnormalized by default (value in (0, 1]).
double gaussian_affinity(std::span<const double> seed, std::span<const double> query,
                         std::span<const double> seed_variance, bool normalized);

struct Instance {
  std::size_t seed = 0;
  std::vector<std::size_t> members;  // ascending
  std::uint32_t semantic = 0;        // set by majority_vote_classes
};

struct InstanceAssignment {
  std::vector<std::uint32_t> instance_id;  // 0 = unassigned; otherwise 1-based index into instances
  std::vector<Instance> instances;
};

/// Greedy seed-and-grow clustering. Seeds are taken in non-increasing
/// objectness order (ties: lower index) until the best remaining objectness
/// drops below seed_stop; undersized instances are dropped afterwards.
InstanceAssignment cluster_volume(const PointFeatures& features, std::span<const double> objectness,
                                  const ClusterParams& params);

/// Sets each instance's class to the modal member prediction (ties: smaller
/// class id). Instances voted into a non-thing class are dissolved and the
/// remaining ids renumbered contiguously.
void majority_vote_classes(InstanceAssignment& assignment, std::span<const std::uint32_t> semantic,
                           std::span<const std::uint32_t> thing_classes);

}  // namespace p4d
