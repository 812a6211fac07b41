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

#include "p4d/matrix.hpp"
#include "p4d/random.hpp"

namespace p4d {

/// Instance membership over a point set (0 = no instance) plus the
/// per-instance member lists derived from it.
class InstanceGroundTruth {
 public:
  explicit InstanceGroundTruth(std::vector<std::uint32_t> instance_ids);

  std::span<const std::uint32_t> ids() const { return ids_; }
  std::size_t num_points() const { return ids_.size(); }
  std::size_t num_instances() const { return members_.size(); }
  /// Instance ids in ascending order; members(k) belongs to instance_id(k).
  std::uint32_t instance_id(std::size_t k) const { return labels_[k]; }
  const std::vector<std::size_t>& members(std::size_t k) const { return members_[k]; }
  /// Column-wise mean of `values` over the members of instance k.
  std::vector<double> member_mean(const Matrix& values, std::size_t k) const;

 private:
  std::vector<std::uint32_t> ids_;
  std::vector<std::uint32_t> labels_;
  std::vector<std::vector<std::size_t>> members_;
};

struct LossValue {
  double value = 0.0;
  std::vector<double> grad;  // same layout as the differentiated input
};

struct InstanceLossValue {
  double value = 0.0;
  Matrix grad_features;
  Matrix grad_variances;
};

/// Proximity target: o = 1 − d / d_max within each instance (1 when
/// d_max = 0), 0 outside instances. Distances use every column of `coords`.
std::vector<double> objectness_target(const Matrix& coords, const InstanceGroundTruth& gt);

/// Σ (pred − target)²; gradient w.r.t. pred.
LossValue objectness_loss(std::span<const double> pred, std::span<const double> target);

/// Σ_j Σ_i (p̂_ij − p_ij)², p̂_ij the affinity of point i under instance j's
/// member-mean embedding and member-mean variance.
InstanceLossValue instance_loss(const Matrix& features, const Matrix& variances, const InstanceGroundTruth& gt,
                                bool normalized);

/// Σ_j (1/|I_j|) Σ_{i∈I_j} ‖σ_i − σ̄_j‖²; gradient laid out like `variances`.
LossValue variance_smoothness_loss(const Matrix& variances, const InstanceGroundTruth& gt);

/// Mean softmax cross-entropy over `sampled` rows; gradient w.r.t. scores.
LossValue class_loss(const Matrix& scores, std::span<const std::uint32_t> gt_classes,
                     std::span<const std::size_t> sampled);

/// Weighted draw without replacement, weight ∝ 1 / (class frequency).
std::vector<std::size_t> balanced_class_sample(std::span<const std::uint32_t> gt_classes, std::size_t budget,
                                               Rng& rng);

struct LossComponents {
  double classification = 0.0;
  double objectness = 0.0;
  double instance = 0.0;
  double variance = 0.0;
};

double total_loss(const LossComponents& c);

}  // namespace p4d
