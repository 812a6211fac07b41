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

#include <array>
#include <compare>
#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "p4d/geometry.hpp"
#include "p4d/kitti_io.hpp"
#include "p4d/random.hpp"

namespace p4d {

/// Identifies a point by (scan id, index within that scan).
struct PointRef {
  std::uint32_t scan = 0;
  std::uint32_t point = 0;

  friend auto operator<=>(const PointRef&, const PointRef&) = default;
  std::uint64_t key() const { return (static_cast<std::uint64_t>(scan) << 32) | point; }
};

/// What the pipeline already knows about a processed scan.
struct PastScanState {
  std::size_t scan_index = 0;
  std::vector<Vec3> coords;  // world frame
  std::vector<double> objectness;
  std::vector<std::uint32_t> semantic;
  std::vector<std::uint32_t> instance;

  std::size_t size() const { return coords.size(); }
  void validate() const;
};

enum class SamplingStrategy { kBase, kThing, kImportance, kDecay, kStride };

SamplingStrategy parse_strategy(const std::string& name);
std::string to_string(SamplingStrategy s);

struct VolumeConfig {
  SamplingStrategy strategy = SamplingStrategy::kImportance;
  std::size_t tau = 4;
  double fraction = 0.10;
  std::size_t stride = 2;
  double time_scale = 1.0;
  /// Cap on past points admitted by the thing strategy; 0 = unlimited.
  std::size_t thing_budget = 0;
  /// Raw semantic ids treated as things (sorted).
  std::vector<std::uint32_t> thing_classes;

  /// Window length actually used (base always processes a single scan).
  std::size_t effective_tau() const { return strategy == SamplingStrategy::kBase ? 1 : tau; }
  void validate() const;
};

/// Ego-motion-aligned multi-scan point set. Current-scan points come first.
struct Volume4D {
  std::vector<std::array<double, 4>> coords;  // x, y, z, t
  std::vector<PointRef> origin;
  std::vector<std::uint8_t> is_current;
  std::size_t n_current = 0;
  std::size_t current_scan = 0;
  /// Scans inside the window whose points were skipped by the stride strategy.
  std::vector<std::size_t> skipped_scans;

  std::size_t size() const { return coords.size(); }
  Vec3 xyz(std::size_t i) const { return {coords[i][0], coords[i][1], coords[i][2]}; }
};

std::vector<Vec3> align_scan(const Scan& scan, const Pose& pose);

/// ceil(fraction * n), robust to representation error in `fraction`.
std::size_t importance_count(std::size_t n, double fraction);

std::vector<std::size_t> sample_thing_prop(const PastScanState& past,
                                           std::span<const std::uint32_t> thing_classes,
                                           std::size_t budget, Rng& rng);

std::vector<std::size_t> sample_importance(const PastScanState& past, double fraction, Rng& rng);

/// Softmax-over-offset shares e^i / Σ_j e^j for the given window offsets
/// (offset τ−1 is the scan right before the current one).
std::vector<double> decay_weights(std::span<const std::size_t> offsets);

/// Integer per-scan counts for `total_budget` split by decay_weights
/// (largest-remainder rounding, so the counts sum to the budget).
std::vector<std::size_t> decay_counts(std::span<const std::size_t> offsets, std::size_t total_budget);

/// `past[k]` sits at window offset `offsets[k]`. Returns per-scan selections.
std::vector<std::vector<std::size_t>> sample_temporal_decay(std::span<const PastScanState> past,
                                                            std::span<const std::size_t> offsets,
                                                            std::size_t total_budget, Rng& rng);

struct StrideSelection {
  std::vector<std::size_t> included;  // positions into the offsets list
  std::vector<std::size_t> skipped;
};

/// Keeps offsets 1, 1 + stride, 1 + 2·stride, ...; the rest are skipped.
StrideSelection select_strided(std::span<const std::size_t> offsets, std::size_t stride);

struct StridedSample {
  std::vector<std::vector<std::size_t>> selections;  // one per past scan; empty when skipped
  std::vector<std::size_t> skipped_scans;            // scan ids
};

StridedSample sample_strided(std::span<const PastScanState> past, std::span<const std::size_t> offsets,
                             std::size_t stride, double fraction, Rng& rng);

struct BackfillLabel {
  std::uint32_t semantic = 0;
  std::uint32_t instance = 0;
  friend bool operator==(const BackfillLabel&, const BackfillLabel&) = default;
};

/// Each query copies the label of its nearest included point; equidistant
/// candidates resolve to the smallest PointRef.
std::vector<BackfillLabel> backfill_skipped(std::span<const Vec3> included_coords,
                                            std::span<const PointRef> included_refs,
                                            std::span<const BackfillLabel> included_labels,
                                            std::span<const Vec3> queries);

/// `past` must hold exactly the scans max(0, t−τ+1) .. t−1 in ascending order
/// (possibly fewer at the start of a sequence, never gaps).
Volume4D build_volume(std::size_t current_scan, std::span<const Vec3> current_coords,
                      std::span<const PastScanState> past, const VolumeConfig& config, Rng& rng);

}  // namespace p4d
