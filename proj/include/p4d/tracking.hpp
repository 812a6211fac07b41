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
#include <functional>
#include <map>
#include <string>
#include <vector>

#include "p4d/clustering.hpp"
#include "p4d/fields.hpp"
#include "p4d/kitti_io.hpp"
#include "p4d/volume4d.hpp"

namespace p4d {

struct WindowPoint {
  PointRef ref;
  std::uint32_t instance = 0;
  std::uint32_t semantic = 0;
};

/// Labelled points of one processed window. `scans` lists covered scan ids.
struct WindowResult {
  std::size_t window_id = 0;
  std::vector<WindowPoint> points;
  std::vector<std::size_t> scans;  // ascending

  void validate() const;
};

/// Hands out global track ids; never reuses one.
class TrackLedger {
 public:
  std::uint32_t fresh() { return next_++; }
  std::uint32_t next() const { return next_; }

 private:
  std::uint32_t next_ = 1;
};

struct Association {
  std::map<std::uint32_t, std::uint32_t> local_to_global;
  std::size_t inherited = 0;
  std::size_t fresh = 0;
  bool had_common_scans = false;
};

/// Maps the local ids of `cur` onto the global ids carried by `prev`.
///
/// Overlap is measured on points present in both windows within their
/// common scans, pooled over all of those scans. Pairs are accepted greedily
/// by descending IoU (ties: smaller prev id, then smaller cur id) when IoU is
/// strictly above the threshold; everything else gets a fresh id.
Association associate_windows(const WindowResult& prev, const WindowResult& cur, TrackLedger& ledger,
                              double iou_threshold = 0.5);

struct PipelineConfig {
  VolumeConfig volume;
  ClusterParams cluster;
  double iou_threshold = 0.5;
  std::uint64_t seed = 0;
  /// Raw semantic ids that carry instances; shared by sampling and voting.
  std::vector<std::uint32_t> thing_classes;
  /// Label sub-directory providing per-point semantic predictions.
  std::string semantic_source = "labels";
  /// Members of a kept instance report the instance's voted class.
  bool unify_instance_class = true;

  void validate() const;
};

/// Everything the pipeline needs for one scan.
struct FrameInput {
  Scan scan;
  Pose pose;
  ClusterFields fields;                 // per scan point
  std::vector<std::uint32_t> semantic;  // per scan point
};

struct PipelineStats {
  std::size_t scans = 0;
  std::size_t peak_volume_points = 0;
  std::size_t peak_scan_points = 0;
  std::size_t global_ids = 0;
  std::size_t windows_without_overlap = 0;
  double seconds = 0.0;
};

struct PipelineOutput {
  std::vector<PanopticLabels> labels;  // one per scan, in order
  PipelineStats stats;
};

using FrameProvider = std::function<FrameInput(std::size_t position)>;

/// Online processing: one window per scan, labels for each scan come from
/// the window in which it is newest.
PipelineOutput run_online_pipeline(std::size_t num_scans, const FrameProvider& frames, const PipelineConfig& config);

/// Reads scans, poses, fields/ sidecars and the semantic source from disk.
PipelineOutput run_online_pipeline(const SequenceHandle& sequence, const PipelineConfig& config);

}  // namespace p4d
