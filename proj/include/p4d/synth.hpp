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
#include <filesystem>
#include <span>
#include <vector>

#include "p4d/fields.hpp"
#include "p4d/geometry.hpp"
#include "p4d/kitti_io.hpp"

namespace p4d {

/// Isotropic Gaussian blob moving at constant velocity (m per scan).
struct ObjectSpec {
  std::uint32_t semantic = 10;
  std::size_t points = 100;
  double sigma = 0.3;
  Vec3 start;
  Vec3 velocity;
};

/// Uniformly filled axis-aligned box of a stuff class.
struct StuffRegion {
  std::uint32_t semantic = 40;
  Vec3 min;
  Vec3 max;
  std::size_t points = 500;
};

struct SceneSpec {
  std::size_t num_scans = 20;
  std::vector<ObjectSpec> objects;
  std::vector<StuffRegion> stuff;
  double sensor_noise = 0.0;
  /// Required centre distance between any two objects at any scan, in
  /// multiples of the larger blob sigma.
  double min_separation = 10.0;
  Vec3 ego_velocity{0.5, 0.0, 0.0};
  double ego_yaw_rate = 0.01;  // rad per scan
  /// Oracle variance makes a point this many sigmas from the seed sit exactly
  /// at affinity 0.5.
  double oracle_capture_sigmas = 4.0;
  double stuff_variance = 1.0;
  std::uint64_t seed = 0;

  void validate() const;
};

/// Scene with `num_objects` blobs on parallel lanes (alternating travel
/// direction) over a road plane and a vegetation strip.
SceneSpec default_scene(std::size_t num_objects, std::size_t num_scans, std::uint64_t seed);

/// Camera-from-LiDAR extrinsic used for written calib files (exactly orthonormal).
Pose default_calib_tr();

struct SynthSequence {
  std::vector<Scan> scans;             // sensor frame
  std::vector<PanopticLabels> labels;  // gt; object k has instance k+1
  std::vector<Pose> poses;             // LiDAR-to-world
  std::vector<ClusterFields> fields;   // oracle fields
  Pose calib_tr = default_calib_tr();
};

SynthSequence generate_sequence(const SceneSpec& spec);

/// Writes velodyne/, labels/, fields/, poses.txt and calib.txt under `dir`.
void write_sequence(const SynthSequence& seq, const std::filesystem::path& dir);

struct Corruption {
  enum class Kind { kSplitTube, kMergeTubes, kFlipClass, kDropPoints, kIdSwitch };
  Kind kind = Kind::kSplitTube;
  std::uint32_t a = 0;  // tube acted on
  std::uint32_t b = 0;  // merge source / switch target (0 = fresh id)
  std::size_t at_scan = 0;
  double fraction = 0.0;
  std::uint64_t seed = 0;
  std::vector<std::uint32_t> thing_classes;  // raw ids, for kFlipClass

  static Corruption split_tube(std::uint32_t id, std::size_t at_scan);
  static Corruption merge_tubes(std::uint32_t keep, std::uint32_t absorbed);
  static Corruption flip_class(double fraction, std::vector<std::uint32_t> thing_classes, std::uint64_t seed);
  static Corruption drop_points(double fraction, std::uint64_t seed);
  static Corruption id_switch(std::uint32_t id, std::size_t at_scan, std::uint32_t target = 0);
};

/// Deterministic label transform of a whole sequence.
std::vector<PanopticLabels> corrupt(std::span<const PanopticLabels> gt, const Corruption& corruption);

}  // namespace p4d
