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
#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "p4d/geometry.hpp"

namespace p4d {

/// One LiDAR sweep in the sensor frame.
struct Scan {
  std::vector<std::array<float, 3>> points;
  std::vector<float> remission;
  std::size_t scan_index = 0;

  std::size_t size() const { return points.size(); }
};

/// Per-point (semantic class, instance id). Instance 0 means "no instance".
///
/// Values are held widened to 32 bits so out-of-range values can be
/// rejected at write time instead of silently truncated.
struct PanopticLabels {
  std::vector<std::uint32_t> semantic;
  std::vector<std::uint32_t> instance;

  PanopticLabels() = default;
  explicit PanopticLabels(std::size_t n) : semantic(n, 0), instance(n, 0) {}

  std::size_t size() const { return semantic.size(); }
};

inline constexpr std::uint32_t kMaxLabelValue = 0xFFFF;

// Decoding from in-memory bytes. Byte order is little-endian regardless of host.
Scan decode_point_scan(std::span<const std::uint8_t> bytes, std::size_t scan_index = 0);
std::vector<std::uint8_t> encode_point_scan(const Scan& scan);
PanopticLabels decode_labels(std::span<const std::uint8_t> bytes, std::size_t expected_n);
std::vector<std::uint8_t> encode_labels(const PanopticLabels& labels);

Scan read_point_scan(const std::filesystem::path& path, std::size_t scan_index = 0);
void write_point_scan(const Scan& scan, const std::filesystem::path& path);
PanopticLabels read_labels(const std::filesystem::path& path, std::size_t expected_n);
void write_labels(const PanopticLabels& labels, const std::filesystem::path& path);

/// Parses one whitespace-separated 3x4 row-major line (12 decimals).
Pose parse_pose_line(const std::string& line, const std::string& frame);
/// Camera-from-LiDAR extrinsic from the "Tr:" line of a calib file.
Pose read_calib_tr(const std::filesystem::path& calib_path);
/// LiDAR-to-world poses: Tr⁻¹ · P · Tr for each camera-frame pose P.
std::vector<Pose> read_poses(const std::filesystem::path& poses_path,
                             const std::filesystem::path& calib_path);
/// Inverse of read_poses: writes camera-frame poses Tr · L · Tr⁻¹.
void write_poses(std::span<const Pose> lidar_poses, const Pose& tr,
                 const std::filesystem::path& poses_path);
void write_calib(const Pose& tr, const std::filesystem::path& calib_path);

std::vector<std::uint8_t> read_file_bytes(const std::filesystem::path& path);
void write_file_bytes(const std::filesystem::path& path, std::span<const std::uint8_t> bytes);

/// Six-digit zero-padded file stem used by the dataset layout.
std::string scan_stem(std::size_t scan_id);

struct ScanRange {
  std::size_t begin = 0;
  std::optional<std::size_t> end;  // exclusive; unset = through the last scan
};

/// Lazy view of a sequence directory:
///
///   <dir>/velodyne/NNNNNN.bin
///   <dir>/labels/NNNNNN.label
///   <dir>/poses.txt, <dir>/calib.txt
///   <dir>/fields/NNNNNN.p4de          (optional per-point cluster fields)
///
/// Files are read on access. Positions index the selected range; scan ids
/// are the numeric file stems.
class SequenceHandle {
 public:
  SequenceHandle() = default;
  SequenceHandle(std::filesystem::path dir, std::vector<std::size_t> scan_ids,
                 std::vector<Pose> poses);

  const std::filesystem::path& dir() const { return dir_; }
  std::size_t size() const { return scan_ids_.size(); }
  std::size_t scan_id(std::size_t pos) const;
  const std::vector<std::size_t>& scan_ids() const { return scan_ids_; }

  Scan scan(std::size_t pos) const;
  bool has_poses() const { return !poses_.empty(); }
  const Pose& pose(std::size_t pos) const;
  /// Reads <dir>/<subdir>/NNNNNN.label and checks its length against `expected_n`.
  PanopticLabels labels(std::size_t pos, std::size_t expected_n,
                        const std::string& subdir = "labels") const;
  /// As labels(), with the point count taken from the scan file size.
  PanopticLabels labels(std::size_t pos, const std::string& subdir = "labels") const;
  std::filesystem::path scan_path(std::size_t pos) const;
  std::filesystem::path label_path(std::size_t pos, const std::string& subdir = "labels") const;
  std::filesystem::path fields_path(std::size_t pos) const;

 private:
  void check_pos(std::size_t pos) const;

  std::filesystem::path dir_;
  std::vector<std::size_t> scan_ids_;
  std::vector<Pose> poses_;  // indexed by scan id
};

/// Enumerates velodyne/*.bin and loads poses when poses.txt and calib.txt exist.
SequenceHandle load_sequence(const std::filesystem::path& dir, ScanRange range = {});

}  // namespace p4d
