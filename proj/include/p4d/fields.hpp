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
#include <filesystem>
#include <span>
#include <vector>

#include "p4d/matrix.hpp"

namespace p4d {

/// Per-point inputs to density clustering: embedding, diagonal variance and
/// objectness. Variance columns may exceed embedding columns once coordinate
/// dimensions are mixed in (see build_point_features).
struct ClusterFields {
  Matrix embeddings;
  Matrix variances;
  std::vector<double> objectness;

  std::size_t size() const { return objectness.size(); }
  /// Throws on row-count mismatch, non-positive variance or objectness outside [0,1].
  void validate() const;
  /// Gathers the given rows into a new field set.
  ClusterFields select(std::span<const std::size_t> rows) const;
  /// Appends all rows of `other` (column counts must agree).
  void append(const ClusterFields& other);
};

// Sidecar layout, little-endian throughout:
//   "P4DE" | version u32 | N u32 | D_e u32 |
//   N*D_e f32 embeddings | N f32 objectness | N*D_e f32 variances
inline constexpr std::uint32_t kFieldsVersion = 1;

std::vector<std::uint8_t> encode_fields(const ClusterFields& fields);
ClusterFields decode_fields(std::span<const std::uint8_t> bytes);
ClusterFields read_fields(const std::filesystem::path& path);
void write_fields(const ClusterFields& fields, const std::filesystem::path& path);

}  // namespace p4d
