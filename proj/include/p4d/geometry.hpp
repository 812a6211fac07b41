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
#include <cmath>
#include <string>
#include <utility>

namespace p4d {

struct Vec3 {
  double x = 0.0;
  double y = 0.0;
  double z = 0.0;

  friend Vec3 operator+(const Vec3& a, const Vec3& b) { return {a.x + b.x, a.y + b.y, a.z + b.z}; }
  friend Vec3 operator-(const Vec3& a, const Vec3& b) { return {a.x - b.x, a.y - b.y, a.z - b.z}; }
  friend Vec3 operator*(double s, const Vec3& a) { return {s * a.x, s * a.y, s * a.z}; }
  friend bool operator==(const Vec3&, const Vec3&) = default;

  double squared_norm() const { return x * x + y * y + z * z; }
  double norm() const { return std::sqrt(squared_norm()); }
};

inline double squared_distance(const Vec3& a, const Vec3& b) { return (a - b).squared_norm(); }

/// Rigid transform stored as a row-major 3x4 matrix [R | t].
///
/// `frame` names the coordinate frame the transform maps into. Poses read
/// from disk are LiDAR-to-world ("world").
class Pose {
 public:
  Pose() = default;
  explicit Pose(const std::array<double, 12>& rows, std::string frame = "world")
      : m_(rows), frame_(std::move(frame)) {}

  static Pose identity() { return Pose(); }
  static Pose translation(const Vec3& t);
  /// Rotation about +z by `yaw` radians followed by translation `t`.
  static Pose yaw_translation(double yaw, const Vec3& t);

  const std::array<double, 12>& matrix() const { return m_; }
  double operator()(int r, int c) const { return m_[r * 4 + c]; }
  const std::string& frame() const { return frame_; }

  Vec3 apply(const Vec3& p) const {
    return {m_[0] * p.x + m_[1] * p.y + m_[2] * p.z + m_[3],
            m_[4] * p.x + m_[5] * p.y + m_[6] * p.z + m_[7],
            m_[8] * p.x + m_[9] * p.y + m_[10] * p.z + m_[11]};
  }

  /// (*this) ∘ other: applies `other` first.
  Pose compose(const Pose& other) const;
  Pose inverse() const;

  /// Max deviation of RᵀR from identity.
  double orthonormality_error() const;
  bool is_finite() const;

 private:
  std::array<double, 12> m_ = {1, 0, 0, 0, 0, 1, 0, 0, 0, 0, 1, 0};
  std::string frame_ = "world";
};

}  // namespace p4d
