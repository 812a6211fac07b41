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

#include "p4d/geometry.hpp"

#include <algorithm>

namespace p4d {

Pose Pose::translation(const Vec3& t) {
  return Pose({1, 0, 0, t.x, 0, 1, 0, t.y, 0, 0, 1, t.z});
}

Pose Pose::yaw_translation(double yaw, const Vec3& t) {
  const double c = std::cos(yaw);
  const double s = std::sin(yaw);
  return Pose({c, -s, 0, t.x, s, c, 0, t.y, 0, 0, 1, t.z});
}

Pose Pose::compose(const Pose& other) const {
  std::array<double, 12> out{};
  for (int r = 0; r < 3; ++r) {
    for (int c = 0; c < 4; ++c) {
      double v = c == 3 ? (*this)(r, 3) : 0.0;
      for (int k = 0; k < 3; ++k) v += (*this)(r, k) * other(k, c);
      out[r * 4 + c] = v;
    }
  }
  return Pose(out, frame_);
}

Pose Pose::inverse() const {
  std::array<double, 12> out{};
  for (int r = 0; r < 3; ++r) {
    for (int c = 0; c < 3; ++c) out[r * 4 + c] = (*this)(c, r);
  }
  for (int r = 0; r < 3; ++r) {
    double v = 0.0;
    for (int k = 0; k < 3; ++k) v -= out[r * 4 + k] * (*this)(k, 3);
    out[r * 4 + 3] = v;
  }
  return Pose(out, frame_);
}

double Pose::orthonormality_error() const {
  double worst = 0.0;
  for (int i = 0; i < 3; ++i) {
    for (int j = 0; j < 3; ++j) {
      double dot = 0.0;
      for (int k = 0; k < 3; ++k) dot += (*this)(k, i) * (*this)(k, j);
      worst = std::max(worst, std::abs(dot - (i == j ? 1.0 : 0.0)));
    }
  }
  return worst;
}

bool Pose::is_finite() const {
  return std::all_of(m_.begin(), m_.end(), [](double v) { return std::isfinite(v); });
}

}  // namespace p4d
