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
#include <span>
#include <string>
#include <vector>

namespace p4d {

/// Central differences of `loss` around `x` (x is restored on return).
std::vector<double> central_difference(const std::function<double(std::span<const double>)>& loss,
                                       std::vector<double> x, double step);

/// ‖a − b‖₂ / max(‖a‖₂, ‖b‖₂); 0 when both vanish.
double relative_error(std::span<const double> a, std::span<const double> b);

struct GradCheckRow {
  std::string loss;
  std::size_t problems = 0;
  double max_relative_error = 0.0;
  double seconds = 0.0;
  bool passed = false;
};

/// Checks every training loss on `trials` random problems (≤ 100 points,
/// D ≤ 6) against central differences.
std::vector<GradCheckRow> check_gradients(std::uint64_t seed, std::size_t trials, double step = 1e-5,
                                          double tolerance = 1e-4);

}  // namespace p4d
