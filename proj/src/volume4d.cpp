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

#include "p4d/volume4d.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "p4d/error.hpp"
#include "p4d/kdtree.hpp"

namespace p4d {

void PastScanState::validate() const {
  const std::size_t n = coords.size();
  if (objectness.size() != n || semantic.size() != n || instance.size() != n) {
    throw_validation("past state for scan " + std::to_string(scan_index) + " has inconsistent array lengths");
  }
  for (double o : objectness) {
    if (!(o >= 0.0 && o <= 1.0)) {
      throw_validation("past state for scan " + std::to_string(scan_index) + " has objectness outside [0, 1]");
    }
  }
}

SamplingStrategy parse_strategy(const std::string& name) {
  if (name == "base") return SamplingStrategy::kBase;
  if (name == "thing") return SamplingStrategy::kThing;
  if (name == "importance") return SamplingStrategy::kImportance;
  if (name == "decay") return SamplingStrategy::kDecay;
  if (name == "stride") return SamplingStrategy::kStride;
  throw_validation("unknown sampling strategy '" + name + "' (expected base, thing, importance, decay or stride)");
}

std::string to_string(SamplingStrategy s) {
  switch (s) {
    case SamplingStrategy::kBase: return "base";
    case SamplingStrategy::kThing: return "thing";
    case SamplingStrategy::kImportance: return "importance";
    case SamplingStrategy::kDecay: return "decay";
    case SamplingStrategy::kStride: return "stride";
  }
  return "unknown";
}

void VolumeConfig::validate() const {
  if (tau < 1) throw_validation("tau must be >= 1");
  if (!(fraction > 0.0 && fraction <= 1.0)) throw_validation("fraction must lie in (0, 1]");
  if (strategy == SamplingStrategy::kStride && stride < 2) throw_validation("stride must be >= 2");
  if (strategy == SamplingStrategy::kThing && thing_classes.empty()) {
    throw_validation("thing strategy needs a non-empty thing class set");
  }
  if (!std::isfinite(time_scale)) throw_validation("time_scale must be finite");
}

std::vector<Vec3> align_scan(const Scan& scan, const Pose& pose) {
  std::vector<Vec3> out;
  out.reserve(scan.size());
  for (const auto& p : scan.points) out.push_back(pose.apply({p[0], p[1], p[2]}));
  return out;
}

std::size_t importance_count(std::size_t n, double fraction) {
  const double raw = fraction * static_cast<double>(n);
  const auto count = static_cast<std::size_t>(std::ceil(raw - 1e-9 * std::max(1.0, raw)));
  return std::min(count, n);
}

std::vector<std::size_t> sample_thing_prop(const PastScanState& past, std::span<const std::uint32_t> thing_classes,
                                           std::size_t budget, Rng& rng) {
  std::vector<std::size_t> things;
  for (std::size_t i = 0; i < past.size(); ++i) {
    if (std::find(thing_classes.begin(), thing_classes.end(), past.semantic[i]) != thing_classes.end()) {
      things.push_back(i);
    }
  }
  if (budget == 0 || things.size() <= budget) return things;
  std::vector<std::size_t> picked;
  for (std::size_t k : uniform_sample_without_replacement(things.size(), budget, rng)) picked.push_back(things[k]);
  return picked;
}

std::vector<std::size_t> sample_importance(const PastScanState& past, double fraction, Rng& rng) {
  if (!(fraction > 0.0 && fraction <= 1.0)) throw_validation("fraction must lie in (0, 1]");
  return weighted_sample_without_replacement(past.objectness, importance_count(past.size(), fraction), rng);
}

std::vector<double> decay_weights(std::span<const std::size_t> offsets) {
  if (offsets.empty()) return {};
  // Shift by the largest offset before exponentiating; the ratio is unchanged.
  const double top = static_cast<double>(*std::max_element(offsets.begin(), offsets.end()));
  std::vector<double> w;
  double total = 0.0;
  for (std::size_t i : offsets) {
    w.push_back(std::exp(static_cast<double>(i) - top));
    total += w.back();
  }
  for (double& v : w) v /= total;
  return w;
}

std::vector<std::size_t> decay_counts(std::span<const std::size_t> offsets, std::size_t total_budget) {
  const auto w = decay_weights(offsets);
  std::vector<std::size_t> counts(w.size());
  std::vector<std::pair<double, std::size_t>> remainders;
  std::size_t assigned = 0;
  for (std::size_t k = 0; k < w.size(); ++k) {
    const double exact = w[k] * static_cast<double>(total_budget);
    counts[k] = static_cast<std::size_t>(std::floor(exact));
    assigned += counts[k];
    remainders.emplace_back(exact - std::floor(exact), k);
  }
  // Larger remainder first; ties go to the nearer scan.
  std::sort(remainders.begin(), remainders.end(), [&](const auto& a, const auto& b) {
    if (a.first != b.first) return a.first > b.first;
    return offsets[a.second] > offsets[b.second];
  });
  for (std::size_t r = 0; assigned < total_budget && r < remainders.size(); ++r, ++assigned) {
    ++counts[remainders[r].second];
  }
  return counts;
}

std::vector<std::vector<std::size_t>> sample_temporal_decay(std::span<const PastScanState> past,
                                                            std::span<const std::size_t> offsets,
                                                            std::size_t total_budget, Rng& rng) {
  if (past.size() != offsets.size()) throw_internal("decay sampling: offsets do not match past scans");
  const auto counts = decay_counts(offsets, total_budget);
  std::vector<std::vector<std::size_t>> out;
  for (std::size_t k = 0; k < past.size(); ++k) {
    out.push_back(weighted_sample_without_replacement(past[k].objectness, counts[k], rng));
  }
  return out;
}

StrideSelection select_strided(std::span<const std::size_t> offsets, std::size_t stride) {
  if (stride < 2) throw_validation("stride must be >= 2");
  StrideSelection sel;
  for (std::size_t k = 0; k < offsets.size(); ++k) {
    if (offsets[k] >= 1 && (offsets[k] - 1) % stride == 0) {
      sel.included.push_back(k);
    } else {
      sel.skipped.push_back(k);
    }
  }
  return sel;
}

StridedSample sample_strided(std::span<const PastScanState> past, std::span<const std::size_t> offsets,
                             std::size_t stride, double fraction, Rng& rng) {
  if (past.size() != offsets.size()) throw_internal("stride sampling: offsets do not match past scans");
  const StrideSelection sel = select_strided(offsets, stride);
  StridedSample out;
  out.selections.resize(past.size());
  for (std::size_t k : sel.included) out.selections[k] = sample_importance(past[k], fraction, rng);
  for (std::size_t k : sel.skipped) out.skipped_scans.push_back(past[k].scan_index);
  return out;
}

std::vector<BackfillLabel> backfill_skipped(std::span<const Vec3> included_coords,
                                            std::span<const PointRef> included_refs,
                                            std::span<const BackfillLabel> included_labels,
                                            std::span<const Vec3> queries) {
  if (included_coords.size() != included_refs.size() || included_coords.size() != included_labels.size()) {
    throw_internal("backfill: included arrays differ in length");
  }
  if (included_coords.empty()) throw_validation("backfill requires a non-empty volume");
  std::vector<std::uint64_t> ranks;
  ranks.reserve(included_refs.size());
  for (const PointRef& r : included_refs) ranks.push_back(r.key());
  const KdTree3 tree(included_coords, ranks);
  std::vector<BackfillLabel> out;
  out.reserve(queries.size());
  for (const Vec3& q : queries) out.push_back(included_labels[tree.nearest(q)]);
  return out;
}

Volume4D build_volume(std::size_t current_scan, std::span<const Vec3> current_coords,
                      std::span<const PastScanState> past, const VolumeConfig& config, Rng& rng) {
  config.validate();
  const std::size_t tau = config.effective_tau();
  const std::span<const PastScanState> window =
      config.strategy == SamplingStrategy::kBase ? std::span<const PastScanState>{} : past;
  if (window.size() > tau - 1) {
    throw_validation("window holds " + std::to_string(window.size()) + " past scans, tau allows " +
                     std::to_string(tau - 1));
  }
  std::vector<std::size_t> offsets;
  for (std::size_t k = 0; k < window.size(); ++k) {
    window[k].validate();
    const std::size_t expected_scan = current_scan - window.size() + k;
    if (current_scan < window.size() || window[k].scan_index != expected_scan) {
      throw_validation("past scans must be the contiguous run right before scan " + std::to_string(current_scan));
    }
    offsets.push_back(tau - (current_scan - window[k].scan_index));
  }

  Volume4D vol;
  vol.current_scan = current_scan;
  auto slot_time = [&](std::size_t offset) { return static_cast<double>(offset - 1) * config.time_scale; };
  // Current scan occupies offset tau, i.e. slot tau-1.
  const double t_now = slot_time(tau);
  for (std::size_t i = 0; i < current_coords.size(); ++i) {
    const Vec3& p = current_coords[i];
    vol.coords.push_back({p.x, p.y, p.z, t_now});
    vol.origin.push_back({static_cast<std::uint32_t>(current_scan), static_cast<std::uint32_t>(i)});
    vol.is_current.push_back(1);
  }
  vol.n_current = current_coords.size();

  std::vector<std::vector<std::size_t>> selections(window.size());
  switch (config.strategy) {
    case SamplingStrategy::kBase:
      break;
    case SamplingStrategy::kThing: {
      std::vector<std::pair<std::size_t, std::size_t>> all;  // (scan position, point)
      for (std::size_t k = 0; k < window.size(); ++k) {
        for (std::size_t i : sample_thing_prop(window[k], config.thing_classes, 0, rng)) all.emplace_back(k, i);
      }
      if (config.thing_budget > 0 && all.size() > config.thing_budget) {
        std::vector<std::pair<std::size_t, std::size_t>> kept;
        for (std::size_t j : uniform_sample_without_replacement(all.size(), config.thing_budget, rng)) {
          kept.push_back(all[j]);
        }
        all = std::move(kept);
      }
      for (const auto& [k, i] : all) selections[k].push_back(i);
      break;
    }
    case SamplingStrategy::kImportance:
      for (std::size_t k = 0; k < window.size(); ++k) selections[k] = sample_importance(window[k], config.fraction, rng);
      break;
    case SamplingStrategy::kDecay: {
      std::size_t total_past = 0;
      for (const auto& s : window) total_past += s.size();
      selections = sample_temporal_decay(window, offsets, importance_count(total_past, config.fraction), rng);
      break;
    }
    case SamplingStrategy::kStride: {
      StridedSample strided = sample_strided(window, offsets, config.stride, config.fraction, rng);
      selections = std::move(strided.selections);
      vol.skipped_scans = std::move(strided.skipped_scans);
      break;
    }
  }

  for (std::size_t k = 0; k < window.size(); ++k) {
    const double t = slot_time(offsets[k]);
    for (std::size_t i : selections[k]) {
      const Vec3& p = window[k].coords[i];
      vol.coords.push_back({p.x, p.y, p.z, t});
      vol.origin.push_back({static_cast<std::uint32_t>(window[k].scan_index), static_cast<std::uint32_t>(i)});
      vol.is_current.push_back(0);
    }
  }
  return vol;
}

}  // namespace p4d
