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

#include "p4d/tracking.hpp"

#include <algorithm>
#include <chrono>
#include <deque>
#include <filesystem>
#include <iostream>
#include <set>
#include <unordered_map>

#include "p4d/error.hpp"

namespace p4d {

void WindowResult::validate() const {
  std::vector<std::uint64_t> keys;
  keys.reserve(points.size());
  for (const auto& p : points) keys.push_back(p.ref.key());
  std::sort(keys.begin(), keys.end());
  if (std::adjacent_find(keys.begin(), keys.end()) != keys.end()) {
    throw_internal("window " + std::to_string(window_id) + " lists a point twice");
  }
}

Association associate_windows(const WindowResult& prev, const WindowResult& cur, TrackLedger& ledger,
                              double iou_threshold) {
  Association out;
  std::set<std::uint32_t> cur_ids;
  for (const auto& p : cur.points) {
    if (p.instance != 0) cur_ids.insert(p.instance);
  }

  std::vector<std::size_t> common;
  std::set_intersection(prev.scans.begin(), prev.scans.end(), cur.scans.begin(), cur.scans.end(),
                        std::back_inserter(common));
  out.had_common_scans = !common.empty();

  if (out.had_common_scans) {
    auto in_common = [&](const PointRef& r) { return std::binary_search(common.begin(), common.end(), r.scan); };
    std::unordered_map<std::uint64_t, std::uint32_t> prev_ids;
    for (const auto& p : prev.points) {
      if (in_common(p.ref)) prev_ids.emplace(p.ref.key(), p.instance);
    }
    std::map<std::uint32_t, std::size_t> prev_count;
    std::map<std::uint32_t, std::size_t> cur_count;
    std::map<std::pair<std::uint32_t, std::uint32_t>, std::size_t> inter;
    for (const auto& p : cur.points) {
      if (!in_common(p.ref)) continue;
      const auto it = prev_ids.find(p.ref.key());
      if (it == prev_ids.end()) continue;
      const std::uint32_t g = it->second;
      if (g != 0) ++prev_count[g];
      if (p.instance != 0) ++cur_count[p.instance];
      if (g != 0 && p.instance != 0) ++inter[{g, p.instance}];
    }

    struct Candidate {
      double iou;
      std::uint32_t prev_id;
      std::uint32_t cur_id;
    };
    std::vector<Candidate> candidates;
    for (const auto& [pair, n] : inter) {
      const double uni = static_cast<double>(prev_count[pair.first] + cur_count[pair.second] - n);
      candidates.push_back({static_cast<double>(n) / uni, pair.first, pair.second});
    }
    std::sort(candidates.begin(), candidates.end(), [](const Candidate& a, const Candidate& b) {
      if (a.iou != b.iou) return a.iou > b.iou;
      if (a.prev_id != b.prev_id) return a.prev_id < b.prev_id;
      return a.cur_id < b.cur_id;
    });
    std::set<std::uint32_t> used_prev;
    for (const Candidate& c : candidates) {
      if (!(c.iou > iou_threshold)) break;
      if (used_prev.count(c.prev_id) || out.local_to_global.count(c.cur_id)) continue;
      used_prev.insert(c.prev_id);
      out.local_to_global[c.cur_id] = c.prev_id;
      ++out.inherited;
    }
  }

  for (std::uint32_t id : cur_ids) {
    if (out.local_to_global.count(id)) continue;
    out.local_to_global[id] = ledger.fresh();
    ++out.fresh;
  }
  return out;
}

void PipelineConfig::validate() const {
  volume.validate();
  cluster.validate();
  if (!(iou_threshold >= 0.0 && iou_threshold < 1.0)) throw_validation("iou_threshold must lie in [0, 1)");
  if (!std::is_sorted(thing_classes.begin(), thing_classes.end())) throw_internal("thing classes must be sorted");
}

namespace {

struct ScanCache {
  PastScanState state;
  ClusterFields fields;
};

bool is_thing(std::span<const std::uint32_t> things, std::uint32_t cls) {
  return std::binary_search(things.begin(), things.end(), cls);
}

}  // namespace

PipelineOutput run_online_pipeline(std::size_t num_scans, const FrameProvider& frames, const PipelineConfig& input_config) {
  PipelineConfig config = input_config;
  std::sort(config.thing_classes.begin(), config.thing_classes.end());
  config.volume.thing_classes = config.thing_classes;
  config.validate();

  const auto start = std::chrono::steady_clock::now();
  const std::size_t tau = config.volume.effective_tau();
  PipelineOutput out;
  TrackLedger ledger;
  std::deque<ScanCache> history;  // at most tau-1 most recent scans
  WindowResult prev;
  bool have_prev = false;

  for (std::size_t pos = 0; pos < num_scans; ++pos) {
    FrameInput frame = frames(pos);
    const std::size_t n = frame.scan.size();
    if (frame.semantic.size() != n) {
      throw_validation("scan " + std::to_string(pos) + ": semantic predictions cover " +
                       std::to_string(frame.semantic.size()) + " of " + std::to_string(n) + " points");
    }
    if (frame.fields.size() != n) {
      throw_validation("scan " + std::to_string(pos) + ": cluster fields cover " +
                       std::to_string(frame.fields.size()) + " of " + std::to_string(n) + " points");
    }
    frame.fields.validate();
    const std::vector<Vec3> aligned = align_scan(frame.scan, frame.pose);

    std::vector<PastScanState> past;
    for (const auto& h : history) past.push_back(h.state);
    Rng rng(derive_seed(config.seed, pos));
    const Volume4D volume = build_volume(pos, aligned, past, config.volume, rng);
    out.stats.peak_volume_points = std::max(out.stats.peak_volume_points, volume.size());
    out.stats.peak_scan_points = std::max(out.stats.peak_scan_points, n);

    // Gather per-volume-point fields and semantics from their source scans.
    ClusterFields vol_fields;
    std::vector<std::uint32_t> vol_semantic(volume.size());
    std::vector<std::size_t> rows;
    for (std::size_t i = 0; i < volume.n_current; ++i) {
      rows.push_back(volume.origin[i].point);
      vol_semantic[i] = frame.semantic[volume.origin[i].point];
    }
    vol_fields = frame.fields.select(rows);
    std::size_t cursor = volume.n_current;
    for (const auto& h : history) {
      rows.clear();
      while (cursor < volume.size() && volume.origin[cursor].scan == h.state.scan_index) {
        rows.push_back(volume.origin[cursor].point);
        vol_semantic[cursor] = h.state.semantic[volume.origin[cursor].point];
        ++cursor;
      }
      if (!rows.empty()) vol_fields.append(h.fields.select(rows));
    }
    if (cursor != volume.size()) throw_internal("volume points are not grouped by scan");

    const PointFeatures features = build_point_features(volume, vol_fields, config.cluster);
    InstanceAssignment assignment = cluster_volume(features, vol_fields.objectness, config.cluster);
    majority_vote_classes(assignment, vol_semantic, config.thing_classes);

    WindowResult cur;
    cur.window_id = pos;
    for (const auto& h : history) cur.scans.push_back(h.state.scan_index);
    cur.scans.push_back(pos);
    std::vector<BackfillLabel> point_labels(volume.size());
    for (std::size_t i = 0; i < volume.size(); ++i) {
      const std::uint32_t id = assignment.instance_id[i];
      std::uint32_t cls = vol_semantic[i];
      if (id != 0 && config.unify_instance_class) cls = assignment.instances[id - 1].semantic;
      point_labels[i] = {cls, id};
      cur.points.push_back({volume.origin[i], id, cls});
    }

    if (!volume.skipped_scans.empty() && volume.size() > 0) {
      std::vector<Vec3> included;
      included.reserve(volume.size());
      for (std::size_t i = 0; i < volume.size(); ++i) included.push_back(volume.xyz(i));
      for (std::size_t skipped : volume.skipped_scans) {
        const auto it = std::find_if(history.begin(), history.end(),
                                     [&](const ScanCache& h) { return h.state.scan_index == skipped; });
        if (it == history.end()) throw_internal("skipped scan missing from history");
        const auto filled = backfill_skipped(included, volume.origin, point_labels, it->state.coords);
        for (std::size_t j = 0; j < filled.size(); ++j) {
          cur.points.push_back({{static_cast<std::uint32_t>(skipped), static_cast<std::uint32_t>(j)},
                                filled[j].instance, filled[j].semantic});
        }
      }
    }

    WindowResult empty_prev;
    const Association assoc = associate_windows(have_prev ? prev : empty_prev, cur, ledger, config.iou_threshold);
    if (have_prev && !assoc.had_common_scans) {
      ++out.stats.windows_without_overlap;
      if (tau > 1) std::cerr << "warning: window " << pos << " shares no scan with the previous window\n";
    }
    for (auto& p : cur.points) {
      if (p.instance != 0) p.instance = assoc.local_to_global.at(p.instance);
    }

    PanopticLabels labels(n);
    for (std::size_t i = 0; i < volume.n_current; ++i) {
      const std::size_t point = volume.origin[i].point;
      const WindowPoint& wp = cur.points[i];
      labels.semantic[point] = wp.semantic;
      labels.instance[point] = is_thing(config.thing_classes, wp.semantic) ? wp.instance : 0;
      if (labels.instance[point] > kMaxLabelValue) {
        throw_validation("global track id " + std::to_string(labels.instance[point]) +
                         " exceeds the 16-bit label range");
      }
    }

    ScanCache cache;
    cache.state.scan_index = pos;
    cache.state.coords = aligned;
    cache.state.objectness = frame.fields.objectness;
    cache.state.semantic = labels.semantic;
    cache.state.instance = labels.instance;
    cache.fields = std::move(frame.fields);
    history.push_back(std::move(cache));
    while (history.size() > tau - 1) history.pop_front();

    out.labels.push_back(std::move(labels));
    prev = std::move(cur);
    have_prev = true;
  }
  out.stats.scans = num_scans;
  out.stats.global_ids = ledger.next() - 1;
  out.stats.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  return out;
}

PipelineOutput run_online_pipeline(const SequenceHandle& sequence, const PipelineConfig& config) {
  if (!sequence.has_poses()) throw_io(sequence.dir().string() + ": missing poses.txt");
  const FrameProvider frames = [&](std::size_t pos) {
    FrameInput f;
    f.scan = sequence.scan(pos);
    f.pose = sequence.pose(pos);
    const auto fields_path = sequence.fields_path(pos);
    if (!std::filesystem::exists(fields_path)) throw_io("missing cluster fields " + fields_path.string());
    f.fields = read_fields(fields_path);
    f.semantic = sequence.labels(pos, f.scan.size(), config.semantic_source).semantic;
    return f;
  };
  return run_online_pipeline(sequence.size(), frames, config);
}

}  // namespace p4d
