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

#include <doctest.h>

#include <algorithm>
#include <map>

#include "p4d/error.hpp"
#include "p4d/fields.hpp"
#include "p4d/kitti_io.hpp"
#include "p4d/metrics.hpp"
#include "p4d/synth.hpp"
#include "support.hpp"

using namespace p4d;
using p4d::testing::TempDir;

namespace {

std::vector<LabelSequence> pair_up(const std::vector<PanopticLabels>& gt, const std::vector<PanopticLabels>& pred) {
  LabelSequence seq;
  for (std::size_t t = 0; t < gt.size(); ++t) seq.push_back({gt[t], pred[t]});
  return {seq};
}

// Points of instance `id` in scan `t`.
std::size_t count_id(const PanopticLabels& l, std::uint32_t id) {
  return static_cast<std::size_t>(std::count(l.instance.begin(), l.instance.end(), id));
}

}  // namespace

TEST_CASE("generation is deterministic in the seed") {
  const SceneSpec spec = default_scene(3, 6, 11);
  const SynthSequence a = generate_sequence(spec);
  const SynthSequence b = generate_sequence(spec);
  REQUIRE(a.scans.size() == 6);
  for (std::size_t t = 0; t < 6; ++t) {
    CHECK(a.scans[t].points == b.scans[t].points);
    CHECK(a.labels[t].instance == b.labels[t].instance);
    CHECK(encode_fields(a.fields[t]) == encode_fields(b.fields[t]));
  }
  const SynthSequence c = generate_sequence(default_scene(3, 6, 12));
  CHECK(c.scans[0].points != a.scans[0].points);
}

TEST_CASE("every object keeps one id and its point count in every scan") {
  const SceneSpec spec = default_scene(5, 8, 3);
  const SynthSequence seq = generate_sequence(spec);
  for (std::size_t t = 0; t < seq.labels.size(); ++t) {
    const PanopticLabels& l = seq.labels[t];
    std::map<std::uint32_t, std::uint32_t> class_of;
    for (std::size_t i = 0; i < l.size(); ++i) {
      if (l.instance[i] == 0) continue;
      auto [it, fresh] = class_of.emplace(l.instance[i], l.semantic[i]);
      CHECK(it->second == l.semantic[i]);
    }
    CHECK(class_of.size() == spec.objects.size());
    for (std::size_t k = 0; k < spec.objects.size(); ++k) {
      CHECK(count_id(l, static_cast<std::uint32_t>(k + 1)) == spec.objects[k].points);
      CHECK(class_of.at(static_cast<std::uint32_t>(k + 1)) == spec.objects[k].semantic);
    }
    std::size_t stuff = 0;
    for (const auto& s : spec.stuff) stuff += s.points;
    CHECK(l.size() == stuff + [&] {
      std::size_t n = 0;
      for (const auto& o : spec.objects) n += o.points;
      return n;
    }());
  }
}

TEST_CASE("blob centres follow the object trajectory in the world frame") {
  SceneSpec spec = default_scene(2, 5, 4);
  const SynthSequence seq = generate_sequence(spec);
  for (std::size_t t = 0; t < 5; ++t) {
    for (std::size_t k = 0; k < 2; ++k) {
      Vec3 mean;
      std::size_t n = 0;
      for (std::size_t i = 0; i < seq.scans[t].size(); ++i) {
        if (seq.labels[t].instance[i] != k + 1) continue;
        const auto& p = seq.scans[t].points[i];
        mean = mean + seq.poses[t].apply({p[0], p[1], p[2]});
        ++n;
      }
      mean = (1.0 / static_cast<double>(n)) * mean;
      const ObjectSpec& o = spec.objects[k];
      const Vec3 expect = o.start + static_cast<double>(t) * o.velocity;
      // Sample mean of n Gaussian points: 5 standard errors per axis, plus float storage.
      CHECK((mean - expect).norm() <= 5.0 * o.sigma / std::sqrt(static_cast<double>(n)) * std::sqrt(3.0) + 1e-3);
    }
  }
}

TEST_CASE("scenes that violate the separation rule are rejected") {
  SceneSpec spec;
  spec.num_scans = 10;
  ObjectSpec a, b;
  a.start = {0, 0, 0};
  b.start = {10, 0, 0};
  b.velocity = {-0.8, 0, 0};  // closes to 2 m by scan 10
  spec.objects = {a, b};
  CHECK_THROWS_AS(spec.validate(), Error);
  spec.num_scans = 3;  // 10 - 0.8*2 = 8.4 m >= 10 * 0.3
  CHECK_NOTHROW(spec.validate());
}

TEST_CASE("written files re-parse bit-exactly") {
  TempDir dir("synth_files");
  const SynthSequence seq = generate_sequence(default_scene(2, 4, 5));
  write_sequence(seq, dir.path());
  const SequenceHandle h = load_sequence(dir.path());
  REQUIRE(h.size() == 4);
  REQUIRE(h.has_poses());
  for (std::size_t t = 0; t < 4; ++t) {
    const auto bin = read_file_bytes(h.scan_path(t));
    CHECK(encode_point_scan(decode_point_scan(bin)) == bin);
    CHECK(h.scan(t).points == seq.scans[t].points);
    CHECK(h.labels(t).instance == seq.labels[t].instance);
    CHECK(h.labels(t).semantic == seq.labels[t].semantic);
    const auto p4de = read_file_bytes(h.fields_path(t));
    CHECK(encode_fields(decode_fields(p4de)) == p4de);
    CHECK(p4de == encode_fields(seq.fields[t]));
    for (int r = 0; r < 3; ++r) {
      for (int c = 0; c < 4; ++c) CHECK(h.pose(t)(r, c) == doctest::Approx(seq.poses[t](r, c)).epsilon(1e-9));
    }
  }
  CHECK(read_calib_tr(dir.path() / "calib.txt").matrix() == default_calib_tr().matrix());
}

TEST_CASE("corruptions have closed-form association scores") {
  const SceneSpec spec = default_scene(1, 10, 6);
  const SynthSequence seq = generate_sequence(spec);
  const EvalConfig kitti = EvalConfig::semantic_kitti();

  CHECK(s_assoc(pair_up(seq.labels, seq.labels), kitti) == 1.0);

  // Constant points per scan, split at the midpoint: two halves of IoU 1/2.
  const auto split = corrupt(seq.labels, Corruption::split_tube(1, 5));
  CHECK(s_assoc(pair_up(seq.labels, split), kitti) == doctest::Approx(0.5).epsilon(1e-12));
  // Split at scan 2 of 10: fractions 0.2 and 0.8 -> 0.2² + 0.8².
  const auto early = corrupt(seq.labels, Corruption::split_tube(1, 2));
  CHECK(s_assoc(pair_up(seq.labels, early), kitti) == doctest::Approx(0.68).epsilon(1e-12));

  const SynthSequence two = generate_sequence(default_scene(2, 10, 7));
  const auto merged = corrupt(two.labels, Corruption::merge_tubes(1, 2));
  // Each gt tube scores |A|/(|A|+|B|); their mean is 1/2 whatever the sizes.
  CHECK(s_assoc(pair_up(two.labels, merged), kitti) == doctest::Approx(0.5).epsilon(1e-12));

  const auto things = std::vector<std::uint32_t>{10, 11, 15, 18, 20, 30, 31, 32};
  const auto flipped = corrupt(two.labels, Corruption::flip_class(0.3, things, 1));
  const MetricReport fr = evaluate(pair_up(two.labels, flipped), kitti);
  CHECK(fr.s_assoc == 1.0);
  CHECK(fr.s_cls < 1.0);
  std::size_t changed = 0, thing_points = 0;
  for (std::size_t t = 0; t < two.labels.size(); ++t) {
    for (std::size_t i = 0; i < two.labels[t].size(); ++i) {
      if (std::binary_search(things.begin(), things.end(), two.labels[t].semantic[i])) ++thing_points;
      if (flipped[t].semantic[i] != two.labels[t].semantic[i]) ++changed;
    }
  }
  CHECK(changed == static_cast<std::size_t>(std::llround(0.3 * static_cast<double>(thing_points))));

  const MetricReport clean = evaluate(pair_up(two.labels, two.labels), kitti);
  const auto switched = corrupt(two.labels, Corruption::id_switch(1, 4));
  const MetricReport sw = evaluate(pair_up(two.labels, switched), kitti);
  CHECK(sw.ids == clean.ids + 1);
  CHECK(sw.tp == clean.tp);
  // Swapping two tracks switches both.
  const auto swapped = corrupt(two.labels, Corruption::id_switch(1, 4, 2));
  CHECK(evaluate(pair_up(two.labels, swapped), kitti).ids == clean.ids + 2);
}

TEST_CASE("dropping points lowers S_cls and keeps S_assoc for whole tubes") {
  const SynthSequence seq = generate_sequence(default_scene(2, 6, 8));
  const auto dropped = corrupt(seq.labels, Corruption::drop_points(0.25, 3));
  std::size_t zeros = 0, total = 0;
  for (const auto& l : dropped) {
    total += l.size();
    zeros += static_cast<std::size_t>(std::count(l.semantic.begin(), l.semantic.end(), 0u));
  }
  CHECK(zeros == static_cast<std::size_t>(std::llround(0.25 * static_cast<double>(total))));
  const MetricReport r = evaluate(pair_up(seq.labels, dropped), EvalConfig::semantic_kitti());
  CHECK(r.s_cls < 1.0);
  CHECK(r.s_assoc < 1.0);
  CHECK(r.s_assoc > 0.5);
  CHECK_THROWS_AS(corrupt(seq.labels, Corruption::drop_points(1.5, 3)), Error);
}
