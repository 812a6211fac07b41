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

#include "p4d/synth.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "p4d/error.hpp"
#include "p4d/losses.hpp"
#include "p4d/random.hpp"

namespace p4d {

namespace fs = std::filesystem;

namespace {

Vec3 center_at(const ObjectSpec& o, std::size_t scan) { return o.start + static_cast<double>(scan) * o.velocity; }

std::uint32_t max_instance(std::span<const PanopticLabels> seq) {
  std::uint32_t top = 0;
  for (const auto& l : seq) {
    for (std::uint32_t id : l.instance) top = std::max(top, id);
  }
  return top;
}

}  // namespace

void SceneSpec::validate() const {
  if (num_scans == 0) throw_validation("scene needs at least one scan");
  if (!(oracle_capture_sigmas > 0.0) || !(stuff_variance > 0.0)) {
    throw_validation("oracle variance parameters must be positive");
  }
  if (objects.size() >= kMaxLabelValue) throw_validation("too many objects for 16-bit instance ids");
  for (const auto& o : objects) {
    if (o.points == 0 || !(o.sigma > 0.0)) throw_validation("objects need positive point counts and sigma");
  }
  for (const auto& s : stuff) {
    if (s.points == 0) throw_validation("stuff regions need positive point counts");
  }
  for (std::size_t a = 0; a < objects.size(); ++a) {
    for (std::size_t b = a + 1; b < objects.size(); ++b) {
      const double need = min_separation * std::max(objects[a].sigma, objects[b].sigma);
      for (std::size_t t = 0; t < num_scans; ++t) {
        const double d = (center_at(objects[a], t) - center_at(objects[b], t)).norm();
        if (d < need) {
          throw_validation("objects " + std::to_string(a) + " and " + std::to_string(b) + " are " +
                           std::to_string(d) + " m apart at scan " + std::to_string(t) + ", need " +
                           std::to_string(need));
        }
      }
    }
  }
}

Pose default_calib_tr() {
  // Camera axes (right, down, forward) from LiDAR axes (forward, left, up).
  return Pose({0, -1, 0, 0.0, 0, 0, -1, -0.08, 1, 0, 0, -0.27}, "camera");
}

SceneSpec default_scene(std::size_t num_objects, std::size_t num_scans, std::uint64_t seed) {
  SceneSpec spec;
  spec.num_scans = num_scans;
  spec.seed = seed;
  Rng rng(derive_seed(seed, 0x5ce7e));
  const std::uint32_t classes[] = {10, 30, 11, 18, 20};
  const double lane = 6.0;
  for (std::size_t k = 0; k < num_objects; ++k) {
    ObjectSpec o;
    o.semantic = classes[k % 5];
    o.points = 80 + rng.index(71);
    o.sigma = 0.25 + 0.15 * rng.uniform();
    const double dir = k % 2 == 0 ? 1.0 : -1.0;
    o.start = {-4.0 * dir + 2.0 * rng.uniform(), lane * static_cast<double>(k), 0.0};
    o.velocity = {dir * (0.05 + 0.05 * rng.uniform()), 0.0, 0.0};
    spec.objects.push_back(o);
  }
  const double width = lane * static_cast<double>(std::max<std::size_t>(num_objects, 1));
  spec.stuff.push_back({40, {-15.0, -4.0, -3.05}, {15.0, width, -2.95}, 600});
  spec.stuff.push_back({70, {-15.0, -12.0, -2.0}, {15.0, -9.0, 1.0}, 300});
  return spec;
}

SynthSequence generate_sequence(const SceneSpec& spec) {
  spec.validate();
  SynthSequence out;
  Rng rng(spec.seed);
  const double capture = 2.0 * std::log(2.0);
  for (std::size_t t = 0; t < spec.num_scans; ++t) {
    const Pose pose = Pose::yaw_translation(spec.ego_yaw_rate * static_cast<double>(t),
                                            static_cast<double>(t) * spec.ego_velocity);
    struct Sample {
      Vec3 world;
      std::uint32_t semantic;
      std::uint32_t instance;
      double variance;
    };
    std::vector<Sample> samples;
    for (std::size_t k = 0; k < spec.objects.size(); ++k) {
      const ObjectSpec& o = spec.objects[k];
      const Vec3 c = center_at(o, t);
      const double r = spec.oracle_capture_sigmas * o.sigma;
      for (std::size_t i = 0; i < o.points; ++i) {
        const Vec3 p{c.x + o.sigma * rng.normal(), c.y + o.sigma * rng.normal(), c.z + o.sigma * rng.normal()};
        samples.push_back({p, o.semantic, static_cast<std::uint32_t>(k + 1), r * r / capture});
      }
    }
    for (const StuffRegion& s : spec.stuff) {
      for (std::size_t i = 0; i < s.points; ++i) {
        const Vec3 p{s.min.x + (s.max.x - s.min.x) * rng.uniform(), s.min.y + (s.max.y - s.min.y) * rng.uniform(),
                     s.min.z + (s.max.z - s.min.z) * rng.uniform()};
        samples.push_back({p, s.semantic, 0, spec.stuff_variance});
      }
    }
    if (spec.sensor_noise > 0.0) {
      for (auto& s : samples) {
        s.world = s.world + Vec3{spec.sensor_noise * rng.normal(), spec.sensor_noise * rng.normal(),
                                 spec.sensor_noise * rng.normal()};
      }
    }
    rng.shuffle(samples);

    const std::size_t n = samples.size();
    const Pose to_sensor = pose.inverse();
    Scan scan;
    scan.scan_index = t;
    PanopticLabels labels(n);
    ClusterFields fields{Matrix(n, 3), Matrix(n, 3), std::vector<double>(n, 0.0)};
    Matrix world(n, 3);
    std::vector<std::uint32_t> ids(n);
    for (std::size_t i = 0; i < n; ++i) {
      const Sample& s = samples[i];
      const Vec3 local = to_sensor.apply(s.world);
      scan.points.push_back({static_cast<float>(local.x), static_cast<float>(local.y), static_cast<float>(local.z)});
      scan.remission.push_back(static_cast<float>(0.2 + 0.6 * rng.uniform()));
      labels.semantic[i] = s.semantic;
      labels.instance[i] = s.instance;
      ids[i] = s.instance;
      world(i, 0) = fields.embeddings(i, 0) = s.world.x;
      world(i, 1) = fields.embeddings(i, 1) = s.world.y;
      world(i, 2) = fields.embeddings(i, 2) = s.world.z;
      for (std::size_t d = 0; d < 3; ++d) fields.variances(i, d) = s.variance;
    }
    fields.objectness = objectness_target(world, InstanceGroundTruth(ids));

    out.scans.push_back(std::move(scan));
    out.labels.push_back(std::move(labels));
    out.poses.push_back(pose);
    out.fields.push_back(std::move(fields));
  }
  return out;
}

void write_sequence(const SynthSequence& seq, const fs::path& dir) {
  for (std::size_t t = 0; t < seq.scans.size(); ++t) {
    const std::string stem = scan_stem(t);
    write_point_scan(seq.scans[t], dir / "velodyne" / (stem + ".bin"));
    write_labels(seq.labels[t], dir / "labels" / (stem + ".label"));
    write_fields(seq.fields[t], dir / "fields" / (stem + ".p4de"));
  }
  write_poses(seq.poses, seq.calib_tr, dir / "poses.txt");
  write_calib(seq.calib_tr, dir / "calib.txt");
}

Corruption Corruption::split_tube(std::uint32_t id, std::size_t at_scan) {
  Corruption c;
  c.kind = Kind::kSplitTube;
  c.a = id;
  c.at_scan = at_scan;
  return c;
}

Corruption Corruption::merge_tubes(std::uint32_t keep, std::uint32_t absorbed) {
  Corruption c;
  c.kind = Kind::kMergeTubes;
  c.a = keep;
  c.b = absorbed;
  return c;
}

Corruption Corruption::flip_class(double fraction, std::vector<std::uint32_t> thing_classes, std::uint64_t seed) {
  Corruption c;
  c.kind = Kind::kFlipClass;
  c.fraction = fraction;
  c.thing_classes = std::move(thing_classes);
  std::sort(c.thing_classes.begin(), c.thing_classes.end());
  c.seed = seed;
  return c;
}

Corruption Corruption::drop_points(double fraction, std::uint64_t seed) {
  Corruption c;
  c.kind = Kind::kDropPoints;
  c.fraction = fraction;
  c.seed = seed;
  return c;
}

Corruption Corruption::id_switch(std::uint32_t id, std::size_t at_scan, std::uint32_t target) {
  Corruption c;
  c.kind = Kind::kIdSwitch;
  c.a = id;
  c.at_scan = at_scan;
  c.b = target;
  return c;
}

std::vector<PanopticLabels> corrupt(std::span<const PanopticLabels> gt, const Corruption& c) {
  std::vector<PanopticLabels> out(gt.begin(), gt.end());
  if (c.fraction < 0.0 || c.fraction > 1.0) throw_validation("corruption fraction must lie in [0, 1]");
  switch (c.kind) {
    case Corruption::Kind::kSplitTube:
    case Corruption::Kind::kIdSwitch: {
      const std::uint32_t fresh = max_instance(gt) + 1;
      const std::uint32_t target = c.kind == Corruption::Kind::kIdSwitch && c.b != 0 ? c.b : fresh;
      for (std::size_t t = c.at_scan; t < out.size(); ++t) {
        for (auto& id : out[t].instance) {
          if (id == c.a) {
            id = target;
          } else if (id == target && target != fresh) {
            id = c.a;  // swapping two existing tracks
          }
        }
      }
      break;
    }
    case Corruption::Kind::kMergeTubes:
      for (auto& l : out) {
        for (auto& id : l.instance) {
          if (id == c.b) id = c.a;
        }
      }
      break;
    case Corruption::Kind::kFlipClass: {
      if (c.thing_classes.size() < 2) throw_validation("flip_class needs at least two thing classes");
      std::vector<std::pair<std::size_t, std::size_t>> candidates;
      for (std::size_t t = 0; t < out.size(); ++t) {
        for (std::size_t i = 0; i < out[t].size(); ++i) {
          if (std::binary_search(c.thing_classes.begin(), c.thing_classes.end(), out[t].semantic[i])) {
            candidates.emplace_back(t, i);
          }
        }
      }
      Rng rng(c.seed);
      const auto k = static_cast<std::size_t>(std::llround(c.fraction * static_cast<double>(candidates.size())));
      for (std::size_t j : uniform_sample_without_replacement(candidates.size(), k, rng)) {
        auto& cls = out[candidates[j].first].semantic[candidates[j].second];
        const auto it = std::lower_bound(c.thing_classes.begin(), c.thing_classes.end(), cls);
        const std::size_t pos = static_cast<std::size_t>(it - c.thing_classes.begin());
        cls = c.thing_classes[(pos + 1) % c.thing_classes.size()];
      }
      break;
    }
    case Corruption::Kind::kDropPoints: {
      std::vector<std::pair<std::size_t, std::size_t>> all;
      for (std::size_t t = 0; t < out.size(); ++t) {
        for (std::size_t i = 0; i < out[t].size(); ++i) all.emplace_back(t, i);
      }
      Rng rng(c.seed);
      const auto k = static_cast<std::size_t>(std::llround(c.fraction * static_cast<double>(all.size())));
      for (std::size_t j : uniform_sample_without_replacement(all.size(), k, rng)) {
        out[all[j].first].semantic[all[j].second] = 0;
        out[all[j].first].instance[all[j].second] = 0;
      }
      break;
    }
  }
  return out;
}

}  // namespace p4d
