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

#include "p4d/config.hpp"

#include <algorithm>
#include <set>
#include <type_traits>

#include <json.hpp>

#include "p4d/error.hpp"
#include "p4d/random.hpp"

namespace p4d {

using Json = nlohmann::ordered_json;

namespace {

Json parse_text(const std::string& text, const std::string& what) {
  try {
    return Json::parse(text, nullptr, true, true);
  } catch (const Json::parse_error& e) {
    throw_validation(what + " is not valid JSON: " + e.what());
  }
}

std::string read_text(const std::filesystem::path& path) {
  const auto bytes = read_file_bytes(path);
  return std::string(bytes.begin(), bytes.end());
}

void require_object(const Json& j, const std::string& where) {
  if (!j.is_object()) throw_validation(where + " must be a JSON object");
}

void reject_unknown(const Json& j, std::initializer_list<const char*> allowed, const std::string& where) {
  for (const auto& item : j.items()) {
    if (std::find_if(allowed.begin(), allowed.end(), [&](const char* k) { return item.key() == k; }) ==
        allowed.end()) {
      throw_validation("unknown key '" + item.key() + "' in " + where);
    }
  }
}

bool has_negative_integer(const Json& j) {
  if (j.is_number_integer() && !j.is_number_unsigned()) return j.get<std::int64_t>() < 0;
  if (j.is_array()) return std::any_of(j.begin(), j.end(), has_negative_integer);
  return false;
}

template <typename T>
constexpr bool holds_unsigned() {
  if constexpr (std::is_unsigned_v<T>) {
    return true;
  } else if constexpr (requires { typename T::value_type; } && !std::is_same_v<T, std::string>) {
    return std::is_unsigned_v<typename T::value_type>;
  } else {
    return false;
  }
}

template <typename T>
void get(const Json& j, const char* key, T& out) {
  if (!j.contains(key)) return;
  // nlohmann wraps negative integers into unsigned targets without complaint.
  if (holds_unsigned<T>() && has_negative_integer(j.at(key))) {
    throw_validation(std::string("'") + key + "' must not be negative");
  }
  try {
    out = j.at(key).get<T>();
  } catch (const Json::exception& e) {
    throw_validation(std::string("bad value for '") + key + "': " + e.what());
  }
}

std::vector<std::uint32_t> sorted_unique(std::vector<std::uint32_t> v) {
  std::sort(v.begin(), v.end());
  v.erase(std::unique(v.begin(), v.end()), v.end());
  return v;
}

Vec3 vec3_from(const Json& j, const char* key) {
  std::vector<double> v;
  get(j, key, v);
  if (v.size() != 3) throw_validation(std::string("'") + key + "' needs three numbers");
  return {v[0], v[1], v[2]};
}

// Sets `value` at a dotted path inside `root`, creating nothing new.
void set_path(Json& root, const std::string& key, const std::string& value) {
  Json* node = &root;
  std::size_t start = 0;
  while (true) {
    const std::size_t dot = key.find('.', start);
    const std::string part = key.substr(start, dot == std::string::npos ? std::string::npos : dot - start);
    if (!node->is_object() || !node->contains(part)) throw_validation("unknown setting '" + key + "'");
    node = &(*node)[part];
    if (dot == std::string::npos) break;
    start = dot + 1;
  }
  Json parsed = Json::parse(value, nullptr, false);
  if (parsed.is_discarded()) parsed = value;
  *node = std::move(parsed);
}

Json to_json(const RunConfig& c) {
  const PipelineConfig& p = c.pipeline;
  Json seqs = Json::array();
  for (const auto& s : c.sequences) seqs.push_back(s);
  return Json{
      {"input", c.input.string()},
      {"output", c.output.string()},
      {"sequences", seqs},
      {"first_scan", c.scans.begin},
      {"end_scan", c.scans.end ? Json(*c.scans.end) : Json(nullptr)},
      {"threads", c.threads},
      {"seed", p.seed},
      {"strategy", to_string(p.volume.strategy)},
      {"tau", p.volume.tau},
      {"fraction", p.volume.fraction},
      {"stride", p.volume.stride},
      {"time_scale", p.volume.time_scale},
      {"thing_budget", p.volume.thing_budget},
      {"thing_classes", p.thing_classes},
      {"iou_threshold", p.iou_threshold},
      {"semantic_source", p.semantic_source},
      {"unify_instance_class", p.unify_instance_class},
      {"clustering",
       {{"feature_mode", to_string(p.cluster.feature_mode)},
        {"assign_prob", p.cluster.assign_prob},
        {"seed_stop", p.cluster.seed_stop},
        {"min_points", p.cluster.min_points},
        {"normalized_pdf", p.cluster.normalized_pdf},
        {"spatial_variance", p.cluster.spatial_variance},
        {"temporal_variance", p.cluster.temporal_variance}}},
  };
}

RunConfig run_from_json(const Json& j) {
  require_object(j, "run config");
  reject_unknown(j,
                 {"input", "output", "sequences", "first_scan", "end_scan", "threads", "seed", "strategy", "tau",
                  "fraction", "stride", "time_scale", "thing_budget", "thing_classes", "iou_threshold",
                  "semantic_source", "unify_instance_class", "clustering"},
                 "run config");
  RunConfig c = RunConfig::defaults();
  PipelineConfig& p = c.pipeline;
  std::string text;
  if (j.contains("input")) {
    get(j, "input", text);
    c.input = text;
  }
  if (j.contains("output")) {
    get(j, "output", text);
    c.output = text;
  }
  get(j, "sequences", c.sequences);
  get(j, "first_scan", c.scans.begin);
  if (j.contains("end_scan")) {
    if (j.at("end_scan").is_null()) {
      c.scans.end.reset();
    } else {
      std::size_t end = 0;
      get(j, "end_scan", end);
      c.scans.end = end;
    }
  }
  get(j, "threads", c.threads);
  get(j, "seed", p.seed);
  if (j.contains("strategy")) {
    get(j, "strategy", text);
    p.volume.strategy = parse_strategy(text);
  }
  get(j, "tau", p.volume.tau);
  get(j, "fraction", p.volume.fraction);
  get(j, "stride", p.volume.stride);
  get(j, "time_scale", p.volume.time_scale);
  get(j, "thing_budget", p.volume.thing_budget);
  get(j, "thing_classes", p.thing_classes);
  p.thing_classes = sorted_unique(p.thing_classes);
  get(j, "iou_threshold", p.iou_threshold);
  get(j, "semantic_source", p.semantic_source);
  get(j, "unify_instance_class", p.unify_instance_class);
  if (j.contains("clustering")) {
    const Json& k = j.at("clustering");
    require_object(k, "clustering");
    reject_unknown(k,
                   {"feature_mode", "assign_prob", "seed_stop", "min_points", "normalized_pdf", "spatial_variance",
                    "temporal_variance"},
                   "clustering");
    if (k.contains("feature_mode")) {
      get(k, "feature_mode", text);
      p.cluster.feature_mode = parse_feature_mode(text);
    }
    get(k, "assign_prob", p.cluster.assign_prob);
    get(k, "seed_stop", p.cluster.seed_stop);
    get(k, "min_points", p.cluster.min_points);
    get(k, "normalized_pdf", p.cluster.normalized_pdf);
    get(k, "spatial_variance", p.cluster.spatial_variance);
    get(k, "temporal_variance", p.cluster.temporal_variance);
  }
  p.volume.thing_classes = p.thing_classes;
  return c;
}

Json to_json(const EvalConfig& c) {
  Json map = Json::object();
  for (const auto& [raw, cls] : c.class_map) map[std::to_string(raw)] = cls;
  Json names = Json::object();
  for (const auto& [cls, name] : c.names) names[std::to_string(cls)] = name;
  return Json{{"class_map", map},       {"unmapped_class", c.unmapped_class},
              {"classes", c.classes},   {"things", c.things},
              {"ignore", c.ignore},     {"names", names},
              {"pq_match_threshold", c.pq_match_threshold},
              {"pooled", c.pooled}};
}

std::uint32_t parse_id(const std::string& key) {
  try {
    std::size_t used = 0;
    const unsigned long v = std::stoul(key, &used);
    if (used != key.size() || v > 0xFFFFFFFFul) throw std::out_of_range(key);
    return static_cast<std::uint32_t>(v);
  } catch (const std::exception&) {
    throw_validation("'" + key + "' is not a class id");
  }
}

EvalConfig eval_from_json(const Json& j) {
  require_object(j, "eval config");
  reject_unknown(j, {"class_map", "unmapped_class", "classes", "things", "ignore", "names", "pq_match_threshold", "pooled"},
                 "eval config");
  EvalConfig c = EvalConfig::semantic_kitti();
  if (j.contains("class_map")) {
    require_object(j.at("class_map"), "class_map");
    c.class_map.clear();
    for (const auto& item : j.at("class_map").items()) {
      if (!item.value().is_number_unsigned()) throw_validation("class_map values must be class ids");
      c.class_map[parse_id(item.key())] = item.value().get<std::uint32_t>();
    }
  }
  get(j, "unmapped_class", c.unmapped_class);
  get(j, "classes", c.classes);
  get(j, "things", c.things);
  get(j, "ignore", c.ignore);
  c.classes = sorted_unique(c.classes);
  c.things = sorted_unique(c.things);
  c.ignore = sorted_unique(c.ignore);
  if (j.contains("names")) {
    require_object(j.at("names"), "names");
    c.names.clear();
    for (const auto& item : j.at("names").items()) {
      if (!item.value().is_string()) throw_validation("class names must be strings");
      c.names[parse_id(item.key())] = item.value().get<std::string>();
    }
  }
  get(j, "pq_match_threshold", c.pq_match_threshold);
  get(j, "pooled", c.pooled);
  return c;
}

ObjectSpec object_from_json(const Json& j) {
  require_object(j, "object");
  reject_unknown(j, {"semantic", "points", "sigma", "start", "velocity"}, "object");
  ObjectSpec o;
  get(j, "semantic", o.semantic);
  get(j, "points", o.points);
  get(j, "sigma", o.sigma);
  if (j.contains("start")) o.start = vec3_from(j, "start");
  if (j.contains("velocity")) o.velocity = vec3_from(j, "velocity");
  return o;
}

StuffRegion stuff_from_json(const Json& j) {
  require_object(j, "stuff region");
  reject_unknown(j, {"semantic", "min", "max", "points"}, "stuff region");
  StuffRegion s;
  get(j, "semantic", s.semantic);
  get(j, "points", s.points);
  s.min = vec3_from(j, "min");
  s.max = vec3_from(j, "max");
  return s;
}

SceneSpec scene_from_json(const Json& j, std::uint64_t fallback_seed) {
  require_object(j, "sequence spec");
  reject_unknown(j,
                 {"name", "seed", "num_scans", "num_objects", "objects", "stuff", "sensor_noise", "min_separation",
                  "ego_velocity", "ego_yaw_rate", "oracle_capture_sigmas", "stuff_variance"},
                 "sequence spec");
  std::uint64_t seed = fallback_seed;
  std::size_t num_scans = 20;
  std::size_t num_objects = 5;
  get(j, "seed", seed);
  get(j, "num_scans", num_scans);
  get(j, "num_objects", num_objects);
  SceneSpec s = default_scene(num_objects, num_scans, seed);
  if (j.contains("objects")) {
    if (!j.at("objects").is_array()) throw_validation("'objects' must be a list");
    s.objects.clear();
    for (const auto& o : j.at("objects")) s.objects.push_back(object_from_json(o));
  }
  if (j.contains("stuff")) {
    if (!j.at("stuff").is_array()) throw_validation("'stuff' must be a list");
    s.stuff.clear();
    for (const auto& r : j.at("stuff")) s.stuff.push_back(stuff_from_json(r));
  }
  get(j, "sensor_noise", s.sensor_noise);
  get(j, "min_separation", s.min_separation);
  if (j.contains("ego_velocity")) s.ego_velocity = vec3_from(j, "ego_velocity");
  get(j, "ego_yaw_rate", s.ego_yaw_rate);
  get(j, "oracle_capture_sigmas", s.oracle_capture_sigmas);
  get(j, "stuff_variance", s.stuff_variance);
  s.validate();
  return s;
}

}  // namespace

RunConfig RunConfig::defaults() {
  RunConfig c;
  c.pipeline.thing_classes = raw_thing_classes(EvalConfig::semantic_kitti());
  c.pipeline.volume.thing_classes = c.pipeline.thing_classes;
  return c;
}

void RunConfig::validate() const {
  pipeline.validate();
  if (input.empty()) throw_validation("run config needs an input dataset root");
  if (output.empty()) throw_validation("run config needs an output directory");
  if (threads == 0) throw_validation("threads must be at least 1");
  if (scans.end && *scans.end <= scans.begin) throw_validation("end_scan must exceed first_scan");
}

RunConfig parse_run_config(const std::string& text) { return run_from_json(parse_text(text, "run config")); }

RunConfig load_run_config(const std::filesystem::path& path) { return parse_run_config(read_text(path)); }

std::string run_config_to_json(const RunConfig& config) { return to_json(config).dump(2); }

void set_run_config_value(RunConfig& config, const std::string& key, const std::string& value) {
  Json j = to_json(config);
  set_path(j, key, value);
  config = run_from_json(j);
}

EvalConfig parse_eval_config(const std::string& text) {
  EvalConfig c = eval_from_json(parse_text(text, "eval config"));
  c.validate();
  return c;
}

EvalConfig load_eval_config(const std::filesystem::path& path) { return parse_eval_config(read_text(path)); }

std::string eval_config_to_json(const EvalConfig& config) { return to_json(config).dump(2); }

void set_eval_config_value(EvalConfig& config, const std::string& key, const std::string& value) {
  Json j = to_json(config);
  set_path(j, key, value);
  EvalConfig next = eval_from_json(j);
  next.validate();
  config = std::move(next);
}

SynthConfig parse_synth_config(const std::string& text) {
  const Json j = parse_text(text, "synth config");
  require_object(j, "synth config");
  reject_unknown(j, {"seed", "sequences"}, "synth config");
  std::uint64_t seed = 0;
  get(j, "seed", seed);
  SynthConfig out;
  if (!j.contains("sequences")) {
    out.sequences.emplace_back("00", scene_from_json(Json::object(), seed));
    return out;
  }
  if (!j.at("sequences").is_array()) throw_validation("'sequences' must be a list");
  std::set<std::string> seen;
  std::size_t index = 0;
  for (const auto& s : j.at("sequences")) {
    require_object(s, "sequence spec");
    std::string name = s.value("name", std::string());
    if (name.empty()) {
      name = std::to_string(index);
      if (name.size() < 2) name.insert(0, "0");
    }
    if (!seen.insert(name).second) throw_validation("duplicate sequence name '" + name + "'");
    out.sequences.emplace_back(name, scene_from_json(s, derive_seed(seed, index)));
    ++index;
  }
  return out;
}

SynthConfig load_synth_config(const std::filesystem::path& path) { return parse_synth_config(read_text(path)); }

std::vector<std::uint32_t> raw_thing_classes(const EvalConfig& config) {
  std::vector<std::uint32_t> out;
  if (config.class_map.empty()) return config.things;
  for (const auto& [raw, cls] : config.class_map) {
    if (config.is_thing(cls)) out.push_back(raw);
  }
  return sorted_unique(out);
}

}  // namespace p4d
