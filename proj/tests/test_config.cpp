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

#include <fstream>

#include "p4d/config.hpp"
#include "p4d/error.hpp"
#include "support.hpp"

using namespace p4d;

TEST_CASE("empty run config gives the defaults") {
  const RunConfig c = parse_run_config("{}");
  const RunConfig d = RunConfig::defaults();
  CHECK(run_config_to_json(c) == run_config_to_json(d));
  CHECK(c.pipeline.volume.strategy == SamplingStrategy::kImportance);
  CHECK(c.pipeline.volume.tau == 4);
  CHECK(c.pipeline.cluster.min_points == 25);
  CHECK(c.pipeline.cluster.assign_prob == 0.5);
  CHECK(c.pipeline.iou_threshold == 0.5);
  CHECK(std::is_sorted(c.pipeline.thing_classes.begin(), c.pipeline.thing_classes.end()));
  CHECK(std::binary_search(c.pipeline.thing_classes.begin(), c.pipeline.thing_classes.end(), 10u));
}

TEST_CASE("run config fields parse and round-trip") {
  const RunConfig c = parse_run_config(R"({
    "input": "/data", "output": "/out", "sequences": ["08"], "first_scan": 3, "end_scan": 9,
    "threads": 2, "seed": 42, "strategy": "decay", "tau": 3, "fraction": 0.2,
    "clustering": {"feature_mode": "emb+xyzt", "min_points": 10}
  })");
  CHECK(c.input == "/data");
  CHECK(c.sequences == std::vector<std::string>{"08"});
  CHECK(c.scans.begin == 3);
  CHECK(c.scans.end == 9);
  CHECK(c.pipeline.volume.strategy == SamplingStrategy::kDecay);
  CHECK(c.pipeline.volume.fraction == 0.2);
  CHECK(c.pipeline.cluster.feature_mode == FeatureMode::kEmbXyzt);
  CHECK(c.pipeline.cluster.min_points == 10);
  CHECK(c.pipeline.cluster.seed_stop == 0.1);  // untouched
  CHECK(c.pipeline.seed == 42);
  CHECK(run_config_to_json(parse_run_config(run_config_to_json(c))) == run_config_to_json(c));
}

TEST_CASE("unknown keys and bad values are rejected") {
  CHECK_THROWS_AS(parse_run_config(R"({"tua": 4})"), Error);
  CHECK_THROWS_AS(parse_run_config(R"({"clustering": {"minpoints": 4}})"), Error);
  CHECK_THROWS_AS(parse_run_config(R"({"strategy": "random"})"), Error);
  CHECK_THROWS_AS(parse_run_config(R"({"tau": "four"})"), Error);
  CHECK_THROWS_AS(parse_run_config("[1, 2]"), Error);
  CHECK_THROWS_AS(parse_run_config("{"), Error);
  CHECK_THROWS_AS(parse_eval_config(R"({"classes": [1], "thingz": []})"), Error);
  CHECK_THROWS_AS(parse_synth_config(R"({"sequences": [{"objekts": 1}]})"), Error);
  try {
    parse_run_config(R"({"tua": 4})");
  } catch (const Error& e) {
    CHECK(e.kind() == ErrorKind::kValidation);
    CHECK(std::string(e.what()).find("tua") != std::string::npos);
  }
}

TEST_CASE("dotted overrides") {
  RunConfig c = RunConfig::defaults();
  set_run_config_value(c, "clustering.min_points", "7");
  set_run_config_value(c, "strategy", "stride");
  set_run_config_value(c, "tau", "2");
  set_run_config_value(c, "output", "/tmp/x");
  CHECK(c.pipeline.cluster.min_points == 7);
  CHECK(c.pipeline.volume.strategy == SamplingStrategy::kStride);
  CHECK(c.pipeline.volume.tau == 2);
  CHECK(c.output == "/tmp/x");
  CHECK_THROWS_AS(set_run_config_value(c, "clustering.nope", "1"), Error);
  CHECK_THROWS_AS(set_run_config_value(c, "tau", "-1"), Error);

  EvalConfig e = EvalConfig::semantic_kitti();
  set_eval_config_value(e, "pq_match_threshold", "0.6");
  CHECK(e.pq_match_threshold == 0.6);
  CHECK_THROWS_AS(set_eval_config_value(e, "pq_match_threshold", "0.2"), Error);
}

TEST_CASE("eval config defaults and round trip") {
  const EvalConfig d = parse_eval_config("{}");
  const EvalConfig k = EvalConfig::semantic_kitti();
  CHECK(d.classes == k.classes);
  CHECK(d.things == k.things);
  CHECK(d.class_map == k.class_map);
  CHECK(eval_config_to_json(parse_eval_config(eval_config_to_json(k))) == eval_config_to_json(k));

  const EvalConfig toy = parse_eval_config(R"({"class_map": {}, "classes": [1, 2, 3], "things": [1],
                                               "ignore": [0], "names": {"1": "car"}})");
  CHECK(toy.map(2) == 2);
  CHECK(toy.is_thing(1));
  CHECK(toy.name_of(1) == "car");
  const auto raw = raw_thing_classes(k);
  CHECK(std::binary_search(raw.begin(), raw.end(), 252u));
  CHECK_FALSE(std::binary_search(raw.begin(), raw.end(), 40u));
}

TEST_CASE("synth config") {
  const SynthConfig one = parse_synth_config("{}");
  REQUIRE(one.sequences.size() == 1);
  CHECK(one.sequences[0].first == "00");
  CHECK(one.sequences[0].second.objects.size() == 5);

  const SynthConfig two = parse_synth_config(R"({"seed": 3, "sequences": [
      {"name": "a", "num_scans": 4, "num_objects": 2},
      {"name": "b", "objects": [{"semantic": 30, "points": 40, "start": [5, 0, 0]}], "stuff": []}]})");
  REQUIRE(two.sequences.size() == 2);
  CHECK(two.sequences[0].second.num_scans == 4);
  CHECK(two.sequences[0].second.objects.size() == 2);
  CHECK(two.sequences[1].second.objects.at(0).semantic == 30);
  CHECK(two.sequences[1].second.objects.at(0).start == Vec3{5, 0, 0});
  CHECK(two.sequences[1].second.stuff.empty());
  CHECK(two.sequences[0].second.seed != two.sequences[1].second.seed);
}

TEST_CASE("config files load from disk") {
  p4d::testing::TempDir dir("config");
  std::ofstream(dir / "run.json") << R"({"tau": 2})";
  CHECK(load_run_config(dir / "run.json").pipeline.volume.tau == 2);
  CHECK_THROWS_AS(load_run_config(dir / "missing.json"), Error);
  try {
    load_run_config(dir / "missing.json");
  } catch (const Error& e) {
    CHECK(e.kind() == ErrorKind::kIo);
  }
}
