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
#include <filesystem>
#include <string>
#include <utility>
#include <vector>

#include "p4d/kitti_io.hpp"
#include "p4d/metrics.hpp"
#include "p4d/synth.hpp"
#include "p4d/tracking.hpp"

namespace p4d {

struct RunConfig {
  PipelineConfig pipeline;
  std::filesystem::path input;   // dataset root holding sequences/
  std::filesystem::path output;  // predictions go to <output>/sequences/<seq>/predictions
  std::vector<std::string> sequences;  // empty = every sequence under input
  ScanRange scans;
  std::size_t threads = 1;

  /// Defaults with the SemanticKITTI raw thing ids.
  static RunConfig defaults();
  void validate() const;
};

struct SynthConfig {
  std::vector<std::pair<std::string, SceneSpec>> sequences;
};

// Config files are JSON. Keys missing from a file keep their defaults;
// unknown keys are rejected.
RunConfig parse_run_config(const std::string& text);
RunConfig load_run_config(const std::filesystem::path& path);
std::string run_config_to_json(const RunConfig& config);
/// Overrides one setting. `key` is a dotted path ("clustering.min_points");
/// `value` is JSON, or a bare string.
void set_run_config_value(RunConfig& config, const std::string& key, const std::string& value);

EvalConfig parse_eval_config(const std::string& text);
EvalConfig load_eval_config(const std::filesystem::path& path);
std::string eval_config_to_json(const EvalConfig& config);
void set_eval_config_value(EvalConfig& config, const std::string& key, const std::string& value);

SynthConfig parse_synth_config(const std::string& text);
SynthConfig load_synth_config(const std::filesystem::path& path);

/// Raw semantic ids whose mapped class is a thing.
std::vector<std::uint32_t> raw_thing_classes(const EvalConfig& config);

}  // namespace p4d
