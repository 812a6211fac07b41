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
#include <vector>

#include "p4d/config.hpp"
#include "p4d/metrics.hpp"
#include "p4d/tracking.hpp"

namespace p4d {

inline constexpr const char* kPredictionDir = "predictions";

/// Sequence names under <root>/sequences, sorted.
std::vector<std::string> list_sequences(const std::filesystem::path& root);

struct SequenceRunSummary {
  std::string name;
  std::filesystem::path prediction_dir;
  PipelineStats stats;
};

/// Runs the online pipeline on every selected sequence, `threads` at a time.
std::vector<SequenceRunSummary> run_dataset(const RunConfig& config);

/// Pairs <gt>/sequences/S/labels with <pred>/sequences/S/predictions.
MetricReport evaluate_dataset(const std::filesystem::path& gt_root, const std::filesystem::path& pred_root,
                              std::vector<std::string> sequences, const EvalConfig& config,
                              std::size_t threads = 1);

/// Writes each synthetic sequence to <root>/sequences/<name>.
std::vector<std::filesystem::path> generate_dataset(const SynthConfig& config, const std::filesystem::path& root);

/// Human-readable summary of a dataset root, sequence directory or single file.
std::string inspect_path(const std::filesystem::path& path);

}  // namespace p4d
