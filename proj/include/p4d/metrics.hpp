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
#include <map>
#include <set>
#include <span>
#include <string>
#include <unordered_map>
#include <vector>

#include "p4d/kitti_io.hpp"

namespace p4d {

/// Class bookkeeping for evaluation. Raw label ids are mapped through
/// `class_map` first; every other field speaks mapped (evaluation) ids.
struct EvalConfig {
  std::map<std::uint32_t, std::uint32_t> class_map;  // empty = identity
  std::uint32_t unmapped_class = 0;                   // target for raw ids missing from a non-empty map
  std::vector<std::uint32_t> classes;                 // C, sorted
  std::vector<std::uint32_t> things;                  // ⊆ C, sorted
  std::vector<std::uint32_t> ignore;                  // disjoint from C, sorted
  std::map<std::uint32_t, std::string> names;
  double pq_match_threshold = 0.5;
  /// Pool all sequences into one average (true) or average per-sequence results.
  bool pooled = true;

  /// The 19-class SemanticKITTI panoptic setup (things 1..8, ignore 0).
  static EvalConfig semantic_kitti();

  std::uint32_t map(std::uint32_t raw) const;
  bool is_class(std::uint32_t c) const;
  bool is_thing(std::uint32_t c) const;
  bool is_ignored(std::uint32_t c) const;
  std::string name_of(std::uint32_t c) const;
  void validate() const;
};

struct ScanPair {
  PanopticLabels gt;
  PanopticLabels pred;
};

using LabelSequence = std::vector<ScanPair>;

struct ClassMetrics {
  std::uint32_t id = 0;
  std::string name;
  bool thing = false;
  // Point-level (S_cls / mIoU).
  std::int64_t tp_points = 0;
  std::int64_t fp_points = 0;
  std::int64_t fn_points = 0;
  bool present = false;  // any gt or pred point of this class
  double iou = 0.0;
  // Segment-level, per-scan matching.
  std::int64_t tp = 0;
  std::int64_t fp = 0;
  std::int64_t fn = 0;
  std::int64_t ids = 0;
  double iou_sum = 0.0;
  double ids_iou_sum = 0.0;
  bool has_segments = false;
  double pq = 0.0;
  double sq = 0.0;
  double rq = 0.0;
  double ptq = 0.0;
  double sptq = 0.0;
  // Thing classes only; NaN when the class has no gt segment.
  double precision = 0.0;
  double recall = 0.0;
  double motsa = 0.0;
  double smotsa = 0.0;
};

struct MetricReport {
  double s_cls = 0.0;
  double s_assoc = 0.0;
  double lstq = 0.0;
  double miou = 0.0;
  double iou_st = 0.0;
  double iou_th = 0.0;
  double pq = 0.0;
  double sq = 0.0;
  double rq = 0.0;
  double pq_dagger = 0.0;
  double pq_th = 0.0;
  double pq_st = 0.0;
  double ptq = 0.0;
  double sptq = 0.0;
  // Pooled over thing classes.
  std::int64_t tp = 0;
  std::int64_t fp = 0;
  std::int64_t fn = 0;
  std::int64_t ids = 0;
  std::int64_t gt_segments = 0;
  double precision = 0.0;
  double recall = 0.0;
  double motsa = 0.0;
  double smotsa = 0.0;

  std::size_t sequences = 0;
  std::size_t scans = 0;
  std::size_t points = 0;
  std::size_t gt_tubes = 0;
  std::size_t pred_tubes = 0;
  std::vector<ClassMetrics> classes;
  std::vector<std::string> warnings;
};

/// MOTSA-family numbers from raw counts.
struct MotsSummary {
  double precision = 0.0;
  double recall = 0.0;
  double motsa = 0.0;
  double smotsa = 0.0;
};

/// `gt_segments` = TP + FN. sMOTSA uses `soft_tp` (Σ TP IoU).
MotsSummary mots_from_counts(std::int64_t tp, std::int64_t fp, std::int64_t fn, std::int64_t ids,
                             std::int64_t gt_segments, double soft_tp);

double lstq(double s_cls, double s_assoc);

/// Streaming accumulator for every metric. Scans are fed in temporal order
/// per sequence; ids never cross sequence boundaries.
class Evaluator {
 public:
  explicit Evaluator(EvalConfig config);

  void begin_sequence();
  void add_scan(const PanopticLabels& gt, const PanopticLabels& pred);
  MetricReport report() const;

 private:
  struct SegmentKey {
    std::uint32_t cls;
    std::uint32_t id;
    friend auto operator<=>(const SegmentKey&, const SegmentKey&) = default;
  };
  struct ClassCounts {
    std::int64_t tp_points = 0, fp_points = 0, fn_points = 0;
    std::int64_t tp = 0, fp = 0, fn = 0, ids = 0;
    double iou_sum = 0.0, ids_iou_sum = 0.0;
  };
  struct Assoc {
    std::map<std::uint64_t, std::int64_t> gt_size;
    std::map<std::uint64_t, std::int64_t> pred_size;
    std::map<std::pair<std::uint64_t, std::uint64_t>, std::int64_t> tpa;
  };

  std::uint64_t tube_key(std::uint32_t id) const { return (static_cast<std::uint64_t>(sequence_) << 32) | id; }
  double s_assoc_of(const Assoc& a, std::vector<std::string>* warnings) const;

  EvalConfig config_;
  std::uint32_t sequence_ = 0;
  bool started_ = false;
  std::map<std::uint32_t, ClassCounts> counts_;
  Assoc assoc_;
  std::vector<Assoc> per_sequence_assoc_;
  std::map<std::uint64_t, std::uint32_t> last_match_;  // gt track -> last matched pred id
  std::size_t scans_ = 0;
  std::size_t points_ = 0;
};

struct ClassScores {
  std::map<std::uint32_t, double> iou;  // classes present in gt or pred
  double mean = 0.0;
  double mean_stuff = 0.0;
  double mean_things = 0.0;
};

ClassScores s_cls(std::span<const LabelSequence> sequences, const EvalConfig& config);
double s_assoc(std::span<const LabelSequence> sequences, const EvalConfig& config);
/// Set-materializing reference for s_assoc (meant for ≤ 10⁴ points).
double brute_force_s_assoc(std::span<const LabelSequence> sequences, const EvalConfig& config);

struct PanopticScores {
  std::map<std::uint32_t, ClassMetrics> per_class;
  double pq = 0.0;
  double sq = 0.0;
  double rq = 0.0;
  double pq_dagger = 0.0;
};

/// per_scan = true matches segments scan by scan; false treats each
/// sequence's thing tubes and stuff regions as single 4D segments.
PanopticScores panoptic_quality(std::span<const LabelSequence> sequences, const EvalConfig& config, bool per_scan);

struct MotsScores {
  std::map<std::uint32_t, ClassMetrics> per_class;  // thing classes
  MotsSummary total;
  std::int64_t tp = 0, fp = 0, fn = 0, ids = 0;
};

MotsScores mots_metrics(std::span<const LabelSequence> sequences, const EvalConfig& config);

struct PtqScores {
  std::map<std::uint32_t, ClassMetrics> per_class;
  double ptq = 0.0;
  double sptq = 0.0;
};

PtqScores ptq_metrics(std::span<const LabelSequence> sequences, const EvalConfig& config);

MetricReport evaluate(std::span<const LabelSequence> sequences, const EvalConfig& config);

/// Flat "key value" lines, one per metric and per-class count.
struct ReportEntry {
  std::string key;
  double value = 0.0;
  bool count = false;
};

/// Every scalar of the report in text-table order, at full precision.
std::vector<ReportEntry> report_entries(const MetricReport& report);

std::string format_report_text(const MetricReport& report);
/// One JSON document with every aggregate and per-class count.
std::string format_report_json(const MetricReport& report);

}  // namespace p4d
