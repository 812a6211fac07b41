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

#include "p4d/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <tuple>

#include "p4d/error.hpp"

namespace p4d {

namespace {

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

bool contains(const std::vector<std::uint32_t>& sorted, std::uint32_t v) {
  return std::binary_search(sorted.begin(), sorted.end(), v);
}

double ratio(double num, double den) { return den > 0.0 ? num / den : kNaN; }

double mean_of(const std::vector<double>& v) {
  if (v.empty()) return 0.0;
  double s = 0.0;
  for (double x : v) s += x;
  return s / static_cast<double>(v.size());
}

struct SegKey {
  std::uint32_t cls;
  std::uint32_t id;
  friend auto operator<=>(const SegKey&, const SegKey&) = default;
};

struct SegMatch {
  std::uint32_t cls;
  std::uint32_t gt_id;
  std::uint32_t pred_id;
  double iou;
};

/// Segment areas and same-class intersections within one matching frame.
struct FrameSegments {
  std::map<SegKey, std::int64_t> gt_area;
  std::map<SegKey, std::int64_t> pred_area;
  std::map<std::tuple<std::uint32_t, std::uint32_t, std::uint32_t>, std::int64_t> inter;

  // Classes are mapped and gt-ignore points already removed.
  void add(const EvalConfig& cfg, std::uint32_t g_cls, std::uint32_t g_id, std::uint32_t p_cls, std::uint32_t p_id) {
    const bool g_valid = cfg.is_class(g_cls) && (!cfg.is_thing(g_cls) || g_id != 0);
    const bool p_valid = cfg.is_class(p_cls) && (!cfg.is_thing(p_cls) || p_id != 0);
    const std::uint32_t gseg = cfg.is_thing(g_cls) ? g_id : 0;
    const std::uint32_t pseg = cfg.is_thing(p_cls) ? p_id : 0;
    if (g_valid) ++gt_area[{g_cls, gseg}];
    if (p_valid) ++pred_area[{p_cls, pseg}];
    if (g_valid && p_valid && g_cls == p_cls) ++inter[{g_cls, gseg, pseg}];
  }

  void clear() {
    gt_area.clear();
    pred_area.clear();
    inter.clear();
  }

  /// Unique matches (IoU strictly above threshold ≥ 0.5) plus per-class TP/FP/FN.
  std::vector<SegMatch> match(double threshold, std::map<std::uint32_t, ClassMetrics>& per_class) const {
    std::vector<SegMatch> matches;
    std::map<std::uint32_t, std::int64_t> matched;
    for (const auto& [key, n] : inter) {
      const auto [cls, gid, pid] = key;
      const double uni = static_cast<double>(gt_area.at({cls, gid}) + pred_area.at({cls, pid}) - n);
      const double iou = static_cast<double>(n) / uni;
      if (iou > threshold) {
        matches.push_back({cls, gid, pid, iou});
        ++matched[cls];
        auto& c = per_class[cls];
        ++c.tp;
        c.iou_sum += iou;
      }
    }
    std::map<std::uint32_t, std::int64_t> gt_count;
    std::map<std::uint32_t, std::int64_t> pred_count;
    for (const auto& [k, n] : gt_area) ++gt_count[k.cls];
    for (const auto& [k, n] : pred_area) ++pred_count[k.cls];
    for (const auto& [cls, n] : gt_count) per_class[cls].fn += n - matched[cls];
    for (const auto& [cls, n] : pred_count) per_class[cls].fp += n - matched[cls];
    return matches;
  }
};

void finish_segment_metrics(ClassMetrics& c) {
  const double denom = static_cast<double>(c.tp) + 0.5 * static_cast<double>(c.fp) + 0.5 * static_cast<double>(c.fn);
  c.has_segments = c.tp + c.fp + c.fn > 0;
  if (!c.has_segments) return;
  c.pq = c.iou_sum / denom;
  c.rq = static_cast<double>(c.tp) / denom;
  c.sq = c.tp > 0 ? c.iou_sum / static_cast<double>(c.tp) : 0.0;
  c.ptq = (c.iou_sum - static_cast<double>(c.ids)) / denom;
  c.sptq = (c.iou_sum - c.ids_iou_sum) / denom;
}

}  // namespace

EvalConfig EvalConfig::semantic_kitti() {
  EvalConfig cfg;
  cfg.class_map = {{0, 0},   {1, 0},   {10, 1},  {11, 2},  {13, 5},  {15, 3},  {16, 5},  {18, 4},  {20, 5},
                   {30, 6},  {31, 7},  {32, 8},  {40, 9},  {44, 10}, {48, 11}, {49, 12}, {50, 13}, {51, 14},
                   {52, 0},  {60, 9},  {70, 15}, {71, 16}, {72, 17}, {80, 18}, {81, 19}, {99, 0},  {252, 1},
                   {253, 7}, {254, 6}, {255, 8}, {256, 5}, {257, 5}, {258, 4}, {259, 5}};
  cfg.unmapped_class = 0;
  for (std::uint32_t c = 1; c <= 19; ++c) cfg.classes.push_back(c);
  for (std::uint32_t c = 1; c <= 8; ++c) cfg.things.push_back(c);
  cfg.ignore = {0};
  cfg.names = {{1, "car"},         {2, "bicycle"},   {3, "motorcycle"},   {4, "truck"},     {5, "other-vehicle"},
               {6, "person"},      {7, "bicyclist"}, {8, "motorcyclist"}, {9, "road"},      {10, "parking"},
               {11, "sidewalk"},   {12, "other-ground"}, {13, "building"}, {14, "fence"}, {15, "vegetation"},
               {16, "trunk"},      {17, "terrain"},  {18, "pole"},        {19, "traffic-sign"}};
  return cfg;
}

std::uint32_t EvalConfig::map(std::uint32_t raw) const {
  if (class_map.empty()) return raw;
  const auto it = class_map.find(raw);
  return it == class_map.end() ? unmapped_class : it->second;
}

bool EvalConfig::is_class(std::uint32_t c) const { return contains(classes, c); }
bool EvalConfig::is_thing(std::uint32_t c) const { return contains(things, c); }
bool EvalConfig::is_ignored(std::uint32_t c) const { return contains(ignore, c); }

std::string EvalConfig::name_of(std::uint32_t c) const {
  const auto it = names.find(c);
  return it == names.end() ? "class_" + std::to_string(c) : it->second;
}

void EvalConfig::validate() const {
  for (const auto* v : {&classes, &things, &ignore}) {
    if (!std::is_sorted(v->begin(), v->end()) || std::adjacent_find(v->begin(), v->end()) != v->end()) {
      throw_validation("class, thing and ignore lists must be sorted and unique");
    }
  }
  if (classes.empty()) throw_validation("evaluation class set is empty");
  for (std::uint32_t t : things) {
    if (!is_class(t)) throw_validation("thing class " + std::to_string(t) + " is not in the class set");
  }
  for (std::uint32_t i : ignore) {
    if (is_class(i)) throw_validation("class " + std::to_string(i) + " is both evaluated and ignored");
  }
  if (!(pq_match_threshold >= 0.5 && pq_match_threshold < 1.0)) {
    throw_validation("pq_match_threshold must lie in [0.5, 1) for unique matching");
  }
}

MotsSummary mots_from_counts(std::int64_t tp, std::int64_t fp, std::int64_t fn, std::int64_t ids,
                             std::int64_t gt_segments, double soft_tp) {
  MotsSummary s;
  s.precision = ratio(static_cast<double>(tp), static_cast<double>(tp + fp));
  s.recall = ratio(static_cast<double>(tp), static_cast<double>(tp + fn));
  const double m = static_cast<double>(gt_segments);
  s.motsa = m > 0 ? 1.0 - static_cast<double>(fp + fn + ids) / m : kNaN;
  s.smotsa = m > 0 ? (soft_tp - static_cast<double>(fp + ids)) / m : kNaN;
  return s;
}

double lstq(double s_cls, double s_assoc) { return std::sqrt(s_cls * s_assoc); }

Evaluator::Evaluator(EvalConfig config) : config_(std::move(config)) { config_.validate(); }

void Evaluator::begin_sequence() {
  if (started_) ++sequence_;
  started_ = true;
  per_sequence_assoc_.emplace_back();
}

void Evaluator::add_scan(const PanopticLabels& gt, const PanopticLabels& pred) {
  if (!started_) begin_sequence();
  if (gt.size() != pred.size() || gt.semantic.size() != gt.instance.size() ||
      pred.semantic.size() != pred.instance.size()) {
    throw_validation("label stream length mismatch: gt " + std::to_string(gt.size()) + ", pred " +
                     std::to_string(pred.size()));
  }
  Assoc& seq_assoc = per_sequence_assoc_.back();
  FrameSegments frame;
  std::map<std::uint32_t, ClassMetrics> seg_counts;
  for (std::size_t i = 0; i < gt.size(); ++i) {
    const std::uint32_t g = config_.map(gt.semantic[i]);
    if (config_.is_ignored(g)) continue;
    const std::uint32_t p = config_.map(pred.semantic[i]);
    ++points_;

    if (config_.is_class(g) && g == p) {
      ++counts_[g].tp_points;
    } else {
      if (config_.is_class(g)) ++counts_[g].fn_points;
      if (config_.is_class(p)) ++counts_[p].fp_points;
    }

    const bool gt_tube = config_.is_thing(g) && gt.instance[i] != 0;
    const bool pred_tube = config_.is_thing(p) && pred.instance[i] != 0;
    const std::uint64_t gk = tube_key(gt.instance[i]);
    const std::uint64_t pk = tube_key(pred.instance[i]);
    for (Assoc* a : {&assoc_, &seq_assoc}) {
      if (gt_tube) ++a->gt_size[gk];
      if (pred_tube) ++a->pred_size[pk];
      if (gt_tube && pred_tube) ++a->tpa[{gk, pk}];
    }

    frame.add(config_, g, gt.instance[i], p, pred.instance[i]);
  }

  const auto matches = frame.match(config_.pq_match_threshold, seg_counts);
  for (const auto& [cls, c] : seg_counts) {
    auto& acc = counts_[cls];
    acc.tp += c.tp;
    acc.fp += c.fp;
    acc.fn += c.fn;
    acc.iou_sum += c.iou_sum;
  }
  for (const SegMatch& m : matches) {
    if (!config_.is_thing(m.cls)) continue;
    const std::uint64_t track = tube_key(m.gt_id);
    const auto it = last_match_.find(track);
    if (it != last_match_.end() && it->second != m.pred_id) {
      auto& acc = counts_[m.cls];
      ++acc.ids;
      acc.ids_iou_sum += m.iou;
    }
    last_match_[track] = m.pred_id;
  }
  ++scans_;
}

double Evaluator::s_assoc_of(const Assoc& a, std::vector<std::string>* warnings) const {
  if (a.gt_size.empty()) {
    if (warnings) warnings->push_back("no ground-truth thing tubes; S_assoc defined as 1.0");
    return 1.0;
  }
  // Ascending (gt, pred) order, shared with the brute-force reference.
  std::map<std::uint64_t, double> per_tube;
  for (const auto& [pair, tpa] : a.tpa) {
    const double g = static_cast<double>(a.gt_size.at(pair.first));
    const double p = static_cast<double>(a.pred_size.at(pair.second));
    const double t = static_cast<double>(tpa);
    per_tube[pair.first] += t * (t / (g + p - t));
  }
  double total = 0.0;
  for (const auto& [gk, size] : a.gt_size) {
    const auto it = per_tube.find(gk);
    if (it != per_tube.end()) total += it->second / static_cast<double>(size);
  }
  return total / static_cast<double>(a.gt_size.size());
}

MetricReport Evaluator::report() const {
  MetricReport r;
  r.sequences = per_sequence_assoc_.size();
  r.scans = scans_;
  r.points = points_;
  r.gt_tubes = assoc_.gt_size.size();
  r.pred_tubes = assoc_.pred_size.size();

  std::vector<double> all_iou, stuff_iou, thing_iou, pq_all, pq_th, pq_st, sq_all, rq_all, dagger, ptq_all, sptq_all;
  double thing_soft_tp = 0.0;
  for (std::uint32_t cls : config_.classes) {
    ClassMetrics c;
    c.id = cls;
    c.name = config_.name_of(cls);
    c.thing = config_.is_thing(cls);
    if (const auto it = counts_.find(cls); it != counts_.end()) {
      const ClassCounts& k = it->second;
      c.tp_points = k.tp_points;
      c.fp_points = k.fp_points;
      c.fn_points = k.fn_points;
      c.tp = k.tp;
      c.fp = k.fp;
      c.fn = k.fn;
      c.ids = k.ids;
      c.iou_sum = k.iou_sum;
      c.ids_iou_sum = k.ids_iou_sum;
    }
    const std::int64_t uni = c.tp_points + c.fp_points + c.fn_points;
    c.present = uni > 0;
    c.iou = c.present ? static_cast<double>(c.tp_points) / static_cast<double>(uni) : kNaN;
    if (c.present) {
      all_iou.push_back(c.iou);
      (c.thing ? thing_iou : stuff_iou).push_back(c.iou);
    }
    finish_segment_metrics(c);
    if (c.has_segments) {
      pq_all.push_back(c.pq);
      sq_all.push_back(c.sq);
      rq_all.push_back(c.rq);
      (c.thing ? pq_th : pq_st).push_back(c.pq);
      dagger.push_back(c.thing ? c.pq : c.iou);
      ptq_all.push_back(c.ptq);
      sptq_all.push_back(c.sptq);
    }
    if (c.thing) {
      const MotsSummary m = mots_from_counts(c.tp, c.fp, c.fn, c.ids, c.tp + c.fn, c.iou_sum);
      c.precision = m.precision;
      c.recall = m.recall;
      c.motsa = m.motsa;
      c.smotsa = m.smotsa;
      r.tp += c.tp;
      r.fp += c.fp;
      r.fn += c.fn;
      r.ids += c.ids;
      thing_soft_tp += c.iou_sum;
    } else {
      c.precision = c.recall = c.motsa = c.smotsa = kNaN;
    }
    r.classes.push_back(std::move(c));
  }
  r.s_cls = mean_of(all_iou);
  r.miou = r.s_cls;
  r.iou_st = mean_of(stuff_iou);
  r.iou_th = mean_of(thing_iou);
  r.pq = mean_of(pq_all);
  r.sq = mean_of(sq_all);
  r.rq = mean_of(rq_all);
  r.pq_th = mean_of(pq_th);
  r.pq_st = mean_of(pq_st);
  r.pq_dagger = mean_of(dagger);
  r.ptq = mean_of(ptq_all);
  r.sptq = mean_of(sptq_all);
  r.gt_segments = r.tp + r.fn;
  const MotsSummary total = mots_from_counts(r.tp, r.fp, r.fn, r.ids, r.gt_segments, thing_soft_tp);
  r.precision = total.precision;
  r.recall = total.recall;
  r.motsa = total.motsa;
  r.smotsa = total.smotsa;

  if (config_.pooled || per_sequence_assoc_.size() <= 1) {
    r.s_assoc = s_assoc_of(assoc_, &r.warnings);
  } else {
    std::vector<double> per_seq;
    for (const Assoc& a : per_sequence_assoc_) per_seq.push_back(s_assoc_of(a, &r.warnings));
    r.s_assoc = mean_of(per_seq);
  }
  r.lstq = lstq(r.s_cls, r.s_assoc);
  return r;
}

MetricReport evaluate(std::span<const LabelSequence> sequences, const EvalConfig& config) {
  Evaluator ev(config);
  for (const LabelSequence& seq : sequences) {
    ev.begin_sequence();
    for (const ScanPair& s : seq) ev.add_scan(s.gt, s.pred);
  }
  return ev.report();
}

ClassScores s_cls(std::span<const LabelSequence> sequences, const EvalConfig& config) {
  const MetricReport r = evaluate(sequences, config);
  ClassScores out;
  for (const ClassMetrics& c : r.classes) {
    if (c.present) out.iou[c.id] = c.iou;
  }
  out.mean = r.s_cls;
  out.mean_stuff = r.iou_st;
  out.mean_things = r.iou_th;
  return out;
}

double s_assoc(std::span<const LabelSequence> sequences, const EvalConfig& config) {
  return evaluate(sequences, config).s_assoc;
}

double brute_force_s_assoc(std::span<const LabelSequence> sequences, const EvalConfig& config) {
  using PointId = std::tuple<std::size_t, std::size_t, std::size_t>;  // sequence, scan, point
  using TubeId = std::pair<std::size_t, std::uint32_t>;               // sequence, id
  std::map<TubeId, std::set<PointId>> gt_tubes;
  std::map<TubeId, std::set<PointId>> pred_tubes;
  for (std::size_t q = 0; q < sequences.size(); ++q) {
    for (std::size_t s = 0; s < sequences[q].size(); ++s) {
      const ScanPair& sp = sequences[q][s];
      for (std::size_t i = 0; i < sp.gt.size(); ++i) {
        const std::uint32_t g = config.map(sp.gt.semantic[i]);
        if (config.is_ignored(g)) continue;
        const std::uint32_t p = config.map(sp.pred.semantic[i]);
        if (config.is_thing(g) && sp.gt.instance[i] != 0) gt_tubes[{q, sp.gt.instance[i]}].insert({q, s, i});
        if (config.is_thing(p) && sp.pred.instance[i] != 0) pred_tubes[{q, sp.pred.instance[i]}].insert({q, s, i});
      }
    }
  }
  if (gt_tubes.empty()) return 1.0;
  double total = 0.0;
  for (const auto& [tid, gt] : gt_tubes) {
    double tube = 0.0;
    for (const auto& [sid, pr] : pred_tubes) {
      std::vector<PointId> common;
      std::set_intersection(gt.begin(), gt.end(), pr.begin(), pr.end(), std::back_inserter(common));
      if (common.empty()) continue;
      std::set<PointId> uni = gt;
      uni.insert(pr.begin(), pr.end());
      const double tpa = static_cast<double>(common.size());
      tube += tpa * (tpa / static_cast<double>(uni.size()));
    }
    total += tube / static_cast<double>(gt.size());
  }
  return total / static_cast<double>(gt_tubes.size());
}

PanopticScores panoptic_quality(std::span<const LabelSequence> sequences, const EvalConfig& config, bool per_scan) {
  config.validate();
  PanopticScores out;
  for (std::uint32_t c : config.classes) {
    out.per_class[c].id = c;
    out.per_class[c].name = config.name_of(c);
    out.per_class[c].thing = config.is_thing(c);
  }
  ClassScores point_iou;
  if (!per_scan) point_iou = s_cls(sequences, config);

  if (per_scan) {
    const MetricReport r = evaluate(sequences, config);
    for (const ClassMetrics& c : r.classes) out.per_class[c.id] = c;
    out.pq = r.pq;
    out.sq = r.sq;
    out.rq = r.rq;
    out.pq_dagger = r.pq_dagger;
    return out;
  }

  for (const LabelSequence& seq : sequences) {
    FrameSegments frame;
    for (const ScanPair& sp : seq) {
      if (sp.gt.size() != sp.pred.size()) throw_validation("label stream length mismatch");
      for (std::size_t i = 0; i < sp.gt.size(); ++i) {
        const std::uint32_t g = config.map(sp.gt.semantic[i]);
        if (config.is_ignored(g)) continue;
        frame.add(config, g, sp.gt.instance[i], config.map(sp.pred.semantic[i]), sp.pred.instance[i]);
      }
    }
    frame.match(config.pq_match_threshold, out.per_class);
  }
  std::vector<double> pq, sq, rq, dagger;
  for (auto& [cls, c] : out.per_class) {
    finish_segment_metrics(c);
    if (!c.has_segments) continue;
    pq.push_back(c.pq);
    sq.push_back(c.sq);
    rq.push_back(c.rq);
    const auto it = point_iou.iou.find(cls);
    dagger.push_back(c.thing ? c.pq : (it == point_iou.iou.end() ? 0.0 : it->second));
  }
  out.pq = mean_of(pq);
  out.sq = mean_of(sq);
  out.rq = mean_of(rq);
  out.pq_dagger = mean_of(dagger);
  return out;
}

MotsScores mots_metrics(std::span<const LabelSequence> sequences, const EvalConfig& config) {
  const MetricReport r = evaluate(sequences, config);
  MotsScores out;
  for (const ClassMetrics& c : r.classes) {
    if (c.thing) out.per_class[c.id] = c;
  }
  out.tp = r.tp;
  out.fp = r.fp;
  out.fn = r.fn;
  out.ids = r.ids;
  out.total = {r.precision, r.recall, r.motsa, r.smotsa};
  return out;
}

PtqScores ptq_metrics(std::span<const LabelSequence> sequences, const EvalConfig& config) {
  const MetricReport r = evaluate(sequences, config);
  PtqScores out;
  for (const ClassMetrics& c : r.classes) out.per_class[c.id] = c;
  out.ptq = r.ptq;
  out.sptq = r.sptq;
  return out;
}

}  // namespace p4d
