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

#include <cmath>
#include <map>

#include <json.hpp>

#include "metrics_fixtures.hpp"
#include "p4d/error.hpp"
#include "p4d/metrics.hpp"

using namespace p4d;
using p4d::testing::labels;
using p4d::testing::toy_config;

namespace {

LabelSequence one_scan(PanopticLabels gt, PanopticLabels pred) { return {ScanPair{std::move(gt), std::move(pred)}}; }

double assoc(const std::vector<LabelSequence>& seqs, const EvalConfig& cfg = toy_config()) {
  return s_assoc(seqs, cfg);
}

// Applies f to every predicted label of every scan.
template <typename F>
std::vector<LabelSequence> map_pred(std::vector<LabelSequence> seqs, F f) {
  for (auto& seq : seqs) {
    for (auto& pair : seq) {
      for (std::size_t i = 0; i < pair.pred.size(); ++i) f(pair.pred.semantic[i], pair.pred.instance[i]);
    }
  }
  return seqs;
}

}  // namespace

TEST_CASE("S_cls examples") {
  const auto gt = labels({1, 1, 3, 4}, {1, 1, 0, 0});
  CHECK(s_cls(std::vector<LabelSequence>{one_scan(gt, gt)}, toy_config()).mean == 1.0);
  const auto all_a = labels({3, 3, 3}, {0, 0, 0});
  const auto all_b = labels({4, 4, 4}, {0, 0, 0});
  CHECK(s_cls(std::vector<LabelSequence>{one_scan(all_b, all_a)}, toy_config()).mean == 0.0);

  // Class 3: gt at points 0..4, predicted at 0, 1, 2 and 5 -> TP 3, FP 1, FN 2.
  const auto g = labels({3, 3, 3, 3, 3, 4}, {0, 0, 0, 0, 0, 0});
  const auto p = labels({3, 3, 3, 4, 4, 3}, {0, 0, 0, 0, 0, 0});
  const ClassScores s = s_cls(std::vector<LabelSequence>{one_scan(g, p)}, toy_config());
  CHECK(s.iou.at(3) == 0.5);
  CHECK(s.iou.at(4) == 0.0);
  CHECK(s.iou.size() == 2);  // classes 1 and 2 appear nowhere
  CHECK(s.mean == 0.25);
}

TEST_CASE("ignored gt points are excluded entirely") {
  const auto g = labels({0, 0, 3, 3}, {0, 0, 0, 0});
  const auto p = labels({4, 1, 3, 3}, {0, 5, 0, 0});
  const MetricReport r = evaluate(std::vector<LabelSequence>{one_scan(g, p)}, toy_config());
  CHECK(r.s_cls == 1.0);
  CHECK(r.points == 2);
  CHECK(r.pred_tubes == 0);
}

TEST_CASE("S_assoc examples") {
  const std::size_t L = 7;
  std::vector<std::uint32_t> sem(2 * L, 1), gt_ids(2 * L, 4), halves(2 * L, 1);
  for (std::size_t i = L; i < 2 * L; ++i) halves[i] = 2;
  CHECK(assoc({one_scan(labels(sem, gt_ids), labels(sem, gt_ids))}) == 1.0);
  CHECK(assoc({one_scan(labels(sem, gt_ids), labels(sem, halves))}) == 0.5);
  // Halves spread over two scans give the same tube score.
  LabelSequence two = {ScanPair{labels(std::vector<std::uint32_t>(L, 1), std::vector<std::uint32_t>(L, 4)),
                                labels(std::vector<std::uint32_t>(L, 1), std::vector<std::uint32_t>(L, 8))},
                       ScanPair{labels(std::vector<std::uint32_t>(L, 1), std::vector<std::uint32_t>(L, 4)),
                                labels(std::vector<std::uint32_t>(L, 1), std::vector<std::uint32_t>(L, 9))}};
  CHECK(assoc({two}) == 0.5);

  const auto g = labels({1, 1, 2, 2}, {1, 1, 2, 2});
  const auto p = labels({1, 1, 2, 2}, {3, 3, 0, 0});
  CHECK(assoc({one_scan(g, p)}) == 0.5);
  CHECK(assoc({one_scan(g, labels({1, 1, 2, 2}, {0, 0, 0, 0}))}) == 0.0);
}

TEST_CASE("S_assoc formula on an asymmetric overlap") {
  // gt tube 1 has 4 points; pred 7 covers 3 of them plus 2 outside.
  const auto g = labels({1, 1, 1, 1, 3, 3}, {1, 1, 1, 1, 0, 0});
  const auto p = labels({1, 1, 1, 3, 1, 1}, {7, 7, 7, 0, 7, 7});
  const double tpa = 3, gt = 4, pr = 5;
  CHECK(assoc({one_scan(g, p)}) == doctest::Approx(tpa * (tpa / (gt + pr - tpa)) / gt).epsilon(1e-15));
}

TEST_CASE("no gt tubes defines S_assoc as 1 with a warning") {
  const auto g = labels({3, 3}, {0, 0});
  const MetricReport r = evaluate(std::vector<LabelSequence>{one_scan(g, g)}, toy_config());
  CHECK(r.s_assoc == 1.0);
  REQUIRE(r.warnings.size() == 1);
  CHECK(r.warnings[0].find("no ground-truth thing tubes") != std::string::npos);
}

TEST_CASE("tubes are namespaced per sequence") {
  const auto g = labels({1, 1}, {1, 1});
  std::vector<LabelSequence> seqs = {one_scan(g, labels({1, 1}, {1, 1})), one_scan(g, labels({1, 1}, {2, 2}))};
  CHECK(assoc(seqs) == 1.0);
  const MetricReport r = evaluate(seqs, toy_config());
  CHECK(r.gt_tubes == 2);
  CHECK(r.sequences == 2);
}

TEST_CASE("pooled and per-sequence aggregation") {
  const auto g1 = labels({1, 1, 1, 1}, {1, 1, 2, 2});
  const auto g2 = labels({1, 1}, {1, 1});
  std::vector<LabelSequence> seqs = {one_scan(g1, labels({1, 1, 1, 1}, {1, 1, 0, 0})), one_scan(g2, g2)};
  EvalConfig cfg = toy_config();
  CHECK(s_assoc(seqs, cfg) == doctest::Approx(2.0 / 3.0));
  cfg.pooled = false;
  CHECK(s_assoc(seqs, cfg) == doctest::Approx(0.75));
}

TEST_CASE("LSTQ combiner") {
  CHECK(std::abs(lstq(0.6046, 0.6511) - 0.6274) <= 0.0005);
  CHECK(std::abs(lstq(0.6095, 0.5879) - 0.5986) <= 0.0005);
  CHECK(lstq(0.8, 0.0) == 0.0);
  CHECK(lstq(0.49, 0.64) == doctest::Approx(0.56).epsilon(1e-15));
}

TEST_CASE("PQ examples") {
  const auto g = labels({1, 1, 1, 3, 3}, {1, 1, 1, 0, 0});
  auto pq = panoptic_quality(std::vector<LabelSequence>{one_scan(g, g)}, toy_config(), true);
  CHECK(pq.pq == 1.0);
  CHECK(pq.sq == 1.0);
  CHECK(pq.rq == 1.0);

  // gt segment of 5, pred of 4 sharing 3 -> IoU 3/6 = 0.5 exactly: unmatched.
  const auto g5 = labels({1, 1, 1, 1, 1, 3}, {1, 1, 1, 1, 1, 0});
  const auto p_half = labels({1, 1, 1, 3, 3, 1}, {2, 2, 2, 0, 0, 2});
  pq = panoptic_quality(std::vector<LabelSequence>{one_scan(g5, p_half)}, toy_config(), true);
  CHECK(pq.per_class.at(1).tp == 0);
  CHECK(pq.per_class.at(1).fp == 1);
  CHECK(pq.per_class.at(1).fn == 1);
  CHECK(pq.per_class.at(1).pq == 0.0);

  // Pred covering 3 of 5 with no extra points -> IoU 0.6.
  const auto p_06 = labels({1, 1, 1, 3, 3, 3}, {2, 2, 2, 0, 0, 0});
  pq = panoptic_quality(std::vector<LabelSequence>{one_scan(g5, p_06)}, toy_config(), true);
  const ClassMetrics& car = pq.per_class.at(1);
  CHECK(car.tp == 1);
  CHECK(car.pq == doctest::Approx(0.6).epsilon(1e-15));
  CHECK(car.rq == 1.0);
  CHECK(car.sq == doctest::Approx(0.6).epsilon(1e-15));
}

TEST_CASE("PQ dagger uses class IoU for stuff") {
  // Road: gt 4 points, pred 3 of them plus 1 extra -> stuff IoU 3/5 (matched, PQ 0.6).
  // Vegetation: gt 2, pred 1 of them -> IoU 0.5, unmatched so PQ 0 but IoU 0.5.
  const auto g = labels({3, 3, 3, 3, 4, 4, 1}, {0, 0, 0, 0, 0, 0, 1});
  const auto p = labels({3, 3, 3, 4, 4, 3, 1}, {0, 0, 0, 0, 0, 0, 1});
  const auto pq = panoptic_quality(std::vector<LabelSequence>{one_scan(g, p)}, toy_config(), true);
  CHECK(pq.per_class.at(3).pq == doctest::Approx(0.6));
  CHECK(pq.per_class.at(4).pq == 0.0);
  const double road_iou = 3.0 / 5.0, veg_iou = 1.0 / 3.0;
  CHECK(pq.pq == doctest::Approx((1.0 + 0.6 + 0.0) / 3.0));
  CHECK(pq.pq_dagger == doctest::Approx((1.0 + road_iou + veg_iou) / 3.0));
}

TEST_CASE("MOTSA arithmetic from published car and motorcycle counts") {
  const MotsSummary car = mots_from_counts(27553, 687, 1702, 1204, 29255, 0.0);
  CHECK(std::abs(car.motsa - 0.88) <= 0.005);
  CHECK(std::abs(car.precision - 0.98) <= 0.005);
  CHECK(std::abs(car.recall - 0.94) <= 0.005);
  const MotsSummary moto = mots_from_counts(231, 747, 24, 9, 255, 0.0);
  CHECK(std::abs(moto.motsa - (-2.06)) <= 0.005);
  CHECK(moto.motsa == doctest::Approx(1.0 - 780.0 / 255.0).epsilon(1e-15));
}

TEST_CASE("perfect tracking and a single id switch") {
  LabelSequence seq;
  for (int t = 0; t < 4; ++t) {
    const auto l = labels({1, 1, 1, 2, 2, 3}, {5, 5, 5, 6, 6, 0});
    seq.push_back({l, l});
  }
  MotsScores m = mots_metrics(std::vector<LabelSequence>{seq}, toy_config());
  CHECK(m.total.motsa == 1.0);
  CHECK(m.ids == 0);

  for (int t = 2; t < 4; ++t) seq[t].pred = labels({1, 1, 1, 2, 2, 3}, {9, 9, 9, 6, 6, 0});
  m = mots_metrics(std::vector<LabelSequence>{seq}, toy_config());
  CHECK(m.ids == 1);
  CHECK(m.per_class.at(1).ids == 1);
  CHECK(m.tp == 8);
  CHECK(m.total.motsa == doctest::Approx(1.0 - 1.0 / 8.0));
}

TEST_CASE("PTQ with a switched segment") {
  // Scan 0 matches exactly; scan 1 matches 4 of 5 points under a new id (IoU 0.8).
  LabelSequence seq = {
      {labels({1, 1, 1, 1, 1}, {1, 1, 1, 1, 1}), labels({1, 1, 1, 1, 1}, {1, 1, 1, 1, 1})},
      {labels({1, 1, 1, 1, 1}, {1, 1, 1, 1, 1}), labels({1, 1, 1, 1, 3}, {2, 2, 2, 2, 0})},
  };
  const PtqScores s = ptq_metrics(std::vector<LabelSequence>{seq}, toy_config());
  const ClassMetrics& car = s.per_class.at(1);
  CHECK(car.tp == 2);
  CHECK(car.ids == 1);
  CHECK(car.ptq == doctest::Approx((1.0 + 0.8 - 1.0) / 2.0).epsilon(1e-15));
  CHECK(car.sptq == doctest::Approx((1.0 + 0.8 - 0.8) / 2.0).epsilon(1e-15));

  const auto g = labels({1, 1, 3}, {1, 1, 0});
  const auto same = ptq_metrics(std::vector<LabelSequence>{one_scan(g, g)}, toy_config());
  CHECK(same.ptq == 1.0);
  const auto pq = panoptic_quality(std::vector<LabelSequence>{one_scan(g, labels({1, 1, 3}, {4, 4, 0}))}, toy_config(), true);
  const auto ptq = ptq_metrics(std::vector<LabelSequence>{one_scan(g, labels({1, 1, 3}, {4, 4, 0}))}, toy_config());
  CHECK(ptq.ptq == pq.pq);
}

TEST_CASE("streaming S_assoc equals the brute-force reference") {
  Rng rng(2024);
  const EvalConfig cfg = toy_config();
  for (int trial = 0; trial < 200; ++trial) {
    std::vector<LabelSequence> seqs = {p4d::testing::random_sequence(rng)};
    if (trial % 4 == 0) seqs.push_back(p4d::testing::random_sequence(rng));
    CHECK(std::abs(s_assoc(seqs, cfg) - brute_force_s_assoc(seqs, cfg)) <= 1e-12);
  }
}

TEST_CASE("metric bounds and mIoU identity on random streams") {
  Rng rng(7);
  const EvalConfig cfg = toy_config();
  for (int trial = 0; trial < 100; ++trial) {
    const std::vector<LabelSequence> seqs = {p4d::testing::random_sequence(rng)};
    const MetricReport r = evaluate(seqs, cfg);
    for (double v : {r.s_cls, r.s_assoc, r.lstq, r.pq, r.sq, r.rq}) {
      CHECK(v >= 0.0);
      CHECK(v <= 1.0);
    }
    CHECK(r.motsa <= 1.0);
    CHECK(r.lstq == std::sqrt(r.s_cls * r.s_assoc));
    CHECK(r.miou == r.s_cls);
  }
}

TEST_CASE("S_assoc invariances") {
  Rng rng(8);
  const EvalConfig cfg = toy_config();
  for (int trial = 0; trial < 50; ++trial) {
    const std::vector<LabelSequence> seqs = {p4d::testing::random_sequence(rng)};
    const double base = s_assoc(seqs, cfg);
    const std::uint32_t perm[] = {0, 4, 1, 5, 3, 2};
    CHECK(s_assoc(map_pred(seqs, [&](std::uint32_t&, std::uint32_t& id) { id = perm[id]; }), cfg) ==
          doctest::Approx(base).epsilon(1e-12));
    auto gt_relabel = seqs;
    for (auto& pair : gt_relabel[0]) {
      for (auto& id : pair.gt.instance) id = perm[id];
    }
    CHECK(s_assoc(gt_relabel, cfg) == doctest::Approx(base).epsilon(1e-12));
    CHECK(s_assoc(map_pred(seqs, [](std::uint32_t& c, std::uint32_t&) {
                    if (c == 1 || c == 2) c = 3 - c;
                  }),
                  cfg) == doctest::Approx(base).epsilon(1e-12));
  }
}

TEST_CASE("adding a correctly associated point never lowers the tube score") {
  const EvalConfig cfg = toy_config();
  // gt tube 1 has 4 points. pred 2 covers k of them plus one stray point.
  const auto g = labels({1, 1, 1, 1, 3}, {1, 1, 1, 1, 0});
  double prev = -1.0;
  for (int k = 1; k <= 4; ++k) {
    std::vector<std::uint32_t> sem(5, 3), ids(5, 0);
    for (int i = 0; i < k; ++i) {
      sem[i] = 1;
      ids[i] = 2;
    }
    sem[4] = 1;
    ids[4] = 2;
    const double v = s_assoc(std::vector<LabelSequence>{one_scan(g, labels(sem, ids))}, cfg);
    const double oracle = k * (k / (4.0 + (k + 1) - k)) / 4.0;
    CHECK(v == doctest::Approx(oracle).epsilon(1e-15));
    CHECK(v >= prev);
    prev = v;
  }
}

TEST_CASE("evaluator streaming equals the batch entry point") {
  Rng rng(10);
  const EvalConfig cfg = toy_config();
  const std::vector<LabelSequence> seqs = {p4d::testing::random_sequence(rng), p4d::testing::random_sequence(rng)};
  Evaluator ev(cfg);
  for (const auto& seq : seqs) {
    ev.begin_sequence();
    for (const auto& pair : seq) ev.add_scan(pair.gt, pair.pred);
  }
  const MetricReport a = ev.report();
  const MetricReport b = evaluate(seqs, cfg);
  CHECK(a.lstq == b.lstq);
  CHECK(a.pq == b.pq);
  CHECK(a.ids == b.ids);
  CHECK(a.s_assoc == s_assoc(seqs, cfg));
  CHECK(a.s_cls == s_cls(seqs, cfg).mean);
  CHECK(a.pq == panoptic_quality(seqs, cfg, true).pq);
  CHECK(a.ptq == ptq_metrics(seqs, cfg).ptq);
}

TEST_CASE("length mismatches and bad configs are rejected") {
  Evaluator ev(toy_config());
  ev.begin_sequence();
  CHECK_THROWS_AS(ev.add_scan(labels({1, 1}, {1, 1}), labels({1}, {1})), Error);
  EvalConfig bad = toy_config();
  bad.things = {5};
  CHECK_THROWS_AS(bad.validate(), Error);
  bad = toy_config();
  bad.ignore = {0, 3};
  CHECK_THROWS_AS(bad.validate(), Error);
  bad = toy_config();
  bad.pq_match_threshold = 0.4;
  CHECK_THROWS_AS(bad.validate(), Error);
}

TEST_CASE("SemanticKITTI mapping") {
  const EvalConfig kitti = EvalConfig::semantic_kitti();
  CHECK(kitti.map(10) == 1);
  CHECK(kitti.map(252) == 1);
  CHECK(kitti.map(40) == 9);
  CHECK(kitti.map(1000) == 0);
  CHECK(kitti.is_thing(kitti.map(30)));
  CHECK_FALSE(kitti.is_thing(kitti.map(70)));
  CHECK(kitti.name_of(1) == "car");
}

TEST_CASE("report text and JSON carry every per-class count") {
  const auto g = labels({1, 1, 2, 3}, {1, 1, 2, 0});
  const MetricReport r = evaluate(std::vector<LabelSequence>{one_scan(g, g)}, toy_config());
  const std::string text = format_report_text(r);
  CHECK(text.find("LSTQ 1.000000\n") != std::string::npos);
  CHECK(text.find("class.car.TP 1\n") != std::string::npos);
  const auto doc = nlohmann::json::parse(format_report_json(r));
  CHECK(doc.at("LSTQ").get<double>() == 1.0);
  bool found = false;
  for (const auto& c : doc.at("classes")) {
    if (c.at("name") == "person") {
      found = true;
      CHECK(c.at("TP").get<int>() == 1);
    }
  }
  CHECK(found);
  for (const auto& e : report_entries(r)) {
    if (e.key == "S_assoc") CHECK(e.value == 1.0);
  }
}
