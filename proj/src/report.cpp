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

#include <cmath>
#include <cstdio>
#include <sstream>

#include <json.hpp>

#include "p4d/metrics.hpp"

namespace p4d {

namespace {

nlohmann::json number(double v) { return std::isfinite(v) ? nlohmann::json(v) : nlohmann::json(nullptr); }

std::string fixed(double v) {
  if (!std::isfinite(v)) return "nan";
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.6f", v);
  return buf;
}

}  // namespace

std::vector<ReportEntry> report_entries(const MetricReport& r) {
  std::vector<ReportEntry> out;
  auto score = [&](const std::string& key, double v) { out.push_back({key, v, false}); };
  auto count = [&](const std::string& key, double v) { out.push_back({key, v, true}); };
  score("LSTQ", r.lstq);
  score("S_assoc", r.s_assoc);
  score("S_cls", r.s_cls);
  score("mIoU", r.miou);
  score("IoU_St", r.iou_st);
  score("IoU_Th", r.iou_th);
  score("PQ", r.pq);
  score("SQ", r.sq);
  score("RQ", r.rq);
  score("PQ_dagger", r.pq_dagger);
  score("PQ_Th", r.pq_th);
  score("PQ_St", r.pq_st);
  score("PTQ", r.ptq);
  score("sPTQ", r.sptq);
  score("MOTSA", r.motsa);
  score("sMOTSA", r.smotsa);
  score("precision", r.precision);
  score("recall", r.recall);
  count("TP", static_cast<double>(r.tp));
  count("FP", static_cast<double>(r.fp));
  count("FN", static_cast<double>(r.fn));
  count("IDS", static_cast<double>(r.ids));
  count("gt_segments", static_cast<double>(r.gt_segments));
  count("gt_tubes", static_cast<double>(r.gt_tubes));
  count("pred_tubes", static_cast<double>(r.pred_tubes));
  count("sequences", static_cast<double>(r.sequences));
  count("scans", static_cast<double>(r.scans));
  count("points", static_cast<double>(r.points));
  for (const ClassMetrics& c : r.classes) {
    const std::string p = "class." + c.name + ".";
    score(p + "IoU", c.iou);
    score(p + "PQ", c.has_segments ? c.pq : NAN);
    count(p + "TP", static_cast<double>(c.tp));
    count(p + "FP", static_cast<double>(c.fp));
    count(p + "FN", static_cast<double>(c.fn));
    if (c.thing) {
      count(p + "IDS", static_cast<double>(c.ids));
      score(p + "MOTSA", c.motsa);
    }
  }
  return out;
}

std::string format_report_text(const MetricReport& r) {
  std::ostringstream out;
  for (const ReportEntry& e : report_entries(r)) {
    out << e.key << ' ' << (e.count ? std::to_string(static_cast<std::int64_t>(e.value)) : fixed(e.value)) << '\n';
  }
  for (const std::string& w : r.warnings) out << "warning " << w << '\n';
  return out.str();
}

std::string format_report_json(const MetricReport& r) {
  nlohmann::ordered_json doc;
  doc["LSTQ"] = number(r.lstq);
  doc["S_assoc"] = number(r.s_assoc);
  doc["S_cls"] = number(r.s_cls);
  doc["mIoU"] = number(r.miou);
  doc["IoU_St"] = number(r.iou_st);
  doc["IoU_Th"] = number(r.iou_th);
  doc["PQ"] = number(r.pq);
  doc["SQ"] = number(r.sq);
  doc["RQ"] = number(r.rq);
  doc["PQ_dagger"] = number(r.pq_dagger);
  doc["PQ_Th"] = number(r.pq_th);
  doc["PQ_St"] = number(r.pq_st);
  doc["PTQ"] = number(r.ptq);
  doc["sPTQ"] = number(r.sptq);
  doc["MOTSA"] = number(r.motsa);
  doc["sMOTSA"] = number(r.smotsa);
  doc["precision"] = number(r.precision);
  doc["recall"] = number(r.recall);
  doc["counts"] = {{"TP", r.tp},
                   {"FP", r.fp},
                   {"FN", r.fn},
                   {"IDS", r.ids},
                   {"gt_segments", r.gt_segments},
                   {"gt_tubes", r.gt_tubes},
                   {"pred_tubes", r.pred_tubes},
                   {"sequences", r.sequences},
                   {"scans", r.scans},
                   {"points", r.points}};
  nlohmann::ordered_json classes = nlohmann::ordered_json::array();
  for (const ClassMetrics& c : r.classes) {
    nlohmann::ordered_json e;
    e["id"] = c.id;
    e["name"] = c.name;
    e["thing"] = c.thing;
    e["IoU"] = number(c.iou);
    e["tp_points"] = c.tp_points;
    e["fp_points"] = c.fp_points;
    e["fn_points"] = c.fn_points;
    e["TP"] = c.tp;
    e["FP"] = c.fp;
    e["FN"] = c.fn;
    e["IDS"] = c.ids;
    e["iou_sum"] = c.iou_sum;
    e["PQ"] = number(c.has_segments ? c.pq : NAN);
    e["SQ"] = number(c.has_segments ? c.sq : NAN);
    e["RQ"] = number(c.has_segments ? c.rq : NAN);
    e["PTQ"] = number(c.has_segments ? c.ptq : NAN);
    e["sPTQ"] = number(c.has_segments ? c.sptq : NAN);
    e["precision"] = number(c.precision);
    e["recall"] = number(c.recall);
    e["MOTSA"] = number(c.motsa);
    e["sMOTSA"] = number(c.smotsa);
    classes.push_back(std::move(e));
  }
  doc["classes"] = std::move(classes);
  doc["warnings"] = r.warnings;
  return doc.dump(2) + "\n";
}

}  // namespace p4d
