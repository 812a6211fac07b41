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

#include "p4d/p4d.h"

#include <cstdlib>
#include <cstring>
#include <exception>
#include <map>
#include <memory>
#include <new>
#include <string>

#include "p4d/config.hpp"
#include "p4d/dataset.hpp"
#include "p4d/error.hpp"
#include "p4d/gradcheck.hpp"
#include "p4d/metrics.hpp"

struct p4d_run_config {
  p4d::RunConfig config = p4d::RunConfig::defaults();
};

struct p4d_eval_config {
  p4d::EvalConfig config = p4d::EvalConfig::semantic_kitti();
};

struct p4d_run_result {
  std::vector<p4d::SequenceRunSummary> sequences;
  std::vector<std::string> dirs;
};

struct p4d_report {
  p4d::MetricReport report;
  std::map<std::string, double> values;
};

namespace {

thread_local std::string g_last_error;

p4d_status fail(p4d_status status, const std::string& message) {
  g_last_error = message;
  return status;
}

template <typename Body>
p4d_status guarded(Body body) {
  try {
    body();
    g_last_error.clear();
    return P4D_OK;
  } catch (const p4d::Error& e) {
    return fail(static_cast<p4d_status>(e.kind()), e.what());
  } catch (const std::bad_alloc&) {
    return fail(P4D_ERR_INTERNAL, "out of memory");
  } catch (const std::filesystem::filesystem_error& e) {
    return fail(P4D_ERR_IO, e.what());
  } catch (const std::exception& e) {
    return fail(P4D_ERR_INTERNAL, e.what());
  } catch (...) {
    return fail(P4D_ERR_INTERNAL, "unknown error");
  }
}

void require(const void* p, const char* what) {
  if (p == nullptr) p4d::throw_validation(std::string(what) + " must not be NULL");
}

char* copy_string(const std::string& s) {
  char* out = static_cast<char*>(std::malloc(s.size() + 1));
  if (out == nullptr) throw std::bad_alloc();
  std::memcpy(out, s.c_str(), s.size() + 1);
  return out;
}

}  // namespace

extern "C" {

const char* p4d_version(void) { return "0.1.0"; }

const char* p4d_last_error(void) { return g_last_error.c_str(); }

void p4d_string_free(char* s) { std::free(s); }

p4d_status p4d_run_config_create(p4d_run_config** out) {
  return guarded([&] {
    require(out, "out");
    *out = new p4d_run_config();
  });
}

p4d_status p4d_run_config_load(const char* path, p4d_run_config** out) {
  return guarded([&] {
    require(path, "path");
    require(out, "out");
    auto* h = new p4d_run_config();
    try {
      h->config = p4d::load_run_config(path);
    } catch (...) {
      delete h;
      throw;
    }
    *out = h;
  });
}

p4d_status p4d_run_config_set(p4d_run_config* config, const char* key, const char* value) {
  return guarded([&] {
    require(config, "config");
    require(key, "key");
    require(value, "value");
    p4d::set_run_config_value(config->config, key, value);
  });
}

p4d_status p4d_run_config_to_json(const p4d_run_config* config, char** out) {
  return guarded([&] {
    require(config, "config");
    require(out, "out");
    *out = copy_string(p4d::run_config_to_json(config->config));
  });
}

void p4d_run_config_destroy(p4d_run_config* config) { delete config; }

p4d_status p4d_eval_config_create(p4d_eval_config** out) {
  return guarded([&] {
    require(out, "out");
    *out = new p4d_eval_config();
  });
}

p4d_status p4d_eval_config_load(const char* path, p4d_eval_config** out) {
  return guarded([&] {
    require(path, "path");
    require(out, "out");
    auto* h = new p4d_eval_config();
    try {
      h->config = p4d::load_eval_config(path);
    } catch (...) {
      delete h;
      throw;
    }
    *out = h;
  });
}

p4d_status p4d_eval_config_set(p4d_eval_config* config, const char* key, const char* value) {
  return guarded([&] {
    require(config, "config");
    require(key, "key");
    require(value, "value");
    p4d::set_eval_config_value(config->config, key, value);
  });
}

p4d_status p4d_eval_config_to_json(const p4d_eval_config* config, char** out) {
  return guarded([&] {
    require(config, "config");
    require(out, "out");
    *out = copy_string(p4d::eval_config_to_json(config->config));
  });
}

void p4d_eval_config_destroy(p4d_eval_config* config) { delete config; }

p4d_status p4d_run(const p4d_run_config* config, p4d_run_result** out) {
  return guarded([&] {
    require(config, "config");
    require(out, "out");
    auto result = std::make_unique<p4d_run_result>();
    result->sequences = p4d::run_dataset(config->config);
    for (const auto& s : result->sequences) result->dirs.push_back(s.prediction_dir.string());
    *out = result.release();
  });
}

size_t p4d_run_result_count(const p4d_run_result* result) { return result == nullptr ? 0 : result->sequences.size(); }

p4d_status p4d_run_result_get(const p4d_run_result* result, size_t index, p4d_sequence_stats* out) {
  return guarded([&] {
    require(result, "result");
    require(out, "out");
    if (index >= result->sequences.size()) p4d::throw_validation("sequence index out of range");
    const auto& s = result->sequences[index];
    out->name = s.name.c_str();
    out->prediction_dir = result->dirs[index].c_str();
    out->scans = s.stats.scans;
    out->peak_volume_points = s.stats.peak_volume_points;
    out->peak_scan_points = s.stats.peak_scan_points;
    out->global_ids = s.stats.global_ids;
    out->windows_without_overlap = s.stats.windows_without_overlap;
    out->seconds = s.stats.seconds;
  });
}

void p4d_run_result_destroy(p4d_run_result* result) { delete result; }

p4d_status p4d_evaluate(const char* gt_root, const char* pred_root, const char* const* sequences,
                        size_t num_sequences, const p4d_eval_config* config, size_t threads, p4d_report** out) {
  return guarded([&] {
    require(gt_root, "gt_root");
    require(pred_root, "pred_root");
    require(out, "out");
    std::vector<std::string> names;
    if (sequences != nullptr) {
      for (size_t i = 0; i < num_sequences; ++i) {
        require(sequences[i], "sequence name");
        names.emplace_back(sequences[i]);
      }
    }
    const p4d::EvalConfig cfg = config != nullptr ? config->config : p4d::EvalConfig::semantic_kitti();
    auto report = std::make_unique<p4d_report>();
    report->report = p4d::evaluate_dataset(gt_root, pred_root, names, cfg, threads);
    for (const auto& e : p4d::report_entries(report->report)) report->values[e.key] = e.value;
    *out = report.release();
  });
}

p4d_status p4d_report_value(const p4d_report* report, const char* key, double* out) {
  return guarded([&] {
    require(report, "report");
    require(key, "key");
    require(out, "out");
    const auto it = report->values.find(key);
    if (it == report->values.end()) p4d::throw_validation(std::string("no report value named '") + key + "'");
    *out = it->second;
  });
}

size_t p4d_report_warning_count(const p4d_report* report) {
  return report == nullptr ? 0 : report->report.warnings.size();
}

p4d_status p4d_report_text(const p4d_report* report, char** out) {
  return guarded([&] {
    require(report, "report");
    require(out, "out");
    *out = copy_string(p4d::format_report_text(report->report));
  });
}

p4d_status p4d_report_json(const p4d_report* report, char** out) {
  return guarded([&] {
    require(report, "report");
    require(out, "out");
    *out = copy_string(p4d::format_report_json(report->report));
  });
}

void p4d_report_destroy(p4d_report* report) { delete report; }

p4d_status p4d_lstq_combine(double s_cls, double s_assoc, double* out) {
  return guarded([&] {
    require(out, "out");
    if (!(s_cls >= 0.0 && s_cls <= 1.0 && s_assoc >= 0.0 && s_assoc <= 1.0)) {
      p4d::throw_validation("S_cls and S_assoc must lie in [0, 1]");
    }
    *out = p4d::lstq(s_cls, s_assoc);
  });
}

p4d_status p4d_mots_from_counts(int64_t tp, int64_t fp, int64_t fn, int64_t ids, int64_t gt_segments,
                                double soft_tp, p4d_mots* out) {
  return guarded([&] {
    require(out, "out");
    if (tp < 0 || fp < 0 || fn < 0 || ids < 0 || gt_segments < 0) p4d::throw_validation("counts must be non-negative");
    const p4d::MotsSummary m = p4d::mots_from_counts(tp, fp, fn, ids, gt_segments, soft_tp);
    *out = {m.precision, m.recall, m.motsa, m.smotsa};
  });
}

p4d_status p4d_synth_generate(const char* spec_path, const char* out_root, size_t* num_sequences) {
  return guarded([&] {
    require(out_root, "out_root");
    const p4d::SynthConfig cfg =
        spec_path != nullptr ? p4d::load_synth_config(spec_path) : p4d::parse_synth_config("{}");
    const auto dirs = p4d::generate_dataset(cfg, out_root);
    if (num_sequences != nullptr) *num_sequences = dirs.size();
  });
}

p4d_status p4d_synth_generate_json(const char* spec_json, const char* out_root, size_t* num_sequences) {
  return guarded([&] {
    require(spec_json, "spec_json");
    require(out_root, "out_root");
    const auto dirs = p4d::generate_dataset(p4d::parse_synth_config(spec_json), out_root);
    if (num_sequences != nullptr) *num_sequences = dirs.size();
  });
}

p4d_status p4d_check_gradients(uint64_t seed, size_t trials, p4d_gradcheck_row* rows, size_t capacity,
                               size_t* num_rows) {
  return guarded([&] {
    require(num_rows, "num_rows");
    if (capacity > 0) require(rows, "rows");
    if (trials == 0) p4d::throw_validation("trials must be at least 1");
    const auto table = p4d::check_gradients(seed, trials);
    *num_rows = table.size();
    for (size_t i = 0; i < table.size() && i < capacity; ++i) {
      p4d_gradcheck_row& r = rows[i];
      std::memset(r.loss, 0, sizeof(r.loss));
      std::strncpy(r.loss, table[i].loss.c_str(), sizeof(r.loss) - 1);
      r.problems = table[i].problems;
      r.max_relative_error = table[i].max_relative_error;
      r.seconds = table[i].seconds;
      r.passed = table[i].passed ? 1 : 0;
    }
  });
}

p4d_status p4d_inspect(const char* path, char** out) {
  return guarded([&] {
    require(path, "path");
    require(out, "out");
    *out = copy_string(p4d::inspect_path(path));
  });
}

}  // extern "C"
