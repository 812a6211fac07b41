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

#ifndef P4D_P4D_H_
#define P4D_P4D_H_

#include <stddef.h>
#include <stdint.h>

#if defined(_WIN32)
#define P4D_API __declspec(dllexport)
#else
#define P4D_API __attribute__((visibility("default")))
#endif

#ifdef __cplusplus
extern "C" {
#endif

/* Status codes double as CLI exit codes. */
typedef enum p4d_status {
  P4D_OK = 0,
  P4D_ERR_VALIDATION = 1,
  P4D_ERR_IO = 2,
  P4D_ERR_INTERNAL = 3
} p4d_status;

/* Opaque handles. */
typedef struct p4d_run_config p4d_run_config;
typedef struct p4d_eval_config p4d_eval_config;
typedef struct p4d_run_result p4d_run_result;
typedef struct p4d_report p4d_report;

typedef struct p4d_sequence_stats {
  const char* name;           /* valid while the owning result lives */
  const char* prediction_dir;
  size_t scans;
  size_t peak_volume_points;
  size_t peak_scan_points;
  size_t global_ids;
  size_t windows_without_overlap;
  double seconds;
} p4d_sequence_stats;

typedef struct p4d_mots {
  double precision;
  double recall;
  double motsa;
  double smotsa;
} p4d_mots;

typedef struct p4d_gradcheck_row {
  char loss[16];
  size_t problems;
  double max_relative_error;
  double seconds;
  int passed;
} p4d_gradcheck_row;

P4D_API const char* p4d_version(void);

/* Message of the last failed call on this thread; "" after success. */
P4D_API const char* p4d_last_error(void);

/* Strings returned through char** are owned by the caller. */
P4D_API void p4d_string_free(char* s);

/* Run configuration. Keys are dotted paths such as "clustering.min_points";
   values are JSON text or bare strings. */
P4D_API p4d_status p4d_run_config_create(p4d_run_config** out);
P4D_API p4d_status p4d_run_config_load(const char* path, p4d_run_config** out);
P4D_API p4d_status p4d_run_config_set(p4d_run_config* config, const char* key, const char* value);
P4D_API p4d_status p4d_run_config_to_json(const p4d_run_config* config, char** out);
P4D_API void p4d_run_config_destroy(p4d_run_config* config);

/* Evaluation configuration, SemanticKITTI classes by default. */
P4D_API p4d_status p4d_eval_config_create(p4d_eval_config** out);
P4D_API p4d_status p4d_eval_config_load(const char* path, p4d_eval_config** out);
P4D_API p4d_status p4d_eval_config_set(p4d_eval_config* config, const char* key, const char* value);
P4D_API p4d_status p4d_eval_config_to_json(const p4d_eval_config* config, char** out);
P4D_API void p4d_eval_config_destroy(p4d_eval_config* config);

/* Online pipeline over every configured sequence. */
P4D_API p4d_status p4d_run(const p4d_run_config* config, p4d_run_result** out);
P4D_API size_t p4d_run_result_count(const p4d_run_result* result);
P4D_API p4d_status p4d_run_result_get(const p4d_run_result* result, size_t index, p4d_sequence_stats* out);
P4D_API void p4d_run_result_destroy(p4d_run_result* result);

/* Scores <pred_root>/sequences/S/predictions against <gt_root>/sequences/S/labels.
   sequences may be NULL (all sequences); config may be NULL (defaults). */
P4D_API p4d_status p4d_evaluate(const char* gt_root, const char* pred_root, const char* const* sequences,
                                size_t num_sequences, const p4d_eval_config* config, size_t threads,
                                p4d_report** out);
/* Keys as in the text report, e.g. "LSTQ", "class.car.IoU". */
P4D_API p4d_status p4d_report_value(const p4d_report* report, const char* key, double* out);
P4D_API size_t p4d_report_warning_count(const p4d_report* report);
P4D_API p4d_status p4d_report_text(const p4d_report* report, char** out);
P4D_API p4d_status p4d_report_json(const p4d_report* report, char** out);
P4D_API void p4d_report_destroy(p4d_report* report);

/* Formula-level helpers. */
P4D_API p4d_status p4d_lstq_combine(double s_cls, double s_assoc, double* out);
P4D_API p4d_status p4d_mots_from_counts(int64_t tp, int64_t fp, int64_t fn, int64_t ids, int64_t gt_segments,
                                        double soft_tp, p4d_mots* out);

/* Synthetic dataset; spec_path may be NULL for the default 5-object scene.
   num_sequences may be NULL. */
P4D_API p4d_status p4d_synth_generate(const char* spec_path, const char* out_root, size_t* num_sequences);
/* As p4d_synth_generate with the spec given as JSON text. */
P4D_API p4d_status p4d_synth_generate_json(const char* spec_json, const char* out_root, size_t* num_sequences);

/* Writes up to `capacity` rows (one per loss) and the row count. */
P4D_API p4d_status p4d_check_gradients(uint64_t seed, size_t trials, p4d_gradcheck_row* rows, size_t capacity,
                                       size_t* num_rows);

P4D_API p4d_status p4d_inspect(const char* path, char** out);

#ifdef __cplusplus
}
#endif

#endif  // P4D_P4D_H_
