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

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <memory>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "p4d/p4d.h"

namespace {

namespace fs = std::filesystem;

struct Failure {
  int code;
};

void check(p4d_status status) {
  if (status != P4D_OK) {
    std::cerr << "error: " << p4d_last_error() << "\n";
    throw Failure{static_cast<int>(status)};
  }
}

void fail(int code, const std::string& message) {
  std::cerr << "error: " << message << "\n";
  throw Failure{code};
}

std::string take_string(char* s) {
  std::string out(s);
  p4d_string_free(s);
  return out;
}

void write_text(const fs::path& path, const std::string& text) {
  if (path.has_parent_path()) {
    std::error_code ec;
    fs::create_directories(path.parent_path(), ec);
  }
  std::ofstream out(path, std::ios::binary);
  out << text;
  if (!out) fail(2, "cannot write " + path.string());
}

// "key=value" pairs from --set.
std::pair<std::string, std::string> split_setting(const std::string& s) {
  const auto eq = s.find('=');
  if (eq == std::string::npos || eq == 0) fail(1, "--set expects key=value, got '" + s + "'");
  return {s.substr(0, eq), s.substr(eq + 1)};
}

std::string quoted(const std::string& s) {
  std::string out = "\"";
  for (char c : s) {
    if (c == '"' || c == '\\') out += '\\';
    out += c;
  }
  return out + "\"";
}

std::string fmt(double v) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.4f", v);
  return buf;
}

struct RunArgs {
  std::string config;
  std::string input;
  std::string output;
  std::vector<std::string> sequences;
  std::string strategy = "importance";
  std::size_t tau = 4;
  double fraction = 0.1;
  std::size_t stride = 2;
  double time_scale = 1.0;
  std::string feature_mode = "emb";
  double assign_prob = 0.5;
  double seed_stop = 0.1;
  std::size_t min_points = 25;
  double iou_threshold = 0.5;
  std::string semantic_source = "labels";
  std::uint64_t seed = 0;
  std::size_t first_scan = 0;
  std::size_t end_scan = 0;
  std::size_t threads = 1;
  std::vector<std::string> settings;
};

int cmd_run(const RunArgs& a, const CLI::App& sub) {
  p4d_run_config* cfg = nullptr;
  if (!a.config.empty()) {
    check(p4d_run_config_load(a.config.c_str(), &cfg));
  } else {
    check(p4d_run_config_create(&cfg));
  }
  std::unique_ptr<p4d_run_config, void (*)(p4d_run_config*)> guard(cfg, p4d_run_config_destroy);
  auto set = [&](const char* flag, const std::string& key, const std::string& value) {
    if (sub.count(flag) > 0) check(p4d_run_config_set(cfg, key.c_str(), value.c_str()));
  };
  set("--input", "input", quoted(a.input));
  set("--output", "output", quoted(a.output));
  if (sub.count("--sequences") > 0) {
    std::string list = "[";
    for (const auto& s : a.sequences) list += (list.size() > 1 ? "," : "") + quoted(s);
    check(p4d_run_config_set(cfg, "sequences", (list + "]").c_str()));
  }
  set("--strategy", "strategy", quoted(a.strategy));
  set("--tau", "tau", std::to_string(a.tau));
  set("--fraction", "fraction", std::to_string(a.fraction));
  set("--stride", "stride", std::to_string(a.stride));
  set("--time-scale", "time_scale", std::to_string(a.time_scale));
  set("--feature-mode", "clustering.feature_mode", quoted(a.feature_mode));
  set("--assign-prob", "clustering.assign_prob", std::to_string(a.assign_prob));
  set("--seed-stop", "clustering.seed_stop", std::to_string(a.seed_stop));
  set("--min-points", "clustering.min_points", std::to_string(a.min_points));
  set("--iou-threshold", "iou_threshold", std::to_string(a.iou_threshold));
  set("--semantic-source", "semantic_source", quoted(a.semantic_source));
  set("--seed", "seed", std::to_string(a.seed));
  set("--first-scan", "first_scan", std::to_string(a.first_scan));
  set("--end-scan", "end_scan", std::to_string(a.end_scan));
  set("--threads", "threads", std::to_string(a.threads));
  for (const auto& s : a.settings) {
    const auto [key, value] = split_setting(s);
    check(p4d_run_config_set(cfg, key.c_str(), value.c_str()));
  }

  p4d_run_result* result = nullptr;
  check(p4d_run(cfg, &result));
  std::unique_ptr<p4d_run_result, void (*)(p4d_run_result*)> result_guard(result, p4d_run_result_destroy);
  for (std::size_t i = 0; i < p4d_run_result_count(result); ++i) {
    p4d_sequence_stats st{};
    check(p4d_run_result_get(result, i, &st));
    std::cout << "sequence " << st.name << " scans " << st.scans << " seconds " << fmt(st.seconds)
              << " peak_volume_points " << st.peak_volume_points << " peak_scan_points " << st.peak_scan_points
              << " global_ids " << st.global_ids << "\n";
    std::cout << "predictions " << st.prediction_dir << "\n";
  }
  return 0;
}

struct EvalArgs {
  std::string gt;
  std::string pred;
  std::vector<std::string> sequences;
  std::string config;
  std::string report;
  std::size_t threads = 1;
  std::vector<std::string> settings;
  std::vector<double> combine;
  std::vector<long long> mots;
};

int cmd_evaluate(const EvalArgs& a) {
  if (!a.combine.empty()) {
    double v = 0.0;
    check(p4d_lstq_combine(a.combine[1], a.combine[0], &v));
    std::cout << "S_assoc " << a.combine[0] << "\nS_cls " << a.combine[1] << "\nLSTQ " << fmt(v) << "\n";
    return 0;
  }
  if (!a.mots.empty()) {
    p4d_mots m{};
    check(p4d_mots_from_counts(a.mots[0], a.mots[1], a.mots[2], a.mots[3], a.mots[0] + a.mots[2], 0.0, &m));
    std::cout << "precision " << fmt(m.precision) << "\nrecall " << fmt(m.recall) << "\nMOTSA " << fmt(m.motsa)
              << "\n";
    return 0;
  }
  if (a.gt.empty() || a.pred.empty()) fail(1, "evaluate needs --gt and --pred (or --combine / --mots)");

  p4d_eval_config* cfg = nullptr;
  if (!a.config.empty()) {
    check(p4d_eval_config_load(a.config.c_str(), &cfg));
  } else {
    check(p4d_eval_config_create(&cfg));
  }
  std::unique_ptr<p4d_eval_config, void (*)(p4d_eval_config*)> guard(cfg, p4d_eval_config_destroy);
  for (const auto& s : a.settings) {
    const auto [key, value] = split_setting(s);
    check(p4d_eval_config_set(cfg, key.c_str(), value.c_str()));
  }
  std::vector<const char*> names;
  for (const auto& s : a.sequences) names.push_back(s.c_str());
  p4d_report* report = nullptr;
  check(p4d_evaluate(a.gt.c_str(), a.pred.c_str(), names.empty() ? nullptr : names.data(), names.size(), cfg,
                     a.threads, &report));
  std::unique_ptr<p4d_report, void (*)(p4d_report*)> report_guard(report, p4d_report_destroy);

  char* text = nullptr;
  check(p4d_report_text(report, &text));
  const std::string table = take_string(text);
  if (a.report.empty()) {
    std::cout << table;
    return 0;
  }
  char* json = nullptr;
  check(p4d_report_json(report, &json));
  fs::path text_path = a.report;
  fs::path json_path = a.report;
  if (text_path.extension() == ".json") {
    text_path.replace_extension(".txt");
  } else {
    json_path.replace_extension(".json");
  }
  write_text(text_path, table);
  write_text(json_path, take_string(json));
  for (const char* key : {"LSTQ", "S_assoc", "S_cls", "PQ", "MOTSA"}) {
    double v = 0.0;
    check(p4d_report_value(report, key, &v));
    std::cout << key << " " << fmt(v) << "\n";
  }
  std::cout << "report " << text_path.string() << "\nreport " << json_path.string() << "\n";
  return 0;
}

struct SynthArgs {
  std::string spec;
  std::string out;
  std::size_t objects = 5;
  std::size_t scans = 20;
  std::uint64_t seed = 0;
};

int cmd_synth(const SynthArgs& a) {
  std::size_t n = 0;
  if (!a.spec.empty()) {
    check(p4d_synth_generate(a.spec.c_str(), a.out.c_str(), &n));
  } else {
    std::ostringstream spec;
    spec << "{\"seed\": " << a.seed << ", \"sequences\": [{\"name\": \"00\", \"num_objects\": " << a.objects
         << ", \"num_scans\": " << a.scans << "}]}";
    check(p4d_synth_generate_json(spec.str().c_str(), a.out.c_str(), &n));
  }
  std::cout << "sequences " << n << "\ndataset " << a.out << "\n";
  return 0;
}

int cmd_check_gradients(std::uint64_t seed, std::size_t trials) {
  p4d_gradcheck_row rows[8];
  std::size_t n = 0;
  check(p4d_check_gradients(seed, trials, rows, 8, &n));
  bool ok = true;
  std::printf("%-10s %8s %14s %9s %s\n", "loss", "problems", "max_rel_error", "seconds", "result");
  for (std::size_t i = 0; i < n && i < 8; ++i) {
    std::printf("%-10s %8zu %14.3e %9.3f %s\n", rows[i].loss, rows[i].problems, rows[i].max_relative_error,
                rows[i].seconds, rows[i].passed ? "PASS" : "FAIL");
    ok = ok && rows[i].passed;
  }
  return ok ? 0 : 1;
}

int cmd_inspect(const std::string& path) {
  char* out = nullptr;
  check(p4d_inspect(path.c_str(), &out));
  std::cout << take_string(out);
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"4D panoptic LiDAR segmentation: online pipeline, LSTQ evaluation, synthetic data"};
  app.set_version_flag("--version", std::string(p4d_version()));
  app.require_subcommand(1);

  RunArgs run;
  auto* run_cmd = app.add_subcommand("run", "Run the online 4D pipeline and write predictions/*.label");
  run_cmd->add_option("--config", run.config, "JSON run config; flags override its values")->check(CLI::ExistingFile);
  run_cmd->add_option("--input", run.input, "Dataset root containing sequences/");
  run_cmd->add_option("--output", run.output, "Output root; labels go to sequences/<seq>/predictions");
  run_cmd->add_option("--sequences", run.sequences, "Sequence names (default: all)")->delimiter(',');
  run_cmd->add_option("--strategy", run.strategy, "Sampling: base, thing, importance, decay, stride")
      ->capture_default_str();
  run_cmd->add_option("--tau", run.tau, "Scans per 4D volume")->capture_default_str();
  run_cmd->add_option("--fraction", run.fraction, "Past-scan sampling fraction")->capture_default_str();
  run_cmd->add_option("--stride", run.stride, "Stride strategy step")->capture_default_str();
  run_cmd->add_option("--time-scale", run.time_scale, "Scale of the time coordinate")->capture_default_str();
  run_cmd->add_option("--feature-mode", run.feature_mode, "Clustering features: xyz, xyzt, emb, emb+xyz, emb+xyzt")
      ->capture_default_str();
  run_cmd->add_option("--assign-prob", run.assign_prob, "Membership probability threshold")->capture_default_str();
  run_cmd->add_option("--seed-stop", run.seed_stop, "Stop seeding below this objectness")->capture_default_str();
  run_cmd->add_option("--min-points", run.min_points, "Smallest kept instance")->capture_default_str();
  run_cmd->add_option("--iou-threshold", run.iou_threshold, "Window association IoU threshold")
      ->capture_default_str();
  run_cmd->add_option("--semantic-source", run.semantic_source, "Label subdirectory with semantic predictions")
      ->capture_default_str();
  run_cmd->add_option("--seed", run.seed, "Sampling seed")->capture_default_str();
  run_cmd->add_option("--first-scan", run.first_scan, "Position of the first scan to process (0-based, after sorting)")
      ->capture_default_str();
  run_cmd->add_option("--end-scan", run.end_scan, "Position one past the last scan to process (default: all)");
  run_cmd->add_option("--threads", run.threads, "Sequences processed in parallel")->capture_default_str();
  run_cmd->add_option("--set", run.settings, "Any config key as key=value, e.g. clustering.normalized_pdf=true");

  EvalArgs eval;
  auto* eval_cmd = app.add_subcommand("evaluate", "Score predictions: LSTQ, PQ, MOTSA, PTQ, mIoU");
  eval_cmd->add_option("--gt", eval.gt, "Ground-truth root containing sequences/<seq>/labels");
  eval_cmd->add_option("--pred", eval.pred, "Prediction root containing sequences/<seq>/predictions");
  eval_cmd->add_option("--sequences", eval.sequences, "Sequence names (default: all under --gt)")->delimiter(',');
  eval_cmd->add_option("--config", eval.config, "JSON eval config (default: SemanticKITTI classes)")
      ->check(CLI::ExistingFile);
  eval_cmd->add_option("--report", eval.report, "Text report path; JSON goes next to it with a .json extension");
  eval_cmd->add_option("--threads", eval.threads, "Sequences loaded in parallel")->capture_default_str();
  eval_cmd->add_option("--set", eval.settings, "Any config key as key=value, e.g. pq_match_threshold=0.6");
  auto* combine = eval_cmd->add_option("--combine", eval.combine, "Print LSTQ from S_ASSOC S_CLS")->expected(2);
  eval_cmd->add_option("--mots", eval.mots, "Print precision, recall, MOTSA from TP FP FN IDS")
      ->expected(4)
      ->excludes(combine);

  SynthArgs synth;
  auto* synth_cmd = app.add_subcommand("synth", "Write a synthetic labelled dataset with oracle fields");
  auto* spec_opt = synth_cmd->add_option("--spec", synth.spec, "JSON scene spec")->check(CLI::ExistingFile);
  synth_cmd->add_option("--out", synth.out, "Dataset root to create")->required();
  synth_cmd->add_option("--objects", synth.objects, "Moving objects (without --spec)")
      ->capture_default_str()
      ->excludes(spec_opt);
  synth_cmd->add_option("--scans", synth.scans, "Scans per sequence (without --spec)")
      ->capture_default_str()
      ->excludes(spec_opt);
  synth_cmd->add_option("--seed", synth.seed, "Generator seed (without --spec)")
      ->capture_default_str()
      ->excludes(spec_opt);

  std::uint64_t grad_seed = 0;
  std::size_t grad_trials = 20;
  auto* grad_cmd = app.add_subcommand("check-gradients", "Compare analytic loss gradients with finite differences");
  grad_cmd->add_option("--seed", grad_seed, "Problem seed")->capture_default_str();
  grad_cmd->add_option("--trials", grad_trials, "Random problems per loss")->capture_default_str();

  std::string inspect_path;
  auto* inspect_cmd = app.add_subcommand("inspect", "Summarise a dataset, sequence, .bin, .label or .p4de file");
  inspect_cmd->add_option("path", inspect_path, "Path to inspect")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 1;
  }

  try {
    if (*run_cmd) return cmd_run(run, *run_cmd);
    if (*eval_cmd) return cmd_evaluate(eval);
    if (*synth_cmd) return cmd_synth(synth);
    if (*grad_cmd) return cmd_check_gradients(grad_seed, grad_trials);
    if (*inspect_cmd) return cmd_inspect(inspect_path);
  } catch (const Failure& f) {
    return f.code;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 3;
  }
  return 1;
}
