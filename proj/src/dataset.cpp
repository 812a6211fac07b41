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

#include "p4d/dataset.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <exception>
#include <limits>
#include <map>
#include <sstream>
#include <thread>

#include "p4d/error.hpp"
#include "p4d/fields.hpp"

namespace p4d {

namespace fs = std::filesystem;

namespace {

// Runs job(i) for i in [0, n) on up to `threads` workers. The exception of
// the lowest failing index is rethrown, so errors do not depend on timing.
template <typename Job>
void parallel_for(std::size_t n, std::size_t threads, Job job) {
  std::vector<std::exception_ptr> errors(n);
  std::atomic<std::size_t> next{0};
  auto worker = [&] {
    for (std::size_t i = next++; i < n; i = next++) {
      try {
        job(i);
      } catch (...) {
        errors[i] = std::current_exception();
      }
    }
  };
  const std::size_t count = std::max<std::size_t>(1, std::min(threads, n));
  if (count == 1) {
    worker();
  } else {
    std::vector<std::thread> pool;
    for (std::size_t t = 0; t < count; ++t) pool.emplace_back(worker);
    for (auto& th : pool) th.join();
  }
  for (auto& e : errors) {
    if (e) std::rethrow_exception(e);
  }
}

fs::path sequence_dir(const fs::path& root, const std::string& name) { return root / "sequences" / name; }

std::string format_count_map(const std::map<std::uint32_t, std::size_t>& counts) {
  std::ostringstream out;
  bool first = true;
  for (const auto& [k, v] : counts) {
    out << (first ? "" : " ") << k << ":" << v;
    first = false;
  }
  return first ? "-" : out.str();
}

void describe_labels(std::ostringstream& out, const PanopticLabels& labels, const std::string& indent) {
  std::map<std::uint32_t, std::size_t> classes;
  std::map<std::uint32_t, std::size_t> ids;
  for (std::size_t i = 0; i < labels.size(); ++i) {
    ++classes[labels.semantic[i]];
    if (labels.instance[i] != 0) ++ids[labels.instance[i]];
  }
  out << indent << "points " << labels.size() << "\n";
  out << indent << "classes " << format_count_map(classes) << "\n";
  out << indent << "instances " << format_count_map(ids) << "\n";
}

void describe_scan(std::ostringstream& out, const Scan& scan, const std::string& indent) {
  out << indent << "points " << scan.size() << "\n";
  if (scan.size() == 0) return;
  std::array<float, 3> lo = scan.points[0];
  std::array<float, 3> hi = scan.points[0];
  for (const auto& p : scan.points) {
    for (int d = 0; d < 3; ++d) {
      lo[d] = std::min(lo[d], p[d]);
      hi[d] = std::max(hi[d], p[d]);
    }
  }
  out << indent << "bounds [" << lo[0] << ", " << lo[1] << ", " << lo[2] << "] .. [" << hi[0] << ", " << hi[1]
      << ", " << hi[2] << "]\n";
}

void describe_fields(std::ostringstream& out, const ClusterFields& f, const std::string& indent) {
  out << indent << "points " << f.size() << "\n";
  out << indent << "embedding_dims " << f.embeddings.cols() << "\n";
  if (f.size() == 0) return;
  const auto [lo, hi] = std::minmax_element(f.objectness.begin(), f.objectness.end());
  double sum = 0.0;
  for (double v : f.objectness) sum += v;
  out << indent << "objectness min " << *lo << " mean " << sum / static_cast<double>(f.size()) << " max " << *hi
      << "\n";
}

void describe_sequence(std::ostringstream& out, const fs::path& dir) {
  const SequenceHandle seq = load_sequence(dir);
  out << "sequence " << dir.string() << "\n";
  out << "  scans " << seq.size() << "\n";
  out << "  poses " << (seq.has_poses() ? "yes" : "no") << "\n";
  std::size_t points = 0;
  std::size_t labelled = 0;
  std::size_t with_fields = 0;
  std::map<std::uint32_t, std::size_t> classes;
  std::map<std::uint32_t, std::size_t> ids;
  for (std::size_t pos = 0; pos < seq.size(); ++pos) {
    const Scan scan = seq.scan(pos);
    points += scan.size();
    if (fs::exists(seq.label_path(pos))) {
      ++labelled;
      const PanopticLabels l = seq.labels(pos, scan.size());
      for (std::size_t i = 0; i < l.size(); ++i) {
        ++classes[l.semantic[i]];
        if (l.instance[i] != 0) ++ids[l.instance[i]];
      }
    }
    if (fs::exists(seq.fields_path(pos))) ++with_fields;
  }
  out << "  points " << points << "\n";
  out << "  labelled_scans " << labelled << "\n";
  out << "  field_scans " << with_fields << "\n";
  out << "  classes " << format_count_map(classes) << "\n";
  out << "  instances " << format_count_map(ids) << "\n";
}

}  // namespace

std::vector<std::string> list_sequences(const fs::path& root) {
  const fs::path dir = root / "sequences";
  if (!fs::is_directory(dir)) throw_io("no sequences directory under " + root.string());
  std::vector<std::string> names;
  for (const auto& entry : fs::directory_iterator(dir)) {
    if (entry.is_directory()) names.push_back(entry.path().filename().string());
  }
  std::sort(names.begin(), names.end());
  return names;
}

std::vector<SequenceRunSummary> run_dataset(const RunConfig& config) {
  config.validate();
  const std::vector<std::string> names = config.sequences.empty() ? list_sequences(config.input) : config.sequences;
  std::vector<SequenceRunSummary> out(names.size());
  parallel_for(names.size(), config.threads, [&](std::size_t k) {
    const SequenceHandle seq = load_sequence(sequence_dir(config.input, names[k]), config.scans);
    const PipelineOutput result = run_online_pipeline(seq, config.pipeline);
    const fs::path pred_dir = sequence_dir(config.output, names[k]) / kPredictionDir;
    for (std::size_t pos = 0; pos < seq.size(); ++pos) {
      write_labels(result.labels[pos], pred_dir / (scan_stem(seq.scan_id(pos)) + ".label"));
    }
    out[k] = {names[k], pred_dir, result.stats};
  });
  return out;
}

MetricReport evaluate_dataset(const fs::path& gt_root, const fs::path& pred_root, std::vector<std::string> sequences,
                              const EvalConfig& config, std::size_t threads) {
  config.validate();
  if (threads == 0) throw_validation("threads must be at least 1");
  if (sequences.empty()) sequences = list_sequences(gt_root);
  std::vector<LabelSequence> loaded(sequences.size());
  parallel_for(sequences.size(), threads, [&](std::size_t k) {
    const SequenceHandle gt = load_sequence(sequence_dir(gt_root, sequences[k]));
    const fs::path pred_dir = sequence_dir(pred_root, sequences[k]) / kPredictionDir;
    LabelSequence seq;
    for (std::size_t pos = 0; pos < gt.size(); ++pos) {
      ScanPair pair;
      pair.gt = gt.labels(pos);
      pair.pred = read_labels(pred_dir / (scan_stem(gt.scan_id(pos)) + ".label"), pair.gt.size());
      seq.push_back(std::move(pair));
    }
    loaded[k] = std::move(seq);
  });
  Evaluator evaluator(config);
  for (const auto& seq : loaded) {
    evaluator.begin_sequence();
    for (const auto& pair : seq) evaluator.add_scan(pair.gt, pair.pred);
  }
  return evaluator.report();
}

std::vector<fs::path> generate_dataset(const SynthConfig& config, const fs::path& root) {
  std::vector<fs::path> dirs(config.sequences.size());
  parallel_for(config.sequences.size(), 1, [&](std::size_t k) {
    const auto& [name, spec] = config.sequences[k];
    dirs[k] = sequence_dir(root, name);
    write_sequence(generate_sequence(spec), dirs[k]);
  });
  return dirs;
}

std::string inspect_path(const fs::path& path) {
  std::ostringstream out;
  out.precision(6);
  if (fs::is_directory(path)) {
    if (fs::is_directory(path / "sequences")) {
      const auto names = list_sequences(path);
      out << "dataset " << path.string() << "\n  sequences " << names.size() << "\n";
      for (const auto& name : names) describe_sequence(out, sequence_dir(path, name));
    } else if (fs::is_directory(path / "velodyne")) {
      describe_sequence(out, path);
    } else {
      throw_validation(path.string() + " is neither a dataset root nor a sequence directory");
    }
    return out.str();
  }
  if (!fs::exists(path)) throw_io("no such file: " + path.string());
  const std::string ext = path.extension().string();
  if (ext == ".bin") {
    out << "scan " << path.string() << "\n";
    describe_scan(out, read_point_scan(path), "  ");
  } else if (ext == ".label") {
    const auto bytes = read_file_bytes(path);
    out << "labels " << path.string() << "\n";
    describe_labels(out, decode_labels(bytes, bytes.size() / 4), "  ");
  } else if (ext == ".p4de") {
    out << "fields " << path.string() << "\n";
    describe_fields(out, read_fields(path), "  ");
  } else {
    throw_validation("cannot inspect " + path.string() + ": expected .bin, .label, .p4de or a directory");
  }
  return out.str();
}

}  // namespace p4d
