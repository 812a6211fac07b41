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

#include "p4d/kitti_io.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <iomanip>
#include <sstream>

#include "p4d/error.hpp"

namespace p4d {

namespace fs = std::filesystem;

namespace {

std::uint32_t load_u32_le(const std::uint8_t* p) {
  return static_cast<std::uint32_t>(p[0]) | (static_cast<std::uint32_t>(p[1]) << 8) |
         (static_cast<std::uint32_t>(p[2]) << 16) | (static_cast<std::uint32_t>(p[3]) << 24);
}

void store_u32_le(std::uint32_t v, std::vector<std::uint8_t>& out) {
  out.push_back(static_cast<std::uint8_t>(v & 0xFF));
  out.push_back(static_cast<std::uint8_t>((v >> 8) & 0xFF));
  out.push_back(static_cast<std::uint8_t>((v >> 16) & 0xFF));
  out.push_back(static_cast<std::uint8_t>((v >> 24) & 0xFF));
}

std::vector<double> parse_decimals(const std::string& text) {
  std::istringstream in(text);
  in.imbue(std::locale::classic());
  std::vector<double> values;
  std::string token;
  while (in >> token) {
    std::size_t used = 0;
    double v = 0.0;
    try {
      v = std::stod(token, &used);
    } catch (const std::exception&) {
      used = 0;
    }
    if (used != token.size()) throw_validation("not a decimal: '" + token + "'");
    values.push_back(v);
  }
  return values;
}

std::string format_pose_line(const Pose& pose) {
  std::ostringstream out;
  out.imbue(std::locale::classic());
  out << std::setprecision(17);
  const auto& m = pose.matrix();
  for (std::size_t i = 0; i < m.size(); ++i) {
    if (i) out << ' ';
    out << m[i];
  }
  return out.str();
}

}  // namespace

Scan decode_point_scan(std::span<const std::uint8_t> bytes, std::size_t scan_index) {
  if (bytes.size() % 16 != 0) {
    throw_validation("truncated point scan: " + std::to_string(bytes.size()) +
                     " bytes is not a multiple of 16");
  }
  const std::size_t n = bytes.size() / 16;
  Scan scan;
  scan.scan_index = scan_index;
  scan.points.resize(n);
  scan.remission.resize(n);
  for (std::size_t i = 0; i < n; ++i) {
    const std::uint8_t* rec = bytes.data() + 16 * i;
    float v[4];
    for (int k = 0; k < 4; ++k) v[k] = std::bit_cast<float>(load_u32_le(rec + 4 * k));
    for (int k = 0; k < 4; ++k) {
      if (!std::isfinite(v[k])) {
        throw_validation("non-finite value in point " + std::to_string(i));
      }
    }
    scan.points[i] = {v[0], v[1], v[2]};
    scan.remission[i] = v[3];
  }
  return scan;
}

std::vector<std::uint8_t> encode_point_scan(const Scan& scan) {
  if (scan.points.size() != scan.remission.size()) {
    throw_validation("scan points and remission differ in length");
  }
  std::vector<std::uint8_t> out;
  out.reserve(scan.size() * 16);
  for (std::size_t i = 0; i < scan.size(); ++i) {
    for (float v : scan.points[i]) store_u32_le(std::bit_cast<std::uint32_t>(v), out);
    store_u32_le(std::bit_cast<std::uint32_t>(scan.remission[i]), out);
  }
  return out;
}

PanopticLabels decode_labels(std::span<const std::uint8_t> bytes, std::size_t expected_n) {
  if (bytes.size() != 4 * expected_n) {
    throw_validation("label length mismatch: " + std::to_string(bytes.size()) +
                     " bytes for " + std::to_string(expected_n) + " points");
  }
  PanopticLabels labels(expected_n);
  for (std::size_t i = 0; i < expected_n; ++i) {
    const std::uint32_t word = load_u32_le(bytes.data() + 4 * i);
    labels.semantic[i] = word & 0xFFFFu;
    labels.instance[i] = word >> 16;
  }
  return labels;
}

std::vector<std::uint8_t> encode_labels(const PanopticLabels& labels) {
  if (labels.semantic.size() != labels.instance.size()) {
    throw_validation("semantic and instance arrays differ in length");
  }
  std::vector<std::uint8_t> out;
  out.reserve(labels.size() * 4);
  for (std::size_t i = 0; i < labels.size(); ++i) {
    if (labels.semantic[i] > kMaxLabelValue || labels.instance[i] > kMaxLabelValue) {
      throw_validation("label value overflow at point " + std::to_string(i) + ": class " +
                       std::to_string(labels.semantic[i]) + ", instance " +
                       std::to_string(labels.instance[i]));
    }
    store_u32_le(labels.semantic[i] | (labels.instance[i] << 16), out);
  }
  return out;
}

std::vector<std::uint8_t> read_file_bytes(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw_io("cannot open " + path.string());
  std::vector<std::uint8_t> bytes((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  if (in.bad()) throw_io("read failed: " + path.string());
  return bytes;
}

void write_file_bytes(const fs::path& path, std::span<const std::uint8_t> bytes) {
  if (path.has_parent_path()) {
    std::error_code ec;
    fs::create_directories(path.parent_path(), ec);
  }
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw_io("cannot create " + path.string());
  out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
  if (!out) throw_io("write failed: " + path.string());
}

Scan read_point_scan(const fs::path& path, std::size_t scan_index) {
  try {
    return decode_point_scan(read_file_bytes(path), scan_index);
  } catch (const Error& e) {
    if (e.kind() == ErrorKind::kIo) throw;
    throw Error(e.kind(), path.string() + ": " + e.what());
  }
}

void write_point_scan(const Scan& scan, const fs::path& path) {
  write_file_bytes(path, encode_point_scan(scan));
}

PanopticLabels read_labels(const fs::path& path, std::size_t expected_n) {
  try {
    return decode_labels(read_file_bytes(path), expected_n);
  } catch (const Error& e) {
    if (e.kind() == ErrorKind::kIo) throw;
    throw Error(e.kind(), path.string() + ": " + e.what());
  }
}

void write_labels(const PanopticLabels& labels, const fs::path& path) {
  write_file_bytes(path, encode_labels(labels));
}

Pose parse_pose_line(const std::string& line, const std::string& frame) {
  const auto values = parse_decimals(line);
  if (values.size() != 12) {
    throw_validation("pose line has " + std::to_string(values.size()) + " values, expected 12");
  }
  std::array<double, 12> m{};
  std::copy(values.begin(), values.end(), m.begin());
  Pose pose(m, frame);
  if (!pose.is_finite()) throw_validation("non-finite pose value");
  return pose;
}

Pose read_calib_tr(const fs::path& calib_path) {
  std::ifstream in(calib_path);
  if (!in) throw_io("cannot open " + calib_path.string());
  std::string line;
  while (std::getline(in, line)) {
    const auto colon = line.find(':');
    if (colon == std::string::npos) continue;
    std::string key = line.substr(0, colon);
    key.erase(std::remove_if(key.begin(), key.end(), [](unsigned char c) { return std::isspace(c); }),
              key.end());
    if (key == "Tr") {
      try {
        return parse_pose_line(line.substr(colon + 1), "camera");
      } catch (const Error& e) {
        throw_validation(calib_path.string() + ": Tr: " + e.what());
      }
    }
  }
  throw_validation(calib_path.string() + ": missing Tr line");
}

std::vector<Pose> read_poses(const fs::path& poses_path, const fs::path& calib_path) {
  const Pose tr = read_calib_tr(calib_path);
  const Pose tr_inv = tr.inverse();
  std::ifstream in(poses_path);
  if (!in) throw_io("cannot open " + poses_path.string());
  std::vector<Pose> poses;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    Pose cam;
    try {
      cam = parse_pose_line(line, "camera");
    } catch (const Error& e) {
      throw_validation(poses_path.string() + ":" + std::to_string(line_no) + ": " + e.what());
    }
    Pose lidar = tr_inv.compose(cam).compose(tr);
    poses.emplace_back(lidar.matrix(), "world");
  }
  return poses;
}

void write_poses(std::span<const Pose> lidar_poses, const Pose& tr, const fs::path& poses_path) {
  const Pose tr_inv = tr.inverse();
  std::ostringstream out;
  for (const Pose& p : lidar_poses) out << format_pose_line(tr.compose(p).compose(tr_inv)) << '\n';
  const std::string text = out.str();
  write_file_bytes(poses_path, {reinterpret_cast<const std::uint8_t*>(text.data()), text.size()});
}

void write_calib(const Pose& tr, const fs::path& calib_path) {
  const std::string text = "Tr: " + format_pose_line(tr) + "\n";
  write_file_bytes(calib_path, {reinterpret_cast<const std::uint8_t*>(text.data()), text.size()});
}

std::string scan_stem(std::size_t scan_id) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%06zu", scan_id);
  return buf;
}

SequenceHandle::SequenceHandle(fs::path dir, std::vector<std::size_t> scan_ids, std::vector<Pose> poses)
    : dir_(std::move(dir)), scan_ids_(std::move(scan_ids)), poses_(std::move(poses)) {}

void SequenceHandle::check_pos(std::size_t pos) const {
  if (pos >= scan_ids_.size()) {
    throw_validation("scan position " + std::to_string(pos) + " out of range (sequence has " +
                     std::to_string(scan_ids_.size()) + " scans)");
  }
}

std::size_t SequenceHandle::scan_id(std::size_t pos) const {
  check_pos(pos);
  return scan_ids_[pos];
}

fs::path SequenceHandle::scan_path(std::size_t pos) const {
  return dir_ / "velodyne" / (scan_stem(scan_id(pos)) + ".bin");
}

fs::path SequenceHandle::label_path(std::size_t pos, const std::string& subdir) const {
  return dir_ / subdir / (scan_stem(scan_id(pos)) + ".label");
}

fs::path SequenceHandle::fields_path(std::size_t pos) const {
  return dir_ / "fields" / (scan_stem(scan_id(pos)) + ".p4de");
}

Scan SequenceHandle::scan(std::size_t pos) const {
  return read_point_scan(scan_path(pos), scan_id(pos));
}

const Pose& SequenceHandle::pose(std::size_t pos) const {
  const std::size_t id = scan_id(pos);
  if (id >= poses_.size()) {
    throw_validation(dir_.string() + ": no pose for scan " + std::to_string(id));
  }
  return poses_[id];
}

PanopticLabels SequenceHandle::labels(std::size_t pos, std::size_t expected_n,
                                      const std::string& subdir) const {
  const fs::path path = label_path(pos, subdir);
  if (!fs::exists(path)) throw_io("missing label file " + path.string());
  return read_labels(path, expected_n);
}

PanopticLabels SequenceHandle::labels(std::size_t pos, const std::string& subdir) const {
  const fs::path sp = scan_path(pos);
  std::error_code ec;
  const auto bytes = fs::file_size(sp, ec);
  if (ec) throw_io("missing scan file " + sp.string());
  if (bytes % 16 != 0) throw_validation(sp.string() + ": truncated point scan");
  return labels(pos, static_cast<std::size_t>(bytes / 16), subdir);
}

SequenceHandle load_sequence(const fs::path& dir, ScanRange range) {
  const fs::path velodyne = dir / "velodyne";
  if (!fs::is_directory(velodyne)) throw_io("missing directory " + velodyne.string());
  std::vector<std::size_t> ids;
  for (const auto& entry : fs::directory_iterator(velodyne)) {
    if (!entry.is_regular_file() || entry.path().extension() != ".bin") continue;
    const std::string stem = entry.path().stem().string();
    if (stem.empty() || !std::all_of(stem.begin(), stem.end(), [](unsigned char c) { return std::isdigit(c); })) {
      continue;
    }
    ids.push_back(static_cast<std::size_t>(std::stoull(stem)));
  }
  std::sort(ids.begin(), ids.end());
  const std::size_t end = range.end.value_or(ids.size());
  if (range.begin > ids.size() || end > ids.size() || range.begin > end) {
    throw_validation("scan range [" + std::to_string(range.begin) + ", " + std::to_string(end) +
                     ") out of range for " + std::to_string(ids.size()) + " scans in " + dir.string());
  }
  std::vector<std::size_t> selected(ids.begin() + static_cast<std::ptrdiff_t>(range.begin),
                                    ids.begin() + static_cast<std::ptrdiff_t>(end));
  std::vector<Pose> poses;
  if (fs::exists(dir / "poses.txt")) {
    if (!fs::exists(dir / "calib.txt")) throw_io("missing " + (dir / "calib.txt").string());
    poses = read_poses(dir / "poses.txt", dir / "calib.txt");
  }
  return SequenceHandle(dir, std::move(selected), std::move(poses));
}

}  // namespace p4d
