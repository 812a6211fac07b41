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

#include "p4d/fields.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstring>
#include <string>

#include "p4d/error.hpp"
#include "p4d/kitti_io.hpp"

namespace p4d {

namespace {

constexpr char kMagic[4] = {'P', '4', 'D', 'E'};

class ByteReader {
 public:
  explicit ByteReader(std::span<const std::uint8_t> bytes) : bytes_(bytes) {}

  std::uint32_t u32() {
    need(4);
    const std::uint8_t* p = bytes_.data() + pos_;
    pos_ += 4;
    return static_cast<std::uint32_t>(p[0]) | (static_cast<std::uint32_t>(p[1]) << 8) |
           (static_cast<std::uint32_t>(p[2]) << 16) | (static_cast<std::uint32_t>(p[3]) << 24);
  }
  float f32() { return std::bit_cast<float>(u32()); }
  void need(std::size_t n) const {
    if (bytes_.size() - pos_ < n) throw_validation("truncated P4DE sidecar");
  }
  std::size_t remaining() const { return bytes_.size() - pos_; }

 private:
  std::span<const std::uint8_t> bytes_;
  std::size_t pos_ = 0;
};

void put_u32(std::vector<std::uint8_t>& out, std::uint32_t v) {
  for (int k = 0; k < 4; ++k) out.push_back(static_cast<std::uint8_t>((v >> (8 * k)) & 0xFF));
}

void put_f32(std::vector<std::uint8_t>& out, double v) {
  put_u32(out, std::bit_cast<std::uint32_t>(static_cast<float>(v)));
}

}  // namespace

void ClusterFields::validate() const {
  const std::size_t n = objectness.size();
  if (embeddings.rows() != n || variances.rows() != n) {
    throw_validation("cluster field row counts differ (embeddings " + std::to_string(embeddings.rows()) +
                     ", variances " + std::to_string(variances.rows()) + ", objectness " +
                     std::to_string(n) + ")");
  }
  for (double v : variances.data()) {
    if (!(v > 0.0) || !std::isfinite(v)) throw_validation("variances must be finite and positive");
  }
  for (double o : objectness) {
    if (!(o >= 0.0 && o <= 1.0)) throw_validation("objectness must lie in [0, 1]");
  }
  for (double e : embeddings.data()) {
    if (!std::isfinite(e)) throw_validation("non-finite embedding value");
  }
}

ClusterFields ClusterFields::select(std::span<const std::size_t> rows) const {
  ClusterFields out;
  out.embeddings = Matrix(rows.size(), embeddings.cols());
  out.variances = Matrix(rows.size(), variances.cols());
  out.objectness.resize(rows.size());
  for (std::size_t r = 0; r < rows.size(); ++r) {
    const std::size_t src = rows[r];
    std::copy_n(embeddings.row(src).begin(), embeddings.cols(), out.embeddings.row(r).begin());
    std::copy_n(variances.row(src).begin(), variances.cols(), out.variances.row(r).begin());
    out.objectness[r] = objectness[src];
  }
  return out;
}

void ClusterFields::append(const ClusterFields& other) {
  if (size() == 0 && embeddings.cols() == 0 && variances.cols() == 0) {
    *this = other;
    return;
  }
  if (other.embeddings.cols() != embeddings.cols() || other.variances.cols() != variances.cols()) {
    throw_validation("cannot append cluster fields of different dimension");
  }
  Matrix e(embeddings.rows() + other.embeddings.rows(), embeddings.cols());
  Matrix v(variances.rows() + other.variances.rows(), variances.cols());
  std::copy(embeddings.data().begin(), embeddings.data().end(), e.data().begin());
  std::copy(other.embeddings.data().begin(), other.embeddings.data().end(),
            e.data().begin() + static_cast<std::ptrdiff_t>(embeddings.data().size()));
  std::copy(variances.data().begin(), variances.data().end(), v.data().begin());
  std::copy(other.variances.data().begin(), other.variances.data().end(),
            v.data().begin() + static_cast<std::ptrdiff_t>(variances.data().size()));
  embeddings = std::move(e);
  variances = std::move(v);
  objectness.insert(objectness.end(), other.objectness.begin(), other.objectness.end());
}

std::vector<std::uint8_t> encode_fields(const ClusterFields& fields) {
  const std::size_t n = fields.size();
  const std::size_t d = fields.embeddings.cols();
  if (fields.embeddings.rows() != n || fields.variances.rows() != n || fields.variances.cols() != d) {
    throw_validation("P4DE sidecar needs N x D_e embeddings and variances");
  }
  std::vector<std::uint8_t> out(kMagic, kMagic + 4);
  put_u32(out, kFieldsVersion);
  put_u32(out, static_cast<std::uint32_t>(n));
  put_u32(out, static_cast<std::uint32_t>(d));
  for (double v : fields.embeddings.data()) put_f32(out, v);
  for (double v : fields.objectness) put_f32(out, v);
  for (double v : fields.variances.data()) put_f32(out, v);
  return out;
}

ClusterFields decode_fields(std::span<const std::uint8_t> bytes) {
  if (bytes.size() < 4 || std::memcmp(bytes.data(), kMagic, 4) != 0) {
    throw_validation("not a P4DE sidecar (bad magic)");
  }
  ByteReader in(bytes.subspan(4));
  const std::uint32_t version = in.u32();
  if (version != kFieldsVersion) throw_validation("unsupported P4DE version " + std::to_string(version));
  const std::size_t n = in.u32();
  const std::size_t d = in.u32();
  const std::size_t expected = 4 * (2 * n * d + n);
  if (in.remaining() != expected) {
    throw_validation("P4DE payload is " + std::to_string(in.remaining()) + " bytes, expected " +
                     std::to_string(expected));
  }
  ClusterFields f;
  f.embeddings = Matrix(n, d);
  f.variances = Matrix(n, d);
  f.objectness.resize(n);
  for (double& v : f.embeddings.data()) v = in.f32();
  for (double& v : f.objectness) v = in.f32();
  for (double& v : f.variances.data()) v = in.f32();
  return f;
}

ClusterFields read_fields(const std::filesystem::path& path) {
  try {
    return decode_fields(read_file_bytes(path));
  } catch (const Error& e) {
    if (e.kind() == ErrorKind::kIo) throw;
    throw Error(e.kind(), path.string() + ": " + e.what());
  }
}

void write_fields(const ClusterFields& fields, const std::filesystem::path& path) {
  write_file_bytes(path, encode_fields(fields));
}

}  // namespace p4d
