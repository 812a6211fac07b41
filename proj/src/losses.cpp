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

#include "p4d/losses.hpp"

#include <algorithm>
#include <cmath>
#include <map>

#include "p4d/error.hpp"

namespace p4d {

InstanceGroundTruth::InstanceGroundTruth(std::vector<std::uint32_t> instance_ids) : ids_(std::move(instance_ids)) {
  std::map<std::uint32_t, std::vector<std::size_t>> groups;
  for (std::size_t i = 0; i < ids_.size(); ++i) {
    if (ids_[i] != 0) groups[ids_[i]].push_back(i);
  }
  for (auto& [id, members] : groups) {
    labels_.push_back(id);
    members_.push_back(std::move(members));
  }
}

std::vector<double> InstanceGroundTruth::member_mean(const Matrix& values, std::size_t k) const {
  std::vector<double> mean(values.cols(), 0.0);
  const auto& m = members_[k];
  for (std::size_t i : m) {
    for (std::size_t d = 0; d < values.cols(); ++d) mean[d] += values(i, d);
  }
  for (double& v : mean) v /= static_cast<double>(m.size());
  return mean;
}

std::vector<double> objectness_target(const Matrix& coords, const InstanceGroundTruth& gt) {
  if (coords.rows() != gt.num_points()) throw_validation("objectness_target: coordinate rows do not match labels");
  std::vector<double> o(coords.rows(), 0.0);
  for (std::size_t k = 0; k < gt.num_instances(); ++k) {
    const auto center = gt.member_mean(coords, k);
    std::vector<double> dist;
    double d_max = 0.0;
    for (std::size_t i : gt.members(k)) {
      double d2 = 0.0;
      for (std::size_t c = 0; c < coords.cols(); ++c) d2 += (coords(i, c) - center[c]) * (coords(i, c) - center[c]);
      dist.push_back(std::sqrt(d2));
      d_max = std::max(d_max, dist.back());
    }
    for (std::size_t m = 0; m < dist.size(); ++m) {
      o[gt.members(k)[m]] = d_max > 0.0 ? 1.0 - dist[m] / d_max : 1.0;
    }
  }
  return o;
}

LossValue objectness_loss(std::span<const double> pred, std::span<const double> target) {
  if (pred.size() != target.size()) throw_validation("objectness_loss: length mismatch");
  LossValue out;
  out.grad.resize(pred.size());
  for (std::size_t i = 0; i < pred.size(); ++i) {
    const double r = pred[i] - target[i];
    out.value += r * r;
    out.grad[i] = 2.0 * r;
  }
  return out;
}

InstanceLossValue instance_loss(const Matrix& features, const Matrix& variances, const InstanceGroundTruth& gt,
                                bool normalized) {
  const std::size_t n = features.rows();
  const std::size_t dim = features.cols();
  if (variances.rows() != n || variances.cols() != dim || gt.num_points() != n) {
    throw_validation("instance_loss: features, variances and labels disagree in shape");
  }
  for (double v : variances.data()) {
    if (!(v > 0.0)) throw_validation("instance_loss: variance must be positive");
  }
  InstanceLossValue out{0.0, Matrix(n, dim), Matrix(n, dim)};
  std::vector<double> delta(dim);
  for (std::size_t k = 0; k < gt.num_instances(); ++k) {
    const std::uint32_t id = gt.instance_id(k);
    const auto mu = gt.member_mean(features, k);
    const auto s = gt.member_mean(variances, k);
    double log_c = 0.0;
    if (normalized) {
      log_c = -0.5 * static_cast<double>(dim) * std::log(2.0 * M_PI);
      for (double v : s) log_c -= 0.5 * std::log(v);
    }
    std::vector<double> g_mu(dim, 0.0);
    std::vector<double> g_s(dim, 0.0);
    for (std::size_t i = 0; i < n; ++i) {
      double q = 0.0;
      for (std::size_t d = 0; d < dim; ++d) {
        delta[d] = mu[d] - features(i, d);
        q += delta[d] * delta[d] / s[d];
      }
      const double p_hat = std::exp(log_c - 0.5 * q);
      const double r = p_hat - (gt.ids()[i] == id ? 1.0 : 0.0);
      out.value += r * r;
      const double g = 2.0 * r * p_hat;
      for (std::size_t d = 0; d < dim; ++d) {
        const double w = delta[d] / s[d];
        out.grad_features(i, d) += g * w;
        g_mu[d] -= g * w;
        g_s[d] += g * (0.5 * w * w - (normalized ? 0.5 / s[d] : 0.0));
      }
    }
    const double inv_n = 1.0 / static_cast<double>(gt.members(k).size());
    for (std::size_t m : gt.members(k)) {
      for (std::size_t d = 0; d < dim; ++d) {
        out.grad_features(m, d) += g_mu[d] * inv_n;
        out.grad_variances(m, d) += g_s[d] * inv_n;
      }
    }
  }
  return out;
}

LossValue variance_smoothness_loss(const Matrix& variances, const InstanceGroundTruth& gt) {
  if (variances.rows() != gt.num_points()) throw_validation("variance_smoothness_loss: row mismatch");
  LossValue out;
  out.grad.assign(variances.data().size(), 0.0);
  const std::size_t dim = variances.cols();
  for (std::size_t k = 0; k < gt.num_instances(); ++k) {
    const auto mean = gt.member_mean(variances, k);
    const double inv_n = 1.0 / static_cast<double>(gt.members(k).size());
    for (std::size_t i : gt.members(k)) {
      for (std::size_t d = 0; d < dim; ++d) {
        const double r = variances(i, d) - mean[d];
        out.value += inv_n * r * r;
        // The mean's own dependence cancels because member deviations sum to zero.
        out.grad[i * dim + d] = 2.0 * inv_n * r;
      }
    }
  }
  return out;
}

LossValue class_loss(const Matrix& scores, std::span<const std::uint32_t> gt_classes,
                     std::span<const std::size_t> sampled) {
  if (gt_classes.size() != scores.rows()) throw_validation("class_loss: label count does not match score rows");
  LossValue out;
  out.grad.assign(scores.data().size(), 0.0);
  if (sampled.empty()) return out;
  const std::size_t c = scores.cols();
  const double inv = 1.0 / static_cast<double>(sampled.size());
  std::vector<double> prob(c);
  for (std::size_t i : sampled) {
    if (i >= scores.rows()) throw_validation("class_loss: sampled index out of range");
    const std::uint32_t label = gt_classes[i];
    if (label >= c) throw_validation("class_loss: class id outside the score columns");
    const auto row = scores.row(i);
    const double top = *std::max_element(row.begin(), row.end());
    double z = 0.0;
    for (std::size_t k = 0; k < c; ++k) {
      prob[k] = std::exp(row[k] - top);
      z += prob[k];
    }
    out.value += inv * (std::log(z) + top - row[label]);
    for (std::size_t k = 0; k < c; ++k) {
      out.grad[i * c + k] += inv * (prob[k] / z - (k == label ? 1.0 : 0.0));
    }
  }
  return out;
}

std::vector<std::size_t> balanced_class_sample(std::span<const std::uint32_t> gt_classes, std::size_t budget,
                                               Rng& rng) {
  if (budget > gt_classes.size()) throw_validation("balanced_class_sample: budget exceeds point count");
  std::map<std::uint32_t, std::size_t> counts;
  for (std::uint32_t c : gt_classes) ++counts[c];
  std::vector<double> weights;
  weights.reserve(gt_classes.size());
  for (std::uint32_t c : gt_classes) weights.push_back(1.0 / static_cast<double>(counts[c]));
  return weighted_sample_without_replacement(weights, budget, rng);
}

double total_loss(const LossComponents& c) {
  return c.classification + c.objectness + c.instance + c.variance;
}

}  // namespace p4d
