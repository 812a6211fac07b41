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

#include "p4d/clustering.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <numeric>

#include "p4d/error.hpp"

namespace p4d {

FeatureMode parse_feature_mode(const std::string& name) {
  if (name == "xyz") return FeatureMode::kXyz;
  if (name == "xyzt") return FeatureMode::kXyzt;
  if (name == "emb") return FeatureMode::kEmb;
  if (name == "emb+xyz") return FeatureMode::kEmbXyz;
  if (name == "emb+xyzt") return FeatureMode::kEmbXyzt;
  throw_validation("unknown feature mode '" + name + "' (expected xyz, xyzt, emb, emb+xyz or emb+xyzt)");
}

std::string to_string(FeatureMode mode) {
  switch (mode) {
    case FeatureMode::kXyz: return "xyz";
    case FeatureMode::kXyzt: return "xyzt";
    case FeatureMode::kEmb: return "emb";
    case FeatureMode::kEmbXyz: return "emb+xyz";
    case FeatureMode::kEmbXyzt: return "emb+xyzt";
  }
  return "unknown";
}

void ClusterParams::validate() const {
  if (!(assign_prob > 0.0 && assign_prob < 1.0)) throw_validation("assign_prob must lie in (0, 1)");
  if (min_points < 1) throw_validation("min_points must be >= 1");
  if (!(spatial_variance > 0.0) || !(temporal_variance > 0.0)) {
    throw_validation("default coordinate variances must be positive");
  }
  if (!std::isfinite(seed_stop)) throw_validation("seed_stop must be finite");
}

PointFeatures build_point_features(const Volume4D& volume, const ClusterFields& fields, const ClusterParams& params) {
  const std::size_t m = volume.size();
  const bool use_emb = params.feature_mode == FeatureMode::kEmb || params.feature_mode == FeatureMode::kEmbXyz ||
                       params.feature_mode == FeatureMode::kEmbXyzt;
  const std::size_t coord_dims = params.feature_mode == FeatureMode::kXyz || params.feature_mode == FeatureMode::kEmbXyz
                                     ? 3
                                 : params.feature_mode == FeatureMode::kEmb ? 0
                                                                            : 4;
  const bool have_fields = fields.size() > 0 || fields.embeddings.cols() > 0;
  if (have_fields && fields.size() != m) {
    throw_validation("cluster fields have " + std::to_string(fields.size()) + " rows, volume has " +
                     std::to_string(m));
  }
  if (use_emb && (!have_fields || fields.embeddings.cols() == 0)) {
    throw_validation("feature mode " + to_string(params.feature_mode) + " needs embeddings");
  }
  const std::size_t emb_dims = use_emb ? fields.embeddings.cols() : 0;
  const std::size_t dim = emb_dims + coord_dims;

  PointFeatures out{Matrix(m, dim), Matrix(m, dim)};
  const std::size_t var_cols = have_fields ? fields.variances.cols() : 0;
  const bool full_variance = var_cols == dim;
  if (use_emb && !full_variance && var_cols != emb_dims) {
    throw_validation("variance columns (" + std::to_string(var_cols) + ") match neither D_e (" +
                     std::to_string(emb_dims) + ") nor D (" + std::to_string(dim) + ")");
  }
  for (std::size_t r = 0; r < m; ++r) {
    std::size_t c = 0;
    for (; c < emb_dims; ++c) out.features(r, c) = fields.embeddings(r, c);
    for (std::size_t k = 0; k < coord_dims; ++k) out.features(r, emb_dims + k) = volume.coords[r][k];
    for (std::size_t k = 0; k < dim; ++k) {
      if (full_variance) {
        out.variances(r, k) = fields.variances(r, k);
      } else if (k < emb_dims) {
        out.variances(r, k) = fields.variances(r, k);
      } else {
        out.variances(r, k) = (k - emb_dims) < 3 ? params.spatial_variance : params.temporal_variance;
      }
    }
  }
  return out;
}

double gaussian_affinity(std::span<const double> seed, std::span<const double> query,
                         std::span<const double> seed_variance, bool normalized) {
  if (seed.size() != query.size() || seed.size() != seed_variance.size()) {
    throw_validation("affinity dimensions disagree");
  }
  double mahalanobis = 0.0;
  double log_det = 0.0;
  for (std::size_t d = 0; d < seed.size(); ++d) {
    const double v = seed_variance[d];
    if (!(v > 0.0)) throw_validation("variance must be positive");
    const double diff = seed[d] - query[d];
    mahalanobis += diff * diff / v;
    log_det += std::log(v);
  }
  double log_p = -0.5 * mahalanobis;
  if (normalized) {
    log_p -= 0.5 * static_cast<double>(seed.size()) * std::log(2.0 * M_PI) + 0.5 * log_det;
  }
  return std::exp(log_p);
}

InstanceAssignment cluster_volume(const PointFeatures& features, std::span<const double> objectness,
                                  const ClusterParams& params) {
  params.validate();
  const std::size_t m = features.features.rows();
  if (objectness.size() != m || features.variances.rows() != m) {
    throw_validation("cluster_volume: features, variances and objectness differ in length");
  }
  InstanceAssignment out;
  out.instance_id.assign(m, 0);
  if (m == 0) return out;

  std::vector<std::size_t> order(m);
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t a, std::size_t b) { return objectness[a] > objectness[b]; });

  std::vector<std::uint8_t> taken(m, 0);
  std::vector<Instance> grown;
  std::size_t cursor = 0;
  while (true) {
    while (cursor < m && taken[order[cursor]]) ++cursor;
    if (cursor == m) break;
    const std::size_t seed = order[cursor];
    if (objectness[seed] < params.seed_stop) break;

    Instance inst;
    inst.seed = seed;
    const auto seed_row = features.features.row(seed);
    const auto seed_var = features.variances.row(seed);
    for (std::size_t j = 0; j < m; ++j) {
      if (taken[j]) continue;
      if (j == seed ||
          gaussian_affinity(seed_row, features.features.row(j), seed_var, params.normalized_pdf) > params.assign_prob) {
        inst.members.push_back(j);
        taken[j] = 1;
      }
    }
    grown.push_back(std::move(inst));
  }

  for (Instance& inst : grown) {
    if (inst.members.size() < params.min_points) continue;
    out.instances.push_back(std::move(inst));
    const auto id = static_cast<std::uint32_t>(out.instances.size());
    for (std::size_t j : out.instances.back().members) out.instance_id[j] = id;
  }
  return out;
}

void majority_vote_classes(InstanceAssignment& assignment, std::span<const std::uint32_t> semantic,
                           std::span<const std::uint32_t> thing_classes) {
  if (semantic.size() != assignment.instance_id.size()) {
    throw_validation("majority vote: semantic predictions do not match the assignment");
  }
  std::vector<Instance> kept;
  std::fill(assignment.instance_id.begin(), assignment.instance_id.end(), 0u);
  for (Instance& inst : assignment.instances) {
    std::map<std::uint32_t, std::size_t> votes;
    for (std::size_t j : inst.members) ++votes[semantic[j]];
    std::uint32_t best = 0;
    std::size_t best_count = 0;
    for (const auto& [cls, count] : votes) {
      if (count > best_count) {  // map order gives the smaller id on ties
        best = cls;
        best_count = count;
      }
    }
    inst.semantic = best;
    if (std::find(thing_classes.begin(), thing_classes.end(), best) == thing_classes.end()) continue;
    kept.push_back(std::move(inst));
    const auto id = static_cast<std::uint32_t>(kept.size());
    for (std::size_t j : kept.back().members) assignment.instance_id[j] = id;
  }
  assignment.instances = std::move(kept);
}

}  // namespace p4d
