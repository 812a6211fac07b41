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

#include "p4d/gradcheck.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>

#include "p4d/losses.hpp"
#include "p4d/random.hpp"

namespace p4d {

std::vector<double> central_difference(const std::function<double(std::span<const double>)>& loss,
                                       std::vector<double> x, double step) {
  std::vector<double> grad(x.size());
  for (std::size_t i = 0; i < x.size(); ++i) {
    const double saved = x[i];
    x[i] = saved + step;
    const double up = loss(x);
    x[i] = saved - step;
    const double down = loss(x);
    x[i] = saved;
    grad[i] = (up - down) / (2.0 * step);
  }
  return grad;
}

double relative_error(std::span<const double> a, std::span<const double> b) {
  double diff = 0.0;
  double na = 0.0;
  double nb = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    diff += (a[i] - b[i]) * (a[i] - b[i]);
    na += a[i] * a[i];
    nb += b[i] * b[i];
  }
  const double scale = std::sqrt(std::max(na, nb));
  return scale == 0.0 ? 0.0 : std::sqrt(diff) / scale;
}

namespace {

struct Problem {
  std::size_t n;
  std::size_t dim;
  std::vector<std::uint32_t> ids;
  Matrix coords;
};

// Points scattered around a few instance centres plus background.
Problem random_problem(Rng& rng) {
  Problem p;
  p.n = 10 + rng.index(91);
  p.dim = 1 + rng.index(6);
  const std::size_t k = 1 + rng.index(4);
  std::vector<std::vector<double>> centers(k, std::vector<double>(p.dim));
  for (auto& c : centers) {
    for (double& v : c) v = 2.0 * rng.normal();
  }
  p.coords = Matrix(p.n, p.dim);
  p.ids.resize(p.n);
  for (std::size_t i = 0; i < p.n; ++i) {
    const std::size_t pick = rng.index(k + 1);
    p.ids[i] = pick < k ? static_cast<std::uint32_t>(pick + 1) : 0;
    for (std::size_t d = 0; d < p.dim; ++d) {
      p.coords(i, d) = pick < k ? centers[pick][d] + 0.7 * rng.normal() : 2.5 * rng.normal();
    }
  }
  // At least one instance member.
  p.ids[0] = 1;
  return p;
}

Matrix from_flat(std::span<const double> x, std::size_t rows, std::size_t cols) {
  Matrix m(rows, cols);
  std::copy(x.begin(), x.end(), m.data().begin());
  return m;
}

template <typename Fn>
GradCheckRow run(const std::string& name, std::size_t trials, double tolerance, Fn&& one) {
  GradCheckRow row;
  row.loss = name;
  const auto start = std::chrono::steady_clock::now();
  for (std::size_t t = 0; t < trials; ++t) {
    row.max_relative_error = std::max(row.max_relative_error, one(t));
    ++row.problems;
  }
  row.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  row.passed = row.max_relative_error < tolerance;
  return row;
}

}  // namespace

std::vector<GradCheckRow> check_gradients(std::uint64_t seed, std::size_t trials, double step, double tolerance) {
  std::vector<GradCheckRow> rows;

  rows.push_back(run("objectness", trials, tolerance, [&](std::size_t t) {
    Rng rng(derive_seed(seed, 100 + t));
    Problem p = random_problem(rng);
    const InstanceGroundTruth gt(p.ids);
    const auto target = objectness_target(p.coords, gt);
    std::vector<double> pred(p.n);
    for (double& v : pred) v = rng.uniform();
    const auto analytic = objectness_loss(pred, target).grad;
    const auto numeric = central_difference(
        [&](std::span<const double> x) { return objectness_loss(x, target).value; }, pred, step);
    return relative_error(analytic, numeric);
  }));

  rows.push_back(run("instance", trials, tolerance, [&](std::size_t t) {
    Rng rng(derive_seed(seed, 200 + t));
    Problem p = random_problem(rng);
    const InstanceGroundTruth gt(p.ids);
    Matrix variances(p.n, p.dim);
    for (double& v : variances.data()) v = 0.5 + 1.5 * rng.uniform();
    const bool normalized = t % 2 == 1;
    const auto value = instance_loss(p.coords, variances, gt, normalized);
    std::vector<double> x = p.coords.data();
    x.insert(x.end(), variances.data().begin(), variances.data().end());
    const std::size_t half = p.coords.data().size();
    const auto numeric = central_difference(
        [&](std::span<const double> v) {
          return instance_loss(from_flat(v.first(half), p.n, p.dim), from_flat(v.subspan(half), p.n, p.dim), gt,
                               normalized)
              .value;
        },
        x, step);
    std::vector<double> analytic = value.grad_features.data();
    analytic.insert(analytic.end(), value.grad_variances.data().begin(), value.grad_variances.data().end());
    return relative_error(analytic, numeric);
  }));

  rows.push_back(run("variance", trials, tolerance, [&](std::size_t t) {
    Rng rng(derive_seed(seed, 300 + t));
    Problem p = random_problem(rng);
    const InstanceGroundTruth gt(p.ids);
    Matrix variances(p.n, p.dim);
    for (double& v : variances.data()) v = 0.1 + 2.9 * rng.uniform();
    const auto analytic = variance_smoothness_loss(variances, gt).grad;
    const auto numeric = central_difference(
        [&](std::span<const double> v) { return variance_smoothness_loss(from_flat(v, p.n, p.dim), gt).value; },
        variances.data(), step);
    return relative_error(analytic, numeric);
  }));

  rows.push_back(run("class", trials, tolerance, [&](std::size_t t) {
    Rng rng(derive_seed(seed, 400 + t));
    const std::size_t n = 10 + rng.index(91);
    const std::size_t c = 2 + rng.index(5);
    Matrix scores(n, c);
    for (double& v : scores.data()) v = 2.0 * rng.normal();
    std::vector<std::uint32_t> labels(n);
    for (auto& l : labels) l = static_cast<std::uint32_t>(rng.index(c));
    const auto sampled = balanced_class_sample(labels, 1 + rng.index(n), rng);
    const auto analytic = class_loss(scores, labels, sampled).grad;
    const auto numeric = central_difference(
        [&](std::span<const double> v) { return class_loss(from_flat(v, n, c), labels, sampled).value; },
        scores.data(), step);
    return relative_error(analytic, numeric);
  }));

  return rows;
}

}  // namespace p4d
