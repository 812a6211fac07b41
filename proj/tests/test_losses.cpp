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

#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <functional>
#include <numeric>

#include "p4d/error.hpp"
#include "p4d/gradcheck.hpp"
#include "p4d/losses.hpp"
#include "support.hpp"

using namespace p4d;

namespace {

// Central differences, written independently of the library helper.
std::vector<double> numeric_grad(const std::function<double(const std::vector<double>&)>& f, std::vector<double> x) {
  const double h = 1e-5;
  std::vector<double> g(x.size());
  for (std::size_t i = 0; i < x.size(); ++i) {
    const double keep = x[i];
    x[i] = keep + h;
    const double up = f(x);
    x[i] = keep - h;
    const double down = f(x);
    x[i] = keep;
    g[i] = (up - down) / (2 * h);
  }
  return g;
}

double rel_err(const std::vector<double>& a, const std::vector<double>& b) {
  double diff = 0, na = 0, nb = 0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    diff += (a[i] - b[i]) * (a[i] - b[i]);
    na += a[i] * a[i];
    nb += b[i] * b[i];
  }
  const double scale = std::sqrt(std::max(na, nb));
  return scale == 0 ? 0 : std::sqrt(diff) / scale;
}

Matrix with_data(std::size_t rows, std::size_t cols, const std::vector<double>& data) {
  Matrix m(rows, cols);
  m.data() = data;
  return m;
}

// Direct evaluation of Σ_j Σ_i (p̂_ij − [i ∈ j])² with member-mean centres.
double instance_loss_oracle(const Matrix& f, const Matrix& v, const std::vector<std::uint32_t>& ids, bool normalized) {
  std::vector<std::uint32_t> labels;
  for (auto id : ids) {
    if (id != 0 && std::find(labels.begin(), labels.end(), id) == labels.end()) labels.push_back(id);
  }
  const std::size_t n = f.rows(), d = f.cols();
  double total = 0;
  for (auto id : labels) {
    std::vector<double> mu(d, 0), s(d, 0);
    double count = 0;
    for (std::size_t i = 0; i < n; ++i) {
      if (ids[i] != id) continue;
      count += 1;
      for (std::size_t k = 0; k < d; ++k) {
        mu[k] += f(i, k);
        s[k] += v(i, k);
      }
    }
    for (std::size_t k = 0; k < d; ++k) {
      mu[k] /= count;
      s[k] /= count;
    }
    for (std::size_t i = 0; i < n; ++i) {
      double q = 0, norm = 1;
      for (std::size_t k = 0; k < d; ++k) {
        q += (f(i, k) - mu[k]) * (f(i, k) - mu[k]) / s[k];
        norm *= 2 * M_PI * s[k];
      }
      double p = std::exp(-0.5 * q);
      if (normalized) p /= std::sqrt(norm);
      const double r = p - (ids[i] == id ? 1.0 : 0.0);
      total += r * r;
    }
  }
  return total;
}

struct Problem {
  Matrix features;
  Matrix variances;
  std::vector<std::uint32_t> ids;
};

Problem random_problem(Rng& rng, std::size_t n, std::size_t d, std::size_t k) {
  Problem p{Matrix(n, d), Matrix(n, d), std::vector<std::uint32_t>(n)};
  for (std::size_t i = 0; i < n; ++i) {
    p.ids[i] = static_cast<std::uint32_t>(rng.index(k + 1));  // 0 = background
    for (std::size_t c = 0; c < d; ++c) {
      p.features(i, c) = 0.8 * rng.normal() + (p.ids[i] == 0 ? 0.0 : 0.7 * static_cast<double>(p.ids[i]));
      p.variances(i, c) = 0.5 + rng.uniform();
    }
  }
  p.ids[0] = 1;
  return p;
}

}  // namespace

TEST_CASE("objectness target examples") {
  CHECK(objectness_target(with_data(2, 1, {-1, 1}), InstanceGroundTruth({4, 4})) == std::vector<double>{0, 0});
  CHECK(objectness_target(with_data(1, 3, {5, 5, 5}), InstanceGroundTruth({2})) == std::vector<double>{1});
  CHECK(objectness_target(with_data(3, 1, {0, 1, 2}), InstanceGroundTruth({1, 1, 1})) == std::vector<double>{0, 1, 0});
  const auto mixed = objectness_target(with_data(4, 1, {0, 2, 9, 3}), InstanceGroundTruth({1, 1, 0, 1}));
  // Centre of {0, 2, 3} is 5/3; distances 5/3, 1/3, 4/3.
  CHECK(mixed[0] == doctest::Approx(0.0));
  CHECK(mixed[1] == doctest::Approx(1.0 - (1.0 / 3.0) / (5.0 / 3.0)));
  CHECK(mixed[2] == 0.0);
  CHECK(mixed[3] == doctest::Approx(1.0 - (4.0 / 3.0) / (5.0 / 3.0)));
}

TEST_CASE("objectness loss") {
  const std::vector<double> t = {0.1, 0.7, 1.0};
  CHECK(objectness_loss(t, t).value == 0.0);
  const std::vector<double> zeros(4, 0.0), ones(4, 1.0);
  CHECK(objectness_loss(zeros, ones).value == 4.0);
  Rng rng(1);
  for (int trial = 0; trial < 20; ++trial) {
    std::vector<double> pred(10 + rng.index(90)), target(pred.size());
    for (std::size_t i = 0; i < pred.size(); ++i) {
      pred[i] = rng.uniform();
      target[i] = rng.uniform();
    }
    const auto value = objectness_loss(pred, target);
    const auto num = numeric_grad([&](const std::vector<double>& x) { return objectness_loss(x, target).value; }, pred);
    CHECK(rel_err(value.grad, num) < 1e-6);
  }
}

TEST_CASE("instance loss minimiser and trivial cases") {
  // Members share one embedding; a non-member sits far away.
  Matrix f = with_data(4, 2, {1, 1, 1, 1, 1, 1, 60, -40});
  const Matrix v(4, 2, 1.0);
  const auto at_min = instance_loss(f, v, InstanceGroundTruth({3, 3, 3, 0}), false);
  CHECK(at_min.value < 1e-12);
  const auto single = instance_loss(with_data(1, 2, {0.3, -2}), Matrix(1, 2, 0.7), InstanceGroundTruth({1}), false);
  CHECK(single.value == 0.0);
  CHECK_THROWS_AS(instance_loss(f, Matrix(4, 2, 0.0), InstanceGroundTruth({3, 3, 3, 0}), false), Error);
}

TEST_CASE("instance loss value and gradients match oracles") {
  Rng rng(2);
  for (int trial = 0; trial < 20; ++trial) {
    const bool normalized = trial % 2 == 1;
    const std::size_t n = trial == 0 ? 50 : 10 + rng.index(91);
    const std::size_t d = trial == 0 ? 3 : 1 + rng.index(6);
    const std::size_t k = trial == 0 ? 3 : 1 + rng.index(4);
    Problem p = random_problem(rng, n, d, k);
    const InstanceGroundTruth gt(p.ids);
    const auto value = instance_loss(p.features, p.variances, gt, normalized);
    CHECK(value.value == doctest::Approx(instance_loss_oracle(p.features, p.variances, p.ids, normalized)).epsilon(1e-12));
    const auto gf = numeric_grad(
        [&](const std::vector<double>& x) {
          return instance_loss(with_data(n, d, x), p.variances, gt, normalized).value;
        },
        p.features.data());
    const auto gv = numeric_grad(
        [&](const std::vector<double>& x) {
          return instance_loss(p.features, with_data(n, d, x), gt, normalized).value;
        },
        p.variances.data());
    CHECK(rel_err(value.grad_features.data(), gf) < 1e-4);
    CHECK(rel_err(value.grad_variances.data(), gv) < 1e-4);
  }
}

TEST_CASE("instance loss is invariant to point order and instance labels") {
  Rng rng(3);
  for (int trial = 0; trial < 10; ++trial) {
    Problem p = random_problem(rng, 40, 3, 3);
    std::vector<std::size_t> perm(40);
    std::iota(perm.begin(), perm.end(), 0);
    rng.shuffle(perm);
    const std::uint32_t relabel[] = {0, 17, 5, 9};
    Problem q{Matrix(40, 3), Matrix(40, 3), std::vector<std::uint32_t>(40)};
    for (std::size_t i = 0; i < 40; ++i) {
      q.ids[i] = relabel[p.ids[perm[i]]];
      for (std::size_t c = 0; c < 3; ++c) {
        q.features(i, c) = p.features(perm[i], c);
        q.variances(i, c) = p.variances(perm[i], c);
      }
    }
    const double a = instance_loss(p.features, p.variances, InstanceGroundTruth(p.ids), false).value;
    const double b = instance_loss(q.features, q.variances, InstanceGroundTruth(q.ids), false).value;
    CHECK(b == doctest::Approx(a).epsilon(1e-12));
  }
}

TEST_CASE("variance smoothness loss") {
  CHECK(variance_smoothness_loss(Matrix(5, 2, 0.8), InstanceGroundTruth({1, 1, 2, 2, 0})).value == 0.0);
  // Mean 1, deviations ±1, weighted by 1/2.
  CHECK(variance_smoothness_loss(with_data(2, 1, {0, 2}), InstanceGroundTruth({1, 1})).value == doctest::Approx(1.0));
  Rng rng(4);
  for (int trial = 0; trial < 20; ++trial) {
    const std::size_t n = 10 + rng.index(91), d = 1 + rng.index(6);
    Problem p = random_problem(rng, n, d, 1 + rng.index(4));
    const InstanceGroundTruth gt(p.ids);
    const auto value = variance_smoothness_loss(p.variances, gt);
    const auto num = numeric_grad(
        [&](const std::vector<double>& x) { return variance_smoothness_loss(with_data(n, d, x), gt).value; },
        p.variances.data());
    CHECK(rel_err(value.grad, num) < 1e-4);
    CHECK(value.value >= 0.0);
  }
}

TEST_CASE("class loss") {
  const std::vector<std::size_t> all = {0, 1, 2};
  const std::vector<std::uint32_t> labels = {0, 2, 1};
  Matrix confident(3, 3, -50.0);
  for (std::size_t i = 0; i < 3; ++i) confident(i, labels[i]) = 50.0;
  CHECK(class_loss(confident, labels, all).value < 1e-12);
  CHECK(class_loss(Matrix(3, 4, 0.3), labels, all).value == doctest::Approx(std::log(4.0)).epsilon(1e-14));
  CHECK_THROWS_AS(class_loss(Matrix(3, 2, 0.0), labels, all), Error);

  Rng rng(5);
  for (int trial = 0; trial < 20; ++trial) {
    const std::size_t n = 10 + rng.index(91), c = 2 + rng.index(5);
    Matrix scores(n, c);
    std::vector<std::uint32_t> gt(n);
    for (std::size_t i = 0; i < n; ++i) {
      gt[i] = static_cast<std::uint32_t>(rng.index(c));
      for (std::size_t k = 0; k < c; ++k) scores(i, k) = 2 * rng.normal();
    }
    const auto sampled = balanced_class_sample(gt, n / 2, rng);
    const auto value = class_loss(scores, gt, sampled);
    const auto num = numeric_grad(
        [&](const std::vector<double>& x) { return class_loss(with_data(n, c, x), gt, sampled).value; },
        scores.data());
    CHECK(rel_err(value.grad, num) < 1e-4);
  }
}

TEST_CASE("balanced sampling matches the successive-draw expectation") {
  std::vector<std::uint32_t> classes(100, 1);
  for (int i = 0; i < 10; ++i) classes[i * 10] = 2;
  // E[minority count] for 20 successive weighted draws, by exact recursion
  // over (minority left, majority left).
  std::vector<std::vector<double>> prob(11, std::vector<double>(91, 0.0));
  prob[10][90] = 1.0;
  double expected = 0.0;
  for (int step = 0; step < 20; ++step) {
    std::vector<std::vector<double>> next(11, std::vector<double>(91, 0.0));
    for (int a = 0; a <= 10; ++a) {
      for (int b = 0; b <= 90; ++b) {
        if (prob[a][b] == 0.0) continue;
        const double wa = a / 10.0, wb = b / 90.0;
        const double pa = wa / (wa + wb);
        if (a > 0) next[a - 1][b] += prob[a][b] * pa;
        if (b > 0) next[a][b - 1] += prob[a][b] * (1 - pa);
        expected += prob[a][b] * pa;
      }
    }
    prob = std::move(next);
  }
  CHECK(expected == doctest::Approx(7.438).epsilon(1e-3));  // uniform draws would give 2

  Rng rng(6);
  const int trials = 4000;
  double sum = 0, sum_sq = 0;
  for (int t = 0; t < trials; ++t) {
    int minority = 0;
    for (auto i : balanced_class_sample(classes, 20, rng)) minority += classes[i] == 2;
    sum += minority;
    sum_sq += minority * minority;
  }
  const double mean = sum / trials;
  const double se = std::sqrt((sum_sq / trials - mean * mean) / trials);
  CHECK(std::abs(mean - expected) <= 3 * se);
}

TEST_CASE("balanced sampling edge cases") {
  const std::vector<std::uint32_t> one_class(30, 4);
  std::vector<int> hits(30, 0);
  Rng rng(7);
  const int trials = 6000;
  for (int t = 0; t < trials; ++t) {
    for (auto i : balanced_class_sample(one_class, 3, rng)) ++hits[i];
  }
  const double p = 0.1;
  for (int h : hits) CHECK(std::abs(h - trials * p) <= 3 * std::sqrt(trials * p * (1 - p)));
  std::vector<std::size_t> all(30);
  std::iota(all.begin(), all.end(), 0);
  CHECK(balanced_class_sample(one_class, 30, rng) == all);
  CHECK_THROWS_AS(balanced_class_sample(one_class, 31, rng), Error);
}

TEST_CASE("total loss is the plain sum") {
  CHECK(total_loss({0.5, 0.25, 2.0, 1.0}) == 3.75);
}

TEST_CASE("gradient check table passes for every loss") {
  const auto rows = check_gradients(11, 20);
  REQUIRE(rows.size() == 4);
  for (const auto& r : rows) {
    CAPTURE(r.loss);
    CHECK(r.problems == 20);
    CHECK(r.passed);
    CHECK(r.max_relative_error < 1e-4);
  }
}
