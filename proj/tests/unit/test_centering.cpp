/*
 * Copyright 2026 The evidence-policy Authors.
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 *     https://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 */

#include <gtest/gtest.h>

#include <cmath>
#include <limits>

#include "evpol/centering.hpp"
#include "evpol/regression_tree.hpp"
#include "evpol/rng.hpp"

namespace evpol {
namespace {

// Weighted SSE of the best single axis split, by enumeration over all cut points.
double brute_force_split_sse(const Matrix& x, const std::vector<double>& y, const std::vector<double>& w,
                             std::size_t min_leaf) {
  double best = std::numeric_limits<double>::infinity();
  for (std::size_t f = 0; f < x.cols(); ++f) {
    for (std::size_t r = 0; r < x.rows(); ++r) {
      const double cut = x(r, f);
      double sl = 0, swl = 0, sr = 0, swr = 0;
      std::size_t nl = 0, nr = 0;
      for (std::size_t i = 0; i < x.rows(); ++i) {
        if (x(i, f) < cut) {
          sl += w[i] * y[i];
          swl += w[i];
          ++nl;
        } else {
          sr += w[i] * y[i];
          swr += w[i];
          ++nr;
        }
      }
      if (nl < min_leaf || nr < min_leaf) continue;
      double sse = 0;
      for (std::size_t i = 0; i < x.rows(); ++i) {
        const double m = x(i, f) < cut ? sl / swl : sr / swr;
        sse += w[i] * (y[i] - m) * (y[i] - m);
      }
      best = std::min(best, sse);
    }
  }
  return best;
}

TEST(RegressionTree, DepthOneMatchesBruteForce) {
  Rng rng(17);
  for (int rep = 0; rep < 50; ++rep) {
    const std::size_t n = 30, p = 3;
    Matrix x(n, p);
    std::vector<double> y(n), w(n);
    for (std::size_t i = 0; i < n; ++i) {
      for (std::size_t j = 0; j < p; ++j) x(i, j) = rng.uniform();
      y[i] = (x(i, 1) > 0.4 ? 2.0 : 0.0) + rng.normal();
      w[i] = 0.5 + rng.uniform();
    }
    const auto tree = RegressionTree::fit(x, y, w, TreeParams{1, 3, 0});
    const auto pred = tree.predict(x);
    double sse = 0;
    for (std::size_t i = 0; i < n; ++i) sse += w[i] * (y[i] - pred[i]) * (y[i] - pred[i]);
    EXPECT_NEAR(sse, brute_force_split_sse(x, y, w, 3), 1e-9);
  }
}

TEST(RegressionTree, RecoversStepFunction) {
  Matrix x(40, 1);
  std::vector<double> y(40), w(40, 1.0);
  for (std::size_t i = 0; i < 40; ++i) {
    x(i, 0) = static_cast<double>(i);
    y[i] = i < 25 ? -1.0 : 3.0;
  }
  const auto tree = RegressionTree::fit(x, y, w, TreeParams{3, 1, 0});
  for (std::size_t i = 0; i < 40; ++i) EXPECT_DOUBLE_EQ(tree.predict(x.row(i)), y[i]);
  EXPECT_EQ(tree.leaf_count(), 2u);
}

TEST(RegressionTree, MinLeafRespected) {
  Rng rng(3);
  Matrix x(100, 2);
  std::vector<double> y(100), w(100, 1.0);
  for (std::size_t i = 0; i < 100; ++i) {
    x(i, 0) = rng.uniform();
    x(i, 1) = rng.uniform();
    y[i] = rng.normal();
  }
  const auto tree = RegressionTree::fit(x, y, w, TreeParams{6, 10, 0});
  for (const auto& node : tree.nodes()) {
    if (node.feature < 0) EXPECT_GE(node.count, 10.0);
  }
}

TEST(Centering, ConstantKinds) {
  const TrialDataset d(Matrix(2, 1), {1, 0}, {1.0, 3.0});
  const auto mean_model = fit_centering(d, CenteringKind::constant_mean, 0.5);
  EXPECT_DOUBLE_EQ(mean_model.predict(std::vector<double>{7.0}), 2.0);
  const auto zero = fit_centering(d, CenteringKind::constant_zero, 0.5);
  for (double v : zero.predict(Matrix(5, 3, 9.0))) EXPECT_EQ(v, 0.0);
}

TEST(Centering, WeightsGiveOptimalMixture) {
  // Weighted mean with W/p^2 + (1-W)/(1-p)^2 equals (1-p) ybar1 + p ybar0 when n1/n = p.
  const double p = 0.25;
  std::vector<int> w{1, 0, 0, 0, 1, 0, 0, 0};
  std::vector<double> y{4, 1, 2, 3, 8, 0, 5, 1};
  const TrialDataset d(Matrix(8, 1, 0.0), w, y);
  const auto model = fit_centering(d, CenteringKind::regression_tree, p, {1, 0, 1, 0});
  const double ybar1 = 6.0;
  const double ybar0 = 2.0;
  EXPECT_NEAR(model.predict(std::vector<double>{0.0}), (1 - p) * ybar1 + p * ybar0, 1e-12);
}

TEST(Centering, IdenticalArmsRecoverG) {
  Rng rng(4);
  const std::size_t n = 400;
  Matrix x(n, 1);
  std::vector<int> w(n);
  std::vector<double> y(n);
  for (std::size_t i = 0; i < n; ++i) {
    x(i, 0) = static_cast<double>(i % 4);
    w[i] = rng.bernoulli(0.5) ? 1 : 0;
    y[i] = 3.0 * x(i, 0) - 1.0;
  }
  const TrialDataset d(x, w, y);
  for (auto kind : {CenteringKind::regression_tree, CenteringKind::regression_forest}) {
    const auto model = fit_centering(d, kind, 0.5, {20, 4, 1, 0}, 9);
    const auto c = model.predict(x);
    for (std::size_t i = 0; i < n; ++i) EXPECT_NEAR(c[i], y[i], 1e-9);
  }
}

TEST(Centering, FallbackOnConstantCovariates) {
  const TrialDataset d(Matrix(6, 2, 1.0), {1, 0, 1, 0, 1, 0}, {1, 2, 3, 4, 5, 6});
  const auto model = fit_centering(d, CenteringKind::regression_forest, 0.5, {10, 3, 1, 0}, 1);
  EXPECT_TRUE(model.degenerate_fallback());
  EXPECT_NEAR(model.predict(std::vector<double>{1.0, 1.0}), 3.5, 1e-12);
}

TEST(Centering, ForestIsSeedDeterministic) {
  const auto d = generate_three_region({}, 300, 5);
  const auto a = fit_centering(d, CenteringKind::regression_forest, 0.5, {}, 21);
  const auto b = fit_centering(d, CenteringKind::regression_forest, 0.5, {}, 21);
  EXPECT_EQ(a.predict(d.covariates()), b.predict(d.covariates()));
}

TEST(Centering, WidthMismatchThrows) {
  const auto d = generate_three_region({}, 50, 5);
  const auto model = fit_centering(d, CenteringKind::regression_tree, 0.5);
  EXPECT_THROW(model.predict(Matrix(3, 2)), std::invalid_argument);
}

}  // namespace
}  // namespace evpol
