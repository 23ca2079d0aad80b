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
#include <map>

#include "evpol/benchmarks.hpp"
#include "evpol/rng.hpp"

namespace evpol {
namespace {

TEST(Benchmarks, KindNames) {
  for (auto k : all_benchmark_kinds()) EXPECT_EQ(parse_benchmark_kind(to_string(k)), k);
  EXPECT_EQ(to_string(BenchmarkKind::evidence_res), "evidence_res");
  EXPECT_THROW(parse_benchmark_kind("forest"), std::invalid_argument);
}

TEST(Benchmarks, TreatAllMatchesPlainTTest) {
  const auto d = generate_three_region({}, 300, 4);
  const auto all = fit_all(d);
  const auto a = all.assign(d.covariates());
  for (double v : a) EXPECT_EQ(v, 1.0);
  const auto r = holdout_test(all, CenteringModel::zero(), d, 0.05, Propensity::known(0.5));
  const auto table = pseudo_outcomes(d, CenteringModel::zero(), Propensity::known(0.5));
  const double n = static_cast<double>(d.n());
  double m = 0;
  for (double v : table.pseudo) m += v;
  m /= n;
  double ss = 0;
  for (double v : table.pseudo) ss += (v - m) * (v - m);
  const double t = std::sqrt(n) * m / std::sqrt(ss / (n - 1));
  EXPECT_NEAR(r.test.t_statistic, t, 1e-10);
  EXPECT_NEAR(r.test.estimate, value_ips(d, a, Propensity::known(0.5)), 1e-12);
}

TEST(Benchmarks, WeightedGiniHand) {
  // positive weight 1 + 3 = 4 of 10: 1 - 0.4^2 - 0.6^2 = 0.48
  EXPECT_NEAR(weighted_gini(std::vector<double>{1, -1, 2, -3}, std::vector<double>{1, 2, 3, 4}), 0.48,
              1e-15);
  EXPECT_EQ(weighted_gini(std::vector<double>{1, 1}, std::vector<double>{2, 5}), 0.0);
}

TEST(Benchmarks, ClassifierAllPositive) {
  Rng rng(1);
  const std::size_t n = 200;
  Matrix x(n, 2);
  std::vector<int> w(n);
  std::vector<double> y(n);
  for (std::size_t i = 0; i < n; ++i) {
    x(i, 0) = rng.uniform();
    x(i, 1) = rng.uniform();
    w[i] = static_cast<int>(i % 2);
    y[i] = w[i] ? 5.0 + rng.uniform() : -5.0 - rng.uniform();
  }
  // Centered at 0 with p = 1/2, every pseudo-outcome is positive.
  const auto tree = fit_classifier(TrialDataset(x, w, y), CenteringModel::zero(), {}, Propensity::known(0.5));
  for (double a : tree.assign(x)) EXPECT_EQ(a, 1.0);
}

TEST(Benchmarks, ClassifierTreatsPositiveCellMeans) {
  CellDGPConfig cfg;
  cfg.cell_count = 4;
  cfg.cell_effects = {40.0, -40.0, 40.0, -40.0};
  cfg.cell_noise_sd = {1.0, 1.0, 1.0, 1.0};
  cfg.samples_per_cell = 500;
  for (std::uint64_t seed = 0; seed < 10; ++seed) {
    const auto d = generate_cell_dgp(cfg, seed);
    const auto centering = CenteringModel::constant(0.0);
    const auto table = pseudo_outcomes(d, centering, Propensity::known(0.5));
    std::map<long, double> cell_sum;
    for (std::size_t i = 0; i < d.n(); ++i) cell_sum[static_cast<long>(d.covariates()(i, 0))] += table.pseudo[i];
    const auto tree = fit_classifier(d, centering, {4, 5}, Propensity::known(0.5));
    for (const auto& [cell, sum] : cell_sum) {
      const std::vector<double> probe{static_cast<double>(cell)};
      EXPECT_EQ(tree.assign(Matrix::from_rows({probe}))[0], sum > 0 ? 1.0 : 0.0) << "cell " << cell;
    }
  }
}

TEST(Benchmarks, ClassificationTreeLeafRule) {
  const Matrix x = Matrix::from_rows({{0}, {1}, {2}, {3}});
  const auto tree = fit_classification_tree(x, std::vector<double>{1, -1, 1, -1},
                                            std::vector<double>{5, 1, 1, 1}, {0, 1});
  // Single leaf: positive weight 6 exceeds negative weight 2.
  for (double a : tree.assign(x)) EXPECT_EQ(a, 1.0);
}

TEST(Benchmarks, CateLeafIsResidualRatio) {
  // The final stage regresses yr/wr with weights wr^2; its leaf value is sum yr wr / sum wr^2.
  const std::vector<double> yr{0.5, -1.0, 2.0, 0.3, -0.7, 1.1};
  const std::vector<double> wr{0.5, -0.5, 0.4, -0.6, 0.45, -0.55};
  std::vector<double> labels, weights;
  double num = 0, den = 0;
  for (std::size_t i = 0; i < 6; ++i) {
    labels.push_back(yr[i] / wr[i]);
    weights.push_back(wr[i] * wr[i]);
    num += yr[i] * wr[i];
    den += wr[i] * wr[i];
  }
  const auto tree = RegressionTree::fit(Matrix(6, 1, 0.0), labels, weights, TreeParams{0, 1, 0});
  EXPECT_NEAR(tree.predict(std::vector<double>{0.0}), num / den, 1e-14);
}

TEST(Benchmarks, CateNoHeterogeneity) {
  Rng rng(2);
  const std::size_t n = 400;
  Matrix x(n, 2);
  std::vector<int> w(n);
  std::vector<double> y(n);
  for (std::size_t i = 0; i < n; ++i) {
    x(i, 0) = rng.uniform();
    x(i, 1) = rng.uniform();
    w[i] = rng.bernoulli(0.5);
    y[i] = 2.0 * w[i] + x(i, 0);
  }
  const TrialDataset d(x, w, y);
  for (bool constant : {true, false}) {
    const auto fit = fit_cate(d, constant, {}, 3);
    for (double a : fit.policy.assign(x)) EXPECT_EQ(a, 1.0);
  }
}

TEST(Benchmarks, CateTreatsMiddleRegion) {
  int hits = 0;
  const Matrix probe = Matrix::from_rows({{1.5}});
  CateParams params;
  params.nuisance.trees = 30;
  for (int run = 0; run < 100; ++run) {
    const auto d = generate_three_region({}, 2000, 900 + run);
    if (fit_cate(d, true, params, run).policy.assign(probe)[0] == 1.0) ++hits;
  }
  EXPECT_GE(hits, 70);
}

TEST(Benchmarks, CateRejectsSingleArm) {
  const TrialDataset d(Matrix(6, 1, 0.0), {1, 1, 1, 1, 1, 1}, {1, 2, 3, 4, 5, 6});
  EXPECT_THROW(fit_cate(d, true, {}, 0), std::runtime_error);
}

TEST(Benchmarks, PolicySubmodTreatsSelectedLeaves) {
  const auto d = generate_three_region({}, 1500, 8);
  const auto centering = fit_centering(d, CenteringKind::regression_forest, 0.5, {30, 4, 5, 0}, 1);
  const auto fit = fit_policy_submod(d, centering, {}, 1e-3, Propensity::known(0.5));
  const auto leaves = fit.policy.leaf_indices(d.covariates());
  const auto a = fit.policy.assign(d.covariates());
  const std::set<long> chosen(fit.solution.selected.begin(), fit.solution.selected.end());
  for (std::size_t i = 0; i < d.n(); ++i) EXPECT_EQ(a[i], chosen.count(leaves[i]) ? 1.0 : 0.0);
}

}  // namespace
}  // namespace evpol
