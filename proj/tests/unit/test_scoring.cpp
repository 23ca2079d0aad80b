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
#include <numeric>

#include "evpol/normal.hpp"
#include "evpol/rng.hpp"
#include "evpol/scoring.hpp"

namespace evpol {
namespace {

PseudoOutcomeTable table_of(std::vector<double> rho) {
  PseudoOutcomeTable t;
  t.pseudo = rho;
  for (double r : rho) t.pseudo_sq.push_back(r * r);
  return t;
}

TEST(Normal, KnownValues) {
  EXPECT_NEAR(normal_cdf(0.0), 0.5, 1e-16);
  EXPECT_NEAR(normal_cdf(1.959963984540054), 0.975, 1e-15);
  EXPECT_NEAR(critical_value(0.05), 1.6448536269514722, 1e-12);
  EXPECT_NEAR(normal_upper_tail(10.0), 7.6198530241605e-24, 1e-36);
  for (double q : {1e-10, 0.001, 0.3, 0.5, 0.9, 0.999999}) {
    EXPECT_NEAR(normal_cdf(normal_quantile(q)), q, 1e-14 + 1e-12 * q);
  }
}

TEST(Scoring, PseudoOutcomeSigns) {
  const TrialDataset d(Matrix(2, 1), {1, 0}, {3.0, 3.0});
  const auto t = pseudo_outcomes(d, CenteringModel::zero(), Propensity::known(0.5));
  EXPECT_DOUBLE_EQ(t.pseudo[0], 6.0);
  EXPECT_DOUBLE_EQ(t.pseudo[1], -6.0);
  EXPECT_DOUBLE_EQ(t.pseudo_sq[1], 36.0);
}

TEST(Scoring, CenteredAtOutcomeIsZero) {
  const TrialDataset d(Matrix(3, 1), {1, 0, 1}, {2.0, 2.0, 2.0});
  const auto t = pseudo_outcomes(d, CenteringModel::constant(2.0), Propensity::empirical());
  for (double v : t.pseudo) EXPECT_EQ(v, 0.0);
}

TEST(Scoring, EmpiricalPropensityNeedsBothArms) {
  const TrialDataset d(Matrix(2, 1), {1, 1}, {1.0, 2.0});
  EXPECT_THROW(pseudo_outcomes(d, CenteringModel::zero(), Propensity::empirical()),
               std::invalid_argument);
  EXPECT_THROW(Propensity::known(1.0), std::invalid_argument);
}

TEST(Scoring, TStatisticHandValues) {
  const std::vector<double> ones(4, 1.0);
  const auto r = t_statistic(table_of({2, 0, 2, 0}), ones);
  EXPECT_NEAR(r.t_statistic, 2.0 / std::sqrt(4.0 / 3.0), 1e-12);
  EXPECT_NEAR(r.p_value, 0.5 * std::erfc(r.t_statistic / std::sqrt(2.0)), 1e-15);
  EXPECT_NEAR(r.p_value, 0.0416, 5e-4);

  const auto z = t_statistic(table_of({1, -1}), std::vector<double>{1, 1});
  EXPECT_EQ(z.t_statistic, 0.0);
  EXPECT_DOUBLE_EQ(z.p_value, 0.5);
}

TEST(Scoring, TStatisticDegenerate) {
  EXPECT_THROW(t_statistic(table_of({3, 3, 3}), std::vector<double>{1, 1, 1}), DegenerateStatistic);
  EXPECT_FALSE(try_t_statistic(std::vector<double>{3, 3}, std::vector<double>{1, 1}));
  EXPECT_THROW(t_statistic(table_of({1}), std::vector<double>{1}), std::invalid_argument);
}

TEST(Scoring, TStatisticMatchesVarianceForm) {
  // t = u / sqrt(sum (rho - u)^2 / (N (N - 1))), computed independently.
  Rng rng(2);
  for (int rep = 0; rep < 100; ++rep) {
    const std::size_t n = 5 + rng.below(40);
    std::vector<double> pseudo(n), mask(n);
    for (std::size_t i = 0; i < n; ++i) {
      pseudo[i] = rng.normal(0.3, 2.0);
      mask[i] = rng.uniform();
    }
    double u = 0;
    for (std::size_t i = 0; i < n; ++i) u += mask[i] * pseudo[i];
    u /= static_cast<double>(n);
    double ss = 0;
    for (std::size_t i = 0; i < n; ++i) ss += std::pow(mask[i] * pseudo[i] - u, 2);
    const double t = u / std::sqrt(ss / (static_cast<double>(n) * (n - 1.0)));
    EXPECT_NEAR(t_statistic(table_of(pseudo), mask).t_statistic, t, 1e-10 * std::max(1.0, std::abs(t)));
  }
}

TEST(Scoring, NormalizedObjective) {
  EXPECT_DOUBLE_EQ(normalized_objective(table_of({1, 1, 1, 1}), std::vector<double>(4, 1.0)), 1.0);
  EXPECT_DOUBLE_EQ(normalized_objective(table_of({1, -1}), std::vector<double>(2, 1.0)), 0.0);
  EXPECT_DOUBLE_EQ(normalized_objective(table_of({1, -1}), std::vector<double>(2, 0.0)), 0.0);
}

TEST(Scoring, ValueIpsHand) {
  const TrialDataset d(Matrix(2, 1), {1, 0}, {1.0, 1.0});
  EXPECT_DOUBLE_EQ(value_ips(d, std::vector<double>{1, 1}, Propensity::known(0.5)), 0.0);
  EXPECT_DOUBLE_EQ(value_ips(d, std::vector<double>{0, 0}, Propensity::known(0.5)), 0.0);
  EXPECT_DOUBLE_EQ(value_ips(d, std::vector<double>{1, 0}, Propensity::known(0.5)), 1.0);
}

TEST(Scoring, ValueCenteredMatchesIpsAtZero) {
  const auto d = generate_three_region({}, 100, 3);
  std::vector<double> a(100);
  for (std::size_t i = 0; i < 100; ++i) a[i] = d.covariates()(i, 0) > 1.5 ? 1.0 : 0.0;
  EXPECT_DOUBLE_EQ(value_centered(d, a, CenteringModel::zero(), Propensity::known(0.5)),
                   value_ips(d, a, Propensity::known(0.5)));
  EXPECT_EQ(value_centered(d, std::vector<double>(100, 0.0), CenteringModel::constant(4.0),
                           Propensity::known(0.5)),
            0.0);
}

TEST(Scoring, ConstantShiftCancelsOnBalancedArms) {
  // a = 1, p = 0.5, equal arm sizes: shifting c by delta changes each pseudo-outcome by
  // -/+ 2 delta, which cancels in the mean.
  const TrialDataset d(Matrix(4, 1), {1, 0, 1, 0}, {3.0, 1.0, -2.0, 5.0});
  const std::vector<double> a(4, 1.0);
  const double base = value_centered(d, a, CenteringModel::zero(), Propensity::known(0.5));
  for (double delta : {-3.0, 0.7, 11.0}) {
    EXPECT_NEAR(value_centered(d, a, CenteringModel::constant(delta), Propensity::known(0.5)), base,
                1e-12);
  }
}

TEST(Scoring, DoublyRobustExactModel) {
  Rng rng(8);
  const std::size_t n = 60;
  Matrix x(n, 1);
  std::vector<int> w(n);
  std::vector<double> y(n), a(n);
  const auto g = [](std::span<const double> row, int arm) { return row[0] * row[0] + arm * (1.0 + row[0]); };
  double direct = 0;
  for (std::size_t i = 0; i < n; ++i) {
    x(i, 0) = rng.uniform(-1, 1);
    w[i] = rng.bernoulli(0.4);
    y[i] = g(x.row(i), w[i]);
    a[i] = rng.uniform();
    direct += a[i] * (g(x.row(i), 1) - g(x.row(i), 0));
  }
  const TrialDataset d(x, w, y);
  EXPECT_NEAR(value_dr(d, a, g, Propensity::known(0.4)), direct / n, 1e-12);
  EXPECT_EQ(value_dr(d, std::vector<double>(n, 0.0), g, Propensity::known(0.4)), 0.0);
  const auto bad = [](std::span<const double>, int) { return NAN; };
  EXPECT_THROW(value_dr(d, a, bad, Propensity::known(0.4)), std::runtime_error);
}

TEST(Scoring, HoldoutNullPolicy) {
  const auto d = generate_three_region({}, 50, 1);
  const auto r = holdout_test(std::vector<double>(50, 0.0), CenteringModel::zero(), d, 0.05,
                              Propensity::known(0.5));
  EXPECT_TRUE(r.null_policy);
  EXPECT_EQ(r.test.p_value, 1.0);
  EXPECT_FALSE(r.passed);
}

TEST(Scoring, HoldoutStrongSingleCell) {
  CellDGPConfig cfg;
  cfg.cell_count = 1;
  cfg.cell_effects = {500.0};
  cfg.cell_noise_sd = {0.01};
  cfg.samples_per_cell = 10000;
  const auto d = generate_cell_dgp(cfg, 3);
  const auto r = holdout_test(ConstantPolicy(1.0), CenteringModel::zero(), d, 0.05, Propensity::known(0.5));
  EXPECT_LT(r.test.p_value, 1e-6);
  EXPECT_TRUE(r.passed);
}

}  // namespace
}  // namespace evpol
