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

#pragma once

#include <functional>
#include <optional>
#include <span>
#include <stdexcept>
#include <vector>

#include "evpol/centering.hpp"
#include "evpol/dataset.hpp"
#include "evpol/policy.hpp"

namespace evpol {

// Treatment propensity used in the IPS weights: either a known constant or
// the sample treated fraction of whatever dataset it is applied to.
class Propensity {
 public:
  static Propensity known(double p);
  static Propensity empirical() { return Propensity(); }

  bool is_known() const { return value_.has_value(); }
  // Throws if the known value is outside (0,1) or, for the empirical kind,
  // if the dataset has a single arm.
  double resolve(const TrialDataset& data) const;

 private:
  std::optional<double> value_;
};

struct PseudoOutcomeTable {
  std::vector<double> pseudo;     // (Y - c(X)) (W/p - (1-W)/(1-p))
  std::vector<double> pseudo_sq;  // pseudo^2
  double treat_probability_used = 0.5;

  std::size_t size() const { return pseudo.size(); }
};

PseudoOutcomeTable pseudo_outcomes(const TrialDataset& data, const CenteringModel& centering,
                                   const Propensity& propensity);
// Same, with the centering already evaluated at each row.
PseudoOutcomeTable pseudo_outcomes(const TrialDataset& data, std::span<const double> centering,
                                   const Propensity& propensity);

// Raised when the standard deviation of the masked pseudo-outcomes is zero.
class DegenerateStatistic : public std::domain_error {
 public:
  using std::domain_error::domain_error;
};

struct TestResult {
  double t_statistic = 0.0;
  double p_value = 1.0;          // 1 - Phi(t)
  std::size_t n_effective = 0;   // rows with positive assignment
  std::size_t sample_size = 0;   // N, rows averaged over
  double estimate = 0.0;         // u-hat
  double std_error = 0.0;        // sqrt(Var-hat(u-hat))
};

// t = u-hat / sqrt(Var-hat), u-hat = AVG(rho), Var-hat = sum (rho - u-hat)^2 / (N (N-1)),
// rho_i = a_i * pseudo_i. Equivalently sqrt(N) * AVG / STD with the n-1 STD.
// Throws DegenerateStatistic when STD is zero; std::invalid_argument when N < 2.
TestResult t_statistic(const PseudoOutcomeTable& pseudo, std::span<const double> policy_mask);
// Same, returning nullopt instead of throwing DegenerateStatistic.
std::optional<TestResult> try_t_statistic(std::span<const double> pseudo,
                                          std::span<const double> policy_mask);

// AVG(rho) / sqrt(AVG(rho^2)); 0 when rho is identically zero.
double normalized_objective(const PseudoOutcomeTable& pseudo, std::span<const double> policy_mask);

// Policy-value estimators on a dataset, with assignments already evaluated per row.
double value_ips(const TrialDataset& data, std::span<const double> assignment,
                 const Propensity& propensity);
double value_centered(const TrialDataset& data, std::span<const double> assignment,
                      const CenteringModel& centering, const Propensity& propensity);

// g(x, w) = E[Y | X = x, W = w].
using OutcomeModel = std::function<double(std::span<const double> x, int arm)>;

// Doubly-robust estimate: mean a (g(x,1) - g(x,0)) + mean a (Y - g(x,W)) (W/p - (1-W)/(1-p)).
// Throws std::runtime_error if g returns a non-finite prediction.
double value_dr(const TrialDataset& data, std::span<const double> assignment,
                const OutcomeModel& outcome_model, const Propensity& propensity);

double value_ips(const TrialDataset& data, const Policy& policy, const Propensity& propensity);
double value_centered(const TrialDataset& data, const Policy& policy,
                      const CenteringModel& centering, const Propensity& propensity);
double value_dr(const TrialDataset& data, const Policy& policy, const OutcomeModel& outcome_model,
                const Propensity& propensity);

struct HoldoutResult {
  TestResult test;
  bool passed = false;
  // Policy treats no hold-out row; reported as p = 1.
  bool null_policy = false;
  // Masked pseudo-outcomes have zero spread with some row treated; reported as p = 1.
  bool degenerate = false;
  double treated_fraction = 0.0;
};

// One-sided test of u(a) <= 0 on hold-out rows. `centering` must have been
// fitted on training data only.
HoldoutResult holdout_test(const Policy& policy, const CenteringModel& centering,
                           const TrialDataset& holdout, double alpha, const Propensity& propensity);
HoldoutResult holdout_test(std::span<const double> assignment, const CenteringModel& centering,
                           const TrialDataset& holdout, double alpha, const Propensity& propensity);

}  // namespace evpol
