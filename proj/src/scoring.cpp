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

#include "evpol/scoring.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "evpol/normal.hpp"

namespace evpol {

Propensity Propensity::known(double p) {
  if (!(p > 0.0 && p < 1.0)) throw std::invalid_argument("propensity must lie in (0,1)");
  Propensity out;
  out.value_ = p;
  return out;
}

double Propensity::resolve(const TrialDataset& data) const {
  if (value_) return *value_;
  const double p = data.treated_fraction();
  if (p <= 0.0 || p >= 1.0) {
    throw std::invalid_argument("empirical propensity needs both treatment arms present");
  }
  return p;
}

namespace {

double ips_sign(int w, double p) { return w == 1 ? 1.0 / p : -1.0 / (1.0 - p); }

void check_length(std::size_t got, std::size_t want, const char* what) {
  if (got != want) {
    throw std::invalid_argument(std::string(what) + ": length " + std::to_string(got) +
                                " does not match row count " + std::to_string(want));
  }
}

}  // namespace

PseudoOutcomeTable pseudo_outcomes(const TrialDataset& data, std::span<const double> centering,
                                   const Propensity& propensity) {
  check_length(centering.size(), data.n(), "pseudo_outcomes centering");
  const double p = propensity.resolve(data);
  PseudoOutcomeTable table;
  table.treat_probability_used = p;
  table.pseudo.resize(data.n());
  table.pseudo_sq.resize(data.n());
  for (std::size_t i = 0; i < data.n(); ++i) {
    const double y = (data.outcome()[i] - centering[i]) * ips_sign(data.treatment()[i], p);
    table.pseudo[i] = y;
    table.pseudo_sq[i] = y * y;
  }
  return table;
}

PseudoOutcomeTable pseudo_outcomes(const TrialDataset& data, const CenteringModel& centering,
                                   const Propensity& propensity) {
  const auto c = centering.predict(data.covariates());
  return pseudo_outcomes(data, c, propensity);
}

std::optional<TestResult> try_t_statistic(std::span<const double> pseudo,
                                          std::span<const double> policy_mask) {
  check_length(policy_mask.size(), pseudo.size(), "t_statistic mask");
  const std::size_t n = pseudo.size();
  if (n < 2) throw std::invalid_argument("t_statistic: at least 2 rows required");
  double sum = 0.0;
  double max_abs = 0.0;
  std::size_t treated = 0;
  for (std::size_t i = 0; i < n; ++i) {
    const double rho = policy_mask[i] * pseudo[i];
    sum += rho;
    max_abs = std::max(max_abs, std::abs(rho));
    if (policy_mask[i] > 0.0) ++treated;
  }
  const double nd = static_cast<double>(n);
  const double avg = sum / nd;
  double ss = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    const double d = policy_mask[i] * pseudo[i] - avg;
    ss += d * d;
  }
  const double var = ss / (nd - 1.0);
  if (!(var > 1e-24 * max_abs * max_abs) || var == 0.0) return std::nullopt;
  TestResult r;
  r.sample_size = n;
  r.n_effective = treated;
  r.estimate = avg;
  r.std_error = std::sqrt(var / nd);
  r.t_statistic = avg / r.std_error;
  r.p_value = normal_upper_tail(r.t_statistic);
  return r;
}

TestResult t_statistic(const PseudoOutcomeTable& pseudo, std::span<const double> policy_mask) {
  auto r = try_t_statistic(pseudo.pseudo, policy_mask);
  if (!r) throw DegenerateStatistic("t_statistic: standard deviation of masked pseudo-outcomes is 0");
  return *r;
}

double normalized_objective(const PseudoOutcomeTable& pseudo, std::span<const double> policy_mask) {
  check_length(policy_mask.size(), pseudo.size(), "normalized_objective mask");
  double num = 0.0;
  double den = 0.0;
  for (std::size_t i = 0; i < pseudo.size(); ++i) {
    const double rho = policy_mask[i] * pseudo.pseudo[i];
    num += rho;
    den += rho * rho;
  }
  if (den == 0.0) {
    if (num != 0.0) throw std::logic_error("normalized_objective: zero second moment, nonzero mean");
    return 0.0;
  }
  const double n = static_cast<double>(pseudo.size());
  return (num / n) / std::sqrt(den / n);
}

double value_centered(const TrialDataset& data, std::span<const double> assignment,
                      const CenteringModel& centering, const Propensity& propensity) {
  check_length(assignment.size(), data.n(), "value_centered assignment");
  const auto table = pseudo_outcomes(data, centering, propensity);
  double s = 0.0;
  for (std::size_t i = 0; i < data.n(); ++i) s += assignment[i] * table.pseudo[i];
  return s / static_cast<double>(data.n());
}

double value_ips(const TrialDataset& data, std::span<const double> assignment,
                 const Propensity& propensity) {
  return value_centered(data, assignment, CenteringModel::zero(), propensity);
}

double value_dr(const TrialDataset& data, std::span<const double> assignment,
                const OutcomeModel& outcome_model, const Propensity& propensity) {
  check_length(assignment.size(), data.n(), "value_dr assignment");
  const double p = propensity.resolve(data);
  double direct = 0.0;
  double correction = 0.0;
  for (std::size_t i = 0; i < data.n(); ++i) {
    const auto x = data.covariates().row(i);
    const double g1 = outcome_model(x, 1);
    const double g0 = outcome_model(x, 0);
    if (!std::isfinite(g1) || !std::isfinite(g0)) {
      throw std::runtime_error("value_dr: outcome model returned a non-finite prediction at row " +
                               std::to_string(i));
    }
    const int w = data.treatment()[i];
    const double gw = w == 1 ? g1 : g0;
    direct += assignment[i] * (g1 - g0);
    correction += assignment[i] * (data.outcome()[i] - gw) * ips_sign(w, p);
  }
  const double n = static_cast<double>(data.n());
  return direct / n + correction / n;
}

double value_ips(const TrialDataset& data, const Policy& policy, const Propensity& propensity) {
  return value_ips(data, policy.assign(data.covariates()), propensity);
}

double value_centered(const TrialDataset& data, const Policy& policy,
                      const CenteringModel& centering, const Propensity& propensity) {
  return value_centered(data, policy.assign(data.covariates()), centering, propensity);
}

double value_dr(const TrialDataset& data, const Policy& policy, const OutcomeModel& outcome_model,
                const Propensity& propensity) {
  return value_dr(data, policy.assign(data.covariates()), outcome_model, propensity);
}

HoldoutResult holdout_test(std::span<const double> assignment, const CenteringModel& centering,
                           const TrialDataset& holdout, double alpha,
                           const Propensity& propensity) {
  if (!(alpha > 0.0 && alpha < 1.0)) throw std::invalid_argument("holdout_test: alpha must lie in (0,1)");
  check_length(assignment.size(), holdout.n(), "holdout_test assignment");
  HoldoutResult out;
  out.test.sample_size = holdout.n();
  const auto treated = static_cast<std::size_t>(
      std::count_if(assignment.begin(), assignment.end(), [](double a) { return a > 0.0; }));
  out.treated_fraction = static_cast<double>(treated) / static_cast<double>(holdout.n());
  if (treated == 0) {
    out.null_policy = true;
    return out;
  }
  const auto table = pseudo_outcomes(holdout, centering, propensity);
  if (holdout.n() < 2) throw std::invalid_argument("holdout_test: at least 2 hold-out rows required");
  const auto r = try_t_statistic(table.pseudo, assignment);
  if (!r) {
    out.degenerate = true;
    out.test.n_effective = treated;
    return out;
  }
  out.test = *r;
  out.passed = r->t_statistic >= critical_value(alpha);
  return out;
}

HoldoutResult holdout_test(const Policy& policy, const CenteringModel& centering,
                           const TrialDataset& holdout, double alpha,
                           const Propensity& propensity) {
  return holdout_test(policy.assign(holdout.covariates()), centering, holdout, alpha, propensity);
}

}  // namespace evpol
