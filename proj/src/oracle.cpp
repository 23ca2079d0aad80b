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

#include "evpol/oracle.hpp"

#include <cmath>
#include <stdexcept>
#include <string>

#include "evpol/normal.hpp"

namespace evpol {

void OracleSpec::validate() const {
  if (cells.empty()) throw std::invalid_argument("OracleSpec: no cells");
  if (holdout_size == 0) throw std::invalid_argument("OracleSpec: holdout_size must be positive");
  if (!(alpha > 0.0 && alpha < 1.0)) throw std::invalid_argument("OracleSpec: alpha must lie in (0,1)");
  double total = 0.0;
  for (std::size_t i = 0; i < cells.size(); ++i) {
    const auto& c = cells[i];
    if (!(c.mass >= 0.0) || !std::isfinite(c.tau) || !(c.sigma_sq > 0.0) ||
        !std::isfinite(c.sigma_sq)) {
      throw std::invalid_argument("OracleSpec: invalid cell " + std::to_string(i));
    }
    total += c.mass;
  }
  if (std::abs(total - 1.0) > 1e-9) throw std::invalid_argument("OracleSpec: masses must sum to 1");
}

namespace {

void check_assignment(const OracleSpec& spec, std::span<const double> a) {
  if (a.size() != spec.cells.size()) {
    throw std::invalid_argument("oracle: assignment length does not match cell count");
  }
  for (double x : a) {
    if (!(x >= 0.0 && x <= 1.0)) throw std::invalid_argument("oracle: assignment outside [0,1]");
  }
}

}  // namespace

OracleT oracle_t(const OracleSpec& spec, std::span<const double> assignment) {
  spec.validate();
  check_assignment(spec, assignment);
  double num = 0.0;
  double den = 0.0;
  for (std::size_t i = 0; i < assignment.size(); ++i) {
    const auto& c = spec.cells[i];
    num += c.mass * assignment[i] * c.tau;
    den += c.mass * assignment[i] * assignment[i] * c.sigma_sq;
  }
  if (den == 0.0) return {0.0, true};
  return {std::sqrt(static_cast<double>(spec.holdout_size)) * num / std::sqrt(den), false};
}

double oracle_power(const OracleSpec& spec, std::span<const double> assignment) {
  return normal_cdf(oracle_t(spec, assignment).t - critical_value(spec.alpha));
}

RelaxedOraclePolicy relaxed_optimum(const OracleSpec& spec) {
  spec.validate();
  RelaxedOraclePolicy out;
  double energy = 0.0;
  for (const auto& c : spec.cells) {
    const double tau_plus = std::max(c.tau, 0.0);
    out.weights.push_back(tau_plus / c.sigma_sq);
    energy += c.mass * tau_plus * tau_plus / c.sigma_sq;
  }
  if (energy == 0.0) {
    out.zero_policy = true;
    out.power = spec.alpha;
    return out;
  }
  out.power = normal_cdf(std::sqrt(static_cast<double>(spec.holdout_size) * energy) -
                         critical_value(spec.alpha));
  return out;
}

double constrained_objective(const OracleSpec& spec, std::span<const double> assignment) {
  const auto t = oracle_t(spec, assignment);
  if (t.zero_assignment) return 0.0;
  double lift = 0.0;
  for (std::size_t i = 0; i < assignment.size(); ++i) {
    lift += spec.cells[i].mass * assignment[i] * spec.cells[i].tau;
  }
  return lift * normal_cdf(t.t - critical_value(spec.alpha));
}

TrialDataset relabel_reference(const TrialDataset& data, const Policy& reference) {
  const auto b = reference.assign(data.covariates());
  if (b.size() != data.n()) throw std::invalid_argument("relabel_reference: policy output length mismatch");
  std::vector<int> w = data.treatment();
  for (std::size_t i = 0; i < w.size(); ++i) {
    if (b[i] == 1.0) {
      w[i] = 1 - w[i];
    } else if (b[i] != 0.0) {
      throw std::invalid_argument("relabel_reference: reference policy must be binary");
    }
  }
  return TrialDataset(data.covariates(), std::move(w), data.outcome(), data.feature_names());
}

}  // namespace evpol
