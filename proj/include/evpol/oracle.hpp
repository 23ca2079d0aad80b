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

#include <cstddef>
#include <span>
#include <vector>

#include "evpol/dataset.hpp"
#include "evpol/policy.hpp"

namespace evpol {

struct OracleCell {
  double mass = 0.0;
  double tau = 0.0;       // effect on the outcome scale; multiplied by sqrt(N) internally
  double sigma_sq = 1.0;  // conditional second moment of the pseudo-outcome
};

struct OracleSpec {
  std::vector<OracleCell> cells;
  std::size_t holdout_size = 1;
  double alpha = 0.05;

  // Masses nonnegative and summing to 1 within 1e-9, sigma_sq > 0, 0 < alpha < 1.
  void validate() const;
};

struct OracleT {
  double t = 0.0;
  bool zero_assignment = false;  // every weight was zero; t reported as 0
};

// sqrt(N) * sum m a tau / sqrt(sum m a^2 sigma^2).
OracleT oracle_t(const OracleSpec& spec, std::span<const double> assignment);

// Phi(t(a) - z_{1-alpha}).
double oracle_power(const OracleSpec& spec, std::span<const double> assignment);

struct RelaxedOraclePolicy {
  std::vector<double> weights;  // tau_+ / sigma^2, unnormalized
  double power = 0.0;
  bool zero_policy = false;     // no positive effect; power set to alpha
};

RelaxedOraclePolicy relaxed_optimum(const OracleSpec& spec);

// (sum m a tau) * Phi(t(a) - z_{1-alpha}); 0 for the zero assignment.
double constrained_objective(const OracleSpec& spec, std::span<const double> assignment);

// Flips the treatment flag on rows the reference policy treats. The reference
// must return 0/1 weights.
TrialDataset relabel_reference(const TrialDataset& data, const Policy& reference);

}  // namespace evpol
