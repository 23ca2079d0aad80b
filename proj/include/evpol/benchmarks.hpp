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

#include <cstdint>
#include <span>
#include <string_view>
#include <vector>

#include "evpol/centering.hpp"
#include "evpol/dataset.hpp"
#include "evpol/model_based.hpp"
#include "evpol/policy.hpp"
#include "evpol/regression_tree.hpp"
#include "evpol/scoring.hpp"
#include "evpol/tree_policy.hpp"

namespace evpol {

enum class BenchmarkKind {
  all,
  classifier,
  classifier_res,
  cate,
  cate_const,
  evidence,
  evidence_res,
  policy_submod,
  submod
};

std::string_view to_string(BenchmarkKind kind);
BenchmarkKind parse_benchmark_kind(std::string_view name);
std::vector<BenchmarkKind> all_benchmark_kinds();

ConstantPolicy fit_all(const TrialDataset& data);

// Gini impurity 1 - sum_k share_k^2 of weighted binary labels (label > 0 is
// the positive class).
double weighted_gini(std::span<const double> labels, std::span<const double> weights);

struct ClassifierParams {
  int max_depth = 4;
  std::size_t min_leaf = 20;
};

// Weighted classification tree with Gini impurity and exhaustive thresholds.
// A leaf predicts 1 when its positive weight exceeds its negative weight.
PolicyTree fit_classification_tree(const Matrix& covariates, std::span<const double> labels,
                                   std::span<const double> weights, const ClassifierParams& params);

enum class ClassifierCentering { mean, optimal };

// Labels sign(mu), weights |mu|, mu the centered pseudo-outcomes under `centering`.
PolicyTree fit_classifier(const TrialDataset& data, const CenteringModel& centering,
                          const ClassifierParams& params = {},
                          const Propensity& propensity = Propensity::empirical());
// Fits the centering on `data` itself: the sample mean of y, or a regression forest.
PolicyTree fit_classifier(const TrialDataset& data, ClassifierCentering kind,
                          const ClassifierParams& params = {}, std::uint64_t seed = 0);

struct CateParams {
  TreeParams final_stage{4, 20, 0};
  ForestParams nuisance{100, 5, 5, 0, true};
  std::size_t folds = 2;
};

struct CateFit {
  PolicyTree policy;      // 1{tau-hat(x) >= 0}
  RegressionTree effect;  // final-stage tau-hat
};

// R-learner with cross-fitted forest nuisances and a single tree final stage.
CateFit fit_cate(const TrialDataset& data, bool use_constant_propensity, const CateParams& params = {},
                 std::uint64_t seed = 0);

// Evidence tree on pseudo-outcomes built with `centering`.
PolicyTree fit_evidence(const TrialDataset& data, const CenteringModel& centering,
                        const EvidenceTreeParams& params = {},
                        const Propensity& propensity = Propensity::empirical());

struct PolicySubmodFit {
  PolicyTree policy;
  RatioSolution solution;
};

// Evidence tree leaves used as cells; treated leaves chosen by bisection_solve.
PolicySubmodFit fit_policy_submod(const TrialDataset& data, const CenteringModel& centering,
                                  const EvidenceTreeParams& params = {}, double epsilon = 1e-3,
                                  const Propensity& propensity = Propensity::empirical());

}  // namespace evpol
