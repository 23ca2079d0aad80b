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
#include <variant>
#include <vector>

#include "evpol/dataset.hpp"
#include "evpol/regression_tree.hpp"

namespace evpol {

enum class CenteringKind { constant_zero, constant_mean, regression_tree, regression_forest };

std::string_view to_string(CenteringKind kind);
CenteringKind parse_centering_kind(std::string_view name);

struct CenteringParams {
  std::size_t trees = 100;
  int max_depth = 5;
  std::size_t min_leaf = 5;
  std::size_t features_per_split = 0;  // forest only; 0 = floor(sqrt(p))
};

// Per-row weights W/p^2 + (1-W)/(1-p)^2 of the centering loss. Its weighted
// least-squares minimizer is (1-p) E[Y|x,W=1] + p E[Y|x,W=0].
std::vector<double> centering_weights(std::span<const int> treatment, double treat_probability);

// Fitted centering function c(x). Immutable; safe to share across threads.
class CenteringModel {
 public:
  // c(x) = value everywhere, for any covariate width.
  static CenteringModel constant(double value, CenteringKind kind = CenteringKind::constant_mean);
  static CenteringModel zero() { return constant(0.0, CenteringKind::constant_zero); }

  CenteringKind kind() const { return kind_; }
  // Set when a regression kind met covariates with no usable split (all rows
  // identical) and fell back to the weighted mean.
  bool degenerate_fallback() const { return degenerate_fallback_; }

  double predict(std::span<const double> row) const;
  std::vector<double> predict(const Matrix& covariates) const;

 private:
  friend CenteringModel fit_centering(const TrialDataset&, CenteringKind, double,
                                      const CenteringParams&, std::uint64_t);

  CenteringKind kind_ = CenteringKind::constant_zero;
  std::variant<double, RegressionTree, RegressionForest> state_{0.0};
  std::size_t width_ = 0;
  bool constant_any_width_ = true;
  bool degenerate_fallback_ = false;
};

CenteringModel fit_centering(const TrialDataset& data, CenteringKind kind, double treat_probability,
                             const CenteringParams& params = {}, std::uint64_t seed = 0);

std::vector<double> predict_centering(const CenteringModel& model, const Matrix& covariates);

}  // namespace evpol
