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

#include "evpol/centering.hpp"

#include <stdexcept>
#include <string>

#include "evpol/util.hpp"

namespace evpol {

std::string_view to_string(CenteringKind kind) {
  switch (kind) {
    case CenteringKind::constant_zero:
      return "constant_zero";
    case CenteringKind::constant_mean:
      return "constant_mean";
    case CenteringKind::regression_tree:
      return "regression_tree";
    case CenteringKind::regression_forest:
      return "regression_forest";
  }
  return "unknown";
}

CenteringKind parse_centering_kind(std::string_view name) {
  for (const auto kind : {CenteringKind::constant_zero, CenteringKind::constant_mean,
                          CenteringKind::regression_tree, CenteringKind::regression_forest}) {
    if (to_string(kind) == name) return kind;
  }
  throw std::invalid_argument("unknown centering kind '" + std::string(name) + "'");
}

std::vector<double> centering_weights(std::span<const int> treatment, double treat_probability) {
  const double p = treat_probability;
  std::vector<double> w(treatment.size());
  for (std::size_t i = 0; i < treatment.size(); ++i) {
    w[i] = treatment[i] == 1 ? 1.0 / (p * p) : 1.0 / ((1.0 - p) * (1.0 - p));
  }
  return w;
}

CenteringModel CenteringModel::constant(double value, CenteringKind kind) {
  CenteringModel m;
  m.kind_ = kind;
  m.state_ = value;
  m.constant_any_width_ = true;
  return m;
}

double CenteringModel::predict(std::span<const double> row) const {
  if (!constant_any_width_ && row.size() != width_) {
    throw std::invalid_argument("centering: covariate width " + std::to_string(row.size()) +
                                " does not match training width " + std::to_string(width_));
  }
  if (const auto* c = std::get_if<double>(&state_)) return *c;
  if (const auto* t = std::get_if<RegressionTree>(&state_)) return t->predict(row);
  return std::get<RegressionForest>(state_).predict(row);
}

std::vector<double> CenteringModel::predict(const Matrix& covariates) const {
  if (!constant_any_width_ && covariates.cols() != width_) {
    throw std::invalid_argument("centering: covariate width " + std::to_string(covariates.cols()) +
                                " does not match training width " + std::to_string(width_));
  }
  std::vector<double> out(covariates.rows());
  for (std::size_t i = 0; i < covariates.rows(); ++i) out[i] = predict(covariates.row(i));
  return out;
}

namespace {

bool all_rows_identical(const Matrix& x) {
  for (std::size_t i = 1; i < x.rows(); ++i) {
    for (std::size_t j = 0; j < x.cols(); ++j) {
      if (x(i, j) != x(0, j)) return false;
    }
  }
  return true;
}

}  // namespace

CenteringModel fit_centering(const TrialDataset& data, CenteringKind kind, double treat_probability,
                             const CenteringParams& params, std::uint64_t seed) {
  if (!(treat_probability > 0.0 && treat_probability < 1.0)) {
    throw std::invalid_argument("fit_centering: treat_probability must lie in (0,1)");
  }
  switch (kind) {
    case CenteringKind::constant_zero:
      return CenteringModel::zero();
    case CenteringKind::constant_mean:
      return CenteringModel::constant(mean(data.outcome()), CenteringKind::constant_mean);
    case CenteringKind::regression_tree:
    case CenteringKind::regression_forest:
      break;
  }
  if (data.n() < 2) throw std::invalid_argument("fit_centering: regression kinds need n >= 2");

  const auto weights = centering_weights(data.treatment(), treat_probability);
  CenteringModel model;
  model.kind_ = kind;
  model.width_ = data.p();
  model.constant_any_width_ = false;

  if (data.p() == 0 || all_rows_identical(data.covariates())) {
    double sw = 0.0;
    double swy = 0.0;
    for (std::size_t i = 0; i < data.n(); ++i) {
      sw += weights[i];
      swy += weights[i] * data.outcome()[i];
    }
    model.state_ = swy / sw;
    model.degenerate_fallback_ = true;
    return model;
  }

  if (kind == CenteringKind::regression_tree) {
    TreeParams tp{params.max_depth, params.min_leaf, 0};
    model.state_ = RegressionTree::fit(data.covariates(), data.outcome(), weights, tp);
  } else {
    ForestParams fp;
    fp.trees = params.trees;
    fp.max_depth = params.max_depth;
    fp.min_leaf = params.min_leaf;
    fp.features_per_split = params.features_per_split;
    model.state_ = RegressionForest::fit(data.covariates(), data.outcome(), weights, fp, seed);
  }
  return model;
}

std::vector<double> predict_centering(const CenteringModel& model, const Matrix& covariates) {
  return model.predict(covariates);
}

}  // namespace evpol
