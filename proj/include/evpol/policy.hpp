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

#include <set>
#include <vector>

#include "evpol/matrix.hpp"

namespace evpol {

// A treatment rule: maps each covariate row to a treatment weight in [0,1].
// Binary policies return 0/1; relaxed policies return fractional weights.
class Policy {
 public:
  virtual ~Policy() = default;
  virtual std::vector<double> assign(const Matrix& covariates) const = 0;
};

class ConstantPolicy final : public Policy {
 public:
  explicit ConstantPolicy(double value) : value_(value) {}
  std::vector<double> assign(const Matrix& covariates) const override {
    return std::vector<double>(covariates.rows(), value_);
  }
  double value() const { return value_; }

 private:
  double value_;
};

// Treats rows whose integer cell index (covariate column `feature`) is in the set.
class CellSetPolicy final : public Policy {
 public:
  CellSetPolicy(std::set<long> treated_cells, std::size_t feature = 0)
      : cells_(std::move(treated_cells)), feature_(feature) {}
  std::vector<double> assign(const Matrix& covariates) const override {
    std::vector<double> out(covariates.rows());
    for (std::size_t i = 0; i < covariates.rows(); ++i) {
      out[i] = cells_.count(static_cast<long>(covariates(i, feature_))) ? 1.0 : 0.0;
    }
    return out;
  }
  const std::set<long>& cells() const { return cells_; }

 private:
  std::set<long> cells_;
  std::size_t feature_;
};

}  // namespace evpol
