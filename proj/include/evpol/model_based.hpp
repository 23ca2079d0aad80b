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
#include <set>
#include <span>
#include <string>
#include <vector>

#include "evpol/centering.hpp"
#include "evpol/dataset.hpp"
#include "evpol/matrix.hpp"
#include "evpol/policy.hpp"
#include "evpol/ratio_opt.hpp"
#include "evpol/scoring.hpp"

namespace evpol {

// Maps each feature to a bit: x > threshold. Features whose training values
// are all 0 or 1 get threshold 0.5, others their training median.
class Binarizer {
 public:
  Binarizer() = default;
  explicit Binarizer(std::vector<double> thresholds) : thresholds_(std::move(thresholds)) {}
  static Binarizer fit(const Matrix& covariates);

  Matrix transform(const Matrix& covariates) const;
  const std::vector<double>& thresholds() const { return thresholds_; }
  std::size_t width() const { return thresholds_.size(); }

 private:
  std::vector<double> thresholds_;
};

// Regression tree on 0/1 features that splits every node of a level on the
// same feature. Leaf index reads the chosen bits most significant first.
class LevelSplitTree {
 public:
  static LevelSplitTree fit(const Matrix& bits, std::span<const double> labels, int depth);

  int leaf_index(std::span<const double> bit_row) const;
  double predict(std::span<const double> bit_row) const { return leaf_means_[leaf_index(bit_row)]; }

  const std::vector<std::size_t>& level_features() const { return level_features_; }
  const std::vector<double>& leaf_means() const { return leaf_means_; }
  const std::vector<double>& level_gains() const { return level_gains_; }
  int depth() const { return static_cast<int>(level_features_.size()); }
  // Requested depth exceeded the feature count.
  bool stopped_early() const { return stopped_early_; }

 private:
  std::vector<std::size_t> level_features_;
  std::vector<double> level_gains_;
  std::vector<double> leaf_means_;
  bool stopped_early_ = false;
};

// Cells formed by intersecting the leaves of an effect tree and a
// second-moment tree: cell = effect_leaf * 2^(moment depth) + moment_leaf.
class CellPartition {
 public:
  CellPartition() = default;
  CellPartition(Binarizer binarizer, LevelSplitTree effect_tree, LevelSplitTree moment_tree)
      : binarizer_(std::move(binarizer)),
        effect_tree_(std::move(effect_tree)),
        moment_tree_(std::move(moment_tree)) {}

  long cell_of(std::span<const double> bit_row) const;
  std::vector<long> cells(const Matrix& covariates) const;
  std::size_t max_cells() const;

  const Binarizer& binarizer() const { return binarizer_; }
  const LevelSplitTree& effect_tree() const { return effect_tree_; }
  const LevelSplitTree& moment_tree() const { return moment_tree_; }

 private:
  Binarizer binarizer_;
  LevelSplitTree effect_tree_;
  LevelSplitTree moment_tree_;
};

struct ModelBasedParams {
  int sparsity = 2;  // depth of both level-split trees
  double epsilon = 1e-3;
};

class ModelBasedPolicy : public Policy {
 public:
  std::vector<double> assign(const Matrix& covariates) const override;

  CellPartition partition;
  CellStatistics cell_stats;
  RatioSolution solution;
  std::set<long> treated_cells;
  bool null_policy = false;

  std::string to_json() const;
};

ModelBasedPolicy fit_model_based_policy(const TrialDataset& data, const CenteringModel& centering,
                                        const ModelBasedParams& params = {},
                                        const Propensity& propensity = Propensity::empirical());

}  // namespace evpol
