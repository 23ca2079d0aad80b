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
#include <vector>

#include "evpol/matrix.hpp"
#include "evpol/rng.hpp"

namespace evpol {

struct TreeParams {
  int max_depth = 5;
  std::size_t min_leaf = 5;
  // Features examined per split; 0 examines all of them.
  std::size_t features_per_split = 0;
};

// Row order of every column, ascending by value then by row index.
// Shared across the trees of a forest so each tree skips the sort.
class SortedColumns {
 public:
  explicit SortedColumns(const Matrix& x);
  const std::vector<std::uint32_t>& order(std::size_t feature) const { return order_[feature]; }
  std::size_t cols() const { return order_.size(); }

 private:
  std::vector<std::vector<std::uint32_t>> order_;
};

// Weighted least-squares CART. A split on (feature, threshold) sends
// x[feature] < threshold left. Split search is exhaustive over distinct values
// of the examined features; ties go to the lowest feature index, then the
// lowest threshold. Leaves predict the weighted mean of their labels.
class RegressionTree {
 public:
  struct Node {
    int feature = -1;  // -1 marks a leaf
    double threshold = 0.0;
    int left = -1;
    int right = -1;
    double value = 0.0;
    double count = 0.0;
  };

  // `multiplicity` (optional) gives per-row integer repeat counts, as produced
  // by bootstrap resampling; rows with count 0 are ignored. `rng` is required
  // only when params.features_per_split subsamples features.
  static RegressionTree fit(const Matrix& x, std::span<const double> labels,
                            std::span<const double> weights, const TreeParams& params,
                            Rng* rng = nullptr, std::span<const std::uint32_t> multiplicity = {},
                            const SortedColumns* sorted = nullptr);

  double predict(std::span<const double> row) const;
  std::vector<double> predict(const Matrix& x) const;
  int leaf_index(std::span<const double> row) const;

  const std::vector<Node>& nodes() const { return nodes_; }
  std::size_t width() const { return width_; }
  int depth() const;
  std::size_t leaf_count() const;

 private:
  std::vector<Node> nodes_;
  std::size_t width_ = 0;
};

struct ForestParams {
  std::size_t trees = 100;
  int max_depth = 5;
  std::size_t min_leaf = 5;
  // 0 selects max(1, floor(sqrt(p))). Features constant within a node are not counted.
  std::size_t features_per_split = 0;
  bool bootstrap = true;
};

class RegressionForest {
 public:
  static RegressionForest fit(const Matrix& x, std::span<const double> labels,
                              std::span<const double> weights, const ForestParams& params,
                              std::uint64_t seed);

  // Average of the trees' predictions.
  double predict(std::span<const double> row) const;
  std::vector<double> predict(const Matrix& x) const;

  const std::vector<RegressionTree>& trees() const { return trees_; }
  std::size_t width() const { return width_; }

 private:
  std::vector<RegressionTree> trees_;
  std::size_t width_ = 0;
};

}  // namespace evpol
