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

#include "evpol/model_based.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include <json.hpp>

#include "evpol/util.hpp"

namespace evpol {

Binarizer Binarizer::fit(const Matrix& covariates) {
  if (covariates.rows() == 0) throw std::invalid_argument("Binarizer::fit: no rows");
  std::vector<double> thresholds(covariates.cols());
  for (std::size_t j = 0; j < covariates.cols(); ++j) {
    auto column = covariates.col(j);
    const bool binary = std::all_of(column.begin(), column.end(),
                                    [](double v) { return v == 0.0 || v == 1.0; });
    thresholds[j] = binary ? 0.5 : median(std::move(column));
  }
  return Binarizer(std::move(thresholds));
}

Matrix Binarizer::transform(const Matrix& covariates) const {
  if (covariates.cols() != thresholds_.size()) {
    throw std::invalid_argument("Binarizer: covariate width " + std::to_string(covariates.cols()) +
                                " does not match " + std::to_string(thresholds_.size()));
  }
  Matrix out(covariates.rows(), covariates.cols());
  for (std::size_t i = 0; i < covariates.rows(); ++i) {
    for (std::size_t j = 0; j < covariates.cols(); ++j) {
      out(i, j) = covariates(i, j) > thresholds_[j] ? 1.0 : 0.0;
    }
  }
  return out;
}

LevelSplitTree LevelSplitTree::fit(const Matrix& bits, std::span<const double> labels, int depth) {
  if (depth < 0) throw std::invalid_argument("LevelSplitTree: depth must be >= 0");
  if (labels.size() != bits.rows()) {
    throw std::invalid_argument("LevelSplitTree: label count does not match rows");
  }
  if (labels.empty()) throw std::invalid_argument("LevelSplitTree: no rows");
  for (double v : bits.data()) {
    if (v != 0.0 && v != 1.0) throw std::invalid_argument("LevelSplitTree: features must be 0/1");
  }
  double sum_sq = 0.0;
  for (double y : labels) {
    if (!std::isfinite(y)) throw std::invalid_argument("LevelSplitTree: non-finite label");
    sum_sq += y * y;
  }
  const std::size_t n = labels.size();
  const double tol = 1e-12 * sum_sq / static_cast<double>(n);

  LevelSplitTree tree;
  std::vector<std::size_t> leaf(n, 0);
  tree.leaf_means_ = {mean(labels)};
  std::vector<bool> used(bits.cols(), false);

  for (int level = 0; level < depth; ++level) {
    const std::size_t leaves = tree.leaf_means_.size();
    std::vector<double> parent_sum(leaves, 0.0);
    std::vector<double> parent_count(leaves, 0.0);
    for (std::size_t i = 0; i < n; ++i) {
      parent_sum[leaf[i]] += labels[i];
      parent_count[leaf[i]] += 1.0;
    }
    double parent_score = 0.0;
    for (std::size_t l = 0; l < leaves; ++l) {
      if (parent_count[l] > 0.0) parent_score += parent_sum[l] * parent_sum[l] / parent_count[l];
    }

    bool found = false;
    std::size_t best_feature = 0;
    double best_gain = 0.0;
    std::vector<double> sum(2 * leaves);
    std::vector<double> count(2 * leaves);
    for (std::size_t j = 0; j < bits.cols(); ++j) {
      if (used[j]) continue;
      std::fill(sum.begin(), sum.end(), 0.0);
      std::fill(count.begin(), count.end(), 0.0);
      for (std::size_t i = 0; i < n; ++i) {
        const std::size_t child = 2 * leaf[i] + (bits(i, j) > 0.5 ? 1 : 0);
        sum[child] += labels[i];
        count[child] += 1.0;
      }
      double score = 0.0;
      for (std::size_t c = 0; c < 2 * leaves; ++c) {
        if (count[c] > 0.0) score += sum[c] * sum[c] / count[c];
      }
      const double gain = (score - parent_score) / static_cast<double>(n);
      if (!found || gain > best_gain + tol) {
        found = true;
        best_feature = j;
        best_gain = gain;
      }
    }
    if (!found) {
      tree.stopped_early_ = true;
      break;
    }

    used[best_feature] = true;
    tree.level_features_.push_back(best_feature);
    tree.level_gains_.push_back(best_gain);
    std::fill(sum.begin(), sum.end(), 0.0);
    std::fill(count.begin(), count.end(), 0.0);
    for (std::size_t i = 0; i < n; ++i) {
      leaf[i] = 2 * leaf[i] + (bits(i, best_feature) > 0.5 ? 1 : 0);
      sum[leaf[i]] += labels[i];
      count[leaf[i]] += 1.0;
    }
    std::vector<double> means(2 * leaves);
    for (std::size_t c = 0; c < 2 * leaves; ++c) {
      // Empty children keep the parent's mean.
      means[c] = count[c] > 0.0 ? sum[c] / count[c] : tree.leaf_means_[c / 2];
    }
    tree.leaf_means_ = std::move(means);
  }
  return tree;
}

int LevelSplitTree::leaf_index(std::span<const double> bit_row) const {
  int leaf = 0;
  for (auto f : level_features_) {
    if (f >= bit_row.size()) throw std::invalid_argument("LevelSplitTree: row too short");
    leaf = 2 * leaf + (bit_row[f] > 0.5 ? 1 : 0);
  }
  return leaf;
}

long CellPartition::cell_of(std::span<const double> bit_row) const {
  const long moment_leaves = 1L << moment_tree_.depth();
  return static_cast<long>(effect_tree_.leaf_index(bit_row)) * moment_leaves +
         moment_tree_.leaf_index(bit_row);
}

std::vector<long> CellPartition::cells(const Matrix& covariates) const {
  const Matrix bits = binarizer_.transform(covariates);
  std::vector<long> out(bits.rows());
  for (std::size_t i = 0; i < bits.rows(); ++i) out[i] = cell_of(bits.row(i));
  return out;
}

std::size_t CellPartition::max_cells() const {
  return std::size_t{1} << (effect_tree_.depth() + moment_tree_.depth());
}

std::vector<double> ModelBasedPolicy::assign(const Matrix& covariates) const {
  const auto c = partition.cells(covariates);
  std::vector<double> out(c.size());
  for (std::size_t i = 0; i < c.size(); ++i) out[i] = treated_cells.count(c[i]) ? 1.0 : 0.0;
  return out;
}

std::string ModelBasedPolicy::to_json() const {
  nlohmann::json j;
  j["kind"] = "model_based";
  j["thresholds"] = partition.binarizer().thresholds();
  j["effect_levels"] = partition.effect_tree().level_features();
  j["effect_leaf_means"] = partition.effect_tree().leaf_means();
  j["moment_levels"] = partition.moment_tree().level_features();
  j["moment_leaf_means"] = partition.moment_tree().leaf_means();
  j["selected_cells"] = std::vector<long>(treated_cells.begin(), treated_cells.end());
  j["cell_ids"] = cell_stats.cell_ids;
  j["cell_w"] = cell_stats.w;
  j["cell_v"] = cell_stats.v;
  j["objective"] = std::isfinite(solution.objective) ? nlohmann::json(solution.objective)
                                                     : nlohmann::json(nullptr);
  j["iterations"] = solution.iterations;
  j["null_policy"] = null_policy;
  return j.dump(2);
}

ModelBasedPolicy fit_model_based_policy(const TrialDataset& data, const CenteringModel& centering,
                                        const ModelBasedParams& params,
                                        const Propensity& propensity) {
  if (params.sparsity < 0) throw std::invalid_argument("model_based: sparsity must be >= 0");
  if (!(params.epsilon > 0.0)) throw std::invalid_argument("model_based: epsilon must be positive");
  const auto table = pseudo_outcomes(data, centering, propensity);
  auto binarizer = Binarizer::fit(data.covariates());
  const Matrix bits = binarizer.transform(data.covariates());
  auto effect = LevelSplitTree::fit(bits, table.pseudo, params.sparsity);
  auto moment = LevelSplitTree::fit(bits, table.pseudo_sq, params.sparsity);

  ModelBasedPolicy out;
  out.partition = CellPartition(std::move(binarizer), std::move(effect), std::move(moment));
  std::vector<long> cells(bits.rows());
  for (std::size_t i = 0; i < bits.rows(); ++i) cells[i] = out.partition.cell_of(bits.row(i));
  out.cell_stats = cell_statistics(table.pseudo, cells);
  out.solution = bisection_solve(out.cell_stats, params.epsilon);
  out.treated_cells.insert(out.solution.selected.begin(), out.solution.selected.end());
  out.null_policy = out.treated_cells.empty();
  return out;
}

}  // namespace evpol
