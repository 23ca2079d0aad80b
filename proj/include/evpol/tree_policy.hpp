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
#include <map>
#include <span>
#include <string>
#include <vector>

#include "evpol/matrix.hpp"
#include "evpol/policy.hpp"
#include "evpol/scoring.hpp"

namespace evpol {

struct EvidenceTreeParams {
  double min_score_increase = 1e-6;
  int max_depth = 4;
  std::size_t min_leaf = 20;
  std::size_t thresholds_per_feature = 10;  // capped at node size - 1
  std::uint64_t seed = 0;

  void validate() const;
};

// Binary tree over covariates. Internal nodes send x[feature] < threshold left.
// Leaves carry an assignment in [0,1].
class PolicyTree : public Policy {
 public:
  struct Node {
    int feature = -1;  // -1 on leaves
    double threshold = 0.0;
    int left = -1;
    int right = -1;
    double assignment = 0.0;
    int depth = 0;
    std::size_t count = 0;  // training rows reaching the node

    bool is_leaf() const { return feature < 0; }
    friend bool operator==(const Node&, const Node&) = default;
  };

  PolicyTree() = default;
  PolicyTree(std::vector<Node> nodes, std::size_t width);

  std::vector<double> assign(const Matrix& covariates) const override;
  int leaf_index(std::span<const double> row) const;
  std::vector<int> leaf_indices(const Matrix& covariates) const;
  std::vector<int> leaves() const;

  // Copy with the given leaf ids set to 1 and every other leaf to 0.
  PolicyTree with_treated_leaves(std::span<const int> treated) const;

  const std::vector<Node>& nodes() const { return nodes_; }
  std::size_t width() const { return width_; }
  int depth() const;

  double final_t_statistic = 0.0;
  // All pseudo-outcomes under the root mask were equal; no t-statistic exists.
  bool degenerate_root = false;
  // Running best score: initial value then one entry per accepted split.
  std::vector<double> score_history;

  std::string to_json() const;
  static PolicyTree from_json(const std::string& text);

  friend bool operator==(const PolicyTree& a, const PolicyTree& b) {
    return a.width_ == b.width_ && a.nodes_ == b.nodes_;
  }

 private:
  void check_width(const Matrix& covariates) const;

  std::vector<Node> nodes_;
  std::size_t width_ = 0;
};

// Greedy breadth-first tree that accepts a split when the full-sample
// t-statistic of the updated assignment rises by at least min_score_increase.
PolicyTree fit_evidence_tree(const PseudoOutcomeTable& pseudo, const Matrix& covariates,
                             const EvidenceTreeParams& params = {});

struct RelaxedTreeParams {
  EvidenceTreeParams split;
  double variance_floor = 1e-12;
};

// Leaf weights proportional to mean / squared standard error, clipped at zero
// and scaled so the largest is 1.
class RelaxedTree : public Policy {
 public:
  struct LeafStats {
    double mean = 0.0;       // tau-hat
    double sq_error = 0.0;   // sigma-hat^2 = s^2 / n after flooring
    std::size_t count = 0;
    bool floored = false;
  };

  std::vector<double> assign(const Matrix& covariates) const override {
    return tree.assign(covariates);
  }

  PolicyTree tree;
  std::map<int, LeafStats> leaf_stats;
  double criterion = 0.0;  // sum over leaves of mean^2 / sq_error
  bool variance_floored = false;

  std::string to_json() const;
};

RelaxedTree fit_relaxed_tree(const PseudoOutcomeTable& pseudo, const Matrix& covariates,
                             const RelaxedTreeParams& params = {});

// Sum over the tree's leaves of mean^2 / (s^2 / n) of the pseudo-outcomes
// reaching each leaf, with the same floor.
double relaxed_criterion(const PolicyTree& tree, std::span<const double> pseudo,
                         const Matrix& covariates, double variance_floor = 1e-12);

std::vector<double> apply_policy(const PolicyTree& tree, const Matrix& covariates);
std::vector<double> apply_policy(const RelaxedTree& tree, const Matrix& covariates);

}  // namespace evpol
