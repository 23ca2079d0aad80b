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

#include "evpol/scoring.hpp"

namespace evpol {

// Per-cell sums of pseudo-outcomes. w(x) = (1/n) sum_{i in x} pseudo_i,
// v(x) = (1/n) sum_{i in x} pseudo_i^2.
struct CellStatistics {
  std::vector<long> cell_ids;
  std::vector<double> w;
  std::vector<double> v;

  std::size_t size() const { return cell_ids.size(); }
  // Lengths agree, ids unique, entries finite, v >= 0.
  void validate() const;
};

// Aggregates a pseudo-outcome table over the cell id of each row. Ids are
// returned in ascending order.
CellStatistics cell_statistics(std::span<const double> pseudo, std::span<const long> cell_of_row);

struct RatioSolution {
  std::vector<long> selected;  // ascending ids
  double objective = 0.0;      // w(S) / sqrt(v(S))
  int iterations = 0;
  double lambda_final = 0.0;
  bool no_positive_cell = false;
};

// w(S) / sqrt(v(S)) for the given ids; +inf when v(S) = 0 < w(S), 0 for the empty set.
double ratio_objective(const CellStatistics& stats, std::span<const long> selected);

inline constexpr std::size_t kEnumerationLimit = 20;

// Exact argmin over subsets S of the positive-w cells of sqrt(v(S)) - lambda w(S).
// Ties go to the lexicographically smallest id set. Enumerates for up to
// kEnumerationLimit cells, scans w/v-sorted prefixes beyond that.
std::vector<long> inner_minimize(const CellStatistics& stats, double lambda);

// Lambda bisection. Cells with w > 0 and v = 0 are added to the returned set
// unconditionally; the search runs over the remaining positive cells.
RatioSolution bisection_solve(const CellStatistics& stats, double epsilon = 1e-3);

// Best prefix of the positive cells ordered by w/v descending.
RatioSolution ratio_prefix_fast_path(const CellStatistics& stats);

// Exhaustive maximum over nonempty subsets of the positive cells; ties to the
// lexicographically smallest set. Throws above kEnumerationLimit positive cells.
RatioSolution ratio_brute_force(const CellStatistics& stats);

}  // namespace evpol
