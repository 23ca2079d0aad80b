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

#include "evpol/regression_tree.hpp"

#include <algorithm>
#include <cmath>
#include <deque>
#include <numeric>
#include <optional>
#include <stdexcept>

namespace evpol {

SortedColumns::SortedColumns(const Matrix& x) : order_(x.cols()) {
  for (std::size_t f = 0; f < x.cols(); ++f) {
    auto& ord = order_[f];
    ord.resize(x.rows());
    std::iota(ord.begin(), ord.end(), std::uint32_t{0});
    std::stable_sort(ord.begin(), ord.end(),
                     [&](std::uint32_t a, std::uint32_t b) { return x(a, f) < x(b, f); });
  }
}

namespace {

struct PendingNode {
  int id;
  std::size_t begin;
  std::size_t end;
  int depth;
};

struct Split {
  std::size_t feature = 0;
  double threshold = 0.0;
  double gain = 0.0;
};

}  // namespace

RegressionTree RegressionTree::fit(const Matrix& x, std::span<const double> labels,
                                   std::span<const double> weights, const TreeParams& params,
                                   Rng* rng, std::span<const std::uint32_t> multiplicity,
                                   const SortedColumns* sorted) {
  const std::size_t n = x.rows();
  const std::size_t p = x.cols();
  if (labels.size() != n || weights.size() != n) {
    throw std::invalid_argument("RegressionTree::fit: label/weight length mismatch");
  }
  if (!multiplicity.empty() && multiplicity.size() != n) {
    throw std::invalid_argument("RegressionTree::fit: multiplicity length mismatch");
  }
  const bool subsample = params.features_per_split > 0 && params.features_per_split < p;
  if (subsample && rng == nullptr) {
    throw std::invalid_argument("RegressionTree::fit: feature subsampling needs an Rng");
  }
  auto count_of = [&](std::uint32_t r) -> double {
    return multiplicity.empty() ? 1.0 : static_cast<double>(multiplicity[r]);
  };

  std::optional<SortedColumns> local_sorted;
  if (sorted == nullptr) {
    local_sorted.emplace(x);
    sorted = &*local_sorted;
  }
  // Per-feature working orders restricted to rows that take part.
  std::vector<std::vector<std::uint32_t>> order(p);
  for (std::size_t f = 0; f < p; ++f) {
    const auto& full = sorted->order(f);
    order[f].reserve(full.size());
    for (const std::uint32_t r : full) {
      if (count_of(r) > 0.0) order[f].push_back(r);
    }
  }
  std::vector<std::uint32_t> active;
  for (std::uint32_t r = 0; r < n; ++r) {
    if (count_of(r) > 0.0) active.push_back(r);
  }

  RegressionTree tree;
  tree.width_ = p;

  auto node_stats = [&](std::span<const std::uint32_t> rows, double& cnt, double& sw, double& swy,
                        double& swyy) {
    cnt = sw = swy = swyy = 0.0;
    for (const std::uint32_t r : rows) {
      const double c = count_of(r);
      const double wr = c * weights[r];
      cnt += c;
      sw += wr;
      swy += wr * labels[r];
      swyy += wr * labels[r] * labels[r];
    }
  };

  std::vector<std::uint8_t> goes_left(n, 0);
  std::vector<std::uint32_t> buffer(active.size());
  std::deque<PendingNode> queue;
  tree.nodes_.push_back(Node{});
  queue.push_back({0, 0, active.size(), 0});

  while (!queue.empty()) {
    const PendingNode cur = queue.front();
    queue.pop_front();
    const std::span<const std::uint32_t> rows =
        p > 0 ? std::span<const std::uint32_t>(order[0]).subspan(cur.begin, cur.end - cur.begin)
              : std::span<const std::uint32_t>(active).subspan(cur.begin, cur.end - cur.begin);
    double cnt = 0.0, sw = 0.0, swy = 0.0, swyy = 0.0;
    node_stats(rows, cnt, sw, swy, swyy);
    Node& node = tree.nodes_[static_cast<std::size_t>(cur.id)];
    node.count = cnt;
    // Zero-weight children keep the value copied from their parent.
    if (sw > 0.0) {
      node.value = swy / sw;
    } else if (cur.id == 0) {
      node.value = 0.0;
    }

    if (p == 0 || cur.depth >= params.max_depth || cnt < 2.0 * static_cast<double>(params.min_leaf) ||
        sw <= 0.0) {
      continue;
    }

    std::vector<std::size_t> features;
    if (subsample) {
      // Features constant within the node are skipped and do not count.
      for (const std::size_t f : rng->sample_without_replacement(p, p)) {
        const auto& ord = order[f];
        if (x(ord[cur.begin], f) == x(ord[cur.end - 1], f)) continue;
        features.push_back(f);
        if (features.size() == params.features_per_split) break;
      }
      std::sort(features.begin(), features.end());
    } else {
      features.resize(p);
      std::iota(features.begin(), features.end(), std::size_t{0});
    }

    const double parent_score = swy * swy / sw;
    const double tol = 1e-12 * std::max(std::abs(swyy), 1e-300);
    std::optional<Split> best;
    for (const std::size_t f : features) {
      const auto& ord = order[f];
      double cnt_l = 0.0, sw_l = 0.0, swy_l = 0.0;
      for (std::size_t k = cur.begin; k + 1 < cur.end; ++k) {
        const std::uint32_t r = ord[k];
        const double c = count_of(r);
        cnt_l += c;
        sw_l += c * weights[r];
        swy_l += c * weights[r] * labels[r];
        const double here = x(r, f);
        const double next = x(ord[k + 1], f);
        if (!(next > here)) continue;
        const double cnt_r = cnt - cnt_l;
        if (cnt_l < static_cast<double>(params.min_leaf) ||
            cnt_r < static_cast<double>(params.min_leaf)) {
          continue;
        }
        const double sw_r = sw - sw_l;
        if (sw_l <= 0.0 || sw_r <= 0.0) continue;
        const double swy_r = swy - swy_l;
        const double gain = swy_l * swy_l / sw_l + swy_r * swy_r / sw_r - parent_score;
        if (!best ? gain > tol : gain > best->gain + tol) {
          best = Split{f, next, gain};
        }
      }
    }
    if (!best) continue;

    // Stable partition of every feature order on the chosen split.
    std::size_t left_count = 0;
    for (std::size_t k = cur.begin; k < cur.end; ++k) {
      const std::uint32_t r = order[best->feature][k];
      goes_left[r] = x(r, best->feature) < best->threshold ? 1 : 0;
      left_count += goes_left[r];
    }
    for (std::size_t f = 0; f < p; ++f) {
      auto& ord = order[f];
      std::size_t li = 0;
      std::size_t ri = left_count;
      for (std::size_t k = cur.begin; k < cur.end; ++k) {
        const std::uint32_t r = ord[k];
        if (goes_left[r]) {
          buffer[li++] = r;
        } else {
          buffer[ri++] = r;
        }
      }
      std::copy(buffer.begin(), buffer.begin() + static_cast<std::ptrdiff_t>(cur.end - cur.begin),
                ord.begin() + static_cast<std::ptrdiff_t>(cur.begin));
    }

    const int left_id = static_cast<int>(tree.nodes_.size());
    const int right_id = left_id + 1;
    {
      Node& parent = tree.nodes_[static_cast<std::size_t>(cur.id)];
      parent.feature = static_cast<int>(best->feature);
      parent.threshold = best->threshold;
      parent.left = left_id;
      parent.right = right_id;
    }
    const double parent_value = tree.nodes_[static_cast<std::size_t>(cur.id)].value;
    tree.nodes_.push_back(Node{-1, 0.0, -1, -1, parent_value, 0.0});
    tree.nodes_.push_back(Node{-1, 0.0, -1, -1, parent_value, 0.0});
    queue.push_back({left_id, cur.begin, cur.begin + left_count, cur.depth + 1});
    queue.push_back({right_id, cur.begin + left_count, cur.end, cur.depth + 1});
  }
  return tree;
}

int RegressionTree::leaf_index(std::span<const double> row) const {
  if (row.size() != width_) throw std::invalid_argument("RegressionTree: covariate width mismatch");
  int id = 0;
  while (nodes_[static_cast<std::size_t>(id)].feature >= 0) {
    const Node& node = nodes_[static_cast<std::size_t>(id)];
    id = row[static_cast<std::size_t>(node.feature)] < node.threshold ? node.left : node.right;
  }
  return id;
}

double RegressionTree::predict(std::span<const double> row) const {
  return nodes_[static_cast<std::size_t>(leaf_index(row))].value;
}

std::vector<double> RegressionTree::predict(const Matrix& x) const {
  std::vector<double> out(x.rows());
  for (std::size_t i = 0; i < x.rows(); ++i) out[i] = predict(x.row(i));
  return out;
}

int RegressionTree::depth() const {
  std::vector<int> d(nodes_.size(), 0);
  int best = 0;
  for (std::size_t i = 0; i < nodes_.size(); ++i) {
    best = std::max(best, d[i]);
    if (nodes_[i].feature >= 0) {
      d[static_cast<std::size_t>(nodes_[i].left)] = d[i] + 1;
      d[static_cast<std::size_t>(nodes_[i].right)] = d[i] + 1;
    }
  }
  return best;
}

std::size_t RegressionTree::leaf_count() const {
  return static_cast<std::size_t>(
      std::count_if(nodes_.begin(), nodes_.end(), [](const Node& nd) { return nd.feature < 0; }));
}

RegressionForest RegressionForest::fit(const Matrix& x, std::span<const double> labels,
                                       std::span<const double> weights, const ForestParams& params,
                                       std::uint64_t seed) {
  if (params.trees == 0) throw std::invalid_argument("RegressionForest: trees must be >= 1");
  const std::size_t n = x.rows();
  const std::size_t p = x.cols();
  TreeParams tree_params;
  tree_params.max_depth = params.max_depth;
  tree_params.min_leaf = params.min_leaf;
  tree_params.features_per_split =
      params.features_per_split > 0
          ? params.features_per_split
          : std::max<std::size_t>(1, static_cast<std::size_t>(std::floor(std::sqrt(static_cast<double>(p)))));

  const SortedColumns sorted(x);
  RegressionForest forest;
  forest.width_ = p;
  forest.trees_.reserve(params.trees);
  std::vector<std::uint32_t> counts(n);
  for (std::size_t t = 0; t < params.trees; ++t) {
    Rng rng(derive_seed(seed, t, "forest-tree"));
    if (params.bootstrap) {
      std::fill(counts.begin(), counts.end(), 0U);
      for (std::size_t i = 0; i < n; ++i) ++counts[rng.below(n)];
    } else {
      std::fill(counts.begin(), counts.end(), 1U);
    }
    forest.trees_.push_back(
        RegressionTree::fit(x, labels, weights, tree_params, &rng, counts, &sorted));
  }
  return forest;
}

double RegressionForest::predict(std::span<const double> row) const {
  double s = 0.0;
  for (const auto& tree : trees_) s += tree.predict(row);
  return s / static_cast<double>(trees_.size());
}

std::vector<double> RegressionForest::predict(const Matrix& x) const {
  if (x.cols() != width_) throw std::invalid_argument("RegressionForest: covariate width mismatch");
  std::vector<double> out(x.rows());
  for (std::size_t i = 0; i < x.rows(); ++i) out[i] = predict(x.row(i));
  return out;
}

}  // namespace evpol
