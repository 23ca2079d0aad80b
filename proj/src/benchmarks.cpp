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

#include "evpol/benchmarks.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <deque>
#include <numeric>
#include <optional>
#include <stdexcept>
#include <string>

#include "evpol/ratio_opt.hpp"
#include "evpol/rng.hpp"

namespace evpol {

namespace {

constexpr std::array<std::pair<BenchmarkKind, std::string_view>, 9> kKindNames{{
    {BenchmarkKind::all, "all"},
    {BenchmarkKind::classifier, "classifier"},
    {BenchmarkKind::classifier_res, "classifier_res"},
    {BenchmarkKind::cate, "cate"},
    {BenchmarkKind::cate_const, "cate_const"},
    {BenchmarkKind::evidence, "evidence"},
    {BenchmarkKind::evidence_res, "evidence_res"},
    {BenchmarkKind::policy_submod, "policy_submod"},
    {BenchmarkKind::submod, "submod"},
}};

}  // namespace

std::string_view to_string(BenchmarkKind kind) {
  for (const auto& [k, name] : kKindNames) {
    if (k == kind) return name;
  }
  throw std::invalid_argument("unknown BenchmarkKind");
}

BenchmarkKind parse_benchmark_kind(std::string_view name) {
  for (const auto& [k, n] : kKindNames) {
    if (n == name) return k;
  }
  throw std::invalid_argument("unknown method '" + std::string(name) + "'");
}

std::vector<BenchmarkKind> all_benchmark_kinds() {
  std::vector<BenchmarkKind> out;
  for (const auto& entry : kKindNames) out.push_back(entry.first);
  return out;
}

ConstantPolicy fit_all(const TrialDataset&) { return ConstantPolicy(1.0); }

double weighted_gini(std::span<const double> labels, std::span<const double> weights) {
  if (labels.size() != weights.size()) throw std::invalid_argument("weighted_gini: length mismatch");
  double pos = 0.0;
  double neg = 0.0;
  for (std::size_t i = 0; i < labels.size(); ++i) {
    if (weights[i] < 0.0) throw std::invalid_argument("weighted_gini: negative weight");
    (labels[i] > 0.0 ? pos : neg) += weights[i];
  }
  const double total = pos + neg;
  if (total == 0.0) return 0.0;
  const double share = pos / total;
  return 1.0 - share * share - (1.0 - share) * (1.0 - share);
}

namespace {

// Weighted impurity mass: total weight times Gini impurity.
double impurity_mass(double pos, double neg) {
  const double total = pos + neg;
  return total > 0.0 ? 2.0 * pos * neg / total : 0.0;
}

std::vector<int> node_depths(const std::vector<RegressionTree::Node>& nodes) {
  std::vector<int> depth(nodes.size(), 0);
  for (std::size_t i = 0; i < nodes.size(); ++i) {
    if (nodes[i].feature >= 0) {
      depth[nodes[i].left] = depth[i] + 1;
      depth[nodes[i].right] = depth[i] + 1;
    }
  }
  return depth;
}

}  // namespace

PolicyTree fit_classification_tree(const Matrix& covariates, std::span<const double> labels,
                                   std::span<const double> weights, const ClassifierParams& params) {
  const std::size_t n = covariates.rows();
  if (labels.size() != n || weights.size() != n) {
    throw std::invalid_argument("fit_classification_tree: length mismatch");
  }
  if (n == 0) throw std::invalid_argument("fit_classification_tree: no rows");
  if (params.max_depth < 0 || params.min_leaf == 0) {
    throw std::invalid_argument("fit_classification_tree: max_depth >= 0 and min_leaf >= 1 required");
  }
  for (double w : weights) {
    if (!(w >= 0.0) || !std::isfinite(w)) throw std::invalid_argument("fit_classification_tree: bad weight");
  }

  std::vector<PolicyTree::Node> nodes(1);
  std::vector<std::vector<std::size_t>> node_rows(1);
  node_rows[0].resize(n);
  std::iota(node_rows[0].begin(), node_rows[0].end(), std::size_t{0});
  double total_weight = 0.0;
  for (double w : weights) total_weight += w;
  const double tol = 1e-12 * std::max(total_weight, 1e-300);

  std::deque<int> queue{0};
  while (!queue.empty()) {
    const int id = queue.front();
    queue.pop_front();
    const auto rows = node_rows[id];
    double pos = 0.0;
    double neg = 0.0;
    for (auto i : rows) (labels[i] > 0.0 ? pos : neg) += weights[i];
    nodes[id].assignment = pos > neg ? 1.0 : 0.0;
    nodes[id].count = rows.size();
    const double parent = impurity_mass(pos, neg);
    if (nodes[id].depth >= params.max_depth || rows.size() < 2 * params.min_leaf || parent <= tol) {
      continue;
    }

    struct Split {
      std::size_t feature;
      double threshold;
      double gain;
    };
    std::optional<Split> best;
    std::vector<std::size_t> order;
    for (std::size_t j = 0; j < covariates.cols(); ++j) {
      order = rows;
      std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
        return covariates(a, j) < covariates(b, j);
      });
      double lp = 0.0;
      double ln = 0.0;
      for (std::size_t k = 0; k + 1 < order.size(); ++k) {
        (labels[order[k]] > 0.0 ? lp : ln) += weights[order[k]];
        const double here = covariates(order[k], j);
        const double next = covariates(order[k + 1], j);
        if (!(next > here)) continue;
        const std::size_t left_count = k + 1;
        if (left_count < params.min_leaf || order.size() - left_count < params.min_leaf) continue;
        const double gain = parent - impurity_mass(lp, ln) - impurity_mass(pos - lp, neg - ln);
        if (!best ? gain > tol : gain > best->gain + tol) best = Split{j, next, gain};
      }
    }
    if (!best) continue;

    std::vector<std::size_t> left_rows;
    std::vector<std::size_t> right_rows;
    for (auto i : rows) {
      (covariates(i, best->feature) < best->threshold ? left_rows : right_rows).push_back(i);
    }
    const int left = static_cast<int>(nodes.size());
    nodes[id].feature = static_cast<int>(best->feature);
    nodes[id].threshold = best->threshold;
    nodes[id].left = left;
    nodes[id].right = left + 1;
    const int child_depth = nodes[id].depth + 1;
    for (auto* child : {&left_rows, &right_rows}) {
      PolicyTree::Node nd;
      nd.depth = child_depth;
      nodes.push_back(nd);
      node_rows.push_back(std::move(*child));
      queue.push_back(static_cast<int>(nodes.size()) - 1);
    }
  }
  return PolicyTree(std::move(nodes), covariates.cols());
}

PolicyTree fit_classifier(const TrialDataset& data, const CenteringModel& centering,
                          const ClassifierParams& params, const Propensity& propensity) {
  if (data.n() < 2) throw std::invalid_argument("fit_classifier: at least 2 rows required");
  const auto table = pseudo_outcomes(data, centering, propensity);
  std::vector<double> labels(data.n());
  std::vector<double> weights(data.n());
  for (std::size_t i = 0; i < data.n(); ++i) {
    labels[i] = table.pseudo[i] > 0.0 ? 1.0 : -1.0;
    weights[i] = std::abs(table.pseudo[i]);
  }
  return fit_classification_tree(data.covariates(), labels, weights, params);
}

PolicyTree fit_classifier(const TrialDataset& data, ClassifierCentering kind,
                          const ClassifierParams& params, std::uint64_t seed) {
  const double p = Propensity::empirical().resolve(data);
  const auto centering =
      kind == ClassifierCentering::mean
          ? fit_centering(data, CenteringKind::constant_mean, p)
          : fit_centering(data, CenteringKind::regression_forest, p, {}, derive_seed(seed, 0, "classifier-centering"));
  return fit_classifier(data, centering, params);
}

CateFit fit_cate(const TrialDataset& data, bool use_constant_propensity, const CateParams& params,
                 std::uint64_t seed) {
  const std::size_t n = data.n();
  if (n < 4) throw std::invalid_argument("fit_cate: at least 4 rows required");
  if (params.folds < 2 || params.folds > n) throw std::invalid_argument("fit_cate: folds must lie in [2, n]");

  Rng rng(derive_seed(seed, 0, "cate-folds"));
  const auto perm = rng.sample_without_replacement(n, n);
  std::vector<std::size_t> fold(n);
  for (std::size_t k = 0; k < n; ++k) fold[perm[k]] = k % params.folds;

  const double treated = data.treated_fraction();
  std::vector<double> outcome_hat(n, 0.0);
  std::vector<double> treat_hat(n, treated);
  const Matrix& x = data.covariates();
  std::vector<double> w_double(data.treatment().begin(), data.treatment().end());
  for (std::size_t f = 0; f < params.folds; ++f) {
    std::vector<std::size_t> fit_rows;
    std::vector<std::size_t> eval_rows;
    for (std::size_t i = 0; i < n; ++i) (fold[i] == f ? eval_rows : fit_rows).push_back(i);
    const Matrix fx = x.select_rows(fit_rows);
    std::vector<double> fy;
    std::vector<double> fw;
    for (auto i : fit_rows) {
      fy.push_back(data.outcome()[i]);
      fw.push_back(w_double[i]);
    }
    const std::vector<double> unit(fit_rows.size(), 1.0);
    const auto outcome_model = RegressionForest::fit(fx, fy, unit, params.nuisance, derive_seed(seed, f, "cate-outcome"));
    std::optional<RegressionForest> treat_model;
    if (!use_constant_propensity) {
      treat_model = RegressionForest::fit(fx, fw, unit, params.nuisance, derive_seed(seed, f, "cate-propensity"));
    }
    for (auto i : eval_rows) {
      outcome_hat[i] = outcome_model.predict(x.row(i));
      if (treat_model) treat_hat[i] = treat_model->predict(x.row(i));
    }
  }

  std::vector<double> labels(n, 0.0);
  std::vector<double> weights(n, 0.0);
  double total = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    const double wr = w_double[i] - treat_hat[i];
    const double yr = data.outcome()[i] - outcome_hat[i];
    weights[i] = wr * wr;
    labels[i] = wr != 0.0 ? yr / wr : 0.0;
    total += weights[i];
  }
  if (!(total > 0.0)) throw std::runtime_error("fit_cate: residual treatment variance is zero");

  TreeParams final_params = params.final_stage;
  final_params.features_per_split = 0;
  CateFit out;
  out.effect = RegressionTree::fit(x, labels, weights, final_params);
  const auto& src = out.effect.nodes();
  const auto depth = node_depths(src);
  std::vector<PolicyTree::Node> nodes(src.size());
  for (std::size_t i = 0; i < src.size(); ++i) {
    nodes[i].feature = src[i].feature;
    nodes[i].threshold = src[i].threshold;
    nodes[i].left = src[i].left;
    nodes[i].right = src[i].right;
    nodes[i].assignment = src[i].feature < 0 && src[i].value >= 0.0 ? 1.0 : 0.0;
    nodes[i].depth = depth[i];
    nodes[i].count = static_cast<std::size_t>(src[i].count);
  }
  out.policy = PolicyTree(std::move(nodes), x.cols());
  return out;
}

PolicyTree fit_evidence(const TrialDataset& data, const CenteringModel& centering,
                        const EvidenceTreeParams& params, const Propensity& propensity) {
  const auto table = pseudo_outcomes(data, centering, propensity);
  return fit_evidence_tree(table, data.covariates(), params);
}

PolicySubmodFit fit_policy_submod(const TrialDataset& data, const CenteringModel& centering,
                                  const EvidenceTreeParams& params, double epsilon,
                                  const Propensity& propensity) {
  const auto table = pseudo_outcomes(data, centering, propensity);
  const auto tree = fit_evidence_tree(table, data.covariates(), params);
  const auto leaf = tree.leaf_indices(data.covariates());
  const std::vector<long> cells(leaf.begin(), leaf.end());
  const auto stats = cell_statistics(table.pseudo, cells);
  PolicySubmodFit out;
  out.solution = bisection_solve(stats, epsilon);
  const std::vector<int> treated(out.solution.selected.begin(), out.solution.selected.end());
  out.policy = tree.with_treated_leaves(treated);
  out.policy.final_t_statistic = 0.0;
  if (const auto t = try_t_statistic(table.pseudo, out.policy.assign(data.covariates()))) {
    out.policy.final_t_statistic = t->t_statistic;
  }
  return out;
}

}  // namespace evpol
