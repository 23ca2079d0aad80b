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

#include "evpol/tree_policy.hpp"

#include <algorithm>
#include <cmath>
#include <deque>
#include <limits>
#include <numeric>
#include <optional>
#include <stdexcept>

#include <json.hpp>

#include "evpol/rng.hpp"
#include "evpol/util.hpp"

namespace evpol {

void EvidenceTreeParams::validate() const {
  if (!(min_score_increase >= 0.0) || !std::isfinite(min_score_increase)) {
    throw std::invalid_argument("min_score_increase must be finite and >= 0");
  }
  if (max_depth < 0) throw std::invalid_argument("max_depth must be >= 0");
  if (thresholds_per_feature == 0) throw std::invalid_argument("thresholds_per_feature must be >= 1");
}

PolicyTree::PolicyTree(std::vector<Node> nodes, std::size_t width)
    : nodes_(std::move(nodes)), width_(width) {
  if (nodes_.empty()) throw std::invalid_argument("PolicyTree: no nodes");
  for (std::size_t i = 0; i < nodes_.size(); ++i) {
    const auto& nd = nodes_[i];
    if (nd.is_leaf()) {
      if (!(nd.assignment >= 0.0 && nd.assignment <= 1.0)) {
        throw std::invalid_argument("PolicyTree: leaf assignment outside [0,1]");
      }
      continue;
    }
    const auto count = static_cast<int>(nodes_.size());
    if (static_cast<std::size_t>(nd.feature) >= width_ || nd.left <= static_cast<int>(i) ||
        nd.right <= static_cast<int>(i) || nd.left >= count || nd.right >= count) {
      throw std::invalid_argument("PolicyTree: malformed node " + std::to_string(i));
    }
  }
}

void PolicyTree::check_width(const Matrix& covariates) const {
  if (covariates.cols() != width_) {
    throw std::invalid_argument("PolicyTree: covariate width " + std::to_string(covariates.cols()) +
                                " does not match tree width " + std::to_string(width_));
  }
}

int PolicyTree::leaf_index(std::span<const double> row) const {
  int id = 0;
  while (!nodes_[id].is_leaf()) {
    const auto& nd = nodes_[id];
    id = row[nd.feature] < nd.threshold ? nd.left : nd.right;
  }
  return id;
}

std::vector<int> PolicyTree::leaf_indices(const Matrix& covariates) const {
  check_width(covariates);
  std::vector<int> out(covariates.rows());
  for (std::size_t i = 0; i < covariates.rows(); ++i) out[i] = leaf_index(covariates.row(i));
  return out;
}

std::vector<double> PolicyTree::assign(const Matrix& covariates) const {
  check_width(covariates);
  std::vector<double> out(covariates.rows());
  for (std::size_t i = 0; i < covariates.rows(); ++i) {
    out[i] = nodes_[leaf_index(covariates.row(i))].assignment;
  }
  return out;
}

std::vector<int> PolicyTree::leaves() const {
  std::vector<int> out;
  for (std::size_t i = 0; i < nodes_.size(); ++i) {
    if (nodes_[i].is_leaf()) out.push_back(static_cast<int>(i));
  }
  return out;
}

PolicyTree PolicyTree::with_treated_leaves(std::span<const int> treated) const {
  PolicyTree out = *this;
  for (auto& nd : out.nodes_) {
    if (nd.is_leaf()) nd.assignment = 0.0;
  }
  for (int id : treated) {
    if (id < 0 || static_cast<std::size_t>(id) >= nodes_.size() || !nodes_[id].is_leaf()) {
      throw std::invalid_argument("with_treated_leaves: " + std::to_string(id) + " is not a leaf");
    }
    out.nodes_[id].assignment = 1.0;
  }
  return out;
}

int PolicyTree::depth() const {
  int d = 0;
  for (const auto& nd : nodes_) d = std::max(d, nd.depth);
  return d;
}

namespace {

nlohmann::json nodes_json(const std::vector<PolicyTree::Node>& nodes) {
  auto arr = nlohmann::json::array();
  for (std::size_t i = 0; i < nodes.size(); ++i) {
    const auto& nd = nodes[i];
    arr.push_back({{"id", i},
                   {"feature_index", nd.feature},
                   {"threshold", nd.threshold},
                   {"left_child", nd.left},
                   {"right_child", nd.right},
                   {"assignment", nd.assignment},
                   {"depth", nd.depth},
                   {"count", nd.count}});
  }
  return arr;
}

}  // namespace

std::string PolicyTree::to_json() const {
  nlohmann::json j;
  j["kind"] = "policy_tree";
  j["width"] = width_;
  j["root"] = 0;
  j["depth"] = depth();
  j["final_t_statistic"] = final_t_statistic;
  j["degenerate_root"] = degenerate_root;
  j["nodes"] = nodes_json(nodes_);
  return j.dump(2);
}

PolicyTree PolicyTree::from_json(const std::string& text) {
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(text);
    std::vector<Node> nodes;
    for (const auto& e : j.at("nodes")) {
      Node nd;
      nd.feature = e.at("feature_index").get<int>();
      nd.threshold = e.at("threshold").get<double>();
      nd.left = e.at("left_child").get<int>();
      nd.right = e.at("right_child").get<int>();
      nd.assignment = e.at("assignment").get<double>();
      nd.depth = e.value("depth", 0);
      nd.count = e.value("count", std::size_t{0});
      nodes.push_back(nd);
    }
    PolicyTree tree(std::move(nodes), j.at("width").get<std::size_t>());
    tree.final_t_statistic = j.value("final_t_statistic", 0.0);
    tree.degenerate_root = j.value("degenerate_root", false);
    return tree;
  } catch (const nlohmann::json::exception& e) {
    throw std::invalid_argument(std::string("PolicyTree::from_json: ") + e.what());
  }
}

namespace {

// sqrt(n) * mean / sd from running sums; nullopt when the spread vanishes.
std::optional<double> t_from_sums(double s1, double s2, std::size_t n) {
  const double nd = static_cast<double>(n);
  const double mean = s1 / nd;
  const double var = (s2 - s1 * mean) / (nd - 1.0);
  if (!(var > 1e-12 * (s2 / nd))) return std::nullopt;
  return std::sqrt(nd) * mean / std::sqrt(var);
}

struct NodeWork {
  int id = 0;
  std::vector<std::size_t> rows;
};

// Node rows sorted by one feature with prefix sums of pseudo and pseudo^2.
struct SortedNode {
  std::vector<double> values;  // sorted feature values
  std::vector<double> p1;      // p1[k] = sum of first k pseudo
  std::vector<double> p2;
  std::vector<std::size_t> order;

  SortedNode(const std::vector<std::size_t>& rows, const Matrix& x, std::size_t feature,
             std::span<const double> pseudo) {
    order = rows;
    std::stable_sort(order.begin(), order.end(),
                     [&](std::size_t a, std::size_t b) { return x(a, feature) < x(b, feature); });
    values.resize(order.size());
    p1.assign(order.size() + 1, 0.0);
    p2.assign(order.size() + 1, 0.0);
    for (std::size_t k = 0; k < order.size(); ++k) {
      const double r = pseudo[order[k]];
      values[k] = x(order[k], feature);
      p1[k + 1] = p1[k] + r;
      p2[k + 1] = p2[k] + r * r;
    }
  }

  std::size_t left_count(double threshold) const {
    return static_cast<std::size_t>(std::lower_bound(values.begin(), values.end(), threshold) -
                                    values.begin());
  }
};

// Up to `limit` distinct values of the node's feature, drawn without
// replacement and returned ascending.
std::vector<double> draw_thresholds(const SortedNode& sn, std::size_t limit, Rng& rng) {
  std::vector<double> distinct;
  for (double v : sn.values) {
    if (distinct.empty() || v != distinct.back()) distinct.push_back(v);
  }
  const std::size_t k = std::min({limit, sn.values.size() - 1, distinct.size()});
  auto picks = rng.sample_without_replacement(distinct.size(), k);
  std::vector<double> out;
  out.reserve(k);
  for (auto i : picks) out.push_back(distinct[i]);
  std::sort(out.begin(), out.end());
  return out;
}

void check_inputs(const PseudoOutcomeTable& pseudo, const Matrix& covariates) {
  if (pseudo.size() != covariates.rows()) {
    throw std::invalid_argument("tree fit: pseudo-outcome count does not match covariate rows");
  }
  if (pseudo.size() < 2) throw std::invalid_argument("tree fit: at least 2 rows required");
}

}  // namespace

PolicyTree fit_evidence_tree(const PseudoOutcomeTable& pseudo, const Matrix& covariates,
                             const EvidenceTreeParams& params) {
  params.validate();
  check_inputs(pseudo, covariates);
  const std::size_t n = pseudo.size();
  const std::span<const double> rho = pseudo.pseudo;
  Rng rng(params.seed);

  std::vector<double> ones(n, 1.0);
  const auto root_stat = try_t_statistic(rho, ones);
  bool degenerate_root = false;
  double root_assign = 0.0;
  double best = 0.0;
  if (root_stat) {
    root_assign = root_stat->t_statistic >= 0.0 ? 1.0 : 0.0;
    best = std::max(root_stat->t_statistic, 0.0);
  } else {
    // All pseudo-outcomes equal: treat by sign, and no split can beat a positive constant.
    degenerate_root = true;
    const double avg = mean(rho);
    root_assign = avg >= 0.0 ? 1.0 : 0.0;
    best = avg > 0.0 ? std::numeric_limits<double>::infinity() : 0.0;
  }

  std::vector<double> a(n, root_assign);
  double s1 = 0.0;
  double s2 = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    s1 += a[i] * rho[i];
    s2 += a[i] * rho[i] * rho[i];
  }

  std::vector<PolicyTree::Node> nodes(1);
  nodes[0].assignment = root_assign;
  nodes[0].count = n;
  std::vector<double> history{best};

  std::deque<NodeWork> queue;
  if (n >= 2 * params.min_leaf) {
    NodeWork root;
    root.rows.resize(n);
    std::iota(root.rows.begin(), root.rows.end(), std::size_t{0});
    queue.push_back(std::move(root));
  }

  while (!queue.empty()) {
    NodeWork work = std::move(queue.front());
    queue.pop_front();
    if (nodes[work.id].depth >= params.max_depth) continue;
    const std::size_t m = work.rows.size();
    if (m < 2) continue;

    double cur1 = 0.0;
    double cur2 = 0.0;
    for (auto i : work.rows) {
      cur1 += a[i] * rho[i];
      cur2 += a[i] * rho[i] * rho[i];
    }

    struct Split {
      std::size_t feature;
      double threshold;
      bool treat_left;
    };
    std::optional<Split> split;

    for (std::size_t j = 0; j < covariates.cols(); ++j) {
      const SortedNode sn(work.rows, covariates, j, rho);
      const auto thresholds = draw_thresholds(sn, params.thresholds_per_feature, rng);
      for (double theta : thresholds) {
        const std::size_t nl = sn.left_count(theta);
        const std::size_t nr = m - nl;
        if (nl <= params.min_leaf || nr <= params.min_leaf) continue;
        const double l1 = sn.p1[nl];
        const double l2 = sn.p2[nl];
        const double r1 = sn.p1[m] - l1;
        const double r2 = sn.p2[m] - l2;
        for (bool treat_left : {true, false}) {
          const double in1 = treat_left ? l1 : r1;
          const double in2 = treat_left ? l2 : r2;
          const double c1 = s1 - cur1 + in1;
          const double c2 = s2 - cur2 + in2;
          const auto z = t_from_sums(c1, c2, n);
          if (z && *z >= best + params.min_score_increase) {
            best = *z;
            history.push_back(best);
            s1 = c1;
            s2 = c2;
            cur1 = in1;
            cur2 = in2;
            split = Split{j, theta, treat_left};
          }
        }
      }
    }
    if (!split) continue;

    NodeWork left;
    NodeWork right;
    for (auto i : work.rows) {
      (covariates(i, split->feature) < split->threshold ? left : right).rows.push_back(i);
    }
    for (auto i : left.rows) a[i] = split->treat_left ? 1.0 : 0.0;
    for (auto i : right.rows) a[i] = split->treat_left ? 0.0 : 1.0;

    const int child_depth = nodes[work.id].depth + 1;
    left.id = static_cast<int>(nodes.size());
    right.id = left.id + 1;
    auto& parent = nodes[work.id];
    parent.feature = static_cast<int>(split->feature);
    parent.threshold = split->threshold;
    parent.left = left.id;
    parent.right = right.id;
    PolicyTree::Node ln;
    ln.assignment = split->treat_left ? 1.0 : 0.0;
    ln.depth = child_depth;
    ln.count = left.rows.size();
    PolicyTree::Node rn;
    rn.assignment = split->treat_left ? 0.0 : 1.0;
    rn.depth = child_depth;
    rn.count = right.rows.size();
    nodes.push_back(ln);
    nodes.push_back(rn);
    queue.push_back(std::move(left));
    queue.push_back(std::move(right));
  }

  PolicyTree tree(std::move(nodes), covariates.cols());
  tree.degenerate_root = degenerate_root;
  tree.score_history = std::move(history);
  if (const auto final = try_t_statistic(rho, a)) {
    tree.final_t_statistic = final->t_statistic;
  } else {
    tree.final_t_statistic = best;
  }
  return tree;
}

namespace {

struct MomentScore {
  double mean = 0.0;
  double sq_error = 0.0;
  bool floored = false;
  double score() const { return mean * mean / sq_error; }
};

MomentScore moment_score(double s1, double s2, std::size_t n, double floor) {
  MomentScore out;
  const double nd = static_cast<double>(n);
  out.mean = s1 / nd;
  const double s_sq = n > 1 ? std::max(0.0, (s2 - s1 * out.mean) / (nd - 1.0)) : 0.0;
  out.sq_error = s_sq / nd;
  if (out.sq_error < floor) {
    out.sq_error = floor;
    out.floored = true;
  }
  return out;
}

}  // namespace

RelaxedTree fit_relaxed_tree(const PseudoOutcomeTable& pseudo, const Matrix& covariates,
                             const RelaxedTreeParams& params) {
  params.split.validate();
  if (!(params.variance_floor > 0.0)) throw std::invalid_argument("variance_floor must be positive");
  check_inputs(pseudo, covariates);
  const std::size_t n = pseudo.size();
  const std::span<const double> rho = pseudo.pseudo;
  const auto& sp = params.split;
  Rng rng(sp.seed);

  std::vector<PolicyTree::Node> nodes(1);
  nodes[0].count = n;
  std::vector<std::vector<std::size_t>> node_rows(1);
  node_rows[0].resize(n);
  std::iota(node_rows[0].begin(), node_rows[0].end(), std::size_t{0});

  std::deque<int> queue;
  if (n >= 2 * sp.min_leaf) queue.push_back(0);
  while (!queue.empty()) {
    const int id = queue.front();
    queue.pop_front();
    if (nodes[id].depth >= sp.max_depth) continue;
    const auto& rows = node_rows[id];
    const std::size_t m = rows.size();
    if (m < 4) continue;

    struct Split {
      std::size_t feature;
      double threshold;
      double gain;
    };
    std::optional<Split> split;
    for (std::size_t j = 0; j < covariates.cols(); ++j) {
      const SortedNode sn(rows, covariates, j, rho);
      const double parent = moment_score(sn.p1[m], sn.p2[m], m, params.variance_floor).score();
      for (double theta : draw_thresholds(sn, sp.thresholds_per_feature, rng)) {
        const std::size_t nl = sn.left_count(theta);
        const std::size_t nr = m - nl;
        if (nl <= sp.min_leaf || nr <= sp.min_leaf || nl < 2 || nr < 2) continue;
        const double gain =
            moment_score(sn.p1[nl], sn.p2[nl], nl, params.variance_floor).score() +
            moment_score(sn.p1[m] - sn.p1[nl], sn.p2[m] - sn.p2[nl], nr, params.variance_floor)
                .score() -
            parent;
        if (!split || gain > split->gain) split = Split{j, theta, gain};
      }
    }
    if (!split || split->gain < sp.min_score_increase) continue;

    std::vector<std::size_t> left_rows;
    std::vector<std::size_t> right_rows;
    for (auto i : rows) {
      (covariates(i, split->feature) < split->threshold ? left_rows : right_rows).push_back(i);
    }
    const int left = static_cast<int>(nodes.size());
    nodes[id].feature = static_cast<int>(split->feature);
    nodes[id].threshold = split->threshold;
    nodes[id].left = left;
    nodes[id].right = left + 1;
    for (auto* child_rows : {&left_rows, &right_rows}) {
      PolicyTree::Node child;
      child.depth = nodes[id].depth + 1;
      child.count = child_rows->size();
      nodes.push_back(child);
      node_rows.push_back(std::move(*child_rows));
      queue.push_back(static_cast<int>(nodes.size()) - 1);
    }
  }

  RelaxedTree out;
  double max_weight = 0.0;
  std::map<int, double> raw;
  for (std::size_t id = 0; id < nodes.size(); ++id) {
    if (!nodes[id].is_leaf()) continue;
    double s1 = 0.0;
    double s2 = 0.0;
    for (auto i : node_rows[id]) {
      s1 += rho[i];
      s2 += rho[i] * rho[i];
    }
    const auto ms = moment_score(s1, s2, node_rows[id].size(), params.variance_floor);
    out.leaf_stats[static_cast<int>(id)] = {ms.mean, ms.sq_error, node_rows[id].size(), ms.floored};
    out.criterion += ms.score();
    out.variance_floored = out.variance_floored || ms.floored;
    raw[static_cast<int>(id)] = std::max(ms.mean, 0.0) / ms.sq_error;
    max_weight = std::max(max_weight, raw[static_cast<int>(id)]);
  }
  for (const auto& [id, w] : raw) nodes[id].assignment = max_weight > 0.0 ? w / max_weight : 0.0;
  out.tree = PolicyTree(std::move(nodes), covariates.cols());
  out.tree.final_t_statistic = out.criterion;
  return out;
}

double relaxed_criterion(const PolicyTree& tree, std::span<const double> pseudo,
                         const Matrix& covariates, double variance_floor) {
  if (pseudo.size() != covariates.rows()) {
    throw std::invalid_argument("relaxed_criterion: pseudo-outcome count does not match covariate rows");
  }
  const auto leaf = tree.leaf_indices(covariates);
  std::map<int, std::pair<std::size_t, std::pair<double, double>>> sums;
  for (std::size_t i = 0; i < pseudo.size(); ++i) {
    auto& s = sums[leaf[i]];
    s.first += 1;
    s.second.first += pseudo[i];
    s.second.second += pseudo[i] * pseudo[i];
  }
  double total = 0.0;
  for (const auto& [id, s] : sums) {
    total += moment_score(s.second.first, s.second.second, s.first, variance_floor).score();
  }
  return total;
}

std::string RelaxedTree::to_json() const {
  nlohmann::json j = nlohmann::json::parse(tree.to_json());
  j["kind"] = "relaxed_tree";
  j["criterion"] = criterion;
  j["variance_floored"] = variance_floored;
  auto stats = nlohmann::json::array();
  for (const auto& [id, s] : leaf_stats) {
    stats.push_back({{"leaf", id},
                     {"mean", s.mean},
                     {"sq_error", s.sq_error},
                     {"count", s.count},
                     {"floored", s.floored}});
  }
  j["leaf_stats"] = stats;
  return j.dump(2);
}

std::vector<double> apply_policy(const PolicyTree& tree, const Matrix& covariates) {
  return tree.assign(covariates);
}

std::vector<double> apply_policy(const RelaxedTree& tree, const Matrix& covariates) {
  return tree.assign(covariates);
}

}  // namespace evpol
