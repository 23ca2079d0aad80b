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

#include "evpol/ratio_opt.hpp"

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <map>
#include <numeric>
#include <optional>
#include <set>
#include <stdexcept>
#include <string>

namespace evpol {

void CellStatistics::validate() const {
  if (w.size() != cell_ids.size() || v.size() != cell_ids.size()) {
    throw std::invalid_argument("CellStatistics: w, v and cell_ids differ in length");
  }
  std::set<long> seen;
  for (std::size_t i = 0; i < cell_ids.size(); ++i) {
    if (!seen.insert(cell_ids[i]).second) {
      throw std::invalid_argument("CellStatistics: duplicate cell id " + std::to_string(cell_ids[i]));
    }
    if (!std::isfinite(w[i]) || !std::isfinite(v[i])) {
      throw std::invalid_argument("CellStatistics: non-finite entry for cell " +
                                  std::to_string(cell_ids[i]));
    }
    if (v[i] < 0.0) {
      throw std::invalid_argument("CellStatistics: negative v for cell " + std::to_string(cell_ids[i]));
    }
  }
}

CellStatistics cell_statistics(std::span<const double> pseudo, std::span<const long> cell_of_row) {
  if (pseudo.size() != cell_of_row.size()) {
    throw std::invalid_argument("cell_statistics: pseudo-outcomes and cell labels differ in length");
  }
  if (pseudo.empty()) throw std::invalid_argument("cell_statistics: no rows");
  std::map<long, std::pair<double, double>> sums;
  for (std::size_t i = 0; i < pseudo.size(); ++i) {
    auto& s = sums[cell_of_row[i]];
    s.first += pseudo[i];
    s.second += pseudo[i] * pseudo[i];
  }
  const double n = static_cast<double>(pseudo.size());
  CellStatistics out;
  for (const auto& [id, s] : sums) {
    out.cell_ids.push_back(id);
    out.w.push_back(s.first / n);
    out.v.push_back(s.second / n);
  }
  return out;
}

double ratio_objective(const CellStatistics& stats, std::span<const long> selected) {
  if (selected.empty()) return 0.0;
  std::map<long, std::size_t> index;
  for (std::size_t i = 0; i < stats.size(); ++i) index[stats.cell_ids[i]] = i;
  double w = 0.0;
  double v = 0.0;
  for (long id : selected) {
    const auto it = index.find(id);
    if (it == index.end()) throw std::invalid_argument("ratio_objective: unknown cell id " + std::to_string(id));
    w += stats.w[it->second];
    v += stats.v[it->second];
  }
  if (v == 0.0) {
    return w > 0.0 ? std::numeric_limits<double>::infinity() : 0.0;
  }
  return w / std::sqrt(v);
}

namespace {

// Cells with w > 0, ascending id.
struct Ground {
  std::vector<long> ids;
  std::vector<double> w;
  std::vector<double> v;

  std::size_t size() const { return ids.size(); }
};

Ground positive_cells(const CellStatistics& stats, bool drop_zero_v) {
  std::vector<std::size_t> order(stats.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::sort(order.begin(), order.end(),
            [&](std::size_t a, std::size_t b) { return stats.cell_ids[a] < stats.cell_ids[b]; });
  Ground g;
  for (std::size_t i : order) {
    if (!(stats.w[i] > 0.0)) continue;
    if (drop_zero_v && stats.v[i] == 0.0) continue;
    g.ids.push_back(stats.cell_ids[i]);
    g.w.push_back(stats.w[i]);
    g.v.push_back(stats.v[i]);
  }
  return g;
}

std::vector<long> forced_cells(const CellStatistics& stats) {
  std::vector<long> out;
  for (std::size_t i = 0; i < stats.size(); ++i) {
    if (stats.w[i] > 0.0 && stats.v[i] == 0.0) out.push_back(stats.cell_ids[i]);
  }
  std::sort(out.begin(), out.end());
  return out;
}

// Lexicographic order of the id sets encoded by two masks over ascending ids.
bool mask_lex_less(std::uint32_t a, std::uint32_t b) {
  if (a == b) return false;
  const std::uint32_t diff = a ^ b;
  const std::uint32_t low = diff & (~diff + 1u);
  const std::uint32_t above = ~((low << 1) - 1u);
  // The set lacking the lowest differing id is smaller only if it has nothing beyond it.
  if (a & low) return (b & above) != 0;
  return (a & above) == 0;
}

// Subset sums over every mask of a small ground set.
// Relative tie tolerance for sqrt(v) - lambda w; small enough for epsilon down to 1e-12.
constexpr double kTieTolerance = 64 * std::numeric_limits<double>::epsilon();

class SubsetTable {
 public:
  explicit SubsetTable(const Ground& g) : ground_(g) {
    const std::size_t k = g.size();
    if (k > kEnumerationLimit) throw std::logic_error("SubsetTable: ground set too large");
    const std::size_t count = std::size_t{1} << k;
    sw_.assign(count, 0.0);
    sv_.assign(count, 0.0);
    for (std::size_t m = 1; m < count; ++m) {
      const std::size_t low = static_cast<std::size_t>(__builtin_ctzll(m));
      const std::size_t rest = m & (m - 1);
      sw_[m] = sw_[rest] + g.w[low];
      sv_[m] = sv_[rest] + g.v[low];
    }
  }

  std::uint32_t argmin(double lambda) const {
    const double tol = kTieTolerance * (std::sqrt(sv_.back()) + lambda * sw_.back());
    std::uint32_t best = 0;
    double best_val = 0.0;
    for (std::size_t m = 1; m < sw_.size(); ++m) {
      const double val = std::sqrt(sv_[m]) - lambda * sw_[m];
      const auto mm = static_cast<std::uint32_t>(m);
      if (val < best_val - tol || (val <= best_val + tol && mask_lex_less(mm, best))) {
        best = mm;
        best_val = val;
      }
    }
    return best;
  }

  std::uint32_t argmax_ratio() const {
    std::uint32_t best = 0;
    double best_val = -std::numeric_limits<double>::infinity();
    for (std::size_t m = 1; m < sw_.size(); ++m) {
      const double val = ratio(static_cast<std::uint32_t>(m));
      const auto mm = static_cast<std::uint32_t>(m);
      const double tol = std::isfinite(best_val) ? 1e-12 * std::abs(best_val) : 0.0;
      if (val > best_val + tol || (val >= best_val - tol && mask_lex_less(mm, best))) {
        best = mm;
        best_val = val;
      }
    }
    return best;
  }

  double w(std::uint32_t m) const { return sw_[m]; }
  double v(std::uint32_t m) const { return sv_[m]; }
  double ratio(std::uint32_t m) const {
    if (sv_[m] == 0.0) return sw_[m] > 0.0 ? std::numeric_limits<double>::infinity() : 0.0;
    return sw_[m] / std::sqrt(sv_[m]);
  }

  std::vector<long> ids(std::uint32_t m) const {
    std::vector<long> out;
    for (std::size_t i = 0; i < ground_.size(); ++i) {
      if (m & (1u << i)) out.push_back(ground_.ids[i]);
    }
    return out;
  }

 private:
  const Ground& ground_;
  std::vector<double> sw_;
  std::vector<double> sv_;
};

// Ground positions sorted by w/v descending; zero-v cells first, ties by id.
std::vector<std::size_t> ratio_order(const Ground& g) {
  std::vector<std::size_t> order(g.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  auto key = [&](std::size_t i) {
    return g.v[i] == 0.0 ? std::numeric_limits<double>::infinity() : g.w[i] / g.v[i];
  };
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t a, std::size_t b) { return key(a) > key(b); });
  return order;
}

// Prefix scan for sqrt(v) - lambda w; returns the prefix length.
std::size_t prefix_argmin(const Ground& g, const std::vector<std::size_t>& order, double lambda) {
  double sw = 0.0;
  double sv = 0.0;
  for (std::size_t i = 0; i < g.size(); ++i) {
    sw += g.w[i];
    sv += g.v[i];
  }
  const double tol = kTieTolerance * (std::sqrt(sv) + lambda * sw);
  std::size_t best = 0;
  double best_val = 0.0;
  sw = sv = 0.0;
  for (std::size_t len = 1; len <= order.size(); ++len) {
    sw += g.w[order[len - 1]];
    sv += g.v[order[len - 1]];
    const double val = std::sqrt(sv) - lambda * sw;
    if (val < best_val - tol) {
      best = len;
      best_val = val;
    }
  }
  return best;
}

std::vector<long> sorted_ids(const Ground& g, const std::vector<std::size_t>& order, std::size_t len) {
  std::vector<long> out;
  for (std::size_t i = 0; i < len; ++i) out.push_back(g.ids[order[i]]);
  std::sort(out.begin(), out.end());
  return out;
}

std::vector<long> merge_ids(std::vector<long> a, const std::vector<long>& b) {
  a.insert(a.end(), b.begin(), b.end());
  std::sort(a.begin(), a.end());
  return a;
}

}  // namespace

std::vector<long> inner_minimize(const CellStatistics& stats, double lambda) {
  stats.validate();
  if (!(lambda > 0.0)) throw std::invalid_argument("inner_minimize: lambda must be positive");
  const Ground g = positive_cells(stats, false);
  if (g.size() <= kEnumerationLimit) {
    const SubsetTable table(g);
    return table.ids(table.argmin(lambda));
  }
  const auto order = ratio_order(g);
  return sorted_ids(g, order, prefix_argmin(g, order, lambda));
}

RatioSolution bisection_solve(const CellStatistics& stats, double epsilon) {
  stats.validate();
  if (!(epsilon > 0.0)) throw std::invalid_argument("bisection_solve: epsilon must be positive");
  RatioSolution out;
  const auto forced = forced_cells(stats);
  const Ground g = positive_cells(stats, true);
  if (g.size() == 0) {
    out.no_positive_cell = forced.empty();
    out.selected = forced;
    out.objective = ratio_objective(stats, forced);
    return out;
  }

  double wq = 0.0;
  double vq = 0.0;
  double min_v = std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i < g.size(); ++i) {
    wq += g.w[i];
    vq += g.v[i];
    min_v = std::min(min_v, g.v[i]);
  }

  std::optional<SubsetTable> table;
  std::vector<std::size_t> order;
  if (g.size() <= kEnumerationLimit) {
    table.emplace(g);
  } else {
    order = ratio_order(g);
  }
  // Minimizer of sqrt(v) - lambda w as (w, v, ids).
  struct Candidate {
    double w = 0.0;
    double v = 0.0;
    std::vector<long> ids;
  };
  auto minimize = [&](double lambda) {
    Candidate c;
    if (table) {
      const auto m = table->argmin(lambda);
      c.w = table->w(m);
      c.v = table->v(m);
      c.ids = table->ids(m);
    } else {
      const auto len = prefix_argmin(g, order, lambda);
      for (std::size_t i = 0; i < len; ++i) {
        c.w += g.w[order[i]];
        c.v += g.v[order[i]];
      }
      c.ids = sorted_ids(g, order, len);
    }
    return c;
  };

  double lambda_max = (1.0 + epsilon) * std::sqrt(vq) / wq;
  double lambda_min = std::sqrt(min_v) / wq;
  Candidate best = minimize(lambda_max);
  if (best.ids.empty()) {
    // Rounding swallowed the (1 + epsilon) margin; the full positive set is the minimizer.
    best.w = wq;
    best.v = vq;
    best.ids = g.ids;
    std::sort(best.ids.begin(), best.ids.end());
  }
  while (lambda_max >= (1.0 + epsilon) * lambda_min) {
    ++out.iterations;
    const double mid = 0.5 * (lambda_max + lambda_min);
    Candidate c = minimize(mid);
    if (c.ids.empty() || std::sqrt(c.v) / c.w >= mid) {
      lambda_min = mid;
    } else {
      lambda_max = mid;
      best = std::move(c);
    }
  }
  out.lambda_final = lambda_max;
  out.selected = merge_ids(best.ids, forced);
  out.objective = ratio_objective(stats, out.selected);
  return out;
}

RatioSolution ratio_prefix_fast_path(const CellStatistics& stats) {
  stats.validate();
  RatioSolution out;
  const auto forced = forced_cells(stats);
  const Ground g = positive_cells(stats, true);
  if (g.size() == 0) {
    out.no_positive_cell = forced.empty();
    out.selected = forced;
    out.objective = ratio_objective(stats, forced);
    return out;
  }
  const auto order = ratio_order(g);
  double sw = 0.0;
  double sv = 0.0;
  for (std::size_t i = 0; i < stats.size(); ++i) {
    if (stats.w[i] > 0.0 && stats.v[i] == 0.0) sw += stats.w[i];
  }
  std::size_t best_len = 0;
  double best_val = -std::numeric_limits<double>::infinity();
  for (std::size_t len = 1; len <= order.size(); ++len) {
    sw += g.w[order[len - 1]];
    sv += g.v[order[len - 1]];
    const double val = sw / std::sqrt(sv);
    if (val > best_val + 1e-12 * std::abs(best_val) || best_len == 0) {
      best_len = len;
      best_val = val;
    }
  }
  out.selected = merge_ids(sorted_ids(g, order, best_len), forced);
  out.objective = ratio_objective(stats, out.selected);
  return out;
}

RatioSolution ratio_brute_force(const CellStatistics& stats) {
  stats.validate();
  RatioSolution out;
  const Ground g = positive_cells(stats, false);
  if (g.size() == 0) {
    out.no_positive_cell = true;
    return out;
  }
  if (g.size() > kEnumerationLimit) {
    throw std::invalid_argument("ratio_brute_force: more than " + std::to_string(kEnumerationLimit) +
                                " positive cells");
  }
  const SubsetTable table(g);
  const auto m = table.argmax_ratio();
  out.selected = table.ids(m);
  out.objective = table.ratio(m);
  return out;
}

}  // namespace evpol
