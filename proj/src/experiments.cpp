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

#include "evpol/experiments.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <exception>
#include <functional>
#include <limits>
#include <map>
#include <memory>
#include <mutex>
#include <set>
#include <stdexcept>
#include <thread>

#include "evpol/ratio_opt.hpp"
#include "evpol/rng.hpp"
#include "evpol/scoring.hpp"
#include "evpol/util.hpp"

namespace evpol {

namespace {

// Runs body(i) for i in [0, count) on up to `threads` workers. The first
// exception thrown by any worker is rethrown after all have joined.
void parallel_for(std::size_t count, std::size_t threads, const std::function<void(std::size_t)>& body) {
  threads = std::max<std::size_t>(1, std::min(threads, count));
  if (threads == 1) {
    for (std::size_t i = 0; i < count; ++i) body(i);
    return;
  }
  std::atomic<std::size_t> next{0};
  std::exception_ptr failure;
  std::mutex failure_mutex;
  std::vector<std::thread> pool;
  pool.reserve(threads);
  for (std::size_t t = 0; t < threads; ++t) {
    pool.emplace_back([&] {
      for (std::size_t i = next++; i < count; i = next++) {
        try {
          body(i);
        } catch (...) {
          std::lock_guard<std::mutex> lock(failure_mutex);
          if (!failure) failure = std::current_exception();
        }
      }
    });
  }
  for (auto& th : pool) th.join();
  if (failure) std::rethrow_exception(failure);
}

std::vector<std::size_t> sorted_prefix(const std::vector<std::size_t>& perm, std::size_t begin,
                                       std::size_t end) {
  std::vector<std::size_t> out(perm.begin() + static_cast<std::ptrdiff_t>(begin),
                               perm.begin() + static_cast<std::ptrdiff_t>(end));
  std::sort(out.begin(), out.end());
  return out;
}

bool needs_learner_centering(BenchmarkKind k) {
  return k == BenchmarkKind::classifier_res || k == BenchmarkKind::evidence_res ||
         k == BenchmarkKind::policy_submod || k == BenchmarkKind::submod;
}

Propensity make_propensity(const std::optional<double>& p) {
  return p ? Propensity::known(*p) : Propensity::empirical();
}

}  // namespace

std::pair<TrialDataset, TrialDataset> draw_replication_data(const ExperimentConfig& config,
                                                            std::size_t replication,
                                                            const TrialDataset* csv_source) {
  const std::size_t total = config.n_train + config.n_holdout;
  const std::uint64_t data_seed = derive_seed(config.seed, replication, "data");
  auto split_sequential = [&](const TrialDataset& d) {
    std::vector<std::size_t> idx(total);
    for (std::size_t i = 0; i < total; ++i) idx[i] = i;
    return std::make_pair(d.select_rows(sorted_prefix(idx, 0, config.n_train)),
                          d.select_rows(sorted_prefix(idx, config.n_train, total)));
  };
  auto split_random = [&](const TrialDataset& d) {
    Rng rng(derive_seed(config.seed, replication, "split"));
    const auto perm = rng.sample_without_replacement(d.n(), total);
    return std::make_pair(d.select_rows(sorted_prefix(perm, 0, config.n_train)),
                          d.select_rows(sorted_prefix(perm, config.n_train, total)));
  };

  switch (config.dgp.kind) {
    case DgpKind::three_region:
      return split_sequential(generate_three_region(config.dgp.three_region, total, data_seed));
    case DgpKind::group: {
      auto g = config.dgp.group;
      g.sample_count = total;
      return split_sequential(generate_group_structure(g, data_seed));
    }
    case DgpKind::cell: {
      auto c = config.dgp.cell;
      c.samples_per_cell = (total + c.cell_count - 1) / c.cell_count;
      return split_random(generate_cell_dgp(c, data_seed));
    }
    case DgpKind::csv: {
      if (csv_source == nullptr) throw std::invalid_argument("csv dgp needs the loaded source dataset");
      if (csv_source->n() < total) {
        throw std::invalid_argument("csv dataset has " + std::to_string(csv_source->n()) +
                                    " rows; n_train + n_holdout = " + std::to_string(total));
      }
      return split_random(*csv_source);
    }
  }
  throw std::logic_error("unreachable dgp kind");
}

std::vector<MethodSummary> summarize(const std::vector<ReplicationRow>& rows, double alpha,
                                     double discovery_threshold) {
  std::vector<std::string> order;
  std::map<std::string, std::vector<const ReplicationRow*>> groups;
  for (const auto& r : rows) {
    auto& g = groups[r.method];
    if (g.empty()) order.push_back(r.method);
    g.push_back(&r);
  }
  std::vector<MethodSummary> out;
  for (const auto& name : order) {
    const auto& g = groups[name];
    MethodSummary s;
    s.method = name;
    s.replications = g.size();
    std::vector<double> ps;
    double log_sum = 0.0;
    std::size_t discoveries = 0;
    std::size_t rejections = 0;
    for (const auto* r : g) {
      const double p = r->failed ? 1.0 : r->p_value;
      ps.push_back(p);
      if (r->failed) ++s.failed;
      if (r->null_policy) ++s.null_policies;
      if (!r->null_policy) log_sum += -std::log10(std::max(p, 1e-300));
      if (p <= discovery_threshold) ++discoveries;
      if (p <= alpha) ++rejections;
    }
    const double n = static_cast<double>(g.size());
    s.median_p = median(ps);
    s.mean_neg_log10_p = log_sum / n;
    s.discovery_rate = static_cast<double>(discoveries) / n;
    s.rejection_rate = static_cast<double>(rejections) / n;
    out.push_back(s);
  }
  return out;
}

namespace {

ReplicationRow failed_row(std::string method, std::size_t rep, std::string error) {
  ReplicationRow row;
  row.method = std::move(method);
  row.replication = rep;
  row.failed = true;
  row.p_value = 1.0;
  row.treated_covariate_mean = std::numeric_limits<double>::quiet_NaN();
  row.error = std::move(error);
  return row;
}

std::vector<ReplicationRow> fit_and_test(const ExperimentConfig& config, std::size_t rep,
                                         const TrialDataset* csv_source) {
  const auto [train, holdout] = draw_replication_data(config, rep, csv_source);
  const Propensity propensity = make_propensity(config.propensity);
  const auto& s = config.settings;

  const auto evaluation = fit_centering(train, CenteringKind::regression_forest,
                                        propensity.resolve(train), s.evaluation_centering,
                                        derive_seed(config.seed, rep, "evaluation-centering"));

  // Honest split of the training rows: centering fold, then learning fold.
  std::optional<TrialDataset> learning;
  std::optional<CenteringModel> learner_centering;
  if (std::any_of(config.methods.begin(), config.methods.end(), needs_learner_centering)) {
    Rng rng(derive_seed(config.seed, rep, "honest-split"));
    const auto perm = rng.sample_without_replacement(train.n(), train.n());
    const auto k = std::clamp<std::size_t>(
        static_cast<std::size_t>(std::llround(config.honest_fraction * static_cast<double>(train.n()))),
        2, train.n() - 2);
    const auto centering_fold = train.select_rows(sorted_prefix(perm, 0, k));
    learning = train.select_rows(sorted_prefix(perm, k, train.n()));
    learner_centering = fit_centering(centering_fold, CenteringKind::regression_forest,
                                      propensity.resolve(centering_fold), s.learner_centering,
                                      derive_seed(config.seed, rep, "learner-centering"));
  }

  std::vector<ReplicationRow> rows;
  for (const auto kind : config.methods) {
    ReplicationRow row;
    row.method = std::string(to_string(kind));
    row.replication = rep;
    const std::uint64_t seed = derive_seed(config.seed, rep, "method:" + row.method);
    try {
      std::unique_ptr<Policy> policy;
      auto evidence_params = s.evidence;
      evidence_params.seed = seed;
      switch (kind) {
        case BenchmarkKind::all:
          policy = std::make_unique<ConstantPolicy>(fit_all(train));
          break;
        case BenchmarkKind::classifier: {
          const auto c = fit_centering(train, CenteringKind::constant_mean, propensity.resolve(train));
          policy = std::make_unique<PolicyTree>(fit_classifier(train, c, s.classifier, propensity));
          break;
        }
        case BenchmarkKind::classifier_res:
          policy = std::make_unique<PolicyTree>(
              fit_classifier(*learning, *learner_centering, s.classifier, propensity));
          break;
        case BenchmarkKind::cate:
        case BenchmarkKind::cate_const:
          policy = std::make_unique<PolicyTree>(
              fit_cate(train, kind == BenchmarkKind::cate_const, s.cate, seed).policy);
          break;
        case BenchmarkKind::evidence:
          policy = std::make_unique<PolicyTree>(
              fit_evidence(train, CenteringModel::zero(), evidence_params, propensity));
          break;
        case BenchmarkKind::evidence_res:
          policy = std::make_unique<PolicyTree>(
              fit_evidence(*learning, *learner_centering, evidence_params, propensity));
          break;
        case BenchmarkKind::policy_submod:
          policy = std::make_unique<PolicyTree>(
              fit_policy_submod(*learning, *learner_centering, evidence_params, s.submod_epsilon,
                                propensity)
                  .policy);
          break;
        case BenchmarkKind::submod:
          policy = std::make_unique<ModelBasedPolicy>(
              fit_model_based_policy(*learning, *learner_centering, s.model_based, propensity));
          break;
      }
      // Only hold-out rows reach evaluation; learners above saw training rows alone.
      const auto assignment = policy->assign(holdout.covariates());
      const auto result = holdout_test(assignment, evaluation, holdout, config.alpha, propensity);
      row.p_value = result.test.p_value;
      row.t_stat = result.test.t_statistic;
      row.estimate = result.test.estimate;
      row.treated_fraction = result.treated_fraction;
      row.null_policy = result.null_policy;
      row.degenerate = result.degenerate;
      double mass = 0.0;
      double weighted = 0.0;
      for (std::size_t i = 0; i < holdout.n(); ++i) {
        mass += assignment[i];
        weighted += assignment[i] * (holdout.p() > 0 ? holdout.covariates()(i, 0) : 0.0);
      }
      row.treated_covariate_mean =
          mass > 0.0 ? weighted / mass : std::numeric_limits<double>::quiet_NaN();
    } catch (const std::exception& e) {
      row = failed_row(row.method, rep, e.what());
    }
    rows.push_back(std::move(row));
  }
  return rows;
}

// A failure in the shared setup (data, centering) fails every method of the replication.
std::vector<ReplicationRow> run_replication(const ExperimentConfig& config, std::size_t rep,
                                            const TrialDataset* csv_source) {
  try {
    return fit_and_test(config, rep, csv_source);
  } catch (const std::exception& e) {
    std::vector<ReplicationRow> rows;
    for (const auto kind : config.methods) rows.push_back(failed_row(std::string(to_string(kind)), rep, e.what()));
    return rows;
  }
}

}  // namespace

ExperimentReport run_experiment(const ExperimentConfig& config) {
  config.validate();
  std::optional<TrialDataset> csv_source;
  if (config.dgp.kind == DgpKind::csv) {
    csv_source = load_csv(config.dgp.csv_path);
    if (csv_source->n() < config.n_train + config.n_holdout) {
      throw std::invalid_argument("csv dataset has " + std::to_string(csv_source->n()) +
                                  " rows, fewer than n_train + n_holdout");
    }
  }

  std::vector<std::vector<ReplicationRow>> per_rep(config.replications);
  parallel_for(config.replications, config.threads, [&](std::size_t rep) {
    per_rep[rep] = run_replication(config, rep, csv_source ? &*csv_source : nullptr);
  });

  ExperimentReport report;
  report.alpha = config.alpha;
  report.discovery_threshold = config.discovery_threshold;
  for (auto& rows : per_rep) {
    for (auto& r : rows) report.rows.push_back(std::move(r));
  }
  report.summary = summarize(report.rows, config.alpha, config.discovery_threshold);
  return report;
}

Prop2Report run_prop2_comparison(const Prop2Config& config) {
  config.validate();
  const std::size_t k = config.cell_effects.size();
  CellDGPConfig train_cfg;
  train_cfg.cell_count = k;
  train_cfg.cell_effects = config.cell_effects;
  train_cfg.cell_noise_sd = config.cell_noise_sd;
  train_cfg.samples_per_cell = config.n_train / k;
  train_cfg.effect_scale_n = train_cfg.samples_per_cell * k;
  CellDGPConfig holdout_cfg = train_cfg;
  holdout_cfg.samples_per_cell = config.n_holdout / k;

  Prop2Report report;
  report.alpha = config.alpha;
  report.p_sign_rule.assign(config.replications, 1.0);
  report.p_ratio.assign(config.replications, 1.0);
  std::vector<char> identical(config.replications, 0);
  std::vector<char> reject_a(config.replications, 0);
  std::vector<char> reject_b(config.replications, 0);

  parallel_for(config.replications, config.threads, [&](std::size_t rep) {
    const auto train = generate_cell_dgp(train_cfg, derive_seed(config.seed, rep, "prop2-train"));
    const auto holdout = generate_cell_dgp(holdout_cfg, derive_seed(config.seed, rep, "prop2-holdout"));
    const auto table = pseudo_outcomes(train, CenteringModel::zero(), Propensity::empirical());
    std::vector<long> cells(train.n());
    for (std::size_t i = 0; i < train.n(); ++i) cells[i] = static_cast<long>(train.covariates()(i, 0));
    const auto stats = cell_statistics(table.pseudo, cells);

    std::set<long> sign_rule;
    for (std::size_t c = 0; c < stats.size(); ++c) {
      if (stats.w[c] > 0.0) sign_rule.insert(stats.cell_ids[c]);
    }
    const auto solution = bisection_solve(stats, config.epsilon);
    const std::set<long> ratio(solution.selected.begin(), solution.selected.end());

    const auto a = holdout_test(CellSetPolicy(sign_rule), CenteringModel::zero(), holdout,
                                config.alpha, Propensity::empirical());
    const auto b = holdout_test(CellSetPolicy(ratio), CenteringModel::zero(), holdout,
                                config.alpha, Propensity::empirical());
    report.p_sign_rule[rep] = a.test.p_value;
    report.p_ratio[rep] = b.test.p_value;
    reject_a[rep] = a.passed;
    reject_b[rep] = b.passed;
    identical[rep] = sign_rule == ratio;
  });

  const double n = static_cast<double>(config.replications);
  report.rejection_sign_rule = static_cast<double>(std::count(reject_a.begin(), reject_a.end(), 1)) / n;
  report.rejection_ratio = static_cast<double>(std::count(reject_b.begin(), reject_b.end(), 1)) / n;
  report.identical_policies = static_cast<std::size_t>(std::count(identical.begin(), identical.end(), 1));
  return report;
}

std::string Prop2Report::to_json() const {
  nlohmann::json j;
  j["alpha"] = alpha;
  j["replications"] = p_sign_rule.size();
  j["rejection_sign_rule"] = rejection_sign_rule;
  j["rejection_ratio"] = rejection_ratio;
  j["identical_policies"] = identical_policies;
  j["p_sign_rule"] = p_sign_rule;
  j["p_ratio"] = p_ratio;
  return j.dump(2);
}

}  // namespace evpol
