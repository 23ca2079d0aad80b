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

#include <gtest/gtest.h>

#include <cmath>
#include <filesystem>
#include <fstream>

#include "evpol/experiments.hpp"
#include "evpol/util.hpp"

namespace evpol {
namespace {

using nlohmann::json;

ExperimentConfig small_config(std::vector<BenchmarkKind> methods, std::size_t reps = 3) {
  ExperimentConfig c;
  c.methods = std::move(methods);
  c.n_train = 300;
  c.n_holdout = 300;
  c.replications = reps;
  c.seed = 17;
  c.settings.learner_centering.trees = 20;
  c.settings.evaluation_centering.trees = 20;
  c.settings.cate.nuisance.trees = 20;
  return c;
}

TEST(Config, ParsesFullSchema) {
  const auto j = json::parse(R"({
    "dgp": {"kind": "cell", "params": {"cell_effects": [1, 2], "cell_noise_sd": [1, 3]}},
    "methods": ["evidence_res", "all"], "n_train": 100, "n_holdout": 50, "replications": 4,
    "alpha": 0.1, "discovery_threshold": 0.01, "seed": 9, "threads": 2, "honest_fraction": 0.4,
    "propensity": 0.5, "evidence": {"max_depth": 2, "min_leaf": 5},
    "classifier": {"max_depth": 3}, "cate": {"trees": 10, "folds": 3},
    "model_based": {"sparsity": 1}, "submod_epsilon": 0.01,
    "centering": {"trees": 7}, "evaluation_centering": {"max_depth": 2}})");
  const auto c = parse_experiment_config(j);
  EXPECT_EQ(c.dgp.kind, DgpKind::cell);
  EXPECT_EQ(c.dgp.cell.cell_count, 2u);
  EXPECT_EQ(c.methods, (std::vector<BenchmarkKind>{BenchmarkKind::evidence_res, BenchmarkKind::all}));
  EXPECT_EQ(c.n_holdout, 50u);
  EXPECT_EQ(*c.propensity, 0.5);
  EXPECT_EQ(c.settings.evidence.max_depth, 2);
  EXPECT_EQ(c.settings.cate.folds, 3u);
  EXPECT_EQ(c.settings.learner_centering.trees, 7u);
  EXPECT_EQ(c.settings.evaluation_centering.max_depth, 2);
  EXPECT_EQ(c.threads, 2u);
}

TEST(Config, RejectsBadInput) {
  EXPECT_THROW(parse_experiment_config(json::parse(R"({"dgp": {"kind": "three-region"}, "bogus": 1})")),
               std::invalid_argument);
  EXPECT_THROW(parse_experiment_config(json::parse(R"({"dgp": {"kind": "three-region"}, "alpha": 1.5})")),
               std::invalid_argument);
  EXPECT_THROW(parse_experiment_config(json::parse(R"({"dgp": {"kind": "three-region"}, "replications": 0})")),
               std::invalid_argument);
  EXPECT_THROW(parse_experiment_config(json::parse(R"({"dgp": {"kind": "moon"}})")), std::invalid_argument);
  EXPECT_THROW(parse_experiment_config(json::parse(R"({"dgp": {"kind": "three-region"}, "methods": ["x"]})")),
               std::invalid_argument);
  EXPECT_THROW(parse_experiment_config(json::parse(R"({"methods": ["all"]})")), std::invalid_argument);
}

TEST(Config, RelativeCsvPathResolvesAgainstConfig) {
  const auto dir = std::filesystem::temp_directory_path() / "evpol_config_test";
  std::filesystem::create_directories(dir);
  write_file_atomic(dir / "cfg.json", R"({"dgp": {"kind": "csv", "path": "data.csv"}})");
  const auto c = load_experiment_config(dir / "cfg.json");
  EXPECT_EQ(c.dgp.csv_path, dir / "data.csv");
  std::filesystem::remove_all(dir);
}

TEST(Experiments, DeterministicAcrossThreadCounts) {
  auto c = small_config(all_benchmark_kinds(), 4);
  const auto one = report_to_csv(run_experiment(c));
  c.threads = 3;
  EXPECT_EQ(report_to_csv(run_experiment(c)), one);
  EXPECT_EQ(report_to_csv(run_experiment(c)), one);
}

TEST(Experiments, RowsAndAggregates) {
  const auto c = small_config({BenchmarkKind::evidence_res, BenchmarkKind::all, BenchmarkKind::submod}, 5);
  const auto report = run_experiment(c);
  ASSERT_EQ(report.rows.size(), 15u);
  EXPECT_EQ(report.rows[0].method, "evidence_res");
  EXPECT_EQ(report.rows[1].method, "all");
  EXPECT_EQ(report.rows[3].replication, 1u);
  EXPECT_EQ(report.summary, summarize(report.rows, c.alpha, c.discovery_threshold));
  // Recompute the first method's aggregates by hand.
  std::vector<double> ps;
  double neglog = 0;
  std::size_t disc = 0;
  for (const auto& r : report.rows) {
    if (r.method != "evidence_res") continue;
    const double p = r.failed ? 1.0 : r.p_value;
    ps.push_back(p);
    if (!r.null_policy) neglog += -std::log10(std::max(p, 1e-300));
    disc += p <= c.discovery_threshold;
  }
  EXPECT_DOUBLE_EQ(report.summary[0].median_p, median(ps));
  EXPECT_DOUBLE_EQ(report.summary[0].mean_neg_log10_p, neglog / 5.0);
  EXPECT_DOUBLE_EQ(report.summary[0].discovery_rate, static_cast<double>(disc) / 5.0);
  for (const auto& r : report.rows) {
    if (r.method == "all") EXPECT_EQ(r.treated_fraction, 1.0);
  }
}

TEST(Experiments, NullPoliciesContributeZero) {
  std::vector<ReplicationRow> rows(2);
  rows[0].method = rows[1].method = "m";
  rows[0].p_value = 1.0;
  rows[0].null_policy = true;
  rows[1].p_value = 1e-4;
  const auto s = summarize(rows, 0.05, 1e-3);
  EXPECT_DOUBLE_EQ(s[0].mean_neg_log10_p, 2.0);
  EXPECT_EQ(s[0].null_policies, 1u);
  EXPECT_DOUBLE_EQ(s[0].discovery_rate, 0.5);
  EXPECT_DOUBLE_EQ(s[0].rejection_rate, 0.5);
}

TEST(Experiments, FailedMethodIsRecorded) {
  auto c = small_config({BenchmarkKind::cate, BenchmarkKind::all}, 2);
  c.settings.cate.folds = 1000;
  const auto report = run_experiment(c);
  ASSERT_EQ(report.rows.size(), 4u);
  EXPECT_TRUE(report.rows[0].failed);
  EXPECT_EQ(report.rows[0].p_value, 1.0);
  EXPECT_FALSE(report.rows[0].error.empty());
  EXPECT_FALSE(report.rows[1].failed);
  EXPECT_EQ(report.summary[0].failed, 2u);
}

TEST(Experiments, HoldoutUntouchedByLearners) {
  // Train and hold-out samples of one replication are disjoint draws.
  const auto c = small_config({BenchmarkKind::all});
  const auto [train, holdout] = draw_replication_data(c, 0);
  EXPECT_EQ(train.n(), 300u);
  EXPECT_EQ(holdout.n(), 300u);
  EXPECT_NE(train.covariates()(0, 0), holdout.covariates()(0, 0));
  const auto again = draw_replication_data(c, 0);
  EXPECT_EQ(again.first, train);
  EXPECT_NE(draw_replication_data(c, 1).first, train);
}

TEST(Report, EmptyCsvIsHeaderOnly) {
  ExperimentReport empty;
  const auto csv = report_to_csv(empty);
  EXPECT_EQ(std::count(csv.begin(), csv.end(), '\n'), 1);
  EXPECT_EQ(csv.rfind("method,replication,p_value", 0), 0u);
  EXPECT_TRUE(parse_report_csv(csv).rows.empty());
}

TEST(Report, JsonCsvRoundTrip) {
  auto report = run_experiment(small_config({BenchmarkKind::evidence, BenchmarkKind::all}, 3));
  report.rows[0].error = "odd, \"quoted\"\nmessage";
  report.rows[0].treated_covariate_mean = std::numeric_limits<double>::quiet_NaN();
  const auto from_json = parse_report_json(report_to_json(report));
  const auto from_csv = parse_report_csv(report_to_csv(from_json));
  ASSERT_EQ(from_csv.rows.size(), report.rows.size());
  for (std::size_t i = 1; i < report.rows.size(); ++i) EXPECT_EQ(from_csv.rows[i], report.rows[i]);
  EXPECT_EQ(from_csv.rows[0].error, "odd, \"quoted\" message");
  EXPECT_TRUE(std::isnan(from_csv.rows[0].treated_covariate_mean));
  EXPECT_EQ(from_csv.summary, report.summary);
  EXPECT_EQ(summarize(from_csv.rows, from_csv.alpha, from_csv.discovery_threshold), report.summary);
  EXPECT_EQ(from_csv.alpha, report.alpha);
}

TEST(Report, EmitWritesFile) {
  const auto path = std::filesystem::temp_directory_path() / "evpol_report_test.json";
  const auto report = run_experiment(small_config({BenchmarkKind::all}, 2));
  emit_report(report, parse_report_format("json"), path);
  std::ifstream in(path);
  std::stringstream buf;
  buf << in.rdbuf();
  EXPECT_EQ(parse_report_json(buf.str()).rows, report.rows);
  std::filesystem::remove(path);
  EXPECT_THROW(parse_report_format("xml"), std::invalid_argument);
}

TEST(Prop2, SingleCellLearnersCoincide) {
  Prop2Config c;
  c.cell_effects = {2.0};
  c.cell_noise_sd = {1.0};
  c.n_train = 500;
  c.n_holdout = 500;
  c.replications = 50;
  const auto r = run_prop2_comparison(c);
  EXPECT_EQ(r.identical_policies, 50u);
  EXPECT_EQ(r.p_sign_rule, r.p_ratio);
}

TEST(Prop2, EqualNoiseGivesSimilarRates) {
  Prop2Config c;
  c.cell_effects = {1.5, 1.5, 1.5};
  c.cell_noise_sd = {1.0, 1.0, 1.0};
  c.n_train = 1500;
  c.n_holdout = 1500;
  c.replications = 400;
  c.threads = 4;
  const auto r = run_prop2_comparison(c);
  EXPECT_NEAR(r.rejection_sign_rule, r.rejection_ratio, 0.05);
}

TEST(Prop2, ConfigValidation) {
  EXPECT_THROW(parse_prop2_config(json::parse(R"({"cell_effects": [1], "cell_noise_sd": [1, 2]})")),
               std::invalid_argument);
  EXPECT_THROW(parse_prop2_config(json::parse(R"({"unknown": 1})")), std::invalid_argument);
  EXPECT_EQ(parse_prop2_config(json::object()).replications, 500u);
}

}  // namespace
}  // namespace evpol
