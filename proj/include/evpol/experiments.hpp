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
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "evpol/benchmarks.hpp"
#include "evpol/centering.hpp"
#include "evpol/dataset.hpp"
#include "evpol/model_based.hpp"
#include "evpol/tree_policy.hpp"

namespace evpol {

enum class DgpKind { three_region, group, cell, csv };

std::string_view to_string(DgpKind kind);
DgpKind parse_dgp_kind(std::string_view name);  // "three-region", "group", "cell", "csv"

struct DgpSpec {
  DgpKind kind = DgpKind::three_region;
  ThreeRegionDGPConfig three_region;
  GroupStructureDGPConfig group;
  CellDGPConfig cell;
  std::filesystem::path csv_path;
};

// Parameter blocks. Unknown keys are rejected with std::invalid_argument.
ThreeRegionDGPConfig three_region_config_from_json(const nlohmann::json& j);
GroupStructureDGPConfig group_config_from_json(const nlohmann::json& j);
CellDGPConfig cell_config_from_json(const nlohmann::json& j);

// Synthetic trial of n rows from a params block. The group DGP takes n as its
// sample_count; the cell DGP needs n to be a multiple of the cell count.
TrialDataset generate_synthetic(DgpKind kind, const nlohmann::json& params, std::size_t n,
                                std::uint64_t seed);

struct MethodSettings {
  EvidenceTreeParams evidence;
  ClassifierParams classifier;
  CateParams cate;
  ModelBasedParams model_based;
  double submod_epsilon = 1e-3;
  CenteringParams learner_centering;
  CenteringParams evaluation_centering;
};

struct ExperimentConfig {
  DgpSpec dgp;
  std::vector<BenchmarkKind> methods{BenchmarkKind::all};
  std::size_t n_train = 2000;
  std::size_t n_holdout = 2000;
  std::size_t replications = 1;
  double alpha = 0.05;
  double discovery_threshold = 1e-3;
  std::uint64_t seed = 0;
  std::size_t threads = 1;
  double honest_fraction = 0.5;     // share of training rows used to fit learner centering
  std::optional<double> propensity;  // known value; empirical when unset
  MethodSettings settings;

  void validate() const;
};

ExperimentConfig parse_experiment_config(const nlohmann::json& j);
ExperimentConfig load_experiment_config(const std::filesystem::path& path);

struct ReplicationRow {
  std::string method;
  std::size_t replication = 0;
  double p_value = 1.0;
  double t_stat = 0.0;
  double estimate = 0.0;
  double treated_fraction = 0.0;
  bool null_policy = false;
  bool degenerate = false;
  bool failed = false;
  double treated_covariate_mean = 0.0;  // mean of the first covariate over treated hold-out rows; NaN if none
  std::string error;

  friend bool operator==(const ReplicationRow&, const ReplicationRow&) = default;
};

struct MethodSummary {
  std::string method;
  std::size_t replications = 0;
  std::size_t failed = 0;
  std::size_t null_policies = 0;
  double median_p = 1.0;
  double mean_neg_log10_p = 0.0;  // p capped below at 1e-300; null policies contribute 0
  double discovery_rate = 0.0;    // share with p <= discovery_threshold
  double rejection_rate = 0.0;    // share with p <= alpha

  friend bool operator==(const MethodSummary&, const MethodSummary&) = default;
};

struct ExperimentReport {
  double alpha = 0.05;
  double discovery_threshold = 1e-3;
  std::vector<ReplicationRow> rows;  // replication-major, methods in config order
  std::vector<MethodSummary> summary;
};

// Aggregates in order of first appearance of each method. Failed rows carry p = 1.
std::vector<MethodSummary> summarize(const std::vector<ReplicationRow>& rows, double alpha,
                                     double discovery_threshold);

// Draws the train and hold-out samples of one replication.
std::pair<TrialDataset, TrialDataset> draw_replication_data(const ExperimentConfig& config,
                                                            std::size_t replication,
                                                            const TrialDataset* csv_source = nullptr);

ExperimentReport run_experiment(const ExperimentConfig& config);

enum class ReportFormat { csv, json };
ReportFormat parse_report_format(std::string_view name);

std::string report_to_csv(const ExperimentReport& report);
std::string report_to_json(const ExperimentReport& report);
ExperimentReport parse_report_csv(const std::string& text);
ExperimentReport parse_report_json(const std::string& text);

// Writes via a temporary file and rename.
void emit_report(const ExperimentReport& report, ReportFormat format,
                 const std::filesystem::path& path);

struct Prop2Config {
  std::vector<double> cell_effects{5.0, 5.0, 5.0};      // mu_x; effect is mu_x / sqrt(n_train)
  std::vector<double> cell_noise_sd{0.01, 0.01, 100.0};
  std::size_t n_train = 3000;  // split evenly over cells
  std::size_t n_holdout = 3000;
  std::size_t replications = 500;
  double alpha = 0.05;
  double epsilon = 1e-3;
  std::uint64_t seed = 0;
  std::size_t threads = 1;

  void validate() const;
};

Prop2Config parse_prop2_config(const nlohmann::json& j);

struct Prop2Report {
  std::vector<double> p_sign_rule;  // learner A per replication
  std::vector<double> p_ratio;      // learner B per replication
  std::size_t identical_policies = 0;
  double rejection_sign_rule = 0.0;
  double rejection_ratio = 0.0;
  double alpha = 0.05;

  std::string to_json() const;
};

Prop2Report run_prop2_comparison(const Prop2Config& config);

}  // namespace evpol
