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

#include <algorithm>
#include <array>
#include <fstream>
#include <initializer_list>
#include <sstream>
#include <stdexcept>
#include <string>

#include "evpol/experiments.hpp"

namespace evpol {

namespace {

using nlohmann::json;

void require_object(const json& j, const std::string& where) {
  if (!j.is_object()) throw std::invalid_argument(where + ": expected a JSON object");
}

void check_keys(const json& j, std::initializer_list<std::string_view> allowed,
                const std::string& where) {
  require_object(j, where);
  for (const auto& item : j.items()) {
    bool ok = false;
    for (auto a : allowed) ok = ok || item.key() == a;
    if (!ok) throw std::invalid_argument(where + ": unknown key '" + item.key() + "'");
  }
}

template <typename T>
void read(const json& j, const char* key, T& out, const std::string& where) {
  const auto it = j.find(key);
  if (it == j.end()) return;
  try {
    out = it->get<T>();
  } catch (const json::exception&) {
    throw std::invalid_argument(where + ": key '" + key + "' has the wrong type");
  }
}

template <typename T>
void read_count(const json& j, const char* key, T& out, const std::string& where) {
  const auto it = j.find(key);
  if (it == j.end()) return;
  if (!it->is_number_integer() || it->get<long long>() < 0) {
    throw std::invalid_argument(where + ": key '" + key + "' must be a nonnegative integer");
  }
  out = static_cast<T>(it->get<unsigned long long>());
}

void read_vec3(const json& j, const char* key, std::array<double, 3>& out, const std::string& where) {
  std::vector<double> v;
  if (!j.contains(key)) return;
  read(j, key, v, where);
  if (v.size() != 3) throw std::invalid_argument(where + ": '" + key + "' must have 3 entries");
  std::copy(v.begin(), v.end(), out.begin());
}

CenteringParams centering_params_from_json(const json& j, CenteringParams out, const std::string& where) {
  check_keys(j, {"trees", "max_depth", "min_leaf", "features_per_split"}, where);
  read_count(j, "trees", out.trees, where);
  read(j, "max_depth", out.max_depth, where);
  read_count(j, "min_leaf", out.min_leaf, where);
  read_count(j, "features_per_split", out.features_per_split, where);
  if (out.trees == 0 || out.max_depth < 0) throw std::invalid_argument(where + ": invalid forest settings");
  return out;
}

}  // namespace

std::string_view to_string(DgpKind kind) {
  switch (kind) {
    case DgpKind::three_region:
      return "three-region";
    case DgpKind::group:
      return "group";
    case DgpKind::cell:
      return "cell";
    case DgpKind::csv:
      return "csv";
  }
  return "unknown";
}

DgpKind parse_dgp_kind(std::string_view name) {
  for (auto k : {DgpKind::three_region, DgpKind::group, DgpKind::cell, DgpKind::csv}) {
    if (to_string(k) == name) return k;
  }
  throw std::invalid_argument("unknown dgp kind '" + std::string(name) + "'");
}

ThreeRegionDGPConfig three_region_config_from_json(const json& j) {
  const std::string where = "three-region params";
  check_keys(j, {"region_effects", "region_baselines", "region_noise_sd", "treat_probability"}, where);
  ThreeRegionDGPConfig c;
  read_vec3(j, "region_effects", c.region_effects, where);
  read_vec3(j, "region_baselines", c.region_baselines, where);
  read_vec3(j, "region_noise_sd", c.region_noise_sd, where);
  read(j, "treat_probability", c.treat_probability, where);
  c.validate();
  return c;
}

GroupStructureDGPConfig group_config_from_json(const json& j) {
  const std::string where = "group params";
  check_keys(j,
             {"group_effects", "group_noise_sd", "group_baselines", "feature_count", "sample_count",
              "treat_probability"},
             where);
  GroupStructureDGPConfig c;
  read_vec3(j, "group_effects", c.group_effects, where);
  read_vec3(j, "group_noise_sd", c.group_noise_sd, where);
  read_vec3(j, "group_baselines", c.group_baselines, where);
  read_count(j, "feature_count", c.feature_count, where);
  read_count(j, "sample_count", c.sample_count, where);
  read(j, "treat_probability", c.treat_probability, where);
  c.validate();
  return c;
}

CellDGPConfig cell_config_from_json(const json& j) {
  const std::string where = "cell params";
  check_keys(j,
             {"cell_effects", "cell_noise_sd", "samples_per_cell", "treat_probability", "effect_scale_n"},
             where);
  CellDGPConfig c;
  read(j, "cell_effects", c.cell_effects, where);
  read(j, "cell_noise_sd", c.cell_noise_sd, where);
  c.cell_count = c.cell_effects.size();
  read_count(j, "samples_per_cell", c.samples_per_cell, where);
  read(j, "treat_probability", c.treat_probability, where);
  read_count(j, "effect_scale_n", c.effect_scale_n, where);
  c.validate();
  return c;
}

void ExperimentConfig::validate() const {
  if (methods.empty()) throw std::invalid_argument("config: methods must not be empty");
  if (n_train < 4) throw std::invalid_argument("config: n_train must be >= 4");
  if (n_holdout < 2) throw std::invalid_argument("config: n_holdout must be >= 2");
  if (replications < 1) throw std::invalid_argument("config: replications must be >= 1");
  if (!(alpha > 0.0 && alpha < 1.0)) throw std::invalid_argument("config: alpha must lie in (0,1)");
  if (!(discovery_threshold > 0.0 && discovery_threshold < 1.0)) {
    throw std::invalid_argument("config: discovery_threshold must lie in (0,1)");
  }
  if (!(honest_fraction > 0.0 && honest_fraction < 1.0)) {
    throw std::invalid_argument("config: honest_fraction must lie in (0,1)");
  }
  if (propensity && !(*propensity > 0.0 && *propensity < 1.0)) {
    throw std::invalid_argument("config: propensity must lie in (0,1)");
  }
  if (threads == 0) throw std::invalid_argument("config: threads must be >= 1");
  settings.evidence.validate();
  switch (dgp.kind) {
    case DgpKind::three_region:
      dgp.three_region.validate();
      break;
    case DgpKind::group:
      dgp.group.validate();
      break;
    case DgpKind::cell:
      dgp.cell.validate();
      break;
    case DgpKind::csv:
      if (dgp.csv_path.empty()) throw std::invalid_argument("config: csv dgp needs a path");
      break;
  }
}

ExperimentConfig parse_experiment_config(const json& j) {
  const std::string where = "config";
  check_keys(j,
             {"dgp", "methods", "n_train", "n_holdout", "replications", "alpha",
              "discovery_threshold", "seed", "threads", "honest_fraction", "propensity", "evidence",
              "classifier", "cate", "model_based", "submod_epsilon", "centering",
              "evaluation_centering"},
             where);
  ExperimentConfig c;
  if (!j.contains("dgp")) throw std::invalid_argument("config: missing 'dgp'");
  const auto& d = j.at("dgp");
  check_keys(d, {"kind", "params", "path"}, "dgp");
  std::string kind;
  read(d, "kind", kind, "dgp");
  c.dgp.kind = parse_dgp_kind(kind);
  const json params = d.value("params", json::object());
  switch (c.dgp.kind) {
    case DgpKind::three_region:
      c.dgp.three_region = three_region_config_from_json(params);
      break;
    case DgpKind::group:
      c.dgp.group = group_config_from_json(params);
      break;
    case DgpKind::cell:
      c.dgp.cell = cell_config_from_json(params);
      break;
    case DgpKind::csv: {
      std::string path;
      read(d, "path", path, "dgp");
      c.dgp.csv_path = path;
      break;
    }
  }

  if (j.contains("methods")) {
    std::vector<std::string> names;
    read(j, "methods", names, where);
    c.methods.clear();
    for (const auto& n : names) c.methods.push_back(parse_benchmark_kind(n));
  }
  read_count(j, "n_train", c.n_train, where);
  read_count(j, "n_holdout", c.n_holdout, where);
  read_count(j, "replications", c.replications, where);
  read(j, "alpha", c.alpha, where);
  read(j, "discovery_threshold", c.discovery_threshold, where);
  read_count(j, "seed", c.seed, where);
  read_count(j, "threads", c.threads, where);
  read(j, "honest_fraction", c.honest_fraction, where);
  if (j.contains("propensity")) {
    const auto& p = j.at("propensity");
    if (p.is_string() && p.get<std::string>() == "empirical") {
      c.propensity.reset();
    } else if (p.is_number()) {
      c.propensity = p.get<double>();
    } else {
      throw std::invalid_argument("config: propensity must be \"empirical\" or a number");
    }
  }

  auto& s = c.settings;
  if (j.contains("evidence")) {
    const auto& e = j.at("evidence");
    check_keys(e, {"min_score_increase", "max_depth", "min_leaf", "thresholds_per_feature"}, "evidence");
    read(e, "min_score_increase", s.evidence.min_score_increase, "evidence");
    read(e, "max_depth", s.evidence.max_depth, "evidence");
    read_count(e, "min_leaf", s.evidence.min_leaf, "evidence");
    read_count(e, "thresholds_per_feature", s.evidence.thresholds_per_feature, "evidence");
  }
  if (j.contains("classifier")) {
    const auto& e = j.at("classifier");
    check_keys(e, {"max_depth", "min_leaf"}, "classifier");
    read(e, "max_depth", s.classifier.max_depth, "classifier");
    read_count(e, "min_leaf", s.classifier.min_leaf, "classifier");
  }
  if (j.contains("cate")) {
    const auto& e = j.at("cate");
    check_keys(e, {"max_depth", "min_leaf", "trees", "forest_depth", "forest_min_leaf", "folds"}, "cate");
    read(e, "max_depth", s.cate.final_stage.max_depth, "cate");
    read_count(e, "min_leaf", s.cate.final_stage.min_leaf, "cate");
    read_count(e, "trees", s.cate.nuisance.trees, "cate");
    read(e, "forest_depth", s.cate.nuisance.max_depth, "cate");
    read_count(e, "forest_min_leaf", s.cate.nuisance.min_leaf, "cate");
    read_count(e, "folds", s.cate.folds, "cate");
  }
  if (j.contains("model_based")) {
    const auto& e = j.at("model_based");
    check_keys(e, {"sparsity", "epsilon"}, "model_based");
    read(e, "sparsity", s.model_based.sparsity, "model_based");
    read(e, "epsilon", s.model_based.epsilon, "model_based");
  }
  read(j, "submod_epsilon", s.submod_epsilon, where);
  if (j.contains("centering")) {
    s.learner_centering = centering_params_from_json(j.at("centering"), s.learner_centering, "centering");
  }
  if (j.contains("evaluation_centering")) {
    s.evaluation_centering = centering_params_from_json(j.at("evaluation_centering"),
                                                        s.evaluation_centering, "evaluation_centering");
  }
  c.validate();
  return c;
}

ExperimentConfig load_experiment_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw std::invalid_argument("cannot open config file " + path.string());
  std::stringstream ss;
  ss << in.rdbuf();
  json j;
  try {
    j = json::parse(ss.str());
  } catch (const json::parse_error& e) {
    throw std::invalid_argument("config file " + path.string() + ": " + e.what());
  }
  auto c = parse_experiment_config(j);
  if (c.dgp.kind == DgpKind::csv && c.dgp.csv_path.is_relative()) {
    c.dgp.csv_path = path.parent_path() / c.dgp.csv_path;
  }
  return c;
}

void Prop2Config::validate() const {
  if (cell_effects.empty() || cell_effects.size() != cell_noise_sd.size()) {
    throw std::invalid_argument("prop2: cell_effects and cell_noise_sd must be nonempty and equal length");
  }
  for (double s : cell_noise_sd) {
    if (!(s > 0.0)) throw std::invalid_argument("prop2: cell_noise_sd entries must be positive");
  }
  if (n_train < 2 * cell_effects.size() || n_holdout < 2 * cell_effects.size()) {
    throw std::invalid_argument("prop2: n_train and n_holdout need at least 2 rows per cell");
  }
  if (replications == 0) throw std::invalid_argument("prop2: replications must be >= 1");
  if (!(alpha > 0.0 && alpha < 1.0)) throw std::invalid_argument("prop2: alpha must lie in (0,1)");
  if (!(epsilon > 0.0)) throw std::invalid_argument("prop2: epsilon must be positive");
  if (threads == 0) throw std::invalid_argument("prop2: threads must be >= 1");
}

Prop2Config parse_prop2_config(const json& j) {
  const std::string where = "prop2";
  check_keys(j,
             {"cell_effects", "cell_noise_sd", "n_train", "n_holdout", "replications", "alpha",
              "epsilon", "seed", "threads"},
             where);
  Prop2Config c;
  read(j, "cell_effects", c.cell_effects, where);
  read(j, "cell_noise_sd", c.cell_noise_sd, where);
  read_count(j, "n_train", c.n_train, where);
  read_count(j, "n_holdout", c.n_holdout, where);
  read_count(j, "replications", c.replications, where);
  read(j, "alpha", c.alpha, where);
  read(j, "epsilon", c.epsilon, where);
  read_count(j, "seed", c.seed, where);
  read_count(j, "threads", c.threads, where);
  c.validate();
  return c;
}

TrialDataset generate_synthetic(DgpKind kind, const nlohmann::json& params, std::size_t n,
                                std::uint64_t seed) {
  switch (kind) {
    case DgpKind::three_region:
      return generate_three_region(three_region_config_from_json(params), n, seed);
    case DgpKind::group: {
      auto cfg = group_config_from_json(params);
      cfg.sample_count = n;
      return generate_group_structure(cfg, seed);
    }
    case DgpKind::cell: {
      auto cfg = cell_config_from_json(params);
      if (n % cfg.cell_count != 0) {
        throw std::invalid_argument("n must be a multiple of the cell count for the cell dgp");
      }
      cfg.samples_per_cell = n / cfg.cell_count;
      return generate_cell_dgp(cfg, seed);
    }
    case DgpKind::csv:
      break;
  }
  throw std::invalid_argument("synthetic data needs dgp three-region, group or cell");
}

}  // namespace evpol
