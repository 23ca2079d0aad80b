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

#include "evpol/dataset.hpp"

#include <algorithm>
#include <cerrno>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <sstream>
#include <stdexcept>

#include "evpol/rng.hpp"
#include "evpol/util.hpp"

namespace evpol {

TrialDataset::TrialDataset(Matrix covariates, std::vector<int> treatment,
                           std::vector<double> outcome, std::vector<std::string> feature_names)
    : covariates_(std::move(covariates)),
      treatment_(std::move(treatment)),
      outcome_(std::move(outcome)),
      feature_names_(std::move(feature_names)) {
  const std::size_t n = outcome_.size();
  if (n == 0) throw std::invalid_argument("TrialDataset: at least one row required");
  if (treatment_.size() != n || covariates_.rows() != n) {
    throw std::invalid_argument("TrialDataset: covariates, treatment and outcome row counts differ");
  }
  for (std::size_t i = 0; i < n; ++i) {
    if (treatment_[i] != 0 && treatment_[i] != 1) {
      throw std::invalid_argument("TrialDataset: treatment must be 0 or 1 (row " +
                                  std::to_string(i) + ")");
    }
    if (!std::isfinite(outcome_[i])) {
      throw std::invalid_argument("TrialDataset: non-finite outcome (row " + std::to_string(i) +
                                  ")");
    }
  }
  for (const double v : covariates_.data()) {
    if (!std::isfinite(v)) throw std::invalid_argument("TrialDataset: non-finite covariate");
  }
  if (feature_names_.empty()) {
    for (std::size_t j = 0; j < covariates_.cols(); ++j) {
      feature_names_.push_back("x" + std::to_string(j + 1));
    }
  } else if (feature_names_.size() != covariates_.cols()) {
    throw std::invalid_argument("TrialDataset: feature name count does not match covariates");
  }
}

std::size_t TrialDataset::treated_count() const {
  return static_cast<std::size_t>(std::count(treatment_.begin(), treatment_.end(), 1));
}

double TrialDataset::treated_fraction() const {
  return static_cast<double>(treated_count()) / static_cast<double>(n());
}

TrialDataset TrialDataset::select_rows(std::span<const std::size_t> indices) const {
  std::vector<int> w(indices.size());
  std::vector<double> y(indices.size());
  for (std::size_t i = 0; i < indices.size(); ++i) {
    w[i] = treatment_[indices[i]];
    y[i] = outcome_[indices[i]];
  }
  return TrialDataset(covariates_.select_rows(indices), std::move(w), std::move(y),
                      feature_names_);
}

// ---------------------------------------------------------------------------
// Three-region DGP

void ThreeRegionDGPConfig::validate() const {
  for (const double s : region_noise_sd) {
    if (!(s >= 0.0)) throw std::invalid_argument("three-region: noise sd must be >= 0");
  }
  if (!(treat_probability > 0.0 && treat_probability < 1.0)) {
    throw std::invalid_argument("three-region: treat_probability must lie in (0,1)");
  }
}

int three_region_index(double x) {
  return std::clamp(static_cast<int>(std::floor(x)), 0, 2);
}

TrialDataset generate_three_region(const ThreeRegionDGPConfig& config, std::size_t n,
                                   std::uint64_t seed) {
  config.validate();
  if (n == 0) throw std::invalid_argument("three-region: n must be >= 1");
  Rng rng(seed);
  Matrix x(n, 1);
  std::vector<int> w(n);
  std::vector<double> y(n);
  for (std::size_t i = 0; i < n; ++i) {
    const double xi = rng.uniform(0.0, 3.0);
    const int t = three_region_index(xi);
    x(i, 0) = xi;
    w[i] = rng.bernoulli(config.treat_probability) ? 1 : 0;
    y[i] = w[i] * config.region_effects[t] + config.region_baselines[t] +
           config.region_noise_sd[t] * rng.normal();
  }
  return TrialDataset(std::move(x), std::move(w), std::move(y));
}

// ---------------------------------------------------------------------------
// Group-structure DGP

void GroupStructureDGPConfig::validate() const {
  if (feature_count < 3) throw std::invalid_argument("group-structure: feature_count must be >= 3");
  if (sample_count == 0) throw std::invalid_argument("group-structure: sample_count must be >= 1");
  for (const double r : group_noise_sd) {
    if (!(r >= 0.0)) throw std::invalid_argument("group-structure: noise sd entries must be >= 0");
  }
  if (!(treat_probability > 0.0 && treat_probability < 1.0)) {
    throw std::invalid_argument("group-structure: treat_probability must lie in (0,1)");
  }
}

GroupTerms group_structure_terms(const GroupStructureDGPConfig& config,
                                 std::span<const double> row,
                                 const std::array<std::size_t, 3>& feature_indices,
                                 const std::array<double, 3>& thresholds) {
  GroupTerms terms;
  for (std::size_t t = 0; t < 3; ++t) {
    if (row[feature_indices[t]] > thresholds[t]) {
      terms.effect += config.group_effects[t];
      terms.baseline += config.group_baselines[t];
      terms.noise_sd += config.group_noise_sd[t];
    }
  }
  return terms;
}

GroupStructureDraw generate_group_structure_detailed(const GroupStructureDGPConfig& config,
                                                     std::uint64_t seed) {
  config.validate();
  Rng rng(seed);
  const std::size_t n = config.sample_count;
  const std::size_t p = config.feature_count;
  Matrix x(n, p);
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j < p; ++j) x(i, j) = rng.uniform();
  }
  const auto picked = rng.sample_without_replacement(p, 3);
  std::array<std::size_t, 3> q{picked[0], picked[1], picked[2]};
  std::array<double, 3> theta{};
  for (std::size_t t = 0; t < 3; ++t) theta[t] = median(x.col(q[t]));

  std::vector<int> w(n);
  std::vector<double> y(n);
  std::vector<double> effect(n);
  std::vector<double> noise(n);
  for (std::size_t i = 0; i < n; ++i) {
    const GroupTerms terms = group_structure_terms(config, x.row(i), q, theta);
    w[i] = rng.bernoulli(config.treat_probability) ? 1 : 0;
    y[i] = terms.effect * w[i] + terms.baseline + terms.noise_sd * rng.normal();
    effect[i] = terms.effect;
    noise[i] = terms.noise_sd;
  }
  return GroupStructureDraw{TrialDataset(std::move(x), std::move(w), std::move(y)), q, theta,
                            std::move(effect), std::move(noise)};
}

TrialDataset generate_group_structure(const GroupStructureDGPConfig& config, std::uint64_t seed) {
  return generate_group_structure_detailed(config, seed).data;
}

// ---------------------------------------------------------------------------
// Cell DGP

void CellDGPConfig::validate() const {
  if (cell_count == 0) throw std::invalid_argument("cell dgp: cell_count must be >= 1");
  if (samples_per_cell == 0) throw std::invalid_argument("cell dgp: samples_per_cell must be >= 1");
  if (cell_effects.size() != cell_count || cell_noise_sd.size() != cell_count) {
    throw std::invalid_argument("cell dgp: effect and noise vectors must have cell_count entries");
  }
  for (const double s : cell_noise_sd) {
    if (!(s > 0.0)) throw std::invalid_argument("cell dgp: noise sd must be > 0");
  }
  if (!(treat_probability > 0.0 && treat_probability < 1.0)) {
    throw std::invalid_argument("cell dgp: treat_probability must lie in (0,1)");
  }
}

double CellDGPConfig::scale_n() const {
  return effect_scale_n > 0 ? static_cast<double>(effect_scale_n)
                            : static_cast<double>(cell_count * samples_per_cell);
}

double CellDGPConfig::effect(std::size_t cell) const {
  return cell_effects.at(cell) / std::sqrt(scale_n());
}

TrialDataset generate_cell_dgp(const CellDGPConfig& config, std::uint64_t seed) {
  config.validate();
  Rng rng(seed);
  const std::size_t n = config.cell_count * config.samples_per_cell;
  Matrix x(n, 1);
  std::vector<int> w(n);
  std::vector<double> y(n);
  std::size_t i = 0;
  for (std::size_t cell = 0; cell < config.cell_count; ++cell) {
    const double tau = config.effect(cell);
    for (std::size_t s = 0; s < config.samples_per_cell; ++s, ++i) {
      x(i, 0) = static_cast<double>(cell);
      w[i] = rng.bernoulli(config.treat_probability) ? 1 : 0;
      y[i] = w[i] * tau + config.cell_noise_sd[cell] * rng.normal();
    }
  }
  return TrialDataset(std::move(x), std::move(w), std::move(y));
}

// ---------------------------------------------------------------------------
// CSV

namespace {

std::vector<std::string> split_fields(const std::string& line) {
  std::vector<std::string> out;
  std::string field;
  std::istringstream in(line);
  while (std::getline(in, field, ',')) out.push_back(trim(field));
  if (!line.empty() && line.back() == ',') out.emplace_back();
  return out;
}

}  // namespace

TrialDataset parse_csv(const std::string& text) {
  std::istringstream in(text);
  std::string line;
  std::vector<std::string> header;
  while (std::getline(in, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (!trim(line).empty()) {
      header = split_fields(line);
      break;
    }
  }
  if (header.empty()) throw std::runtime_error("csv: empty file");
  if (header.front().rfind("\xEF\xBB\xBF", 0) == 0) header.front().erase(0, 3);

  std::ptrdiff_t w_col = -1;
  std::ptrdiff_t y_col = -1;
  std::vector<std::size_t> feature_cols;
  std::vector<std::string> names;
  for (std::size_t c = 0; c < header.size(); ++c) {
    if (header[c] == "w") {
      if (w_col >= 0) throw std::runtime_error("csv: duplicate column 'w'");
      w_col = static_cast<std::ptrdiff_t>(c);
    } else if (header[c] == "y") {
      if (y_col >= 0) throw std::runtime_error("csv: duplicate column 'y'");
      y_col = static_cast<std::ptrdiff_t>(c);
    } else {
      feature_cols.push_back(c);
      names.push_back(header[c]);
    }
  }
  if (w_col < 0) throw std::runtime_error("csv: missing column 'w'");
  if (y_col < 0) throw std::runtime_error("csv: missing column 'y'");

  std::vector<double> cells;
  std::vector<int> w;
  std::vector<double> y;
  std::size_t row = 0;
  while (std::getline(in, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (trim(line).empty()) continue;
    ++row;
    const auto fields = split_fields(line);
    if (fields.size() != header.size()) {
      throw std::runtime_error("csv: row " + std::to_string(row) + " has " +
                               std::to_string(fields.size()) + " fields, expected " +
                               std::to_string(header.size()));
    }
    auto number = [&](std::size_t c) {
      const auto value = parse_double(fields[c]);
      if (!value || !std::isfinite(*value)) {
        throw std::runtime_error("csv: row " + std::to_string(row) + ", column '" + header[c] +
                                 "': not a finite number: '" + fields[c] + "'");
      }
      return *value;
    };
    for (const std::size_t c : feature_cols) cells.push_back(number(c));
    const double wv = number(static_cast<std::size_t>(w_col));
    if (wv != 0.0 && wv != 1.0) {
      throw std::runtime_error("csv: row " + std::to_string(row) +
                               ", column 'w': treatment must be 0 or 1, got '" +
                               fields[static_cast<std::size_t>(w_col)] + "'");
    }
    w.push_back(static_cast<int>(wv));
    y.push_back(number(static_cast<std::size_t>(y_col)));
  }
  if (y.empty()) throw std::runtime_error("csv: no data rows");

  Matrix x(y.size(), feature_cols.size());
  for (std::size_t r = 0; r < y.size(); ++r) {
    for (std::size_t c = 0; c < feature_cols.size(); ++c) {
      x(r, c) = cells[r * feature_cols.size() + c];
    }
  }
  return TrialDataset(std::move(x), std::move(w), std::move(y), std::move(names));
}

TrialDataset load_csv(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("csv: cannot open " + path.string());
  std::ostringstream buf;
  buf << in.rdbuf();
  return parse_csv(buf.str());
}

std::string to_csv(const TrialDataset& data) {
  std::string out;
  for (const auto& name : data.feature_names()) out += name + ",";
  out += "w,y\n";
  for (std::size_t i = 0; i < data.n(); ++i) {
    for (const double v : data.covariates().row(i)) out += format_double(v) + ",";
    out += std::to_string(data.treatment()[i]) + "," + format_double(data.outcome()[i]) + "\n";
  }
  return out;
}

void write_csv(const TrialDataset& data, const std::filesystem::path& path) {
  write_file_atomic(path, to_csv(data));
}

}  // namespace evpol
