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

#include <array>
#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <vector>

#include "evpol/matrix.hpp"

namespace evpol {

// Rows of (covariates, binary treatment, outcome) from a randomized trial.
// Immutable after construction; the constructor enforces the invariants
// (equal row counts, n >= 1, treatment in {0,1}, finite entries).
class TrialDataset {
 public:
  TrialDataset(Matrix covariates, std::vector<int> treatment, std::vector<double> outcome,
               std::vector<std::string> feature_names = {});

  std::size_t n() const { return outcome_.size(); }
  std::size_t p() const { return covariates_.cols(); }

  const Matrix& covariates() const { return covariates_; }
  const std::vector<int>& treatment() const { return treatment_; }
  const std::vector<double>& outcome() const { return outcome_; }
  const std::vector<std::string>& feature_names() const { return feature_names_; }

  std::size_t treated_count() const;
  double treated_fraction() const;

  TrialDataset select_rows(std::span<const std::size_t> indices) const;

  friend bool operator==(const TrialDataset&, const TrialDataset&) = default;

 private:
  Matrix covariates_;
  std::vector<int> treatment_;
  std::vector<double> outcome_;
  std::vector<std::string> feature_names_;
};

// Scalar covariate X ~ U[0,3] split into regions [0,1), [1,2), [2,3].
struct ThreeRegionDGPConfig {
  std::array<double, 3> region_effects{0.0, 2.0, 1.0};
  std::array<double, 3> region_baselines{0.0, 10.0, 100.0};
  std::array<double, 3> region_noise_sd{5.0, 10.0, 1.0};
  double treat_probability = 0.5;

  void validate() const;
};

// Region index floor(x) clamped to {0, 1, 2}.
int three_region_index(double x);

TrialDataset generate_three_region(const ThreeRegionDGPConfig& config, std::size_t n,
                                   std::uint64_t seed);

// Three median-threshold indicator groups over i.i.d. U[0,1] covariates.
struct GroupStructureDGPConfig {
  std::array<double, 3> group_effects{-2.0, 2.0, 2.0};
  std::array<double, 3> group_noise_sd{5.0, 10.0, 1.0};
  std::array<double, 3> group_baselines{0.0, 10.0, 100.0};
  std::size_t feature_count = 44;
  std::size_t sample_count = 2456;
  double treat_probability = 0.5;

  void validate() const;
};

struct GroupTerms {
  double effect = 0.0;
  double baseline = 0.0;
  double noise_sd = 0.0;
};

// Indicator sums at one covariate row for feature indices q and thresholds
// theta (indicator is x[q[t]] > theta[t]).
GroupTerms group_structure_terms(const GroupStructureDGPConfig& config,
                                 std::span<const double> row,
                                 const std::array<std::size_t, 3>& feature_indices,
                                 const std::array<double, 3>& thresholds);

struct GroupStructureDraw {
  TrialDataset data;
  std::array<std::size_t, 3> feature_indices{};
  std::array<double, 3> thresholds{};
  std::vector<double> effect;    // tau(X_i)
  std::vector<double> noise_sd;  // sigma(X_i)
};

GroupStructureDraw generate_group_structure_detailed(const GroupStructureDGPConfig& config,
                                                     std::uint64_t seed);
TrialDataset generate_group_structure(const GroupStructureDGPConfig& config, std::uint64_t seed);

// k equal-mass cells with local-to-zero effects mu_x / sqrt(n).
struct CellDGPConfig {
  std::size_t cell_count = 2;
  std::vector<double> cell_effects{1.0, 1.0};   // mu_x
  std::vector<double> cell_noise_sd{1.0, 1.0};  // sigma_x
  std::size_t samples_per_cell = 100;
  double treat_probability = 0.5;
  // n used in the effect scaling mu_x / sqrt(n); 0 means cell_count * samples_per_cell.
  // Set it when train and hold-out draws of different size share one population.
  std::size_t effect_scale_n = 0;

  void validate() const;
  double scale_n() const;
  double effect(std::size_t cell) const;  // tau_x
};

TrialDataset generate_cell_dgp(const CellDGPConfig& config, std::uint64_t seed);

// CSV with a header row; column `w` is treatment, `y` is outcome, all other
// columns are features in file order. Throws std::runtime_error naming the
// offending row/column on malformed input.
TrialDataset load_csv(const std::filesystem::path& path);
TrialDataset parse_csv(const std::string& text);

// Writes `x1..xp,w,y` (or the dataset's feature names) with round-trip precision.
std::string to_csv(const TrialDataset& data);
void write_csv(const TrialDataset& data, const std::filesystem::path& path);

}  // namespace evpol
