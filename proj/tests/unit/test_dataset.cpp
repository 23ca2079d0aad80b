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
#include <set>

#include "evpol/dataset.hpp"
#include "evpol/rng.hpp"
#include "evpol/util.hpp"

namespace evpol {
namespace {

TEST(Util, ParseDouble) {
  EXPECT_EQ(parse_double("1.5"), 1.5);
  EXPECT_EQ(parse_double(" -2e3 "), -2000.0);
  EXPECT_FALSE(parse_double("1.5x"));
  EXPECT_FALSE(parse_double(""));
  EXPECT_FALSE(parse_double("1e999"));
  // subnormal p-values survive a round trip
  EXPECT_EQ(parse_double(format_double(4.9e-322)), 4.9e-322);
}

TEST(Util, FormatDoubleRoundTrips) {
  Rng rng(1);
  for (int i = 0; i < 1000; ++i) {
    const double v = rng.normal() * std::pow(10.0, rng.uniform(-30, 30));
    EXPECT_EQ(*parse_double(format_double(v)), v);
  }
}

TEST(Util, Median) {
  EXPECT_DOUBLE_EQ(median({3, 1, 2}), 2.0);
  EXPECT_DOUBLE_EQ(median({4, 1, 2, 3}), 2.5);
  EXPECT_THROW(median({}), std::invalid_argument);
}

TEST(Util, AtomicWriteLeavesNoTemporary) {
  const auto dir = std::filesystem::temp_directory_path() / "evpol_util_test";
  std::filesystem::create_directories(dir);
  const auto path = dir / "out.txt";
  write_file_atomic(path, "first");
  write_file_atomic(path, "second");
  std::ifstream in(path);
  std::string s;
  std::getline(in, s);
  EXPECT_EQ(s, "second");
  std::size_t files = 0;
  for ([[maybe_unused]] const auto& e : std::filesystem::directory_iterator(dir)) ++files;
  EXPECT_EQ(files, 1u);
  std::filesystem::remove_all(dir);
}

TEST(Rng, DerivedSeedsDifferByStage) {
  EXPECT_EQ(derive_seed(7, 3, "data"), derive_seed(7, 3, "data"));
  EXPECT_NE(derive_seed(7, 3, "data"), derive_seed(7, 3, "split"));
  EXPECT_NE(derive_seed(7, 3, "data"), derive_seed(7, 4, "data"));
  EXPECT_NE(derive_seed(7, 3, "data"), derive_seed(8, 3, "data"));
}

TEST(Rng, MomentsOfVariates) {
  Rng rng(42);
  const int n = 200000;
  double s = 0, ss = 0, u = 0;
  for (int i = 0; i < n; ++i) {
    const double z = rng.normal();
    s += z;
    ss += z * z;
    u += rng.uniform();
  }
  EXPECT_NEAR(s / n, 0.0, 4.0 / std::sqrt(n));
  EXPECT_NEAR(ss / n, 1.0, 4.0 * std::sqrt(2.0 / n));
  EXPECT_NEAR(u / n, 0.5, 4.0 * std::sqrt(1.0 / 12.0 / n));
}

TEST(Rng, SampleWithoutReplacementIsDistinct) {
  Rng rng(5);
  const auto s = rng.sample_without_replacement(50, 20);
  EXPECT_EQ(s.size(), 20u);
  EXPECT_EQ(std::set<std::size_t>(s.begin(), s.end()).size(), 20u);
  for (auto v : s) EXPECT_LT(v, 50u);
  EXPECT_EQ(rng.sample_without_replacement(3, 10).size(), 3u);
}

TEST(Dataset, RejectsBadTreatment) {
  EXPECT_THROW(TrialDataset(Matrix(2, 1), {0, 2}, {1.0, 2.0}), std::invalid_argument);
  EXPECT_THROW(TrialDataset(Matrix(2, 1), {0, 1}, {1.0}), std::invalid_argument);
  EXPECT_THROW(TrialDataset(Matrix(1, 1), {0}, {NAN}), std::invalid_argument);
}

TEST(Dataset, ThreeRegionDefaultParameters) {
  ThreeRegionDGPConfig cfg;
  const auto d = generate_three_region(cfg, 6, 11);
  EXPECT_EQ(d.n(), 6u);
  EXPECT_EQ(d.p(), 1u);
  for (std::size_t i = 0; i < d.n(); ++i) {
    EXPECT_TRUE(std::isfinite(d.outcome()[i]));
    EXPECT_GE(d.covariates()(i, 0), 0.0);
    EXPECT_LE(d.covariates()(i, 0), 3.0);
  }
  const auto big = generate_three_region(cfg, 3000, 12);
  std::set<int> regions;
  for (std::size_t i = 0; i < big.n(); ++i) regions.insert(three_region_index(big.covariates()(i, 0)));
  EXPECT_EQ(regions.size(), 3u);
}

TEST(Dataset, ThreeRegionNoiselessIsConstant) {
  ThreeRegionDGPConfig cfg;
  cfg.region_effects = {0, 0, 0};
  cfg.region_baselines = {1, 1, 1};
  cfg.region_noise_sd = {0, 0, 0};
  const auto d = generate_three_region(cfg, 50, 3);
  for (double y : d.outcome()) EXPECT_EQ(y, 1.0);
}

TEST(Dataset, ThreeRegionTreatedFractionConverges) {
  ThreeRegionDGPConfig cfg;
  cfg.treat_probability = 0.3;
  const std::size_t n = 100000;
  const auto d = generate_three_region(cfg, n, 9);
  EXPECT_NEAR(d.treated_fraction(), 0.3, 3.0 * std::sqrt(0.3 * 0.7 / n));
}

TEST(Dataset, ThreeRegionIndexBoundaries) {
  EXPECT_EQ(three_region_index(0.0), 0);
  EXPECT_EQ(three_region_index(0.999), 0);
  EXPECT_EQ(three_region_index(1.0), 1);
  EXPECT_EQ(three_region_index(2.0), 2);
  EXPECT_EQ(three_region_index(3.0), 2);
}

TEST(Dataset, GroupStructureNoiseRange) {
  GroupStructureDGPConfig cfg;
  cfg.sample_count = 500;
  const auto draw = generate_group_structure_detailed(cfg, 4);
  EXPECT_EQ(draw.data.n(), 500u);
  EXPECT_EQ(draw.data.p(), 44u);
  for (double s : draw.noise_sd) {
    EXPECT_GE(s, 0.0);
    EXPECT_LE(s, 16.0);
  }
  // indicators reproduce the recorded effect
  for (std::size_t i = 0; i < 20; ++i) {
    const auto terms = group_structure_terms(cfg, draw.data.covariates().row(i), draw.feature_indices,
                                             draw.thresholds);
    EXPECT_DOUBLE_EQ(terms.effect, draw.effect[i]);
    double manual = 0.0;
    for (int t = 0; t < 3; ++t) {
      if (draw.data.covariates()(i, draw.feature_indices[t]) > draw.thresholds[t]) {
        manual += cfg.group_effects[t];
      }
    }
    EXPECT_DOUBLE_EQ(manual, draw.effect[i]);
  }
}

TEST(Dataset, GroupStructureAllZero) {
  GroupStructureDGPConfig cfg;
  cfg.group_effects = {0, 0, 0};
  cfg.group_noise_sd = {0, 0, 0};
  cfg.group_baselines = {0, 0, 0};
  cfg.sample_count = 100;
  const auto d = generate_group_structure(cfg, 1);
  for (double y : d.outcome()) EXPECT_EQ(y, 0.0);
}

TEST(Dataset, CellDgpEffectsScaleWithSqrtN) {
  CellDGPConfig cfg;
  cfg.samples_per_cell = 200000;
  const auto d = generate_cell_dgp(cfg, 8);
  const double n = 2.0 * 200000.0;
  for (int cell = 0; cell < 2; ++cell) {
    double s1 = 0, s0 = 0;
    double n1 = 0, n0 = 0;
    for (std::size_t i = 0; i < d.n(); ++i) {
      if (d.covariates()(i, 0) != cell) continue;
      if (d.treatment()[i]) {
        s1 += d.outcome()[i];
        n1 += 1;
      } else {
        s0 += d.outcome()[i];
        n0 += 1;
      }
    }
    const double se = std::sqrt(1.0 / n1 + 1.0 / n0);
    EXPECT_NEAR(s1 / n1 - s0 / n0, 1.0 / std::sqrt(n), 4.0 * se);
  }
  EXPECT_DOUBLE_EQ(cfg.effect(0), 1.0 / std::sqrt(2.0 * 200000.0));
}

TEST(Dataset, CellDgpMinimal) {
  CellDGPConfig cfg;
  cfg.cell_count = 1;
  cfg.cell_effects = {1.0};
  cfg.cell_noise_sd = {1.0};
  cfg.samples_per_cell = 1;
  EXPECT_EQ(generate_cell_dgp(cfg, 0).n(), 1u);
}

TEST(Dataset, CsvParse) {
  const auto d = parse_csv("x1,w,y\n0.5,1,2\n1.5,0,3\n2.5,1,-1\n");
  EXPECT_EQ(d.n(), 3u);
  EXPECT_EQ(d.p(), 1u);
  EXPECT_EQ(d.treatment()[1], 0);
  EXPECT_EQ(d.outcome()[2], -1.0);
}

TEST(Dataset, CsvBadTreatmentNamesRowAndColumn) {
  try {
    parse_csv("x1,w,y\n0.5,1,2\n1.5,2,3\n");
    FAIL();
  } catch (const std::runtime_error& e) {
    const std::string msg = e.what();
    EXPECT_NE(msg.find("row 2"), std::string::npos) << msg;
    EXPECT_NE(msg.find("'w'"), std::string::npos) << msg;
  }
}

TEST(Dataset, CsvRoundTrip) {
  const auto d = generate_three_region({}, 40, 2);
  EXPECT_EQ(parse_csv(to_csv(d)), d);
}

}  // namespace
}  // namespace evpol
