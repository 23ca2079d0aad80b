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
#include <random>
#include <string_view>
#include <vector>

namespace evpol {

// SplitMix64 finalizer (Steele, Lea & Flood 2014).
std::uint64_t splitmix64(std::uint64_t x);

// Child seed for (seed, index, stage). Stable across platforms and releases:
// splitmix64 chain over the seed, the index and the FNV-1a hash of the stage.
std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t index, std::string_view stage);

// Random source used by every stochastic operation.
//
// Engine: std::mt19937_64 seeded with splitmix64(seed). The engine output
// sequence is fixed by the C++ standard; the variates below are computed
// here rather than with <random> distributions, whose algorithms are
// implementation-defined. Uniforms take the top 53 bits; normals use the
// Marsaglia polar method; bounded integers use rejection sampling.
class Rng {
 public:
  explicit Rng(std::uint64_t seed);

  std::uint64_t next() { return engine_(); }
  double uniform();                       // [0, 1)
  double uniform(double lo, double hi);   // [lo, hi)
  double normal();                        // N(0, 1)
  double normal(double mean, double sd) { return mean + sd * normal(); }
  bool bernoulli(double p) { return uniform() < p; }
  std::uint64_t below(std::uint64_t bound);  // uniform on {0, ..., bound-1}

  // k distinct values from {0, ..., n-1} in draw order (partial Fisher-Yates).
  std::vector<std::size_t> sample_without_replacement(std::size_t n, std::size_t k);

 private:
  std::mt19937_64 engine_;
  double spare_ = 0.0;
  bool has_spare_ = false;
};

}  // namespace evpol
