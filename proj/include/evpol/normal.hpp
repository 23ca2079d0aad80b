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

namespace evpol {

// Standard normal CDF via erfc; absolute error below 1e-15.
double normal_cdf(double x);

// Upper tail 1 - Phi(x), accurate far into the tail.
double normal_upper_tail(double x);

// Inverse CDF: Acklam's rational approximation refined by one Halley step.
// Requires 0 < prob < 1.
double normal_quantile(double prob);

// One-sided critical value z_{1-alpha}.
inline double critical_value(double alpha) { return normal_quantile(1.0 - alpha); }

}  // namespace evpol
