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

#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace evpol {

std::string trim(std::string_view s);

// Whole-string decimal or scientific parse; nullopt on trailing garbage.
std::optional<double> parse_double(std::string_view s);

// Shortest-roundtrip-safe representation (%.17g).
std::string format_double(double v);

// Median with the midpoint convention for even sizes. Empty input throws.
double median(std::vector<double> values);

// Write to a sibling temporary file, then rename over `path`.
void write_file_atomic(const std::filesystem::path& path, const std::string& contents);

double mean(std::span<const double> values);

}  // namespace evpol
