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

// Command-line front end: run, gen-data, prop2.

#include <exception>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>
#include <stdexcept>
#include <string>

#include <CLI11.hpp>
#include <json.hpp>

#include "evpol/dataset.hpp"
#include "evpol/experiments.hpp"
#include "evpol/util.hpp"

namespace {

constexpr int kConfigError = 2;
constexpr int kRuntimeError = 3;

// Accepts inline JSON or a path to a JSON file.
nlohmann::json read_params(const std::string& arg) {
  if (arg.empty()) return nlohmann::json::object();
  const auto first = arg.find_first_not_of(" \t\n");
  if (first != std::string::npos && (arg[first] == '{' || arg[first] == '[')) {
    try {
      return nlohmann::json::parse(arg);
    } catch (const nlohmann::json::exception& e) {
      throw std::invalid_argument(std::string("--params: ") + e.what());
    }
  }
  std::ifstream in(arg);
  if (!in) throw std::invalid_argument("--params: cannot open '" + arg + "'");
  std::stringstream buf;
  buf << in.rdbuf();
  try {
    return nlohmann::json::parse(buf.str());
  } catch (const nlohmann::json::exception& e) {
    throw std::invalid_argument("--params '" + arg + "': " + e.what());
  }
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Policy learning for hold-out significance"};
  app.require_subcommand(1);

  std::string config_path, out_path, format = "csv";
  std::size_t threads = 0;
  auto* run = app.add_subcommand("run", "Run a replication experiment");
  run->add_option("--config", config_path, "experiment config (JSON)")->required();
  run->add_option("--out", out_path, "report path")->required();
  run->add_option("--format", format, "csv or json")->check(CLI::IsMember({"csv", "json"}));
  run->add_option("--threads", threads, "worker threads (overrides config)");

  std::string dgp, params_arg, data_out;
  std::size_t n = 0;
  std::uint64_t seed = 0;
  auto* gen = app.add_subcommand("gen-data", "Write a synthetic trial as CSV");
  gen->add_option("--dgp", dgp, "three-region, group or cell")->required();
  gen->add_option("--params", params_arg, "DGP parameters (inline JSON or file)");
  gen->add_option("--n", n, "rows")->required()->check(CLI::PositiveNumber);
  gen->add_option("--seed", seed, "seed");
  gen->add_option("--out", data_out, "output CSV")->required();

  std::string prop2_params, prop2_out;
  auto* prop2 = app.add_subcommand("prop2", "Sign rule versus ratio learner on a cell config");
  prop2->add_option("--params", prop2_params, "comparison parameters (inline JSON or file)");
  prop2->add_option("--out", prop2_out, "JSON output path")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : kConfigError;
  }

  try {
    if (*run) {
      auto config = evpol::load_experiment_config(config_path);
      if (threads > 0) config.threads = threads;
      config.validate();
      const auto report = evpol::run_experiment(config);
      evpol::emit_report(report, evpol::parse_report_format(format), out_path);
    } else if (*gen) {
      const auto data = evpol::generate_synthetic(evpol::parse_dgp_kind(dgp), read_params(params_arg), n, seed);
      evpol::write_csv(data, data_out);
    } else if (*prop2) {
      const auto config = evpol::parse_prop2_config(read_params(prop2_params));
      const auto report = evpol::run_prop2_comparison(config);
      evpol::write_file_atomic(prop2_out, report.to_json());
    }
  } catch (const std::invalid_argument& e) {
    std::cerr << "config error: " << e.what() << '\n';
    return kConfigError;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kRuntimeError;
  }
  return 0;
}
