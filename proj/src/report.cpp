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

#include <cmath>
#include <limits>
#include <sstream>
#include <stdexcept>
#include <string>

#include "evpol/experiments.hpp"
#include "evpol/util.hpp"

namespace evpol {

namespace {

constexpr const char* kRowHeader =
    "method,replication,p_value,t_stat,estimate,treated_fraction,null_policy,degenerate,failed,"
    "treated_covariate_mean,error";
constexpr const char* kSummaryHeader =
    "method,replications,failed,null_policies,median_p,mean_neg_log10_p,discovery_rate,"
    "rejection_rate";
constexpr const char* kSummaryMarker = "# summary";

std::string csv_field(const std::string& s) {
  std::string clean = s;
  for (auto& ch : clean) {
    if (ch == '\n' || ch == '\r') ch = ' ';
  }
  if (clean.find_first_of(",\"") == std::string::npos) return clean;
  std::string out = "\"";
  for (char ch : clean) {
    if (ch == '"') out += '"';
    out += ch;
  }
  return out + "\"";
}

std::vector<std::string> split_csv_line(const std::string& line) {
  std::vector<std::string> out;
  std::string cur;
  bool quoted = false;
  for (std::size_t i = 0; i < line.size(); ++i) {
    const char ch = line[i];
    if (quoted) {
      if (ch == '"' && i + 1 < line.size() && line[i + 1] == '"') {
        cur += '"';
        ++i;
      } else if (ch == '"') {
        quoted = false;
      } else {
        cur += ch;
      }
    } else if (ch == '"') {
      quoted = true;
    } else if (ch == ',') {
      out.push_back(cur);
      cur.clear();
    } else {
      cur += ch;
    }
  }
  out.push_back(cur);
  return out;
}

double field_double(const std::string& s, std::size_t line) {
  const auto v = parse_double(s);
  if (!v) throw std::invalid_argument("report line " + std::to_string(line) + ": bad number '" + s + "'");
  return *v;
}

std::size_t field_count(const std::string& s, std::size_t line) {
  const double v = field_double(s, line);
  if (v < 0.0 || v != std::floor(v)) {
    throw std::invalid_argument("report line " + std::to_string(line) + ": bad count '" + s + "'");
  }
  return static_cast<std::size_t>(v);
}

bool field_bool(const std::string& s, std::size_t line) {
  if (s == "1") return true;
  if (s == "0") return false;
  throw std::invalid_argument("report line " + std::to_string(line) + ": bad flag '" + s + "'");
}

nlohmann::json number_or_null(double v) {
  return std::isfinite(v) ? nlohmann::json(v) : nlohmann::json(nullptr);
}

double number_from(const nlohmann::json& j) {
  return j.is_null() ? std::numeric_limits<double>::quiet_NaN() : j.get<double>();
}

}  // namespace

std::string report_to_csv(const ExperimentReport& report) {
  std::ostringstream out;
  out << kRowHeader << '\n';
  for (const auto& r : report.rows) {
    out << csv_field(r.method) << ',' << r.replication << ',' << format_double(r.p_value) << ','
        << format_double(r.t_stat) << ',' << format_double(r.estimate) << ','
        << format_double(r.treated_fraction) << ',' << (r.null_policy ? 1 : 0) << ','
        << (r.degenerate ? 1 : 0) << ',' << (r.failed ? 1 : 0) << ','
        << format_double(r.treated_covariate_mean) << ',' << csv_field(r.error) << '\n';
  }
  if (report.rows.empty()) return out.str();
  out << kSummaryMarker << " alpha=" << format_double(report.alpha)
      << " discovery_threshold=" << format_double(report.discovery_threshold) << '\n';
  out << kSummaryHeader << '\n';
  for (const auto& s : report.summary) {
    out << csv_field(s.method) << ',' << s.replications << ',' << s.failed << ',' << s.null_policies
        << ',' << format_double(s.median_p) << ',' << format_double(s.mean_neg_log10_p) << ','
        << format_double(s.discovery_rate) << ',' << format_double(s.rejection_rate) << '\n';
  }
  return out.str();
}

ExperimentReport parse_report_csv(const std::string& text) {
  std::istringstream in(text);
  std::string line;
  std::size_t lineno = 0;
  ExperimentReport report;
  if (!std::getline(in, line) || trim(line) != kRowHeader) {
    throw std::invalid_argument("report csv: missing row header");
  }
  ++lineno;
  bool in_summary = false;
  while (std::getline(in, line)) {
    ++lineno;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    if (line.rfind(kSummaryMarker, 0) == 0) {
      in_summary = true;
      std::istringstream meta(line.substr(std::string(kSummaryMarker).size()));
      std::string kv;
      while (meta >> kv) {
        const auto eq = kv.find('=');
        if (eq == std::string::npos) continue;
        const auto key = kv.substr(0, eq);
        const double v = field_double(kv.substr(eq + 1), lineno);
        if (key == "alpha") report.alpha = v;
        if (key == "discovery_threshold") report.discovery_threshold = v;
      }
      if (!std::getline(in, line) || trim(line) != kSummaryHeader) {
        throw std::invalid_argument("report csv: missing summary header");
      }
      ++lineno;
      continue;
    }
    const auto f = split_csv_line(line);
    if (!in_summary) {
      if (f.size() != 11) throw std::invalid_argument("report line " + std::to_string(lineno) + ": expected 11 fields");
      ReplicationRow r;
      r.method = f[0];
      r.replication = field_count(f[1], lineno);
      r.p_value = field_double(f[2], lineno);
      r.t_stat = field_double(f[3], lineno);
      r.estimate = field_double(f[4], lineno);
      r.treated_fraction = field_double(f[5], lineno);
      r.null_policy = field_bool(f[6], lineno);
      r.degenerate = field_bool(f[7], lineno);
      r.failed = field_bool(f[8], lineno);
      r.treated_covariate_mean = field_double(f[9], lineno);
      r.error = f[10];
      report.rows.push_back(std::move(r));
    } else {
      if (f.size() != 8) throw std::invalid_argument("report line " + std::to_string(lineno) + ": expected 8 fields");
      MethodSummary s;
      s.method = f[0];
      s.replications = field_count(f[1], lineno);
      s.failed = field_count(f[2], lineno);
      s.null_policies = field_count(f[3], lineno);
      s.median_p = field_double(f[4], lineno);
      s.mean_neg_log10_p = field_double(f[5], lineno);
      s.discovery_rate = field_double(f[6], lineno);
      s.rejection_rate = field_double(f[7], lineno);
      report.summary.push_back(std::move(s));
    }
  }
  return report;
}

std::string report_to_json(const ExperimentReport& report) {
  nlohmann::json j;
  j["alpha"] = report.alpha;
  j["discovery_threshold"] = report.discovery_threshold;
  auto rows = nlohmann::json::array();
  for (const auto& r : report.rows) {
    rows.push_back({{"method", r.method},
                    {"replication", r.replication},
                    {"p_value", number_or_null(r.p_value)},
                    {"t_stat", number_or_null(r.t_stat)},
                    {"estimate", number_or_null(r.estimate)},
                    {"treated_fraction", number_or_null(r.treated_fraction)},
                    {"null_policy", r.null_policy},
                    {"degenerate", r.degenerate},
                    {"failed", r.failed},
                    {"treated_covariate_mean", number_or_null(r.treated_covariate_mean)},
                    {"error", r.error}});
  }
  j["rows"] = rows;
  auto summary = nlohmann::json::array();
  for (const auto& s : report.summary) {
    summary.push_back({{"method", s.method},
                       {"replications", s.replications},
                       {"failed", s.failed},
                       {"null_policies", s.null_policies},
                       {"median_p", s.median_p},
                       {"mean_neg_log10_p", s.mean_neg_log10_p},
                       {"discovery_rate", s.discovery_rate},
                       {"rejection_rate", s.rejection_rate}});
  }
  j["summary"] = summary;
  return j.dump(2);
}

ExperimentReport parse_report_json(const std::string& text) {
  try {
    const auto j = nlohmann::json::parse(text);
    ExperimentReport report;
    report.alpha = j.at("alpha").get<double>();
    report.discovery_threshold = j.at("discovery_threshold").get<double>();
    for (const auto& e : j.at("rows")) {
      ReplicationRow r;
      r.method = e.at("method").get<std::string>();
      r.replication = e.at("replication").get<std::size_t>();
      r.p_value = number_from(e.at("p_value"));
      r.t_stat = number_from(e.at("t_stat"));
      r.estimate = number_from(e.at("estimate"));
      r.treated_fraction = number_from(e.at("treated_fraction"));
      r.null_policy = e.at("null_policy").get<bool>();
      r.degenerate = e.at("degenerate").get<bool>();
      r.failed = e.at("failed").get<bool>();
      r.treated_covariate_mean = number_from(e.at("treated_covariate_mean"));
      r.error = e.at("error").get<std::string>();
      report.rows.push_back(std::move(r));
    }
    for (const auto& e : j.at("summary")) {
      MethodSummary s;
      s.method = e.at("method").get<std::string>();
      s.replications = e.at("replications").get<std::size_t>();
      s.failed = e.at("failed").get<std::size_t>();
      s.null_policies = e.at("null_policies").get<std::size_t>();
      s.median_p = e.at("median_p").get<double>();
      s.mean_neg_log10_p = e.at("mean_neg_log10_p").get<double>();
      s.discovery_rate = e.at("discovery_rate").get<double>();
      s.rejection_rate = e.at("rejection_rate").get<double>();
      report.summary.push_back(std::move(s));
    }
    return report;
  } catch (const nlohmann::json::exception& e) {
    throw std::invalid_argument(std::string("report json: ") + e.what());
  }
}

ReportFormat parse_report_format(std::string_view name) {
  if (name == "csv") return ReportFormat::csv;
  if (name == "json") return ReportFormat::json;
  throw std::invalid_argument("unknown report format '" + std::string(name) + "'");
}

void emit_report(const ExperimentReport& report, ReportFormat format,
                 const std::filesystem::path& path) {
  write_file_atomic(path, format == ReportFormat::csv ? report_to_csv(report) : report_to_json(report));
}

}  // namespace evpol
