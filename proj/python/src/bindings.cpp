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

// Python module evidence_policy._core.

#include <pybind11/numpy.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "evpol/centering.hpp"
#include "evpol/dataset.hpp"
#include "evpol/experiments.hpp"
#include "evpol/model_based.hpp"
#include "evpol/oracle.hpp"
#include "evpol/ratio_opt.hpp"
#include "evpol/scoring.hpp"
#include "evpol/tree_policy.hpp"

namespace py = pybind11;
using namespace evpol;

namespace {

using Array = py::array_t<double, py::array::c_style | py::array::forcecast>;

Matrix to_matrix(const Array& a) {
  if (a.ndim() == 1) {
    Matrix m(static_cast<std::size_t>(a.shape(0)), 1);
    for (py::ssize_t i = 0; i < a.shape(0); ++i) m(i, 0) = a.data()[i];
    return m;
  }
  if (a.ndim() != 2) throw std::invalid_argument("covariates must be a 1-d or 2-d array");
  Matrix m(static_cast<std::size_t>(a.shape(0)), static_cast<std::size_t>(a.shape(1)));
  std::copy(a.data(), a.data() + a.size(), m.row(0).data());
  return m;
}

std::vector<double> to_vector(const Array& a) {
  if (a.ndim() != 1) throw std::invalid_argument("expected a 1-d array");
  return {a.data(), a.data() + a.size()};
}

Array to_array(const std::vector<double>& v) {
  Array out(static_cast<py::ssize_t>(v.size()));
  std::copy(v.begin(), v.end(), out.mutable_data());
  return out;
}

Array matrix_to_array(const Matrix& m) {
  Array out({static_cast<py::ssize_t>(m.rows()), static_cast<py::ssize_t>(m.cols())});
  std::copy(m.data().begin(), m.data().end(), out.mutable_data());
  return out;
}

Propensity make_propensity(std::optional<double> p) {
  return p ? Propensity::known(*p) : Propensity::empirical();
}

CellStatistics make_cells(const std::vector<long>& ids, const Array& w, const Array& v) {
  CellStatistics s;
  s.cell_ids = ids;
  s.w = to_vector(w);
  s.v = to_vector(v);
  return s;
}

py::dict solution_dict(const RatioSolution& r) {
  py::dict d;
  d["selected"] = r.selected;
  d["objective"] = r.objective;
  d["iterations"] = r.iterations;
  d["no_positive_cell"] = r.no_positive_cell;
  return d;
}

OracleSpec make_oracle(const Array& mass, const Array& tau, const Array& sigma_sq, std::size_t n,
                       double alpha) {
  const auto m = to_vector(mass), t = to_vector(tau), s = to_vector(sigma_sq);
  if (m.size() != t.size() || m.size() != s.size()) {
    throw std::invalid_argument("mass, tau and sigma_sq differ in length");
  }
  OracleSpec spec;
  spec.holdout_size = n;
  spec.alpha = alpha;
  for (std::size_t i = 0; i < m.size(); ++i) spec.cells.push_back({m[i], t[i], s[i]});
  return spec;
}

}  // namespace

PYBIND11_MODULE(_core, m) {
  m.doc() = "Policy learning for hold-out significance";

  py::class_<TrialDataset>(m, "Dataset")
      .def(py::init([](const Array& x, const std::vector<int>& w, const Array& y) {
             return TrialDataset(to_matrix(x), w, to_vector(y));
           }),
           py::arg("x"), py::arg("w"), py::arg("y"))
      .def_property_readonly("n", &TrialDataset::n)
      .def_property_readonly("p", &TrialDataset::p)
      .def_property_readonly("x", [](const TrialDataset& d) { return matrix_to_array(d.covariates()); })
      .def_property_readonly("w", [](const TrialDataset& d) { return d.treatment(); })
      .def_property_readonly("y", [](const TrialDataset& d) { return to_array(d.outcome()); })
      .def_property_readonly("treated_fraction", &TrialDataset::treated_fraction)
      .def("__len__", &TrialDataset::n);

  m.def(
      "generate",
      [](const std::string& dgp, const std::string& params_json, std::size_t n, std::uint64_t seed) {
        return generate_synthetic(parse_dgp_kind(dgp), nlohmann::json::parse(params_json), n, seed);
      },
      py::arg("dgp"), py::arg("params_json") = "{}", py::arg("n"), py::arg("seed") = 0);

  py::class_<CenteringModel>(m, "Centering")
      .def_static("zero", &CenteringModel::zero)
      .def_static("constant", [](double v) { return CenteringModel::constant(v); }, py::arg("value"))
      .def_property_readonly("kind", [](const CenteringModel& c) { return std::string(to_string(c.kind())); })
      .def("predict", [](const CenteringModel& c, const Array& x) { return to_array(c.predict(to_matrix(x))); });

  m.def(
      "fit_centering",
      [](const TrialDataset& data, const std::string& kind, double p, std::size_t trees, int max_depth,
         std::size_t min_leaf, std::size_t features_per_split, std::uint64_t seed) {
        CenteringParams params;
        params.trees = trees;
        params.max_depth = max_depth;
        params.min_leaf = min_leaf;
        params.features_per_split = features_per_split;
        return fit_centering(data, parse_centering_kind(kind), p, params, seed);
      },
      py::arg("data"), py::arg("kind") = "regression_forest", py::arg("treat_probability") = 0.5,
      py::arg("trees") = 100, py::arg("max_depth") = 5, py::arg("min_leaf") = 5,
      py::arg("features_per_split") = 0, py::arg("seed") = 0);

  m.def(
      "pseudo_outcomes",
      [](const TrialDataset& data, const CenteringModel& c, std::optional<double> p) {
        return to_array(pseudo_outcomes(data, c, make_propensity(p)).pseudo);
      },
      py::arg("data"), py::arg("centering"), py::arg("propensity") = py::none());

  m.def(
      "t_statistic",
      [](const Array& pseudo, const Array& mask) {
        const auto r = try_t_statistic(to_vector(pseudo), to_vector(mask));
        if (!r) throw std::domain_error("masked pseudo-outcomes have zero spread");
        py::dict d;
        d["t"] = r->t_statistic;
        d["p_value"] = r->p_value;
        d["estimate"] = r->estimate;
        d["std_error"] = r->std_error;
        d["n_effective"] = r->n_effective;
        return d;
      },
      py::arg("pseudo"), py::arg("mask"));

  m.def(
      "holdout_test",
      [](const Array& assignment, const CenteringModel& c, const TrialDataset& holdout, double alpha,
         std::optional<double> p) {
        const auto r = holdout_test(to_vector(assignment), c, holdout, alpha, make_propensity(p));
        py::dict d;
        d["t"] = r.test.t_statistic;
        d["p_value"] = r.test.p_value;
        d["passed"] = r.passed;
        d["null_policy"] = r.null_policy;
        d["degenerate"] = r.degenerate;
        d["treated_fraction"] = r.treated_fraction;
        return d;
      },
      py::arg("assignment"), py::arg("centering"), py::arg("holdout"), py::arg("alpha") = 0.05,
      py::arg("propensity") = py::none());

  m.def(
      "bisection_solve",
      [](const std::vector<long>& ids, const Array& w, const Array& v, double eps) {
        return solution_dict(bisection_solve(make_cells(ids, w, v), eps));
      },
      py::arg("cell_ids"), py::arg("w"), py::arg("v"), py::arg("epsilon") = 1e-3);
  m.def(
      "ratio_prefix",
      [](const std::vector<long>& ids, const Array& w, const Array& v) {
        return solution_dict(ratio_prefix_fast_path(make_cells(ids, w, v)));
      },
      py::arg("cell_ids"), py::arg("w"), py::arg("v"));
  m.def(
      "ratio_brute_force",
      [](const std::vector<long>& ids, const Array& w, const Array& v) {
        return solution_dict(ratio_brute_force(make_cells(ids, w, v)));
      },
      py::arg("cell_ids"), py::arg("w"), py::arg("v"));

  py::class_<PolicyTree>(m, "PolicyTree")
      .def("assign", [](const PolicyTree& t, const Array& x) { return to_array(t.assign(to_matrix(x))); })
      .def_property_readonly("depth", &PolicyTree::depth)
      .def_property_readonly("leaves", &PolicyTree::leaves)
      .def_readonly("final_t_statistic", &PolicyTree::final_t_statistic)
      .def_readonly("score_history", &PolicyTree::score_history)
      .def("to_json", &PolicyTree::to_json)
      .def_static("from_json", &PolicyTree::from_json);

  m.def(
      "fit_evidence_tree",
      [](const Array& pseudo, const Array& x, double min_score_increase, int max_depth,
         std::size_t min_leaf, std::size_t thresholds_per_feature, std::uint64_t seed) {
        PseudoOutcomeTable table;
        table.pseudo = to_vector(pseudo);
        table.pseudo_sq.resize(table.pseudo.size());
        for (std::size_t i = 0; i < table.pseudo.size(); ++i) table.pseudo_sq[i] = table.pseudo[i] * table.pseudo[i];
        EvidenceTreeParams params;
        params.min_score_increase = min_score_increase;
        params.max_depth = max_depth;
        params.min_leaf = min_leaf;
        params.thresholds_per_feature = thresholds_per_feature;
        params.seed = seed;
        return fit_evidence_tree(table, to_matrix(x), params);
      },
      py::arg("pseudo"), py::arg("x"), py::arg("min_score_increase") = 1e-6, py::arg("max_depth") = 4,
      py::arg("min_leaf") = 20, py::arg("thresholds_per_feature") = 10, py::arg("seed") = 0);

  py::class_<ModelBasedPolicy>(m, "ModelBasedPolicy")
      .def("assign", [](const ModelBasedPolicy& p, const Array& x) { return to_array(p.assign(to_matrix(x))); })
      .def_readonly("treated_cells", &ModelBasedPolicy::treated_cells)
      .def_readonly("null_policy", &ModelBasedPolicy::null_policy)
      .def_property_readonly("objective", [](const ModelBasedPolicy& p) { return p.solution.objective; })
      .def("to_json", &ModelBasedPolicy::to_json);

  m.def(
      "fit_model_based_policy",
      [](const TrialDataset& data, const CenteringModel& c, int sparsity, double eps, std::optional<double> p) {
        return fit_model_based_policy(data, c, {sparsity, eps}, make_propensity(p));
      },
      py::arg("data"), py::arg("centering"), py::arg("sparsity") = 2, py::arg("epsilon") = 1e-3,
      py::arg("propensity") = py::none());

  m.def(
      "oracle_t",
      [](const Array& mass, const Array& tau, const Array& sigma_sq, std::size_t n, const Array& a) {
        return oracle_t(make_oracle(mass, tau, sigma_sq, n, 0.05), to_vector(a)).t;
      },
      py::arg("mass"), py::arg("tau"), py::arg("sigma_sq"), py::arg("n"), py::arg("assignment"));
  m.def(
      "oracle_power",
      [](const Array& mass, const Array& tau, const Array& sigma_sq, std::size_t n, const Array& a,
         double alpha) { return oracle_power(make_oracle(mass, tau, sigma_sq, n, alpha), to_vector(a)); },
      py::arg("mass"), py::arg("tau"), py::arg("sigma_sq"), py::arg("n"), py::arg("assignment"),
      py::arg("alpha") = 0.05);
  m.def(
      "relaxed_optimum",
      [](const Array& mass, const Array& tau, const Array& sigma_sq, std::size_t n, double alpha) {
        const auto r = relaxed_optimum(make_oracle(mass, tau, sigma_sq, n, alpha));
        py::dict d;
        d["weights"] = to_array(r.weights);
        d["power"] = r.power;
        d["zero_policy"] = r.zero_policy;
        return d;
      },
      py::arg("mass"), py::arg("tau"), py::arg("sigma_sq"), py::arg("n"), py::arg("alpha") = 0.05);

  // JSON in, JSON out; the Python package wraps these with dicts.
  m.def(
      "run_experiment_json",
      [](const std::string& config_json) {
        const auto config = parse_experiment_config(nlohmann::json::parse(config_json));
        py::gil_scoped_release release;
        return report_to_json(run_experiment(config));
      },
      py::arg("config_json"));
  m.def(
      "run_prop2_json",
      [](const std::string& config_json) {
        const auto config = parse_prop2_config(nlohmann::json::parse(config_json));
        py::gil_scoped_release release;
        return run_prop2_comparison(config).to_json();
      },
      py::arg("config_json"));

  py::register_exception_translator([](std::exception_ptr p) {
    try {
      if (p) std::rethrow_exception(p);
    } catch (const nlohmann::json::exception& e) {
      PyErr_SetString(PyExc_ValueError, e.what());
    }
  });
}
