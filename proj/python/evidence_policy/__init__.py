# Copyright 2026 The evidence-policy Authors.
# Licensed under the Apache License, Version 2.0 (the "License");
# you may not use this file except in compliance with the License.
# You may obtain a copy of the License at
#
#     https://www.apache.org/licenses/LICENSE-2.0
#
# Unless required by applicable law or agreed to in writing, software
# distributed under the License is distributed on an "AS IS" BASIS,
# WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
# See the License for the specific language governing permissions and
# limitations under the License.

"""Policy learning for hold-out significance.

Thin wrappers over the compiled ``_core`` module. Experiment helpers take and
return plain dicts.
"""

import json

from ._core import (
    Centering,
    Dataset,
    ModelBasedPolicy,
    PolicyTree,
    bisection_solve,
    fit_centering,
    fit_evidence_tree,
    fit_model_based_policy,
    generate,
    holdout_test,
    oracle_power,
    oracle_t,
    pseudo_outcomes,
    ratio_brute_force,
    ratio_prefix,
    relaxed_optimum,
    t_statistic,
)
from . import _core

__version__ = "0.1.0"


def generate_data(dgp, params=None, n=1000, seed=0):
    return generate(dgp, json.dumps(params or {}), n, seed)


def run_experiment(config):
    """Run a replication experiment from a config dict; returns the report dict."""
    return json.loads(_core.run_experiment_json(json.dumps(config)))


def run_prop2(config=None):
    return json.loads(_core.run_prop2_json(json.dumps(config or {})))


__all__ = [
    "Centering",
    "Dataset",
    "ModelBasedPolicy",
    "PolicyTree",
    "bisection_solve",
    "fit_centering",
    "fit_evidence_tree",
    "fit_model_based_policy",
    "generate_data",
    "holdout_test",
    "oracle_power",
    "oracle_t",
    "pseudo_outcomes",
    "ratio_brute_force",
    "ratio_prefix",
    "relaxed_optimum",
    "run_experiment",
    "run_prop2",
    "t_statistic",
]
