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

import json
import os
import subprocess

import numpy as np
import pytest

import evidence_policy as ep

CLI = os.environ.get("EVPOL_CLI", "evpol")


def small_trial(n=400, seed=3):
    rng = np.random.default_rng(seed)
    x = rng.uniform(0, 3, size=(n, 1))
    w = (rng.uniform(size=n) < 0.5).astype(int)
    tau = np.where(x[:, 0] > 2, 2.0, 0.0)
    y = x[:, 0] + w * tau + rng.normal(size=n)
    return ep.Dataset(x, w.tolist(), y)


def test_dataset_roundtrip():
    d = small_trial()
    assert len(d) == 400 and d.p == 1
    assert d.x.shape == (400, 1)
    assert 0.3 < d.treated_fraction < 0.7


def test_pseudo_outcomes_zero_centering():
    d = ep.Dataset(np.array([[0.0], [1.0]]), [1, 0], np.array([2.0, 3.0]))
    pseudo = ep.pseudo_outcomes(d, ep.Centering.zero(), 0.5)
    np.testing.assert_allclose(pseudo, [4.0, -6.0])


def test_t_statistic_hand_value():
    r = ep.t_statistic(np.array([2.0, 0.0, 2.0, 0.0]), np.ones(4))
    assert r["t"] == pytest.approx(1.7320508, rel=1e-6)
    with pytest.raises(ValueError):
        ep.t_statistic(np.ones(3), np.ones(3))


def test_ratio_solvers_agree():
    ids = [0, 1, 2, 3]
    w = np.array([1.0, 0.5, -0.2, 0.1])
    v = np.array([1.0, 2.0, 1.0, 0.05])
    brute = ep.ratio_brute_force(ids, w, v)
    assert ep.ratio_prefix(ids, w, v)["objective"] == pytest.approx(brute["objective"], abs=1e-12)
    assert ep.bisection_solve(ids, w, v, 0.01)["objective"] >= brute["objective"] / 1.01


def test_evidence_tree_finds_right_region():
    d = small_trial(n=2000)
    c = ep.fit_centering(d, "regression_forest", 0.5, trees=30, seed=1)
    pseudo = ep.pseudo_outcomes(d, c, 0.5)
    tree = ep.fit_evidence_tree(pseudo, d.x)
    a = tree.assign(np.array([[0.5], [2.5]]))
    assert a[1] == 1.0 and a[0] == 0.0
    assert ep.PolicyTree.from_json(tree.to_json()).to_json() == tree.to_json()


def test_model_based_and_holdout():
    d = ep.generate_data("cell", {"cell_effects": [-1.0, 3.0], "effect_scale_n": 1}, n=2000, seed=4)
    pol = ep.fit_model_based_policy(d, ep.Centering.zero(), sparsity=1, propensity=0.5)
    assert not pol.null_policy
    held = ep.generate_data("cell", {"cell_effects": [-1.0, 3.0], "effect_scale_n": 1}, n=2000, seed=5)
    r = ep.holdout_test(pol.assign(held.x), ep.Centering.zero(), held, 0.05, 0.5)
    assert r["passed"] and r["p_value"] < 0.05


def test_oracle_relaxed_weights():
    mass = np.array([0.5, 0.5])
    tau = np.array([0.1, -0.1])
    sig = np.array([1.0, 1.0])
    r = ep.relaxed_optimum(mass, tau, sig, 1000)
    assert r["weights"][1] == 0.0
    t = ep.oracle_t(mass, tau, sig, 1000, r["weights"])
    assert t >= ep.oracle_t(mass, tau, sig, 1000, np.array([1.0, 0.3]))


def test_run_experiment_dict():
    report = ep.run_experiment(
        {
            "dgp": {"kind": "three-region"},
            "methods": ["all", "evidence_res"],
            "n_train": 300,
            "n_holdout": 300,
            "replications": 2,
            "seed": 9,
        }
    )
    assert [s["method"] for s in report["summary"]] == ["all", "evidence_res"]
    assert len(report["rows"]) == 4


def test_run_experiment_rejects_unknown_key():
    with pytest.raises(ValueError):
        ep.run_experiment({"no_such_key": 1})


def test_prop2_small():
    r = ep.run_prop2({"replications": 20, "seed": 2})
    assert r["rejection_ratio"] >= r["rejection_sign_rule"]


def test_cli_exit_codes(tmp_path):
    cfg = tmp_path / "c.json"
    config = {"dgp": {"kind": "three-region"}, "methods": ["all"], "n_train": 200, "n_holdout": 200}
    cfg.write_text(json.dumps(config))
    out = tmp_path / "r.csv"
    ok = subprocess.run([CLI, "run", "--config", str(cfg), "--out", str(out)], capture_output=True)
    assert ok.returncode == 0
    assert out.read_text().startswith("method,replication,p_value")
    cfg.write_text(json.dumps({"replications": 0}))
    bad = subprocess.run([CLI, "run", "--config", str(cfg), "--out", str(out)], capture_output=True)
    assert bad.returncode == 2
    assert b"config error" in bad.stderr
