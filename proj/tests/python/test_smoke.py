# Copyright 2026 The fairweight Authors.
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

import numpy as np
import pytest

import fairweight as fw

CELLS = [[170, 30], [170, 30]]


def dense_ridge(a1, c1, a2, c2, lam):
    c = np.vstack([c1, c2])
    return np.linalg.solve(c.T @ c + lam * np.eye(c.shape[1]), -c.T @ np.array([a1, a2]))


def test_dataset_round_trip(tmp_path):
    x = np.arange(12, dtype=float).reshape(4, 3)
    d = fw.Dataset(x, [0, 1, 1, 0], [1, 1, 0, 0])
    assert (d.n, d.dim, d.has_groups) == (4, 3, True)
    np.testing.assert_array_equal(d.features, x)
    path = str(tmp_path / "d.csv")
    d.write_csv(path)
    back = fw.Dataset.load_csv(path)
    np.testing.assert_array_equal(back.features, x)
    assert back.labels == [0, 1, 1, 0]
    assert back.groups == [1, 1, 0, 0]
    assert fw.Dataset(x, [0, 1, 1, 0]).groups is None


def test_generate_scenario_counts():
    train, val, test = fw.generate_scenario("group_size_discrepancy", CELLS, seed=5)
    assert train.n == 400
    assert val.n == 80 and test.n == 80
    again = fw.generate_scenario("group_size_discrepancy", CELLS, seed=5)[0]
    np.testing.assert_array_equal(train.features, again.features)


def test_solve_epsilon_matches_dense_ridge():
    rng = np.random.default_rng(0)
    c1, c2 = rng.normal(size=50), rng.normal(size=50)
    eps = fw.solve_epsilon(0.3, c1, -0.2, c2, 0.1)
    np.testing.assert_allclose(eps, dense_ridge(0.3, c1, -0.2, c2, 0.1), rtol=1e-9, atol=1e-12)
    assert fw.epsilon_objective(eps, 0.3, c1, -0.2, c2, 0.1) <= fw.epsilon_objective(
        np.zeros(50), 0.3, c1, -0.2, c2, 0.1
    )


def test_apply_weights_clamps():
    w = fw.apply_weights(np.array([-1.0, 0.0, 0.25, 0.0]))
    np.testing.assert_allclose(w, [0.0, 0.25, 0.5, 0.25])
    np.testing.assert_allclose(fw.apply_weights(np.array([-1.0, 0.0, 0.25, 0.0]), "clamp_renormalize").sum(), 1.0)


def test_fairif_train_report():
    train, val, test = fw.generate_scenario("group_size_discrepancy", CELLS, seed=2)
    r = fw.fairif_train(train, val, test)
    report = r["report"]
    assert report["schema"] == 1
    assert set(report["erm"]) == {"train", "val", "test"}
    assert r["eps"].shape == (train.n,)
    np.testing.assert_allclose(r["weights"], np.maximum(0.0, 1.0 / train.n + r["eps"]))
    np.testing.assert_allclose(r["eps"], dense_ridge(r["a_tpr"], r["c_tpr"], r["a_tnr"], r["c_tnr"], 0.1), rtol=1e-8, atol=1e-14)
    again = fw.fairif_train(train, val, test)
    np.testing.assert_array_equal(r["fair_params"], again["fair_params"])
    erm = fw.erm_train(train, val, test)
    np.testing.assert_array_equal(erm["params"], r["erm_params"])


def test_fairness_report_and_proposition():
    rep = fw.fairness_report([1, 0, 1, 1], [1, 0, 0, 1], [0, 0, 1, 1])
    assert rep["accuracy"] == pytest.approx(0.75)
    assert rep["ad"] == pytest.approx(0.5)
    p = fw.proposition_check("group_size_discrepancy", 0.3, 0.3, 0.8, 0.8, 0.6, 0.6)
    assert p["ad"] == 0.0 and p["aod"] == 0.0 and p["eod"] == 0.0
    assert p["bound_holds"]


def test_errors_raise():
    x = np.zeros((2, 2))
    with pytest.raises(fw.FairweightError, match="lambda"):
        fw.solve_epsilon(0.1, np.ones(2), 0.1, np.ones(2), 0.0)
    with pytest.raises(fw.FairweightError):
        fw.Dataset(x, [0, 1, 1])


def test_run_cli_exit_codes(tmp_path):
    code, out, err = fw.run_cli(["--help"])
    assert code == 0 and "generate" in out
    code, _, err = fw.run_cli(["train", str(tmp_path / "missing.cfg")])
    assert code == 2 and "error" in err
