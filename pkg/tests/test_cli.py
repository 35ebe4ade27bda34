import json
from pathlib import Path

import pytest

from stefan_lab import cli
from stefan_lab import scenarios as sc
from stefan_lab import verify as vf

DATA = Path(__file__).resolve().parents[1] / "demos" / "data"


@pytest.fixture
def files(tmp_path):
    model = tmp_path / "m.json"
    model.write_text(json.dumps(sc.regime_scenarios()[0].model.to_dict()))
    geom = tmp_path / "g.json"
    geom.write_text(json.dumps({"n": 3, "R_Omega": 1.0}))
    return model, geom


def test_material_validate_ok(files, tmp_path):
    out = tmp_path / "v.json"
    assert cli.main(["material", "validate", str(files[0]), "--out", str(out)]) == 0
    data = json.loads(out.read_text())
    assert data["ok"] is True
    manifest = json.loads(Path(str(out) + ".manifest.json").read_text())
    assert set(manifest) == {"command", "inputs", "parameters", "version", "wall_time_seconds"}
    assert str(files[0]) in manifest["inputs"]


def test_missing_file_is_usage_error(tmp_path, capsys):
    assert cli.main(["material", "validate", str(tmp_path / "none.json")]) == 4
    assert "no such file" in capsys.readouterr().err


def test_unknown_flag_is_usage_error(files):
    assert cli.main(["material", "validate", str(files[0]), "--bogus"]) == 4


def test_malformed_model_names_path(tmp_path, capsys):
    bad = tmp_path / "bad.json"
    data = sc.contrast_model().to_dict()
    del data["surface"]["sigma"]
    bad.write_text(json.dumps(data))
    assert cli.main(["material", "validate", str(bad)]) == 2
    assert "$.surface.sigma" in capsys.readouterr().err


def test_invalid_json_is_schema_error(tmp_path):
    bad = tmp_path / "bad.json"
    bad.write_text("{not json")
    assert cli.main(["material", "validate", str(bad)]) == 2


def test_invalid_model_exit_code(tmp_path):
    data = sc.contrast_model().to_dict()
    data["surface"]["sigma"] = {"family": "constant", "params": [1.0]}
    path = tmp_path / "m.json"
    path.write_text(json.dumps(data))
    assert cli.main(["material", "validate", str(path)]) == 2


def test_equilibria_commands(files, tmp_path, capsys):
    model, geom = files
    assert cli.main(["equilibria", "point", "--model", str(model), "--domain", str(geom), "--u", "0.5"]) == 0
    point = json.loads(capsys.readouterr().out)
    assert point["predicted_positive_eigenvalues"] == 1
    out = tmp_path / "curve.csv"
    assert cli.main(["equilibria", "bifurcation", "--model", str(model), "--domain", str(geom), "--points", "32", "--out", str(out)]) == 0
    assert out.read_text().splitlines()[0] == "u,R,E_e,E_e_prime,zeta,eta,l_star,feasible,predicted_unstable"
    E0 = point["E_e"]
    assert cli.main(["equilibria", "solve", "--model", str(model), "--domain", str(geom), "--E0", repr(E0)]) == 0
    roots = json.loads(capsys.readouterr().out)["equilibria"]
    assert any(abs(r["u_star"] - 0.5) < 1e-10 for r in roots)


def test_spectrum_output_and_determinism(files, tmp_path):
    model, geom = files
    outs = []
    for k, threads in enumerate(("1", "3")):
        out = tmp_path / f"s{k}.json"
        argv = ["--threads", threads, "spectrum", "--model", str(model), "--geom", str(geom), "--u-star", "0.5", "--l-max", "3", "--out", str(out)]
        assert cli.main(argv) == 0
        outs.append(out.read_bytes())
    assert outs[0] == outs[1]
    data = json.loads(outs[0])
    assert {"kernel_dim", "positive", "predicted", "match", "limits"} <= set(data)
    assert data["match"] is True and data["kernel_dim"] == 4
    assert set(data["limits"]) == {"a0_check", "kappa_inv_check"}


def test_spectrum_bad_lambda_max(files):
    model, geom = files
    argv = ["spectrum", "--model", str(model), "--geom", str(geom), "--u-star", "0.5", "--lambda-max", "big"]
    assert cli.main(argv) == 4


def test_simulate_writes_trajectory(files, tmp_path):
    model, geom = files
    cfg = tmp_path / "sim.json"
    cfg.write_text(json.dumps({"u_star": 0.5, "cells": 30, "dt": 1e-3, "t_end": 0.01, "perturbation": {"eps_R": 1e-3}}))
    out1, out2 = tmp_path / "a.csv", tmp_path / "b.csv"
    for out in (out1, out2):
        assert cli.main(["simulate", "--model", str(model), "--geom", str(geom), "--config", str(cfg), "--out", str(out)]) == 0
    assert out1.read_bytes() == out2.read_bytes()
    lines = out1.read_text().splitlines()
    assert lines[0] == "t,R,u_Gamma,V,E,Phi,gt_residual,mcflow_residual"
    assert len(lines) == 12


def test_simulate_geometry_abort(files, tmp_path):
    model, _ = files
    geom = tmp_path / "small.json"
    geom.write_text(json.dumps({"n": 3, "R_Omega": 0.4}))
    cfg = tmp_path / "sim.json"
    cfg.write_text(json.dumps({"u_star": 0.5, "t_end": 0.01}))
    assert cli.main(["simulate", "--model", str(model), "--geom", str(geom), "--config", str(cfg)]) == 3


def test_simulate_requires_inputs():
    assert cli.main(["simulate", "--model", "x.json"]) == 4


def test_stability_sweep(tmp_path):
    cases = {
        "cases": [
            {"name": "stable", "model": sc.regime_scenarios()[1].model.to_dict(), "u_star": 0.5, "R_Omega": 1.0, "config": {"cells": 40, "dt": 2e-3}}
        ]
    }
    path = tmp_path / "cases.json"
    path.write_text(json.dumps(cases))
    out = tmp_path / "v.json"
    assert cli.main(["simulate", "stability-sweep", "--cases", str(path), "--out", str(out)]) == 0
    v = json.loads(out.read_text())["cases"][0]
    assert {"predicted_stable", "observed_stable", "fitted_rate", "spectral_rate"} <= set(v)
    assert v["predicted_stable"] and v["observed_stable"]


def test_hanzawa_check(tmp_path):
    out = tmp_path / "h.json"
    assert cli.main(["hanzawa-check", "--n", "3", "--R", "1.0", "--grid", "64x128", "--out", str(out)]) == 0
    rep = json.loads(out.read_text())
    assert rep["passed"] is True
    assert cli.main(["hanzawa-check", "--grid", "64by128"]) == 4


def test_verify_all_exit_codes(files, monkeypatch, tmp_path):
    model, geom = files
    monkeypatch.setattr(vf, "CRITERIA", (vf.criterion_5,))
    out = tmp_path / "all.json"
    assert cli.main(["verify-all", "--model", str(model), "--geom", str(geom), "--out", str(out)]) == 0
    assert json.loads(out.read_text())["passed"] is True

    def failing():
        return vf.CriterionResult(0, "always fails", False, "forced")

    monkeypatch.setattr(vf, "CRITERIA", (failing,))
    assert cli.main(["verify-all", "--model", str(model), "--geom", str(geom)]) == 2


def test_non_finite_values_become_null():
    assert json.loads(cli.dumps({"a": float("nan"), "b": [float("inf"), 1.0]})) == {"a": None, "b": [None, 1.0]}


def test_shipped_demo_inputs_validate():
    for path in sorted(DATA.glob("*.json")):
        data = json.loads(path.read_text())
        if "phases" in data:
            assert cli.main(["material", "validate", str(path)]) == 0, path.name
