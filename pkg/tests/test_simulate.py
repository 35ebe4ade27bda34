from dataclasses import replace

import numpy as np
import pytest

from stefan_lab import equilibrium as eq
from stefan_lab import scenarios as sc
from stefan_lab import simulate as sm
from stefan_lab.errors import DomainError, GeometryError, SchemaError

S = sc.regime_scenarios()
GAMMA_POS = S[1].model  # stable, undercooling
GAMMA_ZERO = S[4].model  # stable, no undercooling
CFG = sm.SimConfig(cells=60, dt=1e-3, t_end=0.1)


@pytest.mark.parametrize("model", [GAMMA_POS, GAMMA_ZERO], ids=["gamma>0", "gamma=0"])
def test_equilibrium_is_fixed_point(model):
    s0 = sm.equilibrium_state(model, sc.U_STAR, sc.R_OMEGA, CFG)
    res = sm.run(model, s0, sc.R_OMEGA, CFG)
    end = res.states[-1]
    assert len(res.states) == 101
    assert abs(end.R - s0.R) <= 1e-10 * s0.R
    assert np.max(np.abs(end.u_inner - sc.U_STAR)) <= 1e-10 * sc.U_STAR
    d = res.diagnostics.arrays()
    assert np.max(np.abs(d["V"])) <= 1e-10
    assert np.max(np.abs(d["gt_residual"])) <= 1e-12
    assert np.ptp(d["E"]) <= 1e-13 * abs(d["E"][0])
    assert np.ptp(d["Phi"]) <= 1e-13 * abs(d["Phi"][0])


@pytest.mark.parametrize("R0", [0.45, 0.55])
def test_velocity_sign_from_gibbs_thomson(R0):
    m = GAMMA_POS
    N = CFG.cells
    u = sc.U_STAR
    s0 = sm.RadialState(0.0, R0, np.full(N + 1, u), np.full(N + 1, u))
    drive = (m.phi_derivs(u)[0] - m.sigma(u) * (m.n - 1) / R0) / m.gamma_value(u)
    cfg = replace(CFG, dt=1e-6, t_end=1e-6)
    res = sm.run(m, s0, sc.R_OMEGA, cfg)
    V = res.diagnostics.V[-1]
    assert np.sign(V) == np.sign(drive)
    assert V == pytest.approx(drive, rel=0.05)


def test_gamma_zero_constraint_holds_every_step():
    m = GAMMA_ZERO
    s0 = sm.perturbed_state(m, sc.U_STAR, sc.R_OMEGA, CFG, eps_R=1e-3)
    res = sm.run(m, s0, sc.R_OMEGA, CFG)
    for s in res.states:
        lam = m.lambda_derivs(s.u_Gamma)[0]
        assert abs(lam - (m.n - 1) / s.R) <= CFG.constraint_tol * (m.n - 1) / s.R


@pytest.mark.parametrize("model", [GAMMA_POS, GAMMA_ZERO], ids=["gamma>0", "gamma=0"])
def test_energy_drift_and_entropy(model):
    s0 = sm.perturbed_state(model, sc.U_STAR, sc.R_OMEGA, CFG, eps_R=1e-3)
    d = sm.run(model, s0, sc.R_OMEGA, CFG).diagnostics.arrays()
    drift = abs(d["E"][-1] - d["E"][0]) / abs(d["E"][0]) / d["t"][-1]
    assert drift <= 1e-6
    assert np.min(np.diff(d["Phi"])) >= -10 * CFG.newton_tol * max(1.0, np.max(np.abs(d["Phi"])))


def test_perturbation_preserves_energy():
    for model in (GAMMA_POS, GAMMA_ZERO):
        grid = sm.Grid(model.n, sc.R_OMEGA, CFG.cells, CFG.grading)
        e_eq = sm.energy(sm.equilibrium_state(model, sc.U_STAR, sc.R_OMEGA, CFG), model, grid)
        s = sm.perturbed_state(model, sc.U_STAR, sc.R_OMEGA, CFG, eps_R=1e-3)
        assert sm.energy(s, model, grid) == pytest.approx(e_eq, rel=1e-14)
        assert s.R == pytest.approx(eq.radius(model, sc.U_STAR) * 1.001, rel=1e-14)


def test_mcflow_residual_zero_at_equilibrium():
    s0 = sm.equilibrium_state(GAMMA_ZERO, sc.U_STAR, sc.R_OMEGA, CFG)
    jump = sm.consistent_flux_jump(GAMMA_ZERO, s0.u_Gamma, s0.R, 0.0, 0.0)
    assert abs(sm.mcflow_residual(s0, GAMMA_ZERO, 0.0, jump)) <= 1e-8


def test_velocity_formula_agrees_with_step():
    m = GAMMA_ZERO
    cfg = replace(CFG, dt=1e-4, t_end=2e-3)
    s0 = sm.perturbed_state(m, sc.U_STAR, sc.R_OMEGA, cfg, eps_R=1e-3)
    stepper = sm.Stepper(m, sc.R_OMEGA, cfg)
    s, prev = s0, None
    for _ in range(20):
        new, V, du, _ = sm.step(stepper, s, prev, cfg.dt)
        prev, s = s, new
    J = sm.consistent_flux_jump(m, s.u_Gamma, s.R, V, du)
    V2 = sm.velocity_from_flux(m, s.u_Gamma, s.R, J)
    assert V2 == pytest.approx(V, rel=0.05)


def test_bdf2_runs_and_conserves():
    cfg = replace(CFG, scheme="bdf2")
    s0 = sm.perturbed_state(GAMMA_POS, sc.U_STAR, sc.R_OMEGA, cfg, eps_R=1e-3)
    d = sm.run(GAMMA_POS, s0, sc.R_OMEGA, cfg).diagnostics.arrays()
    assert d["t"][-1] == pytest.approx(cfg.t_end)
    assert abs(d["E"][-1] - d["E"][0]) / abs(d["E"][0]) <= 1e-8


def test_radius_outside_ball_is_geometry_error():
    with pytest.raises(GeometryError):
        sm.equilibrium_state(GAMMA_POS, sc.U_STAR, 0.4, CFG)


def test_wrong_stepper_for_regime():
    s0 = sm.equilibrium_state(GAMMA_ZERO, sc.U_STAR, sc.R_OMEGA, CFG)
    with pytest.raises(DomainError):
        sm.step_gamma_positive(s0, GAMMA_ZERO, CFG, sc.R_OMEGA)
    new = sm.step_gamma_zero(s0, GAMMA_ZERO, CFG, sc.R_OMEGA)
    assert new.R == pytest.approx(s0.R, rel=1e-14)


def test_config_validation():
    with pytest.raises(DomainError):
        sm.SimConfig(dt=0.0)
    with pytest.raises(DomainError):
        sm.SimConfig(scheme="rk4")
    with pytest.raises(SchemaError):
        sm.config_from_dict({"cells": 10, "colour": 1})
    assert sm.config_from_dict({"cells": 10}).cells == 10


def test_noise_perturbation_is_seeded():
    cfg = replace(CFG, perturbation={"eps_u": 1e-3, "chi": "noise"})
    a = sm.initial_state(GAMMA_POS, sc.U_STAR, sc.R_OMEGA, cfg, seed=7)
    b = sm.initial_state(GAMMA_POS, sc.U_STAR, sc.R_OMEGA, cfg, seed=7)
    c = sm.initial_state(GAMMA_POS, sc.U_STAR, sc.R_OMEGA, cfg, seed=8)
    assert np.array_equal(a.u_inner, b.u_inner)
    assert not np.array_equal(a.u_inner, c.u_inner)
    assert a.u_Gamma == pytest.approx(sc.U_STAR, rel=1e-12)
    with pytest.raises(SchemaError):
        sm.initial_state(GAMMA_POS, sc.U_STAR, sc.R_OMEGA, replace(CFG, perturbation={"amp": 1}))


def test_trajectory_csv_columns(tmp_path):
    s0 = sm.equilibrium_state(GAMMA_POS, sc.U_STAR, sc.R_OMEGA, CFG)
    res = sm.run(GAMMA_POS, s0, sc.R_OMEGA, replace(CFG, t_end=5e-3))
    path = tmp_path / "t.csv"
    res.diagnostics.write_csv(path)
    lines = path.read_text().splitlines()
    assert lines[0] == "t,R,u_Gamma,V,E,Phi,gt_residual,mcflow_residual"
    assert len(lines) == 7


@pytest.mark.slow
@pytest.mark.parametrize("idx", [1, 2], ids=["gamma>0 stable", "gamma=0 eta>1"])
def test_stable_equilibria_return(idx):
    v = sm.stability_experiment(S[idx].model, sc.U_STAR, sc.R_OMEGA)
    assert v.predicted_stable and v.observed_stable
    assert v.relative_error <= 0.15


@pytest.mark.slow
def test_unstable_departure_gamma_zero():
    v = sm.stability_experiment(S[3].model, sc.U_STAR, sc.R_OMEGA)
    assert not v.predicted_stable and not v.observed_stable
    assert v.fitted_rate > 0
    assert v.relative_error <= 0.15
