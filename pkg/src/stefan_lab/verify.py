"""Acceptance battery: nine criteria run on the reference scenarios.

Each ``criterion_k`` returns a :class:`CriterionResult`; ``run_all`` runs them
in order.  Tolerances are module constants so callers can report them.
"""

from __future__ import annotations

import math
import time
from dataclasses import dataclass, field, replace

import numpy as np

from . import equilibrium as eq
from . import hanzawa as hz
from . import material as mt
from . import scenarios as sc
from . import simulate as sm
from . import spectral as sp

IDENTITY_TOL = 1e-9
FD_TOL = 1e-5
ENERGY_ID_TOL = 1e-8
BOUNDARY_LAYER_TOL = 0.01
LIMIT_TOL = 1e-4
DRIFT_TOL = 1e-6
HALVING_RATIO = math.sqrt(2.0)
RATE_TOL_DEFAULT = 0.15
RATE_TOL_DOUBLE = 0.08
MCFLOW_EQ_TOL = 1e-8


@dataclass
class CriterionResult:
    number: int
    name: str
    passed: bool
    summary: str
    details: dict = field(default_factory=dict)
    seconds: float = 0.0

    def line(self):
        return f"[{'PASS' if self.passed else 'FAIL'}] {self.number}. {self.name}: {self.summary}"

    def to_dict(self):
        return {
            "criterion": self.number,
            "name": self.name,
            "passed": self.passed,
            "summary": self.summary,
            "details": self.details,
            "seconds": self.seconds,
        }


def _timed(fn):
    def wrapper(*args, **kwargs):
        t0 = time.perf_counter()
        res = fn(*args, **kwargs)
        res.seconds = time.perf_counter() - t0
        return res

    wrapper.__name__ = fn.__name__
    wrapper.__doc__ = fn.__doc__
    return wrapper


def identity_models():
    return [
        ("affine, kappa=1", sc.affine_model(4.0, 1.0, gamma=0.1)),
        ("affine, kappa=0.1", sc.affine_model(4.0, 0.1)),
        ("affine, B=2.6", sc.affine_model(2.6, 1.0)),
        ("contrast", sc.contrast_model()),
        ("affine, n=2", sc.affine_model(4.0, 1.0, gamma=0.1, n=2)),
    ]


def feasible_temperatures(model, domain, count=20, margin=0.02):
    """``count`` temperatures spread over the feasible window, away from its ends."""
    u, mask = eq.feasible_window(model, domain)
    inside = u[mask]
    lo, hi = inside.min(), inside.max()
    width = hi - lo
    return np.linspace(lo + margin * width, hi - margin * width, count)


def identity_check(model, domain, temps, m=1):
    worst_id = worst_fd = 0.0
    rows = []
    for u in temps:
        p = eq.indicators(model, domain, u, m)
        dE = eq.equilibrium_energy_derivative(model, domain, u, m)
        n = model.n
        rhs = (p.zeta_star - 1.0) * u * p.l_star**2 * p.R_star**2 * p.interface_area / ((n - 1) * p.sigma_star)
        e_id = abs(dE - rhs) / (1.0 + abs(dE))
        h = 1e-6 * u
        fd = (eq.equilibrium_energy(model, domain, u + h, m) - eq.equilibrium_energy(model, domain, u - h, m)) / (2 * h)
        e_fd = abs(fd - dE) / (1.0 + abs(dE))
        worst_id = max(worst_id, e_id)
        worst_fd = max(worst_fd, e_fd)
        rows.append({"u": float(u), "E_e_prime": dE, "identity_defect": e_id, "fd_defect": e_fd})
    return worst_id, worst_fd, rows


@_timed
def criterion_1(models=None, count=20):
    """E_e' identity with zeta and finite-difference agreement."""
    models = models or identity_models()
    details = {}
    ok = True
    worst = [0.0, 0.0]
    for name, model in models:
        domain = eq.DomainSpec.ball(model.n, sc.R_OMEGA)
        temps = feasible_temperatures(model, domain, count)
        wi, wf, _ = identity_check(model, domain, temps)
        details[name] = {"identity": wi, "finite_difference": wf, "temperatures": len(temps)}
        ok &= wi <= IDENTITY_TOL and wf <= FD_TOL and len(temps) >= 20
        worst = [max(worst[0], wi), max(worst[1], wf)]
    return CriterionResult(
        1,
        "E_e' identity",
        bool(ok and len(models) >= 3),
        f"{len(models)} models x {count} temperatures; worst identity {worst[0]:.2e} (tol {IDENTITY_TOL:g}), "
        f"worst finite difference {worst[1]:.2e} (tol {FD_TOL:g})",
        details,
    )


@_timed
def criterion_2(cells=sp.DEFAULT_CELLS):
    """DtN energy identity, positivity, monotonicity and boundary-layer asymptote."""
    model = sc.contrast_model()
    geom, coeffs = sp.setup(model, sc.U_STAR, sc.R_OMEGA)
    lams = np.geomspace(1e-4, 1e6, 41)
    target = math.sqrt(coeffs.kappa1 * coeffs.d1) + math.sqrt(coeffs.kappa2 * coeffs.d2)
    details = {}
    ok = True
    for l in (0, 1, 2, 4, 8):
        D, defect = [], 0.0
        for lam in lams:
            chk = sp.dtn_energy_check(geom, coeffs, l, lam, cells)
            D.append(chk.D)
            defect = max(defect, abs(chk.defect) / (1.0 + abs(chk.D)))
        D = np.array(D)
        nonneg = bool(np.all(D >= 0))
        mono = bool(np.all(np.diff(D) > 0))
        big = lams >= 1.0
        c_fit = float(np.min(D[big] / np.sqrt(lams[big])))
        bl = abs(D[-1] / math.sqrt(lams[-1]) - target) / target
        passed = defect <= ENERGY_ID_TOL and nonneg and mono and c_fit > 0 and bl <= BOUNDARY_LAYER_TOL
        ok &= passed
        details[f"l={l}"] = {
            "energy_identity": defect,
            "nonnegative": nonneg,
            "monotone": mono,
            "c_sqrt_lambda": c_fit,
            "boundary_layer_rel_error": bl,
        }
    worst = max(v["energy_identity"] for v in details.values())
    worst_bl = max(v["boundary_layer_rel_error"] for v in details.values())
    return CriterionResult(
        2,
        "DtN properties",
        bool(ok),
        f"5 (l, lambda) grids; energy identity {worst:.1e} (tol {ENERGY_ID_TOL:g}); "
        f"D/sqrt(lambda) at 1e6 off by {worst_bl:.2%} (tol 1%)",
        details,
    )


@_timed
def criterion_3(cells=sp.DEFAULT_CELLS):
    """Small- and large-lambda limits of lambda T."""
    details = {}
    ok = True
    for s in sc.regime_scenarios()[:2] + [sc.Scenario("contrast", sc.contrast_model(), 1, False)]:
        geom, coeffs = sp.setup(s.model, sc.U_STAR, sc.R_OMEGA)
        a = sp.a0_limit_defect(geom, coeffs, cells)
        ks = {l: sp.kappa_inv_limit_defect(geom, coeffs, l, cells) for l in (0, 1, 2)}
        details[s.name] = {"a0": a, "kappa_inv": ks}
        ok &= a <= LIMIT_TOL and max(ks.values()) <= LIMIT_TOL
    wa = max(v["a0"] for v in details.values())
    wk = max(max(v["kappa_inv"].values()) for v in details.values())
    return CriterionResult(
        3, "lambda T limits", bool(ok), f"a0 defect {wa:.1e}, 1/kappa_Gamma defect {wk:.1e} (tol {LIMIT_TOL:g})", details
    )


def multi_sphere_cases():
    domain = eq.DomainSpec.ball(3, 2.0, {2: 1.0, 3: 0.9})
    return domain, [("zeta>1", sc.affine_model(4.0, 1.0, gamma=0.1)), ("zeta<1", sc.affine_model(4.0, 0.01, gamma=0.1))]


@_timed
def criterion_4(cells=sp.DEFAULT_CELLS):
    """Positive-eigenvalue counts per regime, mode positivity, multi-sphere counts."""
    details = {}
    ok = True
    counts = []
    for s in sc.regime_scenarios():
        geom, coeffs = sp.setup(s.model, sc.U_STAR, sc.R_OMEGA)
        domain = eq.DomainSpec.ball(s.model.n, sc.R_OMEGA)
        point = eq.indicators(s.model, domain, sc.U_STAR)
        rep = sp.find_spectrum(geom, coeffs, l_max=8, predicted=point.predicted_positive_eigenvalues, cells=cells)
        modes = sorted({e.l for e in rep.positive})
        grid = sp.scan_grid(sp.default_lambda_max(geom, coeffs))
        bmin = min(min(sp.b_lambda(geom, coeffs, l, x, cells) for x in grid) for l in range(1, 9))
        passed = (
            rep.total_positive == s.predicted_positive
            and rep.match
            and all(m == 0 for m in modes)
            and bmin > 0
            and not rep.inconclusive
        )
        ok &= passed
        counts.append(rep.total_positive)
        details[s.name] = {
            "positive": [(e.lam, e.l, e.mult) for e in rep.positive],
            "predicted": point.predicted_positive_eigenvalues,
            "zeta": point.zeta_star,
            "eta": point.eta_star,
            "min_B_l1_to_8": bmin,
        }
    domain, cases = multi_sphere_cases()
    for name, model in cases:
        for m in (2, 3):
            rep = sp.multi_sphere_mean_mode(model, domain, sc.U_STAR, m)
            z = eq.indicators(model, domain, sc.U_STAR, m).zeta_star
            expected = m if z > 1 else m - 1
            passed = rep.unstable_directions == expected and (rep.zeta_eigenvalue > 0) == (z < 1)
            ok &= passed
            details[f"m={m}, {name}"] = {"zeta": z, "unstable": rep.unstable_directions, "expected": expected}
    return CriterionResult(
        4, "eigenvalue counts", bool(ok), f"counts {counts} (expected [1, 0, 0, 1, 0]); multi-sphere m=2,3 checked", details
    )


@_timed
def criterion_5():
    """Kernel dimension n + 1 and the radial kernel direction."""
    details = {}
    ok = True
    models = [(s.name, s.model) for s in sc.regime_scenarios()] + [("n=2", sc.affine_model(4.0, 1.0, gamma=0.1, n=2))]
    for name, model in models:
        geom, coeffs = sp.setup(model, sc.U_STAR, sc.R_OMEGA)
        km = sp.kernel_modes(geom, coeffs)
        dim = sum(v["nullity"] * v["mult"] for v in km.values())
        ref = sp.kernel_pair_direction(geom, coeffs)
        got = km[0].get("direction", {})
        dir_err = abs(got.get("v_Gamma", math.nan) - ref["v"]) / abs(ref["v"])
        passed = dim == model.n + 1 and dir_err < 1e-8
        ok &= passed
        details[name] = {"kernel_dim": dim, "n": model.n, "direction_error": dir_err}
    return CriterionResult(5, "kernel dimension", bool(ok), "kernel dimension n+1 and radial direction in all cases", details)


# --- simulation criteria ----------------------------------------------------

def simulation_scenarios():
    """(name, model, kind) with kind in {stable, unstable, equilibrium}."""
    S = sc.regime_scenarios()
    return [
        ("gamma>0 stable", S[1].model, "stable"),
        ("gamma>0 unstable", S[0].model, "unstable"),
        ("gamma>0 equilibrium", S[1].model, "equilibrium"),
        ("gamma=0 stable", S[4].model, "stable"),
        ("gamma=0 unstable", S[3].model, "unstable"),
        ("gamma=0 equilibrium", S[4].model, "equilibrium"),
    ]


def _scenario_run(model, kind, config):
    if kind == "equilibrium":
        state = sm.equilibrium_state(model, sc.U_STAR, sc.R_OMEGA, config)
        cfg = replace(config, t_end=0.1)
    elif kind == "stable":
        state = sm.perturbed_state(model, sc.U_STAR, sc.R_OMEGA, config, eps_R=1e-3)
        cfg = replace(config, t_end=0.2)
    else:
        state = sm.perturbed_state(model, sc.U_STAR, sc.R_OMEGA, config, eps_R=1e-6)
        cfg = replace(config, t_end=0.25)
    res = sm.run(model, state, sc.R_OMEGA, cfg, R_star=eq.radius(model, sc.U_STAR))
    d = res.diagnostics.arrays()
    E, Phi = d["E"], d["Phi"]
    T = d["t"][-1] - d["t"][0]
    drift = abs(E[-1] - E[0]) / abs(E[0]) / T
    dPhi = np.diff(Phi)
    return drift, float(dPhi.min()), float(np.max(np.abs(Phi))), d


@_timed
def criterion_6(config=None):
    """Energy drift per unit time, drift reduction under dt halving, entropy monotone."""
    config = config or sm.SimConfig()
    details = {}
    ok = True
    for name, model, kind in simulation_scenarios():
        drift, dmin, pscale, _ = _scenario_run(model, kind, config)
        drift2, _, _, _ = _scenario_run(model, kind, replace(config, dt=config.dt / 2))
        ent_tol = 10 * config.newton_tol * max(1.0, pscale)
        roundoff = drift < 1e-12
        ratio = drift / drift2 if drift2 > 0 else math.inf
        passed = drift <= DRIFT_TOL and (roundoff or ratio >= HALVING_RATIO) and dmin >= -ent_tol
        ok &= passed
        details[name] = {
            "drift_per_time": drift,
            "drift_half_dt": drift2,
            "halving_ratio": ratio,
            "roundoff_level": roundoff,
            "min_entropy_increment": dmin,
            "entropy_tolerance": ent_tol,
        }
    worst = max(v["drift_per_time"] for v in details.values())
    ratios = [v["halving_ratio"] for v in details.values() if not v["roundoff_level"]]
    return CriterionResult(
        6,
        "energy and entropy",
        bool(ok),
        f"6 scenarios; worst drift {worst:.1e}/time (tol {DRIFT_TOL:g}); min halving ratio {min(ratios):.2f} (need >= {HALVING_RATIO:.3f})",
        details,
    )


@_timed
def criterion_7(config=None):
    """Fitted radial rates vs the spectral l=0 eigenvalue, default and double resolution."""
    config = config or sm.SimConfig()
    details = {}
    ok = True
    for name, model, kind in simulation_scenarios():
        if kind == "equilibrium":
            continue
        v1 = sm.stability_experiment(model, sc.U_STAR, sc.R_OMEGA, config, name=name)
        v2 = sm.stability_experiment(model, sc.U_STAR, sc.R_OMEGA, config.refined(2), name=name)
        passed = (
            v1.relative_error <= RATE_TOL_DEFAULT
            and v2.relative_error <= RATE_TOL_DOUBLE
            and v1.observed_stable == v1.predicted_stable
            and v2.observed_stable == v2.predicted_stable
        )
        ok &= passed
        details[name] = {
            "spectral_rate": v1.spectral_rate,
            "fitted_default": v1.fitted_rate,
            "error_default": v1.relative_error,
            "fitted_double": v2.fitted_rate,
            "error_double": v2.relative_error,
            "predicted_stable": v1.predicted_stable,
            "observed_stable": v1.observed_stable,
        }
    e1 = max(v["error_default"] for v in details.values())
    e2 = max(v["error_double"] for v in details.values())
    return CriterionResult(
        7, "linear-nonlinear rates", bool(ok), f"worst rate error {e1:.1%} default (tol 15%), {e2:.1%} double (tol 8%)", details
    )


def mcflow_at(model, config, times, eps_R=1e-3):
    state = sm.perturbed_state(model, sc.U_STAR, sc.R_OMEGA, config, eps_R=eps_R)
    cfg = replace(config, t_end=max(times))
    res = sm.run(model, state, sc.R_OMEGA, cfg, with_mcflow=True)
    d = res.diagnostics.arrays()
    return np.array([d["mcflow_residual"][np.argmin(np.abs(d["t"] - t))] for t in times])


@_timed
def criterion_8(config=None):
    """mcflow residual: scheme-order decay under dt refinement and zero at equilibrium."""
    config = config or sm.SimConfig()
    model = sc.regime_scenarios()[4].model
    times = (0.01, 0.02, 0.04)
    details = {}
    ok = True
    for scheme, order in (("euler", 1.0), ("bdf2", 2.0)):
        cfg = replace(config, scheme=scheme, dt=2e-3)
        res = [np.abs(mcflow_at(model, replace(cfg, dt=cfg.dt / 2**k), times)) for k in range(3)]
        rates = [float(np.min(np.log2(res[k] / res[k + 1]))) for k in range(2)]
        passed = min(rates) >= order - 0.2
        ok &= passed
        details[scheme] = {"residuals": [r.tolist() for r in res], "observed_orders": rates, "scheme_order": order}
    eq_state = sm.equilibrium_state(model, sc.U_STAR, sc.R_OMEGA, config)
    eq_run = sm.run(model, eq_state, sc.R_OMEGA, replace(config, t_end=20 * config.dt), with_mcflow=True)
    eq_res = float(np.max(np.abs(eq_run.diagnostics.arrays()["mcflow_residual"])))
    ok &= eq_res <= MCFLOW_EQ_TOL
    details["equilibrium_residual"] = eq_res
    return CriterionResult(
        8,
        "mean-curvature-flow form",
        bool(ok),
        f"orders euler {min(details['euler']['observed_orders']):.2f}, bdf2 {min(details['bdf2']['observed_orders']):.2f}; "
        f"equilibrium residual {eq_res:.1e} (tol {MCFLOW_EQ_TOL:g})",
        details,
    )


@_timed
def criterion_9(grid=(64, 128)):
    """Height-function battery for n = 3 and n = 2."""
    details = {}
    ok = True
    for n in (3, 2):
        checks = hz.verification_battery(n=n, S=1.0, grid=grid)
        details[f"n={n}"] = {c.name: {"passed": c.passed, "value": c.value, "tolerance": c.tolerance} for c in checks}
        ok &= all(c.passed for c in checks)
    failed = [f"{k}: {name}" for k, v in details.items() for name, c in v.items() if not c["passed"]]
    return CriterionResult(9, "height-function battery", bool(ok), "all checks passed" if ok else "failed: " + "; ".join(failed), details)


CRITERIA = (criterion_1, criterion_2, criterion_3, criterion_4, criterion_5, criterion_6, criterion_7, criterion_8, criterion_9)


def run_all(echo=None):
    out = []
    for fn in CRITERIA:
        res = fn()
        if echo:
            echo(res.line())
        out.append(res)
    return out


def model_checks(model, domain, u_star=None, cells=sp.DEFAULT_CELLS):
    """Checks specific to a user model: validation, the E_e' identity, and spectrum counts at ``u*``."""
    rep = mt.validate(model)
    results = [CriterionResult(0, "material validation", rep.ok, str(rep))]
    if not rep.ok:
        return results
    u, mask = eq.feasible_window(model, domain)
    if mask.sum() >= 20:
        temps = feasible_temperatures(model, domain, 20)
        wi, wf, _ = identity_check(model, domain, temps)
        results.append(
            CriterionResult(1, "E_e' identity (model)", wi <= IDENTITY_TOL and wf <= FD_TOL, f"identity {wi:.1e}, finite difference {wf:.1e}")
        )
    if u_star is not None:
        point = eq.indicators(model, domain, u_star)
        geom, coeffs = sp.setup(model, u_star, domain.max_radius(1))
        spec = sp.find_spectrum(geom, coeffs, predicted=point.predicted_positive_eigenvalues, cells=cells)
        results.append(
            CriterionResult(
                4,
                "eigenvalue count (model)",
                spec.match and spec.kernel_dim == model.n + 1,
                f"found {spec.total_positive}, predicted {point.predicted_positive_eigenvalues}, kernel {spec.kernel_dim}",
            )
        )
    return results
