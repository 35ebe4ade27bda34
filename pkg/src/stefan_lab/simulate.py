"""Radially symmetric nonlinear solver: one sphere of radius R(t) concentric in a ball.

Each phase lives on a mapped unit interval (inner ``r = s R``, outer
``r = R + s (R_Omega - R)``) carrying a vertex-centred finite-volume scheme
in conservative ALE form.  Swept volumes are exact, so the bulk energy
telescopes; the interface node couples both half cells with the surface
energy balance

    kappa_G du_G/dt = [[d d_r u]] - (l + l_G H - gamma V) V,   H = -(n-1)/R,

and the Gibbs-Thomson law ``phi(u_G) - sigma(u_G)(n-1)/R = gamma(u_G) V``.
Without undercooling the latter is an algebraic constraint and the step is
a fully implicit index-one DAE step.  Newton uses an exact complex-step
Jacobian (tridiagonal chain bordered by the radius column).
"""

from __future__ import annotations

import csv
import json
import logging
import math
from dataclasses import dataclass, field, asdict, replace
from pathlib import Path
from typing import Optional

import numpy as np
from scipy import linalg, optimize

from . import equilibrium as eq
from . import spectral
from .errors import DomainError, GeometryError, SchemaError, SolverError, WellPosednessError
from .material import MaterialModel, f_gamma, h_gamma, unit_sphere_area

log = logging.getLogger(__name__)

SCHEMES = {"euler": (1.0, -1.0), "bdf2": (1.5, -2.0, 0.5)}
WELLPOSED_FACTOR = 1e-6
NEAR_DEGENERATE = 1e-3


@dataclass(frozen=True)
class SimConfig:
    cells: int = 100
    dt: float = 1e-3
    t_end: float = 1.0
    scheme: str = "euler"
    newton_tol: float = 1e-12
    max_newton: int = 25
    constraint_tol: float = 1e-10
    grading: float = 2.0
    min_dt: float = 1e-9
    stop_deviation: Optional[float] = None  # stop once |R - R*|/R* exceeds this
    perturbation: dict = field(default_factory=dict)
    record_every: int = 1

    def __post_init__(self):
        if self.cells < 4:
            raise DomainError("cells must be >= 4")
        if not self.dt > 0 or not self.t_end > 0:
            raise DomainError("dt and t_end must be positive")
        if self.scheme not in SCHEMES:
            raise DomainError(f"scheme must be one of {sorted(SCHEMES)}")

    def refined(self, factor=2):
        return replace(self, cells=self.cells * factor, dt=self.dt / factor)


def config_from_dict(data):
    if not isinstance(data, dict):
        raise SchemaError("$", "config must be a JSON object")
    known = {f for f in SimConfig.__dataclass_fields__}
    for key in data:
        if key not in known:
            raise SchemaError(f"$.{key}", "unknown config key")
    try:
        return SimConfig(**data)
    except TypeError as exc:
        raise SchemaError("$", str(exc)) from None


@dataclass
class RadialState:
    t: float
    R: float
    u_inner: np.ndarray  # nodes s_0 = 0 .. s_N = 1 (last node is the interface)
    u_outer: np.ndarray  # nodes s_0 = 0 .. s_M = 1 (first node is the interface)

    @property
    def u_Gamma(self):
        return float(self.u_inner[-1])

    def copy(self):
        return RadialState(self.t, self.R, self.u_inner.copy(), self.u_outer.copy())


@dataclass
class Diagnostics:
    t: list = field(default_factory=list)
    R: list = field(default_factory=list)
    u_Gamma: list = field(default_factory=list)
    V: list = field(default_factory=list)
    E: list = field(default_factory=list)
    Phi: list = field(default_factory=list)
    gt_residual: list = field(default_factory=list)
    mcflow_residual: list = field(default_factory=list)

    COLUMNS = ("t", "R", "u_Gamma", "V", "E", "Phi", "gt_residual", "mcflow_residual")

    def append(self, **row):
        for k in self.COLUMNS:
            getattr(self, k).append(float(row[k]))

    def arrays(self):
        return {k: np.asarray(getattr(self, k)) for k in self.COLUMNS}

    def write_csv(self, path):
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(self.COLUMNS)
            for row in zip(*(getattr(self, k) for k in self.COLUMNS)):
                w.writerow([repr(x) for x in row])


# --- discretisation ---------------------------------------------------------

class Grid:
    """Mapped coordinates of both phases (fixed in s, moving with R)."""

    def __init__(self, n, R_Omega, cells, grading):
        self.n = n
        self.R_Omega = R_Omega
        self.omega = unit_sphere_area(n)
        x = np.linspace(0.0, 1.0, cells + 1)
        if grading > 0:
            g = np.sinh(grading * x) / np.sinh(grading)
        else:
            g = x
        self.s_in = 1.0 - g[::-1]
        self.s_out = g.copy()
        self.s_in[0], self.s_in[-1] = 0.0, 1.0
        self.s_out[0], self.s_out[-1] = 0.0, 1.0
        self.N = cells  # inner interface index
        self.M = cells

    def nodes(self, R):
        return self.s_in * R, R + self.s_out * (self.R_Omega - R)

    def geometry(self, R):
        """Node positions, face positions, volumes enclosed by faces and cell volumes."""
        n, w = self.n, self.omega
        r_in, r_out = self.nodes(R)
        f_in = 0.5 * (r_in[1:] + r_in[:-1])  # face j between nodes j-1 and j, j = 1..N
        f_out = 0.5 * (r_out[1:] + r_out[:-1])
        Vf_in = w * f_in**n / n
        Vf_out = w * f_out**n / n
        VR = w * R**n / n
        VO = w * self.R_Omega**n / n
        bounds_in = np.concatenate([[0.0 * VR], Vf_in, [VR]])
        bounds_out = np.concatenate([[VR], Vf_out, [VO + 0.0 * VR]])
        return {
            "r_in": r_in,
            "r_out": r_out,
            "f_in": f_in,
            "f_out": f_out,
            "Vf_in": Vf_in,
            "Vf_out": Vf_out,
            "VR": VR,
            "cell_in": np.diff(bounds_in),
            "cell_out": np.diff(bounds_out),
            "A_in": w * f_in ** (n - 1),
            "A_out": w * f_out ** (n - 1),
            "area": w * R ** (n - 1),
        }


def _pack(state):
    return np.concatenate([state.u_inner, state.u_outer[1:], [state.R]])


def _unpack(x, N):
    u_in = x[: N + 1]
    u_out = x[N:-1]
    return u_in, u_out, x[-1]


class Stepper:
    """Assembles and solves one time step for a given model and grid."""

    def __init__(self, model, R_Omega, config):
        self.model = model
        self.cfg = config
        self.grid = Grid(model.n, R_Omega, config.cells, config.grading)
        self.gamma_zero = not model.has_undercooling

    # per-state quantities needed from history levels
    def _level(self, x):
        m = self.model
        N = self.grid.N
        u_in, u_out, R = _unpack(x, N)
        g = self.grid.geometry(R)
        e1 = m.eps(u_in)[0]
        e2 = m.eps(u_out)[1]
        return {
            "E_in": g["cell_in"] * e1,
            "E_out": g["cell_out"] * e2,
            "Vf_in": g["Vf_in"],
            "Vf_out": g["Vf_out"],
            "VR": g["VR"],
            "uG": x[N],
            "R": R,
        }

    def residual(self, x, hist, coef, dt):
        m = self.model
        n = self.grid.n
        N = self.grid.N
        u_in, u_out, R = _unpack(x, N)
        g = self.grid.geometry(R)
        lv = self._level(x)

        def ddt(key):
            out = coef[0] * lv[key]
            for c, h in zip(coef[1:], hist):
                out = out + c * h[key]
            return out

        e1 = m.eps(u_in)[0]
        e2 = m.eps(u_out)[1]
        d1 = m.d1(u_in)
        d2 = m.d2(u_out)
        # diffusive face fluxes A d du/dr (positive in +r)
        G_in = g["A_in"] * 0.5 * (d1[1:] + d1[:-1]) * np.diff(u_in) / np.diff(g["r_in"])
        G_out = g["A_out"] * 0.5 * (d2[1:] + d2[:-1]) * np.diff(u_out) / np.diff(g["r_out"])
        # advective mesh terms: face energy times swept volume
        S_in = ddt("Vf_in")
        S_out = ddt("Vf_out")
        M_in = 0.5 * (e1[1:] + e1[:-1]) * S_in / dt
        M_out = 0.5 * (e2[1:] + e2[:-1]) * S_out / dt
        dE_in = ddt("E_in") / dt
        dE_out = ddt("E_out") / dt
        # inner nodes 0..N-1: net inflow = (right face) - (left face)
        net_in = np.zeros_like(dE_in)
        net_in[:-1] += G_in + M_in
        net_in[1:] -= G_in + M_in
        net_out = np.zeros_like(dE_out)
        net_out[:-1] += G_out + M_out
        net_out[1:] -= G_out + M_out
        r_in = dE_in[:-1] - net_in[:-1]
        r_out = dE_out[1:] - net_out[1:]
        # interface node: both half cells plus the surface balance
        uG = x[N]
        area = g["area"]
        H = -(n - 1) / R
        V = ddt("R") / dt
        dVR = ddt("VR") / dt
        kG = m.kappa_gamma(uG)
        lat = m.latent_heat(uG)
        lat_G = m.surface_latent_heat(uG)
        gam = m.gamma_value(uG)
        jump_eps = e2[0] - e1[-1]
        rG = (
            dE_in[-1]
            + dE_out[0]
            + area * kG * ddt("uG") / dt
            - net_in[-1]
            - net_out[0]
            + jump_eps * dVR
            + area * V * (lat + lat_G * H - gam * V)
        )
        phi = m.phi_derivs(uG)[0]
        sig = m.sigma(uG)
        r_gt = phi - sig * (n - 1) / R - gam * V
        return np.concatenate([r_in, [rG], r_out, [r_gt]])

    def jacobian_solve(self, x, hist, coef, dt, r):
        """Newton update ``J^-1 r`` with a complex-step Jacobian."""
        size = len(x)
        nc = size - 1  # chain unknowns (all temperatures)
        hstep = 1e-30
        diag = np.zeros(nc)
        upper = np.zeros(nc)
        lower = np.zeros(nc)
        gt_u = 0.0
        iG = self.grid.N
        for c in range(3):
            xc = x.astype(complex)
            idx = np.arange(c, nc, 3)
            xc[idx] += 1j * hstep
            d = self.residual(xc, hist, coef, dt).imag / hstep
            for j in idx:
                diag[j] = d[j]
                if j > 0:
                    upper[j - 1] = d[j - 1]  # J[j-1, j]
                if j < nc - 1:
                    lower[j + 1] = d[j + 1]  # J[j+1, j]
                if j == iG:
                    gt_u = d[-1]
        xc = x.astype(complex)
        xc[-1] += 1j * hstep
        colR = self.residual(xc, hist, coef, dt).imag / hstep
        ab = np.zeros((3, nc))
        ab[0, 1:] = upper[:-1]
        ab[1] = diag
        ab[2, :-1] = lower[1:]
        b = colR[:-1]
        try:
            y = linalg.solve_banded((1, 1), ab, r[:-1], check_finite=False)
            z = linalg.solve_banded((1, 1), ab, b, check_finite=False)
        except (linalg.LinAlgError, ValueError) as exc:
            raise SolverError(f"singular Newton matrix: {exc}") from None
        # last row: gt_u * dx[iG] + colR[-1] * dR = r[-1]
        denom = colR[-1] - gt_u * z[iG]
        if denom == 0.0 or not np.isfinite(denom):
            raise SolverError("singular bordered Newton system")
        dR = (r[-1] - gt_u * y[iG]) / denom
        return np.concatenate([y - z * dR, [dR]])

    def newton(self, x0, hist, coef, dt):
        x = x0.copy()
        scale = None
        for it in range(self.cfg.max_newton):
            r = self.residual(x, hist, coef, dt)
            if not np.all(np.isfinite(r)):
                raise SolverError("non-finite residual")
            dx = self.jacobian_solve(x, hist, coef, dt, r)
            x = x - dx
            if scale is None:
                scale = max(1.0, float(np.max(np.abs(x))))
            if np.max(np.abs(dx)) <= self.cfg.newton_tol * scale:
                return x, it + 1
        raise SolverError("Newton did not converge", residual=float(np.max(np.abs(dx))))


# --- public helpers ---------------------------------------------------------

def equilibrium_state(model, u_star, R_Omega, config):
    """Constant temperature ``u*`` and the Gibbs-Thomson radius."""
    R = eq.radius(model, u_star)
    if not R < R_Omega:
        raise GeometryError(f"equilibrium radius {R} does not fit in R_Omega={R_Omega}")
    N = config.cells
    return RadialState(0.0, R, np.full(N + 1, float(u_star)), np.full(N + 1, float(u_star)))


def energy(state, model, grid):
    g = grid.geometry(state.R)
    e1 = model.eps(state.u_inner)[0]
    e2 = model.eps(state.u_outer)[1]
    return float(np.sum(g["cell_in"] * e1) + np.sum(g["cell_out"] * e2) + g["area"] * model.eps_gamma(state.u_Gamma))


def entropy(state, model, grid):
    g = grid.geometry(state.R)
    h1 = model.eta(state.u_inner)[0]
    h2 = model.eta(state.u_outer)[1]
    return float(np.sum(g["cell_in"] * h1) + np.sum(g["cell_out"] * h2) + g["area"] * model.eta_gamma(state.u_Gamma))


def gt_residual(state, model, V):
    uG = state.u_Gamma
    return float(model.phi_derivs(uG)[0] - model.sigma(uG) * (model.n - 1) / state.R - model.gamma_value(uG) * V)


def check_well_posed(model, uG, R, R_star):
    if not 0.0 < uG < model.u_c:
        raise WellPosednessError(f"interface temperature {uG} left (0, u_c)")
    if not 0.0 < R:
        raise GeometryError(f"radius {R} left (0, R_Omega)")
    if not model.has_undercooling:
        n = model.n
        gap = float(model.omega_gamma(uG)) - (n - 1) / R**2
        if abs(gap) < WELLPOSED_FACTOR * (n - 1) / R_star**2:
            raise WellPosednessError("T_Gamma nearly singular: omega_Gamma - (n-1)/R^2 ~ 0")


def consistent_flux_jump(model, uG, R, V, duG_dt):
    """``[[d d_r u]]`` recovered from the discrete surface balance."""
    n = model.n
    H = -(n - 1) / R
    return float(
        model.kappa_gamma(uG) * duG_dt
        + (model.latent_heat(uG) + model.surface_latent_heat(uG) * H - model.gamma_value(uG) * V) * V
    )


def velocity_from_flux(model, uG, R, jump):
    """Radial form of the T_Gamma reduction: ``V = lambda' J / (kappa_G (omega_G - (n-1)/R^2))``."""
    n = model.n
    _, dlam, _ = model.lambda_derivs(uG)
    return float(dlam * jump / (model.kappa_gamma(uG) * (model.omega_gamma(uG) - (n - 1) / R**2)))


def mcflow_residual(state, model, V, jump):
    """``kappa_G V - d_G H - kappa_G (f_G + F_G)`` for a radial state (no undercooling).

    ``F_G = [kappa_G T_G]^-1 {lambda' J + kappa_G (omega_G - (n-1)/R^2) h_G}``
    with ``T_G = omega_G - (n-1)/R^2`` and ``J`` the flux jump.
    """
    if model.has_undercooling:
        raise DomainError("mcflow form applies without kinetic undercooling")
    n = model.n
    uG, R = state.u_Gamma, state.R
    kG = float(model.kappa_gamma(uG))
    dG = float(model.d_gamma(uG))
    _, dlam, _ = model.lambda_derivs(uG)
    T = float(model.omega_gamma(uG)) - (n - 1) / R**2
    if abs(T) < WELLPOSED_FACTOR * (n - 1) / R**2:
        raise WellPosednessError("T_Gamma nearly singular")
    H = -(n - 1) / R
    F = (float(dlam) * jump + kG * T * h_gamma(model, uG)) / (kG * T)
    return kG * V - dG * H - kG * (f_gamma(model, uG) + F)


def step(stepper, state, prev, dt):
    """Advance one step; ``prev`` is the level before ``state`` (BDF2) or None."""
    use_bdf2 = stepper.cfg.scheme == "bdf2" and prev is not None
    coef = SCHEMES["bdf2"] if use_bdf2 else SCHEMES["euler"]
    x_now = _pack(state)
    hist = [stepper._level(x_now)]
    if use_bdf2:
        hist.append(stepper._level(_pack(prev)))
    x, its = stepper.newton(x_now, hist, coef, dt)
    N = stepper.grid.N
    new = RadialState(state.t + dt, float(x[-1]), x[: N + 1].copy(), x[N:-1].copy())
    dR = coef[0] * new.R + coef[1] * state.R + (coef[2] * prev.R if use_bdf2 else 0.0)
    du = coef[0] * new.u_Gamma + coef[1] * state.u_Gamma + (coef[2] * prev.u_Gamma if use_bdf2 else 0.0)
    return new, dR / dt, du / dt, its


def step_gamma_positive(state, model, config, R_Omega, prev=None):
    if not model.has_undercooling:
        raise DomainError("model has no kinetic undercooling; use step_gamma_zero")
    return step(Stepper(model, R_Omega, config), state, prev, config.dt)[0]


def step_gamma_zero(state, model, config, R_Omega, prev=None):
    if model.has_undercooling:
        raise DomainError("model has kinetic undercooling; use step_gamma_positive")
    new = step(Stepper(model, R_Omega, config), state, prev, config.dt)[0]
    lam = model.lambda_derivs(new.u_Gamma)[0]
    if abs(lam - (model.n - 1) / new.R) > config.constraint_tol * (model.n - 1) / new.R:
        raise SolverError("Gibbs-Thomson constraint drift beyond tolerance")
    return new


@dataclass
class RunResult:
    states: list
    diagnostics: Diagnostics
    aborted: Optional[str] = None
    newton_iterations: int = 0


def run(model, state0, R_Omega, config, R_star=None, with_mcflow=False):
    """Integrate from ``state0`` to ``config.t_end`` recording diagnostics every step."""
    stepper = Stepper(model, R_Omega, config)
    grid = stepper.grid
    R_ref = R_star if R_star is not None else state0.R
    with_mcflow = with_mcflow and not model.has_undercooling
    diag = Diagnostics()

    def record(s, V, du):
        mc = float("nan")
        if with_mcflow:
            mc = mcflow_residual(s, model, V, consistent_flux_jump(model, s.u_Gamma, s.R, V, du))
        diag.append(
            t=s.t, R=s.R, u_Gamma=s.u_Gamma, V=V, E=energy(s, model, grid), Phi=entropy(s, model, grid),
            gt_residual=gt_residual(s, model, V), mcflow_residual=mc,
        )

    state, prev = state0.copy(), None
    record(state, 0.0, 0.0)
    states = [state]
    dt = config.dt
    total_its = 0
    aborted = None
    k = 0
    while state.t < config.t_end * (1 - 1e-12):
        h = min(dt, config.t_end - state.t)
        if math.isclose(h, config.dt, rel_tol=1e-8):
            h = config.dt
        try:
            new, V, du, its = step(stepper, state, prev if h == config.dt else None, h)
        except SolverError as exc:
            if h / 2 < config.min_dt:
                raise
            log.info("step rejected at t=%g (%s); halving dt", state.t, exc)
            dt = h / 2
            prev = None
            continue
        total_its += its
        try:
            if np.any(new.u_inner <= 0) or np.any(new.u_outer <= 0) or np.any(new.u_inner >= model.u_c) or np.any(new.u_outer >= model.u_c):
                raise WellPosednessError("temperature left (0, u_c)")
            if not 0 < new.R < R_Omega:
                raise GeometryError(f"radius {new.R} left (0, R_Omega)")
            check_well_posed(model, new.u_Gamma, new.R, R_ref)
        except (WellPosednessError, GeometryError):
            raise
        prev, state = (state if h == config.dt else None), new
        k += 1
        if k % config.record_every == 0 or state.t >= config.t_end * (1 - 1e-12):
            record(state, V, du)
            states.append(state)
        if config.stop_deviation is not None and abs(state.R - R_ref) > config.stop_deviation * R_ref:
            aborted = "deviation"
            if k % config.record_every:
                record(state, V, du)
                states.append(state)
            break
        dt = config.dt
    return RunResult(states=states, diagnostics=diag, aborted=aborted, newton_iterations=total_its)


# --- perturbations and rate fitting -----------------------------------------

def perturbed_state(model, u_star, R_Omega, config, eps_R=1e-3, width=0.1):
    """Energy-preserving radial perturbation of the concentric equilibrium at ``u*``.

    The radius is set to ``R*(1 + eps_R)``.  With undercooling the temperature
    is a constant ``u_b``; without, the interface value satisfies the
    Gibbs-Thomson constraint and relaxes to ``u_b`` over ``width * R*``.  In both
    cases ``u_b`` is chosen so the discrete energy equals the equilibrium one,
    so the run returns to (or departs from) the same equilibrium.
    """
    eq_state = equilibrium_state(model, u_star, R_Omega, config)
    grid = Grid(model.n, R_Omega, config.cells, config.grading)
    E0 = energy(eq_state, model, grid)
    R_star = eq_state.R
    R0 = R_star * (1.0 + eps_R)
    if not 0 < R0 < R_Omega:
        raise GeometryError("perturbed radius outside (0, R_Omega)")
    r_in, r_out = grid.nodes(R0)
    if model.has_undercooling:
        uG = None
    else:
        target = (model.n - 1) / R0
        f = lambda u: model.lambda_derivs(u)[0] - target
        uG = optimize.newton(f, u_star, fprime=lambda u: model.lambda_derivs(u)[1], tol=1e-15, maxiter=50)

    def build(ub):
        if uG is None:
            return RadialState(0.0, R0, np.full_like(r_in, ub), np.full_like(r_out, ub))
        w_in = np.exp(-(((r_in - R0) / (width * R_star)) ** 2))
        w_out = np.exp(-(((r_out - R0) / (width * R_star)) ** 2))
        return RadialState(0.0, R0, ub + (uG - ub) * w_in, ub + (uG - ub) * w_out)

    span = 0.1 * min(u_star, model.u_c - u_star)
    g = lambda ub: energy(build(ub), model, grid) - E0
    ub = optimize.brentq(g, u_star - span, u_star + span, xtol=1e-15, rtol=1e-15)
    return build(ub)


@dataclass
class RateFit:
    rate: float
    window: tuple
    points: int


def fit_rate(t, R, R_ref, lo, hi):
    """Least-squares slope of ``log|R - R_ref|`` over samples with ``lo <= |R - R_ref|/R_ref <= hi``."""
    t = np.asarray(t)
    a = np.abs(np.asarray(R) - R_ref) / R_ref
    sel = (a >= lo) & (a <= hi) & (a > 0)
    if sel.sum() < 5:
        raise SolverError(f"too few samples in fitting window [{lo:g}, {hi:g}]")
    p = np.polyfit(t[sel], np.log(a[sel]), 1)
    return RateFit(rate=float(p[0]), window=(float(t[sel][0]), float(t[sel][-1])), points=int(sel.sum()))


@dataclass
class StabilityVerdict:
    name: str
    predicted_stable: bool
    observed_stable: bool
    fitted_rate: float
    spectral_rate: float
    relative_error: float
    energy_drift: float
    entropy_min_increment: float

    def to_dict(self):
        return asdict(self)


def stability_experiment(model, u_star, R_Omega, config=None, name="", eps_R=None):
    """Perturb the equilibrium radially, integrate and compare with the spectral l=0 rate."""
    config = config or SimConfig()
    domain = eq.DomainSpec.ball(model.n, R_Omega)
    point = eq.indicators(model, domain, u_star, 1)
    if not model.has_undercooling and abs(point.eta_star - 1.0) < NEAR_DEGENERATE:
        raise WellPosednessError("eta* within 1e-3 of 1: near-degenerate run refused")
    predicted_stable = point.predicted_positive_eigenvalues == 0
    geom, coeffs = spectral.setup(model, u_star, R_Omega)
    lam = spectral.principal_eigenvalue(geom, coeffs, 0)
    R_star = point.R_star
    if eps_R is None:
        eps_R = 1e-3 if lam < 0 else 1e-6
    t_end = config.t_end
    if lam > 0:
        cfg = replace(config, stop_deviation=5e-3, t_end=max(t_end, 12.0 / lam))
    else:
        cfg = replace(config, t_end=max(t_end, 18.0 / abs(lam)))
    state0 = perturbed_state(model, u_star, R_Omega, cfg, eps_R=eps_R)
    res = run(model, state0, R_Omega, cfg, R_star=R_star)
    d = res.diagnostics.arrays()
    if lam > 0:
        fit = fit_rate(d["t"], d["R"], R_star, 30 * eps_R, 3e-3)
        observed_stable = bool(abs(d["R"][-1] - R_star) < abs(d["R"][0] - R_star))
    else:
        R_ref = d["R"][-1]
        fit = fit_rate(d["t"], d["R"], R_ref, max(1e-6 * eps_R, 1e-12), 3e-2 * eps_R)
        observed_stable = bool(abs(d["R"][-1] - R_star) < 1e-2 * abs(d["R"][0] - R_star))
    E = d["E"]
    duration = d["t"][-1] - d["t"][0]
    drift = float(abs(E[-1] - E[0]) / abs(E[0]) / duration)
    return StabilityVerdict(
        name=name,
        predicted_stable=bool(predicted_stable),
        observed_stable=observed_stable,
        fitted_rate=fit.rate,
        spectral_rate=float(lam),
        relative_error=float(abs(fit.rate - lam) / abs(lam)),
        energy_drift=drift,
        entropy_min_increment=float(np.min(np.diff(d["Phi"]))),
    )


# --- configured initial data and sweeps -------------------------------------

PERTURBATION_KEYS = {"eps_R", "eps_u", "chi", "width"}


def initial_state(model, u_star, R_Omega, config, seed=None):
    """Initial data from ``config.perturbation``.

    Keys: ``eps_R`` (relative radius offset, default 0), ``eps_u`` (temperature
    amplitude relative to ``u*``, default 0), ``chi`` (``"bump"`` or ``"noise"``),
    ``width`` (bump width relative to ``R*``, default 0.1).  The radial part is
    energy preserving; the ``eps_u * u* * chi(r)`` part is added on top and
    vanishes at the interface, so the Gibbs-Thomson constraint still holds.
    """
    p = dict(config.perturbation or {})
    unknown = set(p) - PERTURBATION_KEYS
    if unknown:
        raise SchemaError(f"$.perturbation.{sorted(unknown)[0]}", "unknown perturbation key")
    eps_R = float(p.get("eps_R", 0.0))
    eps_u = float(p.get("eps_u", 0.0))
    width = float(p.get("width", 0.1))
    chi = p.get("chi", "bump")
    if chi not in ("bump", "noise"):
        raise SchemaError("$.perturbation.chi", "expected 'bump' or 'noise'")
    state = perturbed_state(model, u_star, R_Omega, config, eps_R=eps_R, width=width)
    if eps_u == 0.0:
        return state
    grid = Grid(model.n, R_Omega, config.cells, config.grading)
    r_in, r_out = grid.nodes(state.R)
    # chi vanishes at the interface node of each phase
    if chi == "noise":
        rng = np.random.default_rng(seed)
        c_in = rng.uniform(-1.0, 1.0, r_in.size)
        c_out = rng.uniform(-1.0, 1.0, r_out.size)
        c_in[-1] = c_out[0] = 0.0
    else:
        mid_in, mid_out = 0.5 * state.R, 0.5 * (state.R + R_Omega)
        c_in = np.exp(-(((r_in - mid_in) / (width * state.R)) ** 2))
        c_out = np.exp(-(((r_out - mid_out) / (width * state.R)) ** 2))
        c_in[-1] = c_out[0] = 0.0
    amp = eps_u * u_star
    return RadialState(0.0, state.R, state.u_inner + amp * c_in, state.u_outer + amp * c_out)


@dataclass
class SweepCase:
    name: str
    model: MaterialModel
    u_star: float
    R_Omega: float
    config: SimConfig
    eps_R: Optional[float] = None


def sweep_cases_from_dict(data, base_dir=".", load_model=None):
    """Parse ``{"cases": [{"name", "model", "u_star", "R_Omega", "config"?, "eps_R"?}]}``.

    ``model`` is either an inline model object or a path relative to ``base_dir``.
    """
    from . import material

    load_model = load_model or material.load_model
    if not isinstance(data, dict) or not isinstance(data.get("cases"), list):
        raise SchemaError("$.cases", "expected a list of cases")
    cases = []
    for i, c in enumerate(data["cases"]):
        where = f"$.cases[{i}]"
        if not isinstance(c, dict):
            raise SchemaError(where, "expected an object")
        for key in ("model", "u_star", "R_Omega"):
            if key not in c:
                raise SchemaError(f"{where}.{key}", "missing")
        m = c["model"]
        if isinstance(m, str):
            model = load_model(Path(base_dir) / m)
        else:
            model = material.model_from_dict(m)
        cfg = config_from_dict(c.get("config", {}))
        eps = c.get("eps_R")
        cases.append(
            SweepCase(str(c.get("name", f"case{i}")), model, float(c["u_star"]), float(c["R_Omega"]), cfg, None if eps is None else float(eps))
        )
    return cases


def stability_sweep(cases, threads=1):
    """Run ``stability_experiment`` per case; independent cases may run concurrently."""

    def one(case):
        try:
            v = stability_experiment(case.model, case.u_star, case.R_Omega, case.config, name=case.name, eps_R=case.eps_R)
            return {"name": case.name, **{k: v.to_dict()[k] for k in ("predicted_stable", "observed_stable", "fitted_rate", "spectral_rate", "relative_error", "energy_drift")}, "error": None}
        except (SolverError, WellPosednessError, GeometryError, DomainError) as exc:
            return {"name": case.name, "predicted_stable": None, "observed_stable": None, "fitted_rate": None, "spectral_rate": None, "relative_error": None, "energy_drift": None, "error": f"{type(exc).__name__}: {exc}"}

    if threads > 1:
        from concurrent.futures import ThreadPoolExecutor

        with ThreadPoolExecutor(max_workers=threads) as pool:
            return list(pool.map(one, cases))
    return [one(c) for c in cases]
