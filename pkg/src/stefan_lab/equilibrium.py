"""Equilibria (m disjoint spheres of equal radius), their energy and stability indicators.

For a temperature ``u`` the Gibbs-Thomson law fixes the common radius
``R(u) = (n-1) sigma(u) / phi(u)``.  The total energy along this family is
``E_e(u) = delta(u) - u delta'(u)`` with
``delta = |Omega| psi2 + c_{n,m} sigma^n / phi^(n-1)``, and the sign of
``E_e'`` agrees with the sign of ``zeta - 1``.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field, asdict
from pathlib import Path
from typing import Optional

import numpy as np

from .errors import DomainError, NoEquilibriumError, PoleError, SchemaError
from .material import MaterialModel, unit_sphere_area

SCAN_POINTS = 2048
ROOT_TOL = 1e-12
DEGENERACY_TOL = 1e-10


@dataclass(frozen=True)
class DomainSpec:
    """Bulk domain data: dimension, volume, and max radius ``R_m`` for m spheres."""

    n: int
    omega_volume: float
    R_m: dict = field(default_factory=dict)

    def __post_init__(self):
        if self.n < 2:
            raise DomainError("space dimension must be >= 2")
        if not self.omega_volume > 0:
            raise DomainError("|Omega| must be positive")
        radii = {int(k): float(v) for k, v in self.R_m.items()}
        if any(v <= 0 for v in radii.values()):
            raise DomainError("R_m must be positive")
        ms = sorted(radii)
        if any(radii[a] < radii[b] for a, b in zip(ms, ms[1:])):
            raise DomainError("R_m must be nonincreasing in m")
        object.__setattr__(self, "R_m", radii)

    @classmethod
    def ball(cls, n, R_Omega, extra=None):
        """Concentric geometry: Omega is the ball of radius ``R_Omega``; ``R_1 = R_Omega``."""
        radii = {1: float(R_Omega)}
        if extra:
            radii.update({int(k): float(v) for k, v in extra.items()})
        return cls(n=n, omega_volume=unit_sphere_area(n) * R_Omega**n / n, R_m=radii)

    def max_radius(self, m):
        try:
            return self.R_m[int(m)]
        except KeyError:
            raise DomainError(f"R_m not supplied for m={m}") from None


def domain_from_dict(data):
    if not isinstance(data, dict):
        raise SchemaError("$", "domain must be a JSON object")
    n = data.get("n")
    if not isinstance(n, int) or isinstance(n, bool):
        raise SchemaError("$.n", "missing or not an integer")
    extra = data.get("R_m", {})
    if not isinstance(extra, dict):
        raise SchemaError("$.R_m", "expected an object mapping m to radius")
    if "R_Omega" in data:
        return DomainSpec.ball(n, float(data["R_Omega"]), extra)
    if "omega_volume" not in data:
        raise SchemaError("$.omega_volume", "missing (or give R_Omega for a ball)")
    return DomainSpec(n=n, omega_volume=float(data["omega_volume"]), R_m=extra)


def load_domain(path):
    try:
        data = json.loads(Path(path).read_text())
    except json.JSONDecodeError as exc:
        raise SchemaError("$", f"invalid JSON: {exc}") from None
    return domain_from_dict(data)


@dataclass(frozen=True)
class RadiusResult:
    R: float
    feasible: bool


@dataclass(frozen=True)
class EquilibriumPoint:
    u_star: float
    m: int
    n: int
    R_star: float
    sigma_star: float
    l_star: float
    zeta_star: float
    eta_star: float
    gamma_star: float
    kappa1: float
    kappa2: float
    kappa_gamma: float
    interface_area: float
    disperse_volume: float
    heat_capacity: float  # (kappa | 1)_Omega
    feasible: bool
    l_star_nonzero: bool
    eta_not_one: bool
    degenerate: bool
    predicted_positive_eigenvalues: Optional[int]

    @property
    def well_posed(self):
        return self.l_star_nonzero and self.eta_not_one

    def to_dict(self):
        d = asdict(self)
        d["well_posed"] = self.well_posed
        return d


def _check_dims(model, domain):
    if model.n != domain.n:
        raise DomainError(f"model dimension n={model.n} differs from domain n={domain.n}")


def radius(model, u):
    """``(n-1) sigma(u) / phi(u)`` with pole and sign checks."""
    model.check_temperature(u)
    phi = float(model.phi_derivs(u)[0])
    sig = float(model.sigma(u))
    if phi == 0.0:
        raise PoleError(f"phi(u) = 0 at u = {u}: equilibrium radius has a pole")
    R = (model.n - 1) * sig / phi
    if not R > 0:
        raise NoEquilibriumError(f"sigma/phi = {sig / phi:.6g} <= 0 at u = {u}")
    return R


def equilibrium_radius(model, domain, u, m=1):
    _check_dims(model, domain)
    R = radius(model, u)
    return RadiusResult(R=R, feasible=R < domain.max_radius(m))


def c_nm(n, m):
    return m * unit_sphere_area(n) * (n - 1) ** (n - 1) / n


def _delta_derivs(model, domain, u, m):
    """delta and delta' in closed form."""
    n = model.n
    c = c_nm(n, m)
    p2, dp2 = model.psi2.derivs(u)[:2]
    f, f1 = model.phi_derivs(u)[:2]
    s, s1 = model.sigma.derivs(u)[:2]
    g = s**n / f ** (n - 1)
    dg = n * s ** (n - 1) * s1 / f ** (n - 1) - (n - 1) * s**n * f1 / f**n
    vol = domain.omega_volume
    return vol * p2 + c * g, vol * dp2 + c * dg


def equilibrium_energy(model, domain, u, m=1):
    """Total energy ``E_e(u) = delta(u) - u delta'(u)`` of the m-sphere equilibrium."""
    _check_dims(model, domain)
    radius(model, u)
    d, dd = _delta_derivs(model, domain, u, m)
    return float(d - u * dd)


def _geometry(model, domain, u, m):
    n = model.n
    R = radius(model, u)
    wn = unit_sphere_area(n)
    area = m * wn * R ** (n - 1)
    vol1 = m * wn * R**n / n
    k1, k2 = model.kappa(u)
    heat = float(k1 * vol1 + k2 * (domain.omega_volume - vol1))
    return R, area, vol1, heat


def equilibrium_energy_derivative(model, domain, u, m=1):
    """Closed-form ``E_e'(u)``."""
    _check_dims(model, domain)
    n = model.n
    R, area, _, heat = _geometry(model, domain, u, m)
    f1 = model.phi_derivs(u)[1]
    s, s1 = model.sigma.derivs(u)[:2]
    H = -(n - 1) / R
    kg = model.kappa_gamma(u)
    return float(heat + area * kg - R**2 * area / ((n - 1) * s) * u * (f1 + s1 * H) ** 2)


def indicators(model, domain, u, m=1):
    """Fill an :class:`EquilibriumPoint` with zeta*, eta*, l* and the predicted count."""
    _check_dims(model, domain)
    n = model.n
    R, area, vol1, heat = _geometry(model, domain, u, m)
    sig = float(model.sigma(u))
    _, dlam, _ = model.lambda_derivs(u)
    l_star = float(sig * dlam)
    k1, k2 = (float(x) for x in model.kappa(u))
    kg = float(model.kappa_gamma(u))
    gam = float(model.gamma_value(u))
    denom = u * l_star**2 * R**2
    if l_star == 0.0:
        zeta = eta = math.inf
    else:
        zeta = (n - 1) * sig * (heat + kg * area) / (denom * area)
        eta = (n - 1) * sig * kg / denom
    undercooled = model.has_undercooling
    l_ok = l_star != 0.0
    eta_ok = undercooled or abs(eta - 1.0) > DEGENERACY_TOL
    degenerate = abs(zeta - 1.0) <= DEGENERACY_TOL or not eta_ok
    predicted = None
    if not degenerate and (l_ok or undercooled):
        if not undercooled and eta > 1.0:
            predicted = 0
        else:
            predicted = m if zeta > 1.0 else m - 1
    if not l_ok and not undercooled:
        predicted = None
    return EquilibriumPoint(
        u_star=float(u),
        m=int(m),
        n=n,
        R_star=R,
        sigma_star=sig,
        l_star=l_star,
        zeta_star=float(zeta),
        eta_star=float(eta),
        gamma_star=gam,
        kappa1=k1,
        kappa2=k2,
        kappa_gamma=kg,
        interface_area=area,
        disperse_volume=vol1,
        heat_capacity=heat,
        feasible=R < domain.max_radius(m),
        l_star_nonzero=l_ok,
        eta_not_one=eta_ok,
        degenerate=degenerate,
        predicted_positive_eigenvalues=predicted,
    )


def zeta(model, domain, u, m=1):
    return indicators(model, domain, u, m).zeta_star


def feasible_mask(model, domain, u, m=1):
    """Vectorised membership of ``u`` in the window ``0 < sigma/phi < R_m/(n-1)``."""
    u = np.asarray(u, dtype=float)
    ratio = np.full_like(u, np.nan)
    phi = model.phi_derivs(u)[0]
    ok = phi != 0
    ratio[ok] = model.sigma(u[ok]) / phi[ok]
    with np.errstate(invalid="ignore"):
        return (ratio > 0) & (ratio < domain.max_radius(m) / (model.n - 1))


def feasible_window(model, domain, m=1, points=SCAN_POINTS):
    """Sample points of ``(0, u_c)`` together with the feasibility mask."""
    u = model.u_c * (np.arange(points) + 0.5) / points
    return u, feasible_mask(model, domain, u, m)


@dataclass(frozen=True)
class EnergyRoot:
    u_star: float
    point: EquilibriumPoint
    energy_slope: float


def solve_for_energy(model, domain, E0, m=1, points=SCAN_POINTS):
    """All equilibrium temperatures with ``E_e(u) = E0`` in the feasible window.

    Sign scan on ``points`` samples, then bisection to ``1e-12``.  Returns an
    empty list when the window is empty or no crossing exists.
    """
    _check_dims(model, domain)
    u, mask = feasible_window(model, domain, m, points)
    roots = []
    if not mask.any():
        return roots
    g = np.full_like(u, np.nan)
    for i in np.flatnonzero(mask):
        g[i] = equilibrium_energy(model, domain, u[i], m) - E0
    for i in range(points - 1):
        if not (mask[i] and mask[i + 1]):
            continue
        a, b = u[i], u[i + 1]
        ga, gb = g[i], g[i + 1]
        if ga == 0.0:
            roots.append(a)
            continue
        if ga * gb < 0:
            f = lambda x: equilibrium_energy(model, domain, x, m) - E0
            while b - a > ROOT_TOL:
                c = 0.5 * (a + b)
                gc = f(c)
                if gc == 0.0:
                    a = b = c
                    break
                if (gc > 0) == (ga > 0):
                    a, ga = c, gc
                else:
                    b = c
            roots.append(0.5 * (a + b))
    if mask[-1] and g[-1] == 0.0:
        roots.append(u[-1])
    return [
        EnergyRoot(
            u_star=float(r),
            point=indicators(model, domain, r, m),
            energy_slope=equilibrium_energy_derivative(model, domain, r, m),
        )
        for r in roots
    ]


def bifurcation_curve(model, domain, m=1, points=SCAN_POINTS):
    """Rows ``(u, R, E_e, E_e', zeta, eta, l*, feasible, predicted)`` over (0, u_c).

    Temperatures without a positive radius are skipped.
    """
    u = model.u_c * (np.arange(points) + 0.5) / points
    rows = []
    for x in u:
        try:
            p = indicators(model, domain, x, m)
        except (PoleError, NoEquilibriumError):
            continue
        rows.append(
            {
                "u": float(x),
                "R": p.R_star,
                "E_e": equilibrium_energy(model, domain, x, m),
                "E_e_prime": equilibrium_energy_derivative(model, domain, x, m),
                "zeta": p.zeta_star,
                "eta": p.eta_star,
                "l_star": p.l_star,
                "feasible": p.feasible,
                "predicted_unstable": p.predicted_positive_eigenvalues,
            }
        )
    return rows
