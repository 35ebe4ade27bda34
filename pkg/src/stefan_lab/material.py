"""Thermodynamic coefficient functions and the quantities derived from them.

A :class:`MaterialModel` bundles the two bulk free energies ``psi1``, ``psi2``,
the bulk conductivities ``d1``, ``d2``, the surface tension ``sigma``, the
surface conductivity ``d_gamma`` and the kinetic coefficient ``gamma``.  Every
coefficient belongs to a small set of parametric families with closed-form
derivatives up to third order, so quotient quantities such as
``lambda = phi / sigma`` and its derivatives are exact.

Sign conventions: ``phi = psi2 - psi1`` (jump from the disperse phase 1 to the
matrix phase 2), curvature of a sphere of radius ``R`` is ``-(n-1)/R``.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from functools import cached_property
from pathlib import Path
from typing import Callable, Optional

import numpy as np

from .errors import DomainError, MeltingPointError, QuadratureError, SchemaError

FAMILIES = ("constant", "affine", "ulogu", "polynomial", "concave_power")

BRACKET_POINTS = 1024
BISECTION_TOL = 1e-12
QUAD_TOL = 1e-10


@dataclass(frozen=True)
class CoefficientFunction:
    """A coefficient from one of the named families.

    ``constant``       ``[c]``                 c
    ``affine``         ``[a0, a1]``            a0 + a1 u
    ``ulogu``          ``[c, a0, a1]``         c u ln u + a0 + a1 u
    ``polynomial``     ``[a0, ..., ak]``       sum a_j u^j, k <= 4
    ``concave_power``  ``[s0, u_c, p]``        s0 (1 - (u/u_c)^p), p >= 2
    """

    family: str
    params: tuple

    def __post_init__(self):
        object.__setattr__(self, "params", tuple(float(p) for p in self.params))
        nparam = {"constant": 1, "affine": 2, "ulogu": 3, "concave_power": 3}
        if self.family not in FAMILIES:
            raise SchemaError("family", f"unknown family {self.family!r}; expected one of {FAMILIES}")
        if self.family == "polynomial":
            if not 1 <= len(self.params) <= 5:
                raise SchemaError("params", "polynomial takes 1 to 5 coefficients")
        elif len(self.params) != nparam[self.family]:
            raise SchemaError("params", f"{self.family} takes {nparam[self.family]} parameters")
        if self.family == "concave_power":
            if self.params[2] < 2:
                raise SchemaError("params", "concave_power exponent must be >= 2")
            if self.params[1] <= 0:
                raise SchemaError("params", "concave_power u_c must be positive")

    @classmethod
    def constant(cls, c):
        return cls("constant", (c,))

    def derivs(self, u):
        """Return ``(f, f', f'', f''')`` at ``u`` (scalar or array; complex input allowed)."""
        u = np.asarray(u)
        if not np.iscomplexobj(u):
            u = u.astype(float)
        p = self.params
        zero = np.zeros_like(u)
        if self.family == "constant":
            return zero + p[0], zero, zero, zero
        if self.family == "affine":
            return p[0] + p[1] * u, zero + p[1], zero, zero
        if self.family == "ulogu":
            c, a0, a1 = p
            lu = np.log(u)
            return c * u * lu + a0 + a1 * u, c * (lu + 1.0) + a1, c / u, -c / u**2
        if self.family == "polynomial":
            coef = np.polynomial.Polynomial(p)
            return coef(u), coef.deriv(1)(u), coef.deriv(2)(u), coef.deriv(3)(u)
        s0, uc, q = p
        x = u / uc
        return (
            s0 * (1.0 - x**q),
            -s0 * q * x ** (q - 1) / uc,
            -s0 * q * (q - 1) * x ** (q - 2) / uc**2,
            -s0 * q * (q - 1) * (q - 2) * x ** (q - 3) / uc**3,
        )

    def __call__(self, u):
        return self.derivs(u)[0]

    def to_dict(self):
        return {"family": self.family, "params": list(self.params)}


@dataclass(frozen=True)
class DerivedQuantities:
    u: float
    eps1: float
    eps2: float
    eta1: float
    eta2: float
    kappa1: float
    kappa2: float
    l: float
    phi: float
    lam: float
    dlam: float
    d2lam: float
    eta_gamma: float
    eps_gamma: float
    kappa_gamma: float
    l_gamma: float
    omega_gamma: float


@dataclass(frozen=True)
class Violation:
    invariant: str
    temperatures: tuple

    def __str__(self):
        shown = ", ".join(f"{t:.6g}" for t in self.temperatures[:5])
        more = "" if len(self.temperatures) <= 5 else f" (+{len(self.temperatures) - 5} more)"
        return f"{self.invariant} violated at u = {shown}{more}"


@dataclass(frozen=True)
class ValidationReport:
    ok: bool
    violations: tuple = ()
    u_m: Optional[float] = None

    def __str__(self):
        if self.ok:
            return f"pass (u_m = {self.u_m:.12g})"
        return "fail:\n" + "\n".join(f"  - {v}" for v in self.violations)


@dataclass(frozen=True)
class MaterialModel:
    psi1: CoefficientFunction
    psi2: CoefficientFunction
    d1: CoefficientFunction
    d2: CoefficientFunction
    sigma: CoefficientFunction
    d_gamma: CoefficientFunction
    gamma: Optional[CoefficientFunction]
    u_c: float
    n: int = 3
    meta: dict = field(default_factory=dict, compare=False, hash=False)

    @property
    def has_undercooling(self):
        return self.gamma is not None

    def check_temperature(self, u):
        ua = np.asarray(u, dtype=float)
        if np.any(~(ua > 0.0)) or np.any(~(ua < self.u_c)):
            raise DomainError(f"temperature outside (0, u_c={self.u_c}): {u}")

    # --- raw combinations -------------------------------------------------
    def phi_derivs(self, u):
        a = self.psi1.derivs(u)
        b = self.psi2.derivs(u)
        return tuple(y - x for x, y in zip(a, b))

    def lambda_derivs(self, u):
        """``(lambda, lambda', lambda'')`` by the exact quotient rule."""
        f, f1, f2, _ = self.phi_derivs(u)
        s, s1, s2, _ = self.sigma.derivs(u)
        lam = f / s
        dlam = (f1 - lam * s1) / s
        d2lam = (f2 - 2.0 * dlam * s1 - lam * s2) / s
        return lam, dlam, d2lam

    def kappa(self, u):
        """Bulk heat capacities ``(kappa1, kappa2)``."""
        return -u * self.psi1.derivs(u)[2], -u * self.psi2.derivs(u)[2]

    def kappa_gamma(self, u):
        return -u * self.sigma.derivs(u)[2]

    def dkappa_gamma(self, u):
        _, _, s2, s3 = self.sigma.derivs(u)
        return -s2 - u * s3

    def eps(self, u):
        """Bulk internal energies ``(eps1, eps2)`` with ``eps = psi - u psi'``."""
        p1, q1 = self.psi1.derivs(u)[:2]
        p2, q2 = self.psi2.derivs(u)[:2]
        return p1 - u * q1, p2 - u * q2

    def eta(self, u):
        """Bulk entropies ``(eta1, eta2)``."""
        return -self.psi1.derivs(u)[1], -self.psi2.derivs(u)[1]

    def eps_gamma(self, u):
        s, s1 = self.sigma.derivs(u)[:2]
        return s - u * s1

    def eta_gamma(self, u):
        return -self.sigma.derivs(u)[1]

    def latent_heat(self, u):
        return u * self.phi_derivs(u)[1]

    def surface_latent_heat(self, u):
        return u * self.sigma.derivs(u)[1]

    def gamma_value(self, u):
        if self.gamma is None:
            u = np.asarray(u)
            return np.zeros_like(u if np.iscomplexobj(u) else u.astype(float))
        return self.gamma(u)

    def omega_gamma(self, u):
        _, dlam, _ = self.lambda_derivs(u)
        # kappa_Gamma = 0 (invalid model) gives inf without a warning
        with np.errstate(divide="ignore"):
            return u * self.sigma(u) * dlam**2 / self.kappa_gamma(u)

    @cached_property
    def u_m(self):
        """Melting temperature: the unique zero of phi in (0, u_c)."""
        return find_melting_point(self)

    # --- serialisation ----------------------------------------------------
    def to_dict(self):
        return {
            "n": self.n,
            "u_c": self.u_c,
            "phases": [
                {"psi": self.psi1.to_dict(), "d": self.d1.to_dict()},
                {"psi": self.psi2.to_dict(), "d": self.d2.to_dict()},
            ],
            "surface": {
                "sigma": self.sigma.to_dict(),
                "d_gamma": self.d_gamma.to_dict(),
                "gamma": None if self.gamma is None else self.gamma.to_dict(),
            },
        }


# --- JSON ingestion -------------------------------------------------------

def _family_from(obj, path):
    if not isinstance(obj, dict):
        raise SchemaError(path, "expected an object {family, params}")
    for key in ("family", "params"):
        if key not in obj:
            raise SchemaError(f"{path}.{key}", "missing")
    if not isinstance(obj["params"], list) or not all(
        isinstance(p, (int, float)) and not isinstance(p, bool) for p in obj["params"]
    ):
        raise SchemaError(f"{path}.params", "expected a list of numbers")
    try:
        return CoefficientFunction(obj["family"], tuple(obj["params"]))
    except SchemaError as exc:
        raise SchemaError(f"{path}.{exc.path}", str(exc).split(": ", 1)[1]) from None


def model_from_dict(data):
    if not isinstance(data, dict):
        raise SchemaError("$", "model must be a JSON object")
    for key in ("u_c", "phases", "surface"):
        if key not in data:
            raise SchemaError(f"$.{key}", "missing")
    n = data.get("n", 3)
    if not isinstance(n, int) or isinstance(n, bool) or n < 2:
        raise SchemaError("$.n", "space dimension must be an integer >= 2")
    u_c = data["u_c"]
    if not isinstance(u_c, (int, float)) or u_c <= 0:
        raise SchemaError("$.u_c", "must be a positive number")
    phases = data["phases"]
    if not isinstance(phases, list) or len(phases) != 2:
        raise SchemaError("$.phases", "expected exactly two phases")
    bulk = []
    for i, ph in enumerate(phases):
        if not isinstance(ph, dict):
            raise SchemaError(f"$.phases[{i}]", "expected an object")
        for key in ("psi", "d"):
            if key not in ph:
                raise SchemaError(f"$.phases[{i}].{key}", "missing")
        bulk.append((_family_from(ph["psi"], f"$.phases[{i}].psi"), _family_from(ph["d"], f"$.phases[{i}].d")))
    surf = data["surface"]
    if not isinstance(surf, dict):
        raise SchemaError("$.surface", "expected an object")
    for key in ("sigma", "d_gamma"):
        if key not in surf:
            raise SchemaError(f"$.surface.{key}", "missing")
    gamma = surf.get("gamma")
    return MaterialModel(
        psi1=bulk[0][0],
        psi2=bulk[1][0],
        d1=bulk[0][1],
        d2=bulk[1][1],
        sigma=_family_from(surf["sigma"], "$.surface.sigma"),
        d_gamma=_family_from(surf["d_gamma"], "$.surface.d_gamma"),
        gamma=None if gamma is None else _family_from(gamma, "$.surface.gamma"),
        u_c=float(u_c),
        n=n,
    )


def load_model(path):
    path = Path(path)
    try:
        data = json.loads(path.read_text())
    except json.JSONDecodeError as exc:
        raise SchemaError("$", f"invalid JSON: {exc}") from None
    return model_from_dict(data)


# --- operations -----------------------------------------------------------

def _bisect(f, a, b, fa, tol=BISECTION_TOL):
    while b - a > tol:
        c = 0.5 * (a + b)
        fc = f(c)
        if fc == 0.0:
            return c
        if (fc > 0) == (fa > 0):
            a, fa = c, fc
        else:
            b = c
    return 0.5 * (a + b)


def find_melting_point(model, points=BRACKET_POINTS):
    """Locate the unique zero of phi by sign-change bracketing and bisection."""
    u = model.u_c * (np.arange(points) + 0.5) / points
    f = model.phi_derivs(u)[0]
    s = np.sign(f)
    if np.any(s == 0):
        # exact grid hit; count it as a crossing only if the sign flips around it
        idx = np.flatnonzero(s == 0)
        if len(idx) == 1 and 0 < idx[0] < points - 1 and s[idx[0] - 1] * s[idx[0] + 1] < 0:
            return float(u[idx[0]])
        raise MeltingPointError("phi vanishes on the bracketing grid without a clean sign change")
    flips = np.flatnonzero(s[:-1] * s[1:] < 0)
    if len(flips) == 0:
        raise MeltingPointError("phi has no sign change in (0, u_c)")
    if len(flips) > 1:
        raise MeltingPointError(f"phi changes sign {len(flips)} times in (0, u_c); the melting point must be unique")
    k = flips[0]
    phi = lambda x: float(model.phi_derivs(x)[0])
    return _bisect(phi, float(u[k]), float(u[k + 1]), float(f[k]))


def validate(model, samples=2048):
    """Check the standing assumptions on a dense grid of ``(0, u_c)``.

    Returns a :class:`ValidationReport`; a phi without a unique bracketable
    zero raises :class:`MeltingPointError` instead.
    """
    if samples < 2:
        raise ValueError("samples must be >= 2")
    u = model.u_c * (np.arange(samples) + 0.5) / samples
    k1, k2 = model.kappa(u)
    checks = {
        "kappa1 > 0": k1 > 0,
        "kappa2 > 0": k2 > 0,
        "d1 > 0": model.d1(u) > 0,
        "d2 > 0": model.d2(u) > 0,
        "d_gamma > 0": model.d_gamma(u) > 0,
        "kappa_gamma > 0": model.kappa_gamma(u) > 0,
        "sigma > 0": model.sigma(u) > 0,
    }
    if model.gamma is not None:
        checks["gamma > 0"] = model.gamma(u) > 0
    violations = [
        Violation(name, tuple(float(x) for x in u[~mask]))
        for name, mask in checks.items()
        if not np.all(mask)
    ]
    u_m = find_melting_point(model)
    if not model.sigma(u_m) > 0:
        violations.append(Violation("sigma(u_m) > 0", (u_m,)))
    # populate the cache so later calls reuse the validated value
    model.__dict__["u_m"] = u_m
    return ValidationReport(ok=not violations, violations=tuple(violations), u_m=u_m)


def derived(model, u):
    """All derived bulk and surface quantities at temperature ``u``."""
    model.check_temperature(u)
    u = float(u)
    eps1, eps2 = model.eps(u)
    eta1, eta2 = model.eta(u)
    k1, k2 = model.kappa(u)
    lam, dlam, d2lam = model.lambda_derivs(u)
    return DerivedQuantities(
        u=u,
        eps1=float(eps1),
        eps2=float(eps2),
        eta1=float(eta1),
        eta2=float(eta2),
        kappa1=float(k1),
        kappa2=float(k2),
        l=float(model.latent_heat(u)),
        phi=float(model.phi_derivs(u)[0]),
        lam=float(lam),
        dlam=float(dlam),
        d2lam=float(d2lam),
        eta_gamma=float(model.eta_gamma(u)),
        eps_gamma=float(model.eps_gamma(u)),
        kappa_gamma=float(model.kappa_gamma(u)),
        l_gamma=float(model.surface_latent_heat(u)),
        omega_gamma=float(model.omega_gamma(u)),
    )


def adaptive_simpson(f: Callable[[float], float], a, b, tol=QUAD_TOL, max_depth=50):
    """Adaptive Simpson quadrature with absolute tolerance ``tol``."""
    if a == b:
        return 0.0
    sign = 1.0
    if b < a:
        a, b, sign = b, a, -1.0

    def simpson(fa, fm, fb, h):
        return h * (fa + 4.0 * fm + fb) / 6.0

    def recurse(a, b, fa, fm, fb, whole, tol, depth):
        m = 0.5 * (a + b)
        lm, rm = 0.5 * (a + m), 0.5 * (m + b)
        flm, frm = f(lm), f(rm)
        left = simpson(fa, flm, fm, m - a)
        right = simpson(fm, frm, fb, b - m)
        delta = left + right - whole
        if abs(delta) <= 15.0 * tol:
            return left + right + delta / 15.0
        if depth <= 0:
            raise QuadratureError(f"adaptive Simpson did not converge on [{a:.6g}, {b:.6g}]")
        return recurse(a, m, fa, flm, fm, left, 0.5 * tol, depth - 1) + recurse(
            m, b, fm, frm, fb, right, 0.5 * tol, depth - 1
        )

    fa, fb, fm = f(a), f(b), f(0.5 * (a + b))
    return sign * recurse(a, b, fa, fm, fb, simpson(fa, fm, fb, b - a), tol, max_depth)


def _dgamma_over_kgamma_deriv(model, s):
    dg, dg1 = model.d_gamma.derivs(s)[:2]
    kg = model.kappa_gamma(s)
    return dg1 / kg - dg * model.dkappa_gamma(s) / kg**2


def f_gamma(model, s, tol=QUAD_TOL):
    """Antiderivative of ``lambda (d_Gamma/kappa_Gamma)'`` vanishing at ``u_m``."""
    model.check_temperature(s)
    integrand = lambda t: float(model.lambda_derivs(t)[0] * _dgamma_over_kgamma_deriv(model, t))
    return adaptive_simpson(integrand, model.u_m, float(s), tol)


def h_gamma(model, s, tol=QUAD_TOL):
    """Antiderivative of ``d_Gamma lambda' / kappa_Gamma`` vanishing at ``u_m``."""
    model.check_temperature(s)
    integrand = lambda t: float(model.d_gamma(t) * model.lambda_derivs(t)[1] / model.kappa_gamma(t))
    return adaptive_simpson(integrand, model.u_m, float(s), tol)


def example_model(gamma=None, n=3):
    """The reference model used throughout the docs and tests.

    ``psi1 = -u ln u``, ``psi2 = -2 u ln u + 1 - u`` so ``phi = 1 - u - u ln u``
    with ``u_m = 1``; ``sigma = 1 - u^2/4`` on ``u_c = 2``.
    """
    c = CoefficientFunction
    return MaterialModel(
        psi1=c("ulogu", (-1.0, 0.0, 0.0)),
        psi2=c("ulogu", (-2.0, 1.0, -1.0)),
        d1=c.constant(1.0),
        d2=c.constant(1.0),
        sigma=c("concave_power", (1.0, 2.0, 2.0)),
        d_gamma=c.constant(1.0),
        gamma=None if gamma is None else c.constant(gamma),
        u_c=2.0,
        n=n,
    )


def unit_sphere_area(n):
    """Area of the unit sphere in R^n, ``2 pi^(n/2) / Gamma(n/2)``."""
    return 2.0 * math.pi ** (n / 2) / _gamma_half_integer(n / 2)


def _gamma_half_integer(x):
    # Gamma at positive integers and half-integers, exact recurrences
    if x == int(x):
        return float(math.factorial(int(x) - 1))
    k = int(x - 0.5)
    val = math.sqrt(math.pi)
    for j in range(k):
        val *= j + 0.5
    return val
