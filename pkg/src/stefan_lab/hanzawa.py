"""Height-function geometry over a reference sphere of radius S.

A surface is written as ``x = (S + rho(p)) p/|p|`` over the reference sphere.
With the outward normal ``nu_S`` the Weingarten map is ``L_S = -P/S`` (``P``
the tangential projection), hence ``M0 = (I - rho L_S)^-1 = S/(S + rho)`` and

    alpha = M0 grad_S rho,   beta = (1 + |alpha|^2)^-1/2,   nu = beta (nu_S - alpha),
    H = beta G : hess_S rho + beta F,
    G = M0^2 (I - beta^2 alpha x alpha),   F = -((n-1) + beta^2 |alpha|^2)/(S + rho).

Sign convention: ``H = -div nu``, so a sphere of radius R has ``H = -(n-1)/R``.

n = 3 uses a latitude-longitude grid with cell-centred latitudes (no node on
the poles); ghost rows across a pole are filled by the reflection
``rho(-theta, phi) = rho(theta, phi + pi)``.  n = 2 uses a periodic angle grid.
All angular derivatives are fourth-order central differences.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field, asdict

import numpy as np

from .errors import DomainError

GHOST = 2
RHO_GATE = 0.25  # |rho| <= S/4
GRAD_GATE = 0.125  # |grad_S rho| <= 1/8


@dataclass(frozen=True)
class ReferenceSphere:
    n: int = 3
    S: float = 1.0
    n_theta: int = 64
    n_phi: int = 128

    def __post_init__(self):
        if self.n not in (2, 3):
            raise DomainError("reference spheres are supported for n = 2 and n = 3")
        if not self.S > 0:
            raise DomainError("reference radius must be positive")
        if self.n == 3 and (self.n_phi % 2 or self.n_theta < 4 or self.n_phi < 8):
            raise DomainError("need an even n_phi >= 8 and n_theta >= 4")
        if self.n == 2 and self.n_phi < 8:
            raise DomainError("need n_phi >= 8")

    @property
    def theta(self):
        return (np.arange(self.n_theta) + 0.5) * np.pi / self.n_theta

    @property
    def phi(self):
        return np.arange(self.n_phi) * 2.0 * np.pi / self.n_phi

    def mesh(self):
        """Angle arrays with grid shape ``(n_theta, n_phi)`` (n=3) or ``(n_phi,)`` (n=2)."""
        if self.n == 2:
            return self.phi
        return np.meshgrid(self.theta, self.phi, indexing="ij")

    def unit_points(self):
        """``nu_S`` at the grid points, last axis Cartesian."""
        if self.n == 2:
            p = self.phi
            return np.stack([np.cos(p), np.sin(p)], axis=-1)
        t, p = self.mesh()
        return np.stack([np.sin(t) * np.cos(p), np.sin(t) * np.sin(p), np.cos(t)], axis=-1)

    def frame(self):
        """Orthonormal tangent frame (``e_theta``, ``e_phi``) or ``e_phi`` for n=2."""
        if self.n == 2:
            p = self.phi
            return (np.stack([-np.sin(p), np.cos(p)], axis=-1),)
        t, p = self.mesh()
        e_t = np.stack([np.cos(t) * np.cos(p), np.cos(t) * np.sin(p), -np.sin(t)], axis=-1)
        e_p = np.stack([-np.sin(p), np.cos(p), np.zeros_like(p)], axis=-1)
        return e_t, e_p


# --- fourth-order stencils --------------------------------------------------

def _d1(f, h, axis):
    fp1, fm1 = np.roll(f, -1, axis), np.roll(f, 1, axis)
    fp2, fm2 = np.roll(f, -2, axis), np.roll(f, 2, axis)
    return (-fp2 + 8 * fp1 - 8 * fm1 + fm2) / (12 * h)


def _d2(f, h, axis):
    fp1, fm1 = np.roll(f, -1, axis), np.roll(f, 1, axis)
    fp2, fm2 = np.roll(f, -2, axis), np.roll(f, 2, axis)
    return (-fp2 + 16 * fp1 - 30 * f + 16 * fm1 - fm2) / (12 * h * h)


def _extend_poles(f):
    """Pad a ``(n_theta, n_phi)`` field with ghost rows reflected across both poles."""
    half = f.shape[1] // 2
    north = np.roll(f[GHOST - 1 :: -1], half, axis=1)  # rows -1, -2 -> reversed
    south = np.roll(f[: -GHOST - 1 : -1], half, axis=1)
    return np.concatenate([north, f, south], axis=0)


@dataclass
class AngularDerivatives:
    """Angular derivatives; for n=3 ``t``/``p`` are theta/phi, for n=2 only ``p``."""

    f: np.ndarray
    p: np.ndarray
    pp: np.ndarray
    t: np.ndarray = None
    tt: np.ndarray = None
    tp: np.ndarray = None


def angular_derivatives(sphere, rho):
    rho = np.asarray(rho, dtype=float)
    hp = 2 * np.pi / sphere.n_phi
    if sphere.n == 2:
        if rho.shape != (sphere.n_phi,):
            raise DomainError(f"height field must have shape ({sphere.n_phi},)")
        return AngularDerivatives(f=rho, p=_d1(rho, hp, 0), pp=_d2(rho, hp, 0))
    if rho.shape != (sphere.n_theta, sphere.n_phi):
        raise DomainError(f"height field must have shape ({sphere.n_theta}, {sphere.n_phi})")
    ht = np.pi / sphere.n_theta
    ext = _extend_poles(rho)
    core = slice(GHOST, GHOST + sphere.n_theta)
    f_t = _d1(ext, ht, 0)
    f_p = _d1(ext, hp, 1)
    return AngularDerivatives(
        f=rho,
        t=f_t[core],
        p=f_p[core],
        tt=_d2(ext, ht, 0)[core],
        pp=_d2(ext, hp, 1)[core],
        tp=_d1(f_p, ht, 0)[core],
    )


# --- geometry ---------------------------------------------------------------

@dataclass
class SurfaceGradient:
    """Orthonormal-frame components of ``grad_S rho`` and ``hess_S rho``."""

    grad: tuple
    hess: tuple  # (tt, tp, pp) for n=3, (pp,) for n=2


def surface_calculus(sphere, d):
    S = sphere.S
    if sphere.n == 2:
        return SurfaceGradient(grad=(d.p / S,), hess=(d.pp / S**2,))
    theta = sphere.mesh()[0]
    st, ct = np.sin(theta), np.cos(theta)
    cot = ct / st
    g = (d.t / S, d.p / (S * st))
    h = (
        d.tt / S**2,
        (d.tp - cot * d.p) / (S**2 * st),
        (d.pp / st**2 + cot * d.t) / S**2,
    )
    return SurfaceGradient(grad=g, hess=h)


def check_gates(sphere, rho, calc=None):
    """Enforce ``|rho| <= S/4`` and ``|grad_S rho| <= 1/8``."""
    rho = np.asarray(rho, dtype=float)
    if np.max(np.abs(rho)) > RHO_GATE * sphere.S:
        raise DomainError(f"|rho|_inf = {np.max(np.abs(rho)):.4g} exceeds S/4")
    if calc is None:
        calc = surface_calculus(sphere, angular_derivatives(sphere, rho))
    gnorm = np.sqrt(sum(c**2 for c in calc.grad))
    if np.max(gnorm) > GRAD_GATE:
        raise DomainError(f"|grad rho|_inf = {np.max(gnorm):.4g} exceeds 1/8")
    return calc


@dataclass
class NormalField:
    nu: np.ndarray  # Cartesian unit normal, last axis
    beta: np.ndarray
    alpha: tuple  # frame components of alpha


def normal_and_beta(sphere, rho):
    """``nu_Gamma(rho)``, ``beta(rho)`` and ``alpha(rho)`` on the grid."""
    d = angular_derivatives(sphere, rho)
    calc = check_gates(sphere, rho, surface_calculus(sphere, d))
    M0 = sphere.S / (sphere.S + d.f)
    alpha = tuple(M0 * g for g in calc.grad)
    a2 = sum(a**2 for a in alpha)
    beta = 1.0 / np.sqrt(1.0 + a2)
    nu = sphere.unit_points().copy()
    for a, e in zip(alpha, sphere.frame()):
        nu -= a[..., None] * e
    nu *= beta[..., None]
    return NormalField(nu=nu, beta=beta, alpha=alpha)


def mean_curvature(sphere, rho):
    """``H(rho) = beta G : hess rho + beta F`` (sphere of radius R: ``-(n-1)/R``)."""
    d = angular_derivatives(sphere, rho)
    calc = check_gates(sphere, rho, surface_calculus(sphere, d))
    n, S = sphere.n, sphere.S
    Sr = S + d.f
    M0 = S / Sr
    alpha = tuple(M0 * g for g in calc.grad)
    a2 = sum(a**2 for a in alpha)
    beta = 1.0 / np.sqrt(1.0 + a2)
    if n == 2:
        (h,) = calc.hess
        GH = M0**2 * (h - beta**2 * alpha[0] ** 2 * h)
    else:
        htt, htp, hpp = calc.hess
        at, ap = alpha
        quad = at * at * htt + 2 * at * ap * htp + ap * ap * hpp
        GH = M0**2 * (htt + hpp - beta**2 * quad)
    F = -((n - 1) + beta**2 * a2) / Sr
    return beta * GH + beta * F


def laplace_beltrami(sphere, rho):
    calc = surface_calculus(sphere, angular_derivatives(sphere, rho))
    if sphere.n == 2:
        return calc.hess[0]
    return calc.hess[0] + calc.hess[2]


def linearized_curvature(sphere, rho_dir):
    """``H'(0) rho = ((n-1)/S^2 + Laplace-Beltrami) rho``."""
    return (sphere.n - 1) / sphere.S**2 * np.asarray(rho_dir, dtype=float) + laplace_beltrami(sphere, rho_dir)


# --- closed-form test fields ------------------------------------------------

def shifted_sphere(sphere, delta):
    """Height of the sphere of radius S centred at ``delta e`` (e = north pole / x-axis)."""
    S = sphere.S
    if sphere.n == 2:
        c = np.cos(sphere.phi)
        s2 = np.sin(sphere.phi) ** 2
    else:
        t = sphere.mesh()[0]
        c, s2 = np.cos(t), np.sin(t) ** 2
    return delta * c + np.sqrt(S**2 - delta**2 * s2) - S


def shifted_sphere_normal(sphere, delta):
    """Exact outward normal ``(x - delta e)/S`` of the shifted sphere."""
    rho = shifted_sphere(sphere, delta)
    x = (sphere.S + rho)[..., None] * sphere.unit_points()
    x[..., -1 if sphere.n == 3 else 0] -= delta
    return x / sphere.S


def harmonic(sphere, l, m=0):
    """Real spherical harmonic of degree ``l`` (n=3) or ``cos(l phi)`` (n=2) on the grid."""
    if sphere.n == 2:
        return np.cos(l * sphere.phi)
    from scipy.special import sph_harm_y

    t, p = sphere.mesh()
    y = sph_harm_y(l, abs(m), t, p)
    return np.real(y) if m >= 0 else np.imag(y)


def harmonic_eigenvalue(n, l, S):
    return ((n - 1) - l * (l + n - 2)) / S**2


# --- verification battery ---------------------------------------------------

@dataclass
class Check:
    name: str
    passed: bool
    value: float
    tolerance: float
    detail: dict = field(default_factory=dict)

    def __post_init__(self):
        self.passed = bool(self.passed)
        self.value = float(self.value)
        self.tolerance = float(self.tolerance)


def _rate(errs, factor=2.0):
    e = np.asarray(errs, dtype=float)
    with np.errstate(divide="ignore", invalid="ignore"):
        return [float(np.log(a / b) / np.log(factor)) for a, b in zip(e[:-1], e[1:])]


def roundoff_floor(sphere):
    """Round-off level of second angular differences (amplified by 1/sin^2 near the poles)."""
    eps = np.finfo(float).eps
    if sphere.n == 2:
        return 50 * eps * (sphere.n_phi / (2 * np.pi)) ** 2
    return 50 * eps * (sphere.n_theta / np.pi) ** 4


def _grids(n, base, levels=3):
    nt, npf = base
    return [(nt * 2**k, npf * 2**k) for k in range(levels)]


def verification_battery(n=3, S=1.0, grid=(64, 128), l_max=6):
    """Run the closed-form checks; returns a list of :class:`Check`."""
    nt, npf = grid
    sph = ReferenceSphere(n=n, S=S, n_theta=nt, n_phi=npf)
    checks = []
    shape = (npf,) if n == 2 else (nt, npf)

    H0 = mean_curvature(sph, np.zeros(shape))
    err = float(np.max(np.abs(H0 + (n - 1) / S)))
    checks.append(Check("H(0) = -(n-1)/S", err <= 1e-13 * (n - 1) / S, err, 1e-13 * (n - 1) / S))

    c = 0.1 * S
    Hc = mean_curvature(sph, np.full(shape, c))
    err = float(np.max(np.abs(Hc + (n - 1) / (S + c))))
    tol = max(1e-10, roundoff_floor(sph))
    checks.append(Check("H(c) = -(n-1)/(S+c)", err <= tol, err, tol))

    nb0 = normal_and_beta(sph, np.zeros(shape))
    err = float(np.max(np.abs(nb0.nu - sph.unit_points())) + np.max(np.abs(nb0.beta - 1.0)))
    checks.append(Check("nu(0) = nu_S, beta(0) = 1", err <= 1e-14, err, 1e-14))

    # shifted sphere: constant curvature and exact normal, convergence under refinement
    delta = 0.1 * S
    # refinement study kept above the round-off floor
    coarse = (max(min(nt, 64) // 4, 8), max(min(npf, 128) // 4, 16))
    h_err, n_err, unit_err = [], [], []
    for gt, gp in _grids(n, coarse):
        s = ReferenceSphere(n=n, S=S, n_theta=gt, n_phi=gp)
        rho = shifted_sphere(s, delta)
        h_err.append(float(np.max(np.abs(mean_curvature(s, rho) + (n - 1) / S))))
        nb = normal_and_beta(s, rho)
        n_err.append(float(np.max(np.abs(nb.nu - shifted_sphere_normal(s, delta)))))
        unit_err.append(float(np.max(np.abs(np.linalg.norm(nb.nu, axis=-1) - 1.0))))
    rates = _rate(h_err)
    checks.append(Check("shifted sphere: H constant, rate >= 2", min(rates) >= 2.0, min(rates), 2.0, {"errors": h_err, "rates": rates}))
    nrates = _rate(n_err)
    checks.append(Check("shifted sphere: normal exact to grid order", min(nrates) >= 2.0, min(nrates), 2.0, {"errors": n_err, "rates": nrates}))
    checks.append(Check("|nu| = 1", max(unit_err) <= 1e-12, max(unit_err), 1e-12))

    # spectral consistency of the linearisation: error within the fourth-order
    # stencil bound (l+1)^4 h^4 and decaying under refinement (the pole rows
    # cost one order for m != 0 on the latitude-longitude grid)
    h = max(np.pi / nt, 2 * np.pi / npf) if n == 3 else 2 * np.pi / npf
    coarse_s = ReferenceSphere(n=n, S=S, n_theta=nt // 2, n_phi=npf // 2)
    floor = roundoff_floor(sph)
    ok, worst, per_l = True, 0.0, {}
    for l in range(l_max + 1):
        errs = []
        for s in (coarse_s, sph):
            Y = harmonic(s, l, min(l, 1))
            ev = harmonic_eigenvalue(n, l, S)
            errs.append(float(np.max(np.abs(linearized_curvature(s, Y) - ev * Y)) / np.max(np.abs(Y))) / max(1.0, abs(ev)))
        bound = max(10 * floor, (l + 1) ** 4 * h**4)
        resolved = errs[1] > 10 * floor
        rate = _rate(errs)[0] if resolved else float("inf")
        per_l[l] = {"rel_error": errs[1], "bound": bound, "rate": rate}
        ok &= errs[1] <= bound and rate >= 2.5
        worst = max(worst, errs[1] / bound)
    checks.append(Check("H'(0) eigenvalues on harmonics, l <= %d" % l_max, bool(ok), worst, 1.0, {"errors": per_l}))

    # finite-difference linearisation: defect decays linearly in eps
    Y = harmonic(sph, 2, 1)
    Y = Y / np.max(np.abs(Y)) * 0.05 * S
    H0 = mean_curvature(sph, np.zeros(shape))
    lin = linearized_curvature(sph, Y)
    eps = [1e-2, 1e-3, 1e-4]
    defects = [float(np.max(np.abs((mean_curvature(sph, e * Y) - H0) / e - lin))) for e in eps]
    rates = _rate(defects, 10.0)
    rel = defects[-1] / float(np.max(np.abs(lin)))
    ok = all(0.8 <= r <= 1.2 for r in rates) and rel <= 1e-3
    checks.append(Check("finite-difference linearisation, linear in eps", ok, rel, 1e-3, {"defects": defects, "rates": rates}))
    return checks


def battery_report(n=3, S=1.0, grid=(64, 128)):
    checks = verification_battery(n=n, S=S, grid=grid)
    return {
        "n": n,
        "R": S,
        "grid": list(grid),
        "passed": all(c.passed for c in checks),
        "checks": [asdict(c) for c in checks],
    }
