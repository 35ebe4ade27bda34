"""Per-mode eigenvalue reduction for one sphere concentric in a ball.

For a spherical-harmonic degree ``l`` every operator in the linearisation
acts as a scalar.  The bulk transmission problem

    kappa lam w - d (w'' + (n-1) w'/r) + d l(l+n-2) w / r^2 = 0

is solved on ``(0, R*)`` and ``(R*, R_Omega)`` with ``w(R*) = 1``, ``w``
regular at 0 and ``w'(R_Omega) = 0``.  The discretisation is piecewise-linear
finite elements with the radial weight ``r^(n-1)`` integrated exactly and a
lumped mass; the interface flux is the consistent (residual) flux, so the
energy identity ``D R^(n-1) = lam |sqrt(kappa) w|^2 + |sqrt(d) grad w|^2``
holds to round-off on the discrete level.

``lam > 0`` is an eigenvalue of ``-L`` in mode ``l`` exactly when
``B(lam, l) = u* l*^2 lam T(lam, l) + gamma* lam + sigma* a_l`` vanishes.
"""

from __future__ import annotations

from concurrent.futures import ThreadPoolExecutor
import json
import logging
import math
from dataclasses import dataclass, field, asdict
from functools import lru_cache
from pathlib import Path

import numpy as np
from scipy import linalg, optimize

from . import equilibrium as eq
from .errors import DomainError, SchemaError, SolverError
from .material import MaterialModel, unit_sphere_area

log = logging.getLogger(__name__)

DEFAULT_CELLS = 2000
GRADING = 6.0
SCAN_POINTS = 400
LAMBDA_MIN = 1e-6
ROOT_RTOL = 1e-10


@dataclass(frozen=True)
class RadialGeometry:
    n: int
    R_star: float
    R_Omega: float

    def __post_init__(self):
        if self.n < 2:
            raise DomainError("n must be >= 2")
        if not 0 < self.R_star < self.R_Omega:
            raise DomainError(f"need 0 < R* < R_Omega, got R*={self.R_star}, R_Omega={self.R_Omega}")

    @property
    def interface_area(self):
        return unit_sphere_area(self.n) * self.R_star ** (self.n - 1)

    @property
    def volumes(self):
        wn = unit_sphere_area(self.n)
        v1 = wn * self.R_star**self.n / self.n
        return v1, wn * self.R_Omega**self.n / self.n - v1


def geometry_from_dict(data, R_star=None):
    if not isinstance(data, dict):
        raise SchemaError("$", "geometry must be a JSON object")
    if "n" not in data or not isinstance(data["n"], int):
        raise SchemaError("$.n", "missing or not an integer")
    if "R_Omega" not in data:
        raise SchemaError("$.R_Omega", "missing")
    R = data.get("R_star", R_star)
    if R is None:
        raise SchemaError("$.R_star", "missing (and no u_star to derive it from)")
    return RadialGeometry(n=data["n"], R_star=float(R), R_Omega=float(data["R_Omega"]))


def load_geometry_dict(path):
    try:
        return json.loads(Path(path).read_text())
    except json.JSONDecodeError as exc:
        raise SchemaError("$", f"invalid JSON: {exc}") from None


@dataclass(frozen=True)
class FrozenCoefficients:
    """Coefficient values at the equilibrium temperature ``u*``."""

    u: float
    kappa1: float
    kappa2: float
    d1: float
    d2: float
    kappa_gamma: float
    d_gamma: float
    sigma: float
    gamma: float
    l_star: float


def freeze(model, u_star, R_star=None):
    """Frozen coefficients at ``u*``; ``l* = sigma(u*) lambda'(u*)``."""
    model.check_temperature(u_star)
    k1, k2 = model.kappa(u_star)
    _, dlam, _ = model.lambda_derivs(u_star)
    sig = float(model.sigma(u_star))
    return FrozenCoefficients(
        u=float(u_star),
        kappa1=float(k1),
        kappa2=float(k2),
        d1=float(model.d1(u_star)),
        d2=float(model.d2(u_star)),
        kappa_gamma=float(model.kappa_gamma(u_star)),
        d_gamma=float(model.d_gamma(u_star)),
        sigma=sig,
        gamma=float(model.gamma_value(u_star)),
        l_star=float(sig * dlam),
    )


def setup(model, u_star, R_Omega):
    """Geometry and frozen coefficients for the concentric equilibrium at ``u*``."""
    R = eq.radius(model, u_star)
    return RadialGeometry(model.n, R, float(R_Omega)), freeze(model, u_star)


# --- modes ----------------------------------------------------------------

def multiplicity(n, l):
    """Dimension of the degree-``l`` spherical harmonics on S^(n-1)."""
    if l == 0:
        return 1
    return math.comb(l + n - 1, n - 1) - math.comb(l + n - 3, n - 1)


@dataclass(frozen=True)
class Mode:
    l: int
    multiplicity: int
    mu: float  # -Laplace-Beltrami eigenvalue on the sphere of radius R*
    a: float  # eigenvalue of A* = -((n-1)/R*^2 + Delta*)


def mode(geom, l):
    n, R = geom.n, geom.R_star
    L = l * (l + n - 2)
    return Mode(l=l, multiplicity=multiplicity(n, l), mu=L / R**2, a=(L - (n - 1)) / R**2)


# --- radial finite elements -----------------------------------------------

_GAUSS = np.polynomial.legendre.leggauss(8)


def _hat_integrals(r, p):
    """Per element ``[r_k, r_k+1]``: integrals of r^p, and of the left/right hats times r^p."""
    a, b = r[:-1], r[1:]
    h = b - a
    x, w = _GAUSS
    t = 0.5 * (x[:, None] + 1.0)  # local coordinate in [0, 1]
    rr = a + t * h
    with np.errstate(divide="ignore"):
        wp = rr**p
    scale = 0.5 * h
    full = scale * (w[:, None] * wp).sum(axis=0)
    right = scale * (w[:, None] * t * wp).sum(axis=0)
    left = full - right
    return full, left, right


@dataclass(frozen=True)
class PhaseMesh:
    r: np.ndarray
    stiff: np.ndarray  # per element: int r^(n-1) / h^2
    mass: np.ndarray  # lumped: int hat_k r^(n-1)
    ang: np.ndarray  # lumped: int hat_k r^(n-3); inf where singular
    interface_at_end: bool


def graded_nodes(a, b, cells, cluster_at_end, beta=GRADING):
    """Nodes on ``[a, b]`` clustered (sinh map) toward the end that touches the interface."""
    x = np.linspace(0.0, 1.0, cells + 1)
    g = np.sinh(beta * x) / np.sinh(beta)
    if cluster_at_end:
        s = 1.0 - g[::-1]
    else:
        s = g
    r = a + (b - a) * s
    r[0], r[-1] = a, b
    return r


def _phase_mesh(r, n, interface_at_end):
    W, _, _ = _hat_integrals(r, n - 1)
    h = np.diff(r)
    _, ml, mr = _hat_integrals(r, n - 1)
    mass = np.zeros_like(r)
    mass[:-1] += ml
    mass[1:] += mr
    ang = np.zeros_like(r)
    if n >= 3:
        _, al, ar = _hat_integrals(r, n - 3)
        ang[:-1] += al
        ang[1:] += ar
    else:
        # r^-1: element touching r=0 only contributes through the right hat
        _, al, ar = _hat_integrals(r, -1)
        if r[0] == 0.0:
            al[0] = np.inf
            ar[0] = 1.0
        ang[:-1] += al
        ang[1:] += ar
    return PhaseMesh(r=r, stiff=W / h**2, mass=mass, ang=ang, interface_at_end=interface_at_end)


@lru_cache(maxsize=64)
def meshes(n, R_star, R_Omega, cells=DEFAULT_CELLS, beta=GRADING):
    inner = _phase_mesh(graded_nodes(0.0, R_star, cells, True, beta), n, True)
    outer = _phase_mesh(graded_nodes(R_star, R_Omega, cells, False, beta), n, False)
    return inner, outer


@dataclass
class PhaseSolution:
    r: np.ndarray
    w: np.ndarray
    flux: float  # consistent flux: R*^(n-1) d w'(R*) outward from this phase, sign as in the weak form
    mass_energy: float  # int kappa w^2 r^(n-1)
    dirichlet_energy: float  # int d (w'^2 + L w^2 / r^2) r^(n-1)
    residual: float


@dataclass
class TransmissionSolution:
    inner: PhaseSolution
    outer: PhaseSolution
    l: int
    lam: float
    R_star: float
    n: int

    @property
    def inner_slope(self):
        """Approximation of ``d1 w'(R*-)``."""
        return self.inner.flux / self.R_star ** (self.n - 1)

    @property
    def outer_slope(self):
        """Approximation of ``d2 w'(R*+)``."""
        return -self.outer.flux / self.R_star ** (self.n - 1)


def _solve_phase(pm, kappa, d, l, lam, n):
    # unknown v = w - 1: the stiffness annihilates constants, so fluxes of order
    # lam stay free of cancellation for small lam
    L = l * (l + n - 2)
    N = len(pm.r)
    k = d * pm.stiff
    react = lam * kappa * pm.mass
    if L:
        ang = np.where(np.isfinite(pm.ang), pm.ang, 0.0)
        react = react + d * L * ang
    diag = np.zeros(N)
    diag[:-1] += k
    diag[1:] += k
    diag += react
    v = np.zeros(N)
    fixed = [N - 1] if pm.interface_at_end else [0]
    if L and pm.interface_at_end:
        fixed.append(0)
        v[0] = -1.0  # regularity: w ~ r^l vanishes at the centre
    free = np.setdiff1d(np.arange(N), fixed)
    lo, hi = free[0], free[-1]
    m = hi - lo + 1
    ab = np.zeros((3, m))
    ab[1] = diag[lo : hi + 1]
    ab[0, 1:] = -k[lo:hi]
    ab[2, :-1] = -k[lo:hi]
    rhs = -react[lo : hi + 1].copy()
    if lo > 0:
        rhs[0] += k[lo - 1] * v[lo - 1]
    if hi < N - 1:
        rhs[-1] += k[hi] * v[hi + 1]
    try:
        v[lo : hi + 1] = linalg.solve_banded((1, 1), ab, rhs, check_finite=False)
    except (linalg.LinAlgError, ValueError) as exc:
        raise SolverError(f"radial transmission solve failed: {exc}") from None
    w = 1.0 + v
    if L and pm.interface_at_end:
        w[0] = 0.0
    dv = np.diff(v)
    # residual rows in difference form: sum_e k_e (w_i - w_j) + react_i w_i
    rows = react * w
    rows[:-1] -= k * dv
    rows[1:] += k * dv
    idx = N - 1 if pm.interface_at_end else 0
    flux = rows[idx]
    scale = max(abs(flux), float(np.max(np.abs(react * w))), 1e-300)
    res = float(np.max(np.abs(rows[free]))) / scale
    grad = float(np.sum(k * dv**2))
    if L:
        grad += d * L * float(np.sum(ang * w**2))
    mass = kappa * float(np.sum(pm.mass * w**2))
    return PhaseSolution(r=pm.r, w=w, flux=float(flux), mass_energy=mass, dirichlet_energy=grad, residual=res)


def radial_transmission_solve(geom, coeffs, l, lam, cells=DEFAULT_CELLS, tol=1e-8):
    """Solve the bulk transmission problem for degree ``l`` at ``lam``; ``w(R*) = 1``."""
    if lam < 0 and not np.isfinite(lam):
        raise DomainError("lam must be finite")
    inner_m, outer_m = meshes(geom.n, geom.R_star, geom.R_Omega, cells)
    inner = _solve_phase(inner_m, coeffs.kappa1, coeffs.d1, l, lam, geom.n)
    outer = _solve_phase(outer_m, coeffs.kappa2, coeffs.d2, l, lam, geom.n)
    worst = max(inner.residual, outer.residual)
    if not worst < tol:
        raise SolverError("radial transmission solve did not converge", residual=worst)
    return TransmissionSolution(inner=inner, outer=outer, l=l, lam=lam, R_star=geom.R_star, n=geom.n)


def dtn(geom, coeffs, l, lam, cells=DEFAULT_CELLS):
    """Dirichlet-to-Neumann value ``D = -(d2 w'(R*+) - d1 w'(R*-))`` per unit interface data."""
    if lam == 0 and l == 0:
        return 0.0
    sol = radial_transmission_solve(geom, coeffs, l, lam, cells)
    return (sol.inner.flux + sol.outer.flux) / geom.R_star ** (geom.n - 1)


@dataclass(frozen=True)
class EnergyCheck:
    D: float
    mass: float
    dirichlet: float
    defect: float


def dtn_energy_check(geom, coeffs, l, lam, cells=DEFAULT_CELLS):
    """Both sides of ``D = lam * mode-mass + mode-Dirichlet-energy`` (per unit interface area)."""
    sol = radial_transmission_solve(geom, coeffs, l, lam, cells)
    area = geom.R_star ** (geom.n - 1)
    D = (sol.inner.flux + sol.outer.flux) / area
    mass = (sol.inner.mass_energy + sol.outer.mass_energy) / area
    dirichlet = (sol.inner.dirichlet_energy + sol.outer.dirichlet_energy) / area
    return EnergyCheck(D=D, mass=mass, dirichlet=dirichlet, defect=D - (lam * mass + dirichlet))


def dtn_richardson(geom, coeffs, l, lam, cells=DEFAULT_CELLS):
    """``(D, error estimate)`` comparing full and half resolution (second order)."""
    fine = dtn(geom, coeffs, l, lam, cells)
    coarse = dtn(geom, coeffs, l, lam, cells // 2)
    return fine, abs(fine - coarse) / 3.0


def t_lambda(geom, coeffs, l, lam, cells=DEFAULT_CELLS):
    """``T = 1 / (lam kappa_Gamma + d_Gamma mu_l + D)``."""
    md = mode(geom, l)
    denom = lam * coeffs.kappa_gamma + coeffs.d_gamma * md.mu + dtn(geom, coeffs, l, lam, cells)
    if denom == 0.0:
        raise SolverError(f"T_lambda singular at lam={lam}, l={l}")
    return 1.0 / denom


def b_lambda(geom, coeffs, l, lam, cells=DEFAULT_CELLS):
    """Reduced scalar ``B = u* l*^2 lam T + gamma* lam + sigma* a_l``."""
    md = mode(geom, l)
    c = coeffs
    return c.u * c.l_star**2 * lam * t_lambda(geom, c, l, lam, cells) + c.gamma * lam + c.sigma * md.a


def b_limit_large(geom, coeffs, l):
    """Limit of ``B`` as ``lam -> infinity`` (``+inf`` with undercooling)."""
    if coeffs.gamma > 0:
        return math.inf
    return coeffs.u * coeffs.l_star**2 / coeffs.kappa_gamma + coeffs.sigma * mode(geom, l).a


def a0(geom, coeffs):
    """``|Gamma*| / [(kappa*|1)_Omega + kappa_Gamma* |Gamma*|]``."""
    v1, v2 = geom.volumes
    area = geom.interface_area
    return area / (coeffs.kappa1 * v1 + coeffs.kappa2 * v2 + coeffs.kappa_gamma * area)


def default_lambda_max(geom, coeffs):
    return 1e4 * coeffs.d_gamma / (coeffs.kappa_gamma * geom.R_star**2)


# --- spectrum -------------------------------------------------------------

@dataclass
class Eigenvalue:
    lam: float
    l: int
    mult: int


@dataclass
class EigenReport:
    positive: list
    kernel_dim: int
    kernel_modes: dict
    total_positive: int
    predicted: object
    match: bool
    inconclusive: list = field(default_factory=list)
    complex_search_needed: bool = False

    def to_dict(self):
        return {
            "kernel_dim": self.kernel_dim,
            "kernel_modes": {str(k): v for k, v in self.kernel_modes.items()},
            "positive": [{"lambda": e.lam, "l": e.l, "mult": e.mult} for e in self.positive],
            "total_positive": self.total_positive,
            "predicted": self.predicted,
            "match": self.match,
            "inconclusive": self.inconclusive,
        }


def scan_grid(lam_max, points=SCAN_POINTS, lam_min=LAMBDA_MIN):
    return np.geomspace(lam_min, lam_max, points)


def mode_roots(geom, coeffs, l, lam_max, points=SCAN_POINTS, cells=DEFAULT_CELLS):
    """Positive roots of ``B(., l)`` on ``(LAMBDA_MIN, lam_max]`` and an inconclusive flag."""
    grid = scan_grid(lam_max, points)
    vals = np.array([b_lambda(geom, coeffs, l, x, cells) for x in grid])
    f = lambda x: b_lambda(geom, coeffs, l, x, cells)
    roots = []
    for i in np.flatnonzero(np.sign(vals[:-1]) * np.sign(vals[1:]) < 0):
        roots.append(optimize.brentq(f, grid[i], grid[i + 1], rtol=ROOT_RTOL, xtol=1e-300))
    limit = b_limit_large(geom, coeffs, l)
    inconclusive = bool(np.sign(vals[-1]) != np.sign(limit)) or any(r > grid[-2] for r in roots)
    return sorted(roots), vals, inconclusive


def find_spectrum(geom, coeffs, l_max=8, lam_max=None, predicted=None, points=SCAN_POINTS, cells=DEFAULT_CELLS, kernel_cells=200, threads=1):
    """Locate all positive eigenvalues of ``-L`` in modes ``0..l_max`` by scanning ``B``."""
    if coeffs.l_star == 0.0:
        raise DomainError("l* = 0: linearisation not well posed")
    if coeffs.gamma == 0.0:
        eta = (geom.n - 1) * coeffs.sigma * coeffs.kappa_gamma / (coeffs.u * coeffs.l_star**2 * geom.R_star**2)
        if abs(eta - 1.0) < eq.DEGENERACY_TOL:
            raise DomainError("eta* = 1 without undercooling: degenerate case excluded")
    lam_max = default_lambda_max(geom, coeffs) if lam_max is None else lam_max
    positive = []
    inconclusive = []
    scan = lambda l: mode_roots(geom, coeffs, l, lam_max, points, cells)
    if threads > 1:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            results = list(pool.map(scan, range(l_max + 1)))
    else:
        results = [scan(l) for l in range(l_max + 1)]
    for l, (roots, _, bad) in enumerate(results):
        mult = multiplicity(geom.n, l)
        positive += [Eigenvalue(lam=float(r), l=l, mult=mult) for r in roots]
        if bad:
            inconclusive.append(l)
            log.warning("mode l=%d: sign of B at lambda_max disagrees with its limit; raise lambda_max", l)
    positive.sort(key=lambda e: e.lam)
    kmodes = kernel_modes(geom, coeffs, cells=kernel_cells)
    kdim = sum(v["nullity"] * v["mult"] for v in kmodes.values())
    total = sum(e.mult for e in positive)
    return EigenReport(
        positive=positive,
        kernel_dim=kdim,
        kernel_modes=kmodes,
        total_positive=total,
        predicted=predicted,
        match=(predicted is not None and total == predicted),
        inconclusive=inconclusive,
    )


# --- discrete per-mode operator -------------------------------------------

def mode_matrices(geom, coeffs, l, cells=200):
    """Matrices ``(K, M)`` of the linearisation in mode ``l``: ``M z' + K z = 0``.

    Unknowns: inner bulk nodes (centre .. before interface), interface
    temperature, outer bulk nodes (after interface .. R_Omega), height rho.
    Eigenvalues of ``-L`` in this mode solve ``(K + lam M) z = 0``.
    """
    n = geom.n
    L = l * (l + n - 2)
    md = mode(geom, l)
    inner, outer = meshes(n, geom.R_star, geom.R_Omega, cells)
    c = coeffs
    Ni, No = len(inner.r), len(outer.r)
    size = Ni + No - 1 + 1
    K = np.zeros((size, size))
    M = np.zeros((size, size))

    def add_phase(pm, kappa, d, offset):
        N = len(pm.r)
        for e in range(N - 1):
            i, j = offset + e, offset + e + 1
            k = d * pm.stiff[e]
            K[i, i] += k
            K[j, j] += k
            K[i, j] -= k
            K[j, i] -= k
        for k in range(N):
            M[offset + k, offset + k] += kappa * pm.mass[k]
            if L and np.isfinite(pm.ang[k]):
                K[offset + k, offset + k] += d * L * pm.ang[k]

    add_phase(inner, c.kappa1, c.d1, 0)
    gi = Ni - 1
    add_phase(outer, c.kappa2, c.d2, gi)
    area = geom.R_star ** (n - 1)
    rho = size - 1
    M[gi, gi] += area * c.kappa_gamma
    K[gi, gi] += area * c.d_gamma * md.mu
    M[gi, rho] += area * c.l_star * c.u
    # Gibbs-Thomson row: gamma rho' - l* v_Gamma + sigma a_l rho = 0
    M[rho, rho] = c.gamma
    K[rho, gi] = -c.l_star
    K[rho, rho] = c.sigma * md.a
    keep = np.ones(size, dtype=bool)
    if L:
        keep[0] = False  # regularity at the centre
    return K[np.ix_(keep, keep)], M[np.ix_(keep, keep)], (gi - (0 if keep[0] else 1), rho - (0 if keep[0] else 1))


def mode_eigenvalues(geom, coeffs, l, cells=200):
    """All finite eigenvalues of ``-L`` in mode ``l`` from the dense discrete operator."""
    K, M, _ = mode_matrices(geom, coeffs, l, cells)
    w = linalg.eig(-K, M, right=False)
    w = w[np.isfinite(w)]
    return np.sort(w.real)[::-1], float(np.max(np.abs(w.imag), initial=0.0))


def kernel_modes(geom, coeffs, l_values=(0, 1, 2), cells=200, rtol=1e-10):
    """Nullity of the discrete operator ``K`` per mode (eigenvalue 0 of ``L``)."""
    out = {}
    for l in l_values:
        K, _, (gi, rho) = mode_matrices(geom, coeffs, l, cells)
        # row/column equilibration so the rank test is scale free
        dr = 1.0 / np.maximum(np.abs(K).max(axis=1), 1e-300)
        Ks = dr[:, None] * K
        dc = 1.0 / np.maximum(np.abs(Ks).max(axis=0), 1e-300)
        Ks = Ks * dc[None, :]
        u, s, vt = linalg.svd(Ks)
        null = int(np.sum(s < rtol * s[0]))
        entry = {"nullity": null, "mult": multiplicity(geom.n, l), "smallest_singular": float(s[-1] / s[0])}
        if null:
            v = vt[-1] * dc
            entry["direction"] = {"v_Gamma": float(v[gi] / v[rho] * -coeffs.l_star), "rho": -coeffs.l_star}
            entry["bulk_spread"] = float(np.ptp(v[:-1]) / max(abs(v[gi]), 1e-300)) if abs(v[gi]) > 0 else 0.0
        out[l] = entry
    return out


def kernel_pair_direction(geom, coeffs):
    """Closed-form kernel vector ``(v, rho)`` of the radial mode: constant ``v``, constant ``rho``."""
    return {"v": coeffs.sigma * (geom.n - 1) / geom.R_star**2, "rho": -coeffs.l_star}


def principal_eigenvalue(geom, coeffs, l=0, cells=400, kernel_tol=1e-8):
    """Largest nonzero eigenvalue of ``-L`` in mode ``l`` (growth > 0, decay < 0).

    The dense discrete operator supplies the candidate; when ``B`` changes
    sign around it the value is polished by scalar root finding on the
    fine-mesh reduction.
    """
    vals, _ = mode_eigenvalues(geom, coeffs, l, cells)
    scale = max(1.0, float(np.max(np.abs(vals[:5]))))
    cand = [v for v in vals if abs(v) > kernel_tol * scale]
    lam0 = float(cand[0])
    f = lambda x: b_lambda(geom, coeffs, l, x)
    for width in (0.02, 0.05, 0.1):
        a, b = sorted((lam0 * (1 - width), lam0 * (1 + width)))
        try:
            fa, fb = f(a), f(b)
        except SolverError:
            continue
        if np.sign(fa) != np.sign(fb) and np.isfinite(fa) and np.isfinite(fb):
            root = optimize.brentq(f, a, b, rtol=ROOT_RTOL)
            # reject pole crossings: B must be small at the root
            if abs(f(root)) < 1e-6 * (abs(fa) + abs(fb)):
                return root
    return lam0


# --- multi-sphere limit analysis ------------------------------------------

@dataclass
class MeanModeReport:
    m: int
    zeta_eigenvalue: float
    zero_sum_eigenvalue: float
    zero_sum_multiplicity: int
    unstable_directions: int
    zeta_mode_stable: bool

    def to_dict(self):
        return asdict(self)


def multi_sphere_mean_mode(model, domain, u_star, m):
    """Closed-form small-``lam`` limit of ``B`` on piecewise-constant heights for m spheres."""
    if m < 1:
        raise DomainError("m must be >= 1")
    p = eq.indicators(model, domain, u_star, m)
    n = model.n
    base = (n - 1) * p.sigma_star / p.R_star**2
    zeta_ev = u_star * p.l_star**2 * p.interface_area / (p.heat_capacity + p.kappa_gamma * p.interface_area) - base
    zero_sum = -base
    unstable = (m - 1) + (1 if zeta_ev < 0 else 0)
    if not model.has_undercooling and p.eta_star > 1.0:
        unstable = 0
    return MeanModeReport(
        m=m,
        zeta_eigenvalue=float(zeta_ev),
        zero_sum_eigenvalue=float(zero_sum),
        zero_sum_multiplicity=m - 1,
        unstable_directions=unstable,
        zeta_mode_stable=bool(zeta_ev > 0),
    )


def spectrum_report(model, u_star, R_Omega, l_max=8, lam_max=None, cells=DEFAULT_CELLS, threads=1):
    """Run :func:`find_spectrum` at a concentric equilibrium and add the limit checks."""
    geom, coeffs = setup(model, u_star, R_Omega)
    domain = eq.DomainSpec.ball(model.n, R_Omega)
    point = eq.indicators(model, domain, u_star, 1)
    rep = find_spectrum(geom, coeffs, l_max, lam_max, predicted=point.predicted_positive_eigenvalues, cells=cells, threads=threads)
    out = {"u_star": u_star, "R_star": geom.R_star, "n": geom.n, "R_Omega": R_Omega, "lambda_max": lam_max or default_lambda_max(geom, coeffs)}
    out.update(rep.to_dict())
    out["limits"] = {
        "a0_check": a0_limit_defect(geom, coeffs, cells),
        "kappa_inv_check": kappa_inv_limit_defect(geom, coeffs, 0, cells),
    }
    return out


def extrapolated_small_lambda(geom, coeffs, l=0, lams=(1e-2, 1e-3, 1e-4, 1e-5, 1e-6), cells=DEFAULT_CELLS):
    """Polynomial extrapolation of ``lam T(lam, l)`` to ``lam = 0``."""
    x = np.array(lams)
    y = np.array([lam * t_lambda(geom, coeffs, l, lam, cells) for lam in lams])
    coef = np.polyfit(x, y, 2)
    return float(coef[-1])


def extrapolated_large_lambda(geom, coeffs, l=0, lams=(1e4, 1e5, 1e6, 1e7, 1e8), cells=DEFAULT_CELLS):
    """Extrapolation of ``lam T(lam, l)`` to ``lam = inf`` (polynomial in lam^-1/2 for 1/(lam T))."""
    s = np.array(lams) ** -0.5
    y = np.array([1.0 / (lam * t_lambda(geom, coeffs, l, lam, cells)) for lam in lams])
    coef = np.polyfit(s, y, 3)
    return float(1.0 / coef[-1])


def a0_limit_defect(geom, coeffs, cells=DEFAULT_CELLS):
    ref = a0(geom, coeffs)
    return abs(extrapolated_small_lambda(geom, coeffs, 0, cells=cells) - ref) / ref


def kappa_inv_limit_defect(geom, coeffs, l=0, cells=DEFAULT_CELLS):
    ref = 1.0 / coeffs.kappa_gamma
    return abs(extrapolated_large_lambda(geom, coeffs, l, cells=cells) - ref) / ref


def largest_root_sweep(cases, l=0, points=SCAN_POINTS, cells=DEFAULT_CELLS, grow=100.0, raises=3):
    """Largest positive root of ``B(., l)`` along a list of ``(model, u_star, R_Omega)``.

    Used to watch roots as eta* approaches 1 without undercooling.  When the
    scan end disagrees with the large-lambda limit, ``lam_max`` is raised by
    ``grow`` up to ``raises`` times; rows still inconclusive say so.
    """
    rows = []
    for model, u_star, R_Omega in cases:
        geom, coeffs = setup(model, u_star, R_Omega)
        point = eq.indicators(model, eq.DomainSpec.ball(model.n, R_Omega), u_star)
        lam_max = default_lambda_max(geom, coeffs)
        for _ in range(raises + 1):
            roots, _, bad = mode_roots(geom, coeffs, l, lam_max, points, cells)
            if not bad:
                break
            lam_max *= grow
        rows.append(
            {
                "eta": point.eta_star,
                "zeta": point.zeta_star,
                "largest_root": max(roots) if roots else None,
                "lambda_max": lam_max,
                "inconclusive": bool(bad),
            }
        )
    return rows
