"""Reference material models realising each stability regime at ``u* = 1/2``, ``R* = 1/2``.

All use equal bulk heat capacities ``kappa`` (so ``phi = A - B u`` is affine),
``sigma = s0 (1 - u^2/4)`` on ``u_c = 2`` and a ball of radius 1 in R^3.
With ``s0 = 1``: ``eta* = 3.75/(B-1)^2`` and ``zeta* = eta* + 20 kappa/(B-1)^2``.
"""

from __future__ import annotations

from dataclasses import dataclass

from .material import CoefficientFunction as C
from .material import MaterialModel

U_STAR = 0.5
R_STAR = 0.5
R_OMEGA = 1.0


def affine_model(B, kappa, gamma=None, s0=1.0, d=1.0, d_gamma=0.1, n=3, u_star=U_STAR, R_star=R_STAR):
    """Model whose concentric equilibrium at ``u_star`` has radius ``R_star``."""
    sig = s0 * (1.0 - u_star**2 / 4.0)
    A = (n - 1) * sig / R_star + B * u_star
    return MaterialModel(
        psi1=C("ulogu", (-kappa, 0.0, 0.0)),
        psi2=C("ulogu", (-kappa, A, -B)),
        d1=C.constant(d),
        d2=C.constant(d),
        sigma=C("concave_power", (s0, 2.0, 2.0)),
        d_gamma=C.constant(d_gamma),
        gamma=None if gamma is None else C.constant(gamma),
        u_c=2.0,
        n=n,
    )


@dataclass(frozen=True)
class Scenario:
    name: str
    model: MaterialModel
    predicted_positive: int
    stable: bool


def regime_scenarios():
    """One model per admissible (gamma, zeta*, eta*) regime for m = 1."""
    return [
        Scenario("gamma>0, zeta>1", affine_model(4.0, 1.0, gamma=0.1), 1, False),
        Scenario("gamma>0, zeta<1", affine_model(4.0, 0.1, gamma=0.1), 0, True),
        Scenario("gamma=0, eta>1", affine_model(2.6, 1.0), 0, True),
        Scenario("gamma=0, eta<1, zeta>1", affine_model(4.0, 1.0), 1, False),
        Scenario("gamma=0, eta<1, zeta<1", affine_model(4.0, 0.1), 0, True),
    ]


def contrast_model(gamma=0.1, n=3):
    """Unequal bulk heat capacities and conductivities (``phi`` not affine)."""
    import math

    sig = 1.0 - U_STAR**2 / 4.0
    B = 4.0
    # phi = 0.6 u ln u + A - B u with phi(u*) = (n-1) sigma(u*)/R*
    A = (n - 1) * sig / R_STAR + B * U_STAR - 0.6 * U_STAR * math.log(U_STAR)
    return MaterialModel(
        psi1=C("ulogu", (-1.3, 0.0, 0.0)),
        psi2=C("ulogu", (-0.7, A, -B)),
        d1=C.constant(0.9),
        d2=C.constant(1.6),
        sigma=C("concave_power", (1.0, 2.0, 3.0)),
        d_gamma=C("affine", (0.05, 0.1)),
        gamma=None if gamma is None else C("affine", (0.05, 0.1)),
        u_c=2.0,
        n=n,
    )
