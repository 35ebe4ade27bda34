"""
Equilibria and the energy curve
===============================

Sweep the equilibrium temperature of one material, print radius, energy and
the stability indicator, and check the slope of E_e against zeta.
"""

import numpy as np

from stefan_lab import equilibrium as eq
from stefan_lab import scenarios as sc

# a material whose zeta crosses 1 inside the feasible window
model = sc.affine_model(B=4.0, kappa=0.1, gamma=0.1)
domain = eq.DomainSpec.ball(3, 1.0)

print(f"{'u':>6} {'R':>8} {'E_e':>10} {'E_e_prime':>11} {'zeta':>8} {'unstable':>8}")
for u in np.linspace(0.2, 1.05, 12):
    p = eq.indicators(model, domain, u)
    print(
        f"{u:6.3f} {p.R_star:8.4f} {eq.equilibrium_energy(model, domain, u):10.5f} "
        f"{eq.equilibrium_energy_derivative(model, domain, u):11.4e} {p.zeta_star:8.3f} "
        f"{p.predicted_positive_eigenvalues:8d}"
    )

# an energy level just below the maximum of E_e has two equilibria
roots = eq.solve_for_energy(model, domain, 24.65)
for r in roots:
    kind = "stable" if r.point.zeta_star < 1 else "unstable"
    print(f"E_e = 24.65 at u* = {r.u_star:.10f}: zeta* = {r.point.zeta_star:.3f} ({kind})")
