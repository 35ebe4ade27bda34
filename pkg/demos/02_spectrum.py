"""
Positive eigenvalues across the stability regimes
=================================================

For each reference regime, count positive eigenvalues of the linearization
per spherical-harmonic degree and compare with the indicator prediction.
"""

from stefan_lab import equilibrium as eq
from stefan_lab import scenarios as sc
from stefan_lab import spectral as sp

domain = eq.DomainSpec.ball(3, sc.R_OMEGA)
for s in sc.regime_scenarios():
    point = eq.indicators(s.model, domain, sc.U_STAR)
    geom, coeffs = sp.setup(s.model, sc.U_STAR, sc.R_OMEGA)
    rep = sp.find_spectrum(geom, coeffs, l_max=8, predicted=point.predicted_positive_eigenvalues)
    lams = ", ".join(f"{e.lam:.4f} (l={e.l})" for e in rep.positive) or "none"
    print(
        f"{s.name:24s} zeta*={point.zeta_star:6.3f} eta*={point.eta_star:6.3f} "
        f"predicted={point.predicted_positive_eigenvalues} found={rep.total_positive} "
        f"kernel={rep.kernel_dim} positive: {lams}"
    )

# boundary-layer growth of the Dirichlet-to-Neumann value
geom, coeffs = sp.setup(sc.contrast_model(), sc.U_STAR, sc.R_OMEGA)
for lam in (1e-2, 1.0, 1e2, 1e4, 1e6):
    print(f"lambda={lam:8.0e}  D/sqrt(lambda) = {sp.dtn(geom, coeffs, 0, lam) / lam**0.5:.6f}")

# without undercooling the unstable root runs off as eta* approaches 1 from below
cases = [(sc.affine_model(B, 1.0), sc.U_STAR, sc.R_OMEGA) for B in (4.0, 3.5, 3.2, 3.0, 2.97, 2.95)]
for row in sp.largest_root_sweep(cases):
    print(f"eta*={row['eta']:.4f}  largest positive eigenvalue = {row['largest_root']:.6g}")
