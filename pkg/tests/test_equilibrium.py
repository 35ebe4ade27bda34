import math

import numpy as np
import pytest

from stefan_lab import equilibrium as eq
from stefan_lab import material as mt
from stefan_lab import scenarios as sc
from stefan_lab.errors import PoleError

C = mt.CoefficientFunction


def big_ball(n=3):
    return eq.DomainSpec.ball(n, 5.0)


def test_radius_substitution_n2():
    # phi(1) = 1, sigma = 1
    m = mt.MaterialModel(
        psi1=C.constant(0.0),
        psi2=C("affine", (2.0, -1.0)),
        d1=C.constant(1.0),
        d2=C.constant(1.0),
        sigma=C.constant(1.0),
        d_gamma=C.constant(1.0),
        gamma=None,
        u_c=2.0,
        n=2,
    )
    assert eq.radius(m, 1.0) == pytest.approx(1.0, rel=1e-15)


def test_pole_at_melting_point():
    m = mt.example_model()
    with pytest.raises(PoleError):
        eq.radius(m, 1.0)


def test_radius_residual():
    m = sc.contrast_model()
    R = eq.radius(m, 0.5)
    phi = m.phi_derivs(0.5)[0]
    assert phi - (m.n - 1) * m.sigma(0.5) / R == pytest.approx(0.0, abs=1e-12 * phi)


def test_energy_term_by_term():
    m = mt.example_model()
    dom = big_ball()
    u = 0.5
    R = eq.radius(m, u)
    area = 4 * math.pi * R**2
    v1 = 4 * math.pi * R**3 / 3
    e1, e2 = m.eps(u)
    oracle = e2 * dom.omega_volume - v1 * (e2 - e1) + m.eps_gamma(u) * area
    assert eq.equilibrium_energy(m, dom, u) == pytest.approx(oracle, rel=1e-13)


def test_doubling_m_doubles_disperse_contribution():
    m = mt.example_model()
    dom = eq.DomainSpec.ball(3, 5.0, {2: 4.0})
    u = 0.5
    base = m.eps(u)[1] * dom.omega_volume
    e1 = eq.equilibrium_energy(m, dom, u, 1) - base
    e2 = eq.equilibrium_energy(m, dom, u, 2) - base
    assert e2 == pytest.approx(2 * e1, rel=1e-13)


def test_interface_area_n3():
    m = sc.contrast_model()
    p = eq.indicators(m, eq.DomainSpec.ball(3, 1.0), 0.5)
    assert p.interface_area == pytest.approx(4 * math.pi * p.R_star**2, rel=1e-15)


@pytest.mark.parametrize("name", ["contrast", "affine"])
def test_derivative_identity_and_finite_difference(name):
    m = sc.contrast_model() if name == "contrast" else sc.affine_model(4.0, 0.1)
    dom = eq.DomainSpec.ball(3, 1.0)
    for u in np.linspace(0.1, 1.0, 20):
        p = eq.indicators(m, dom, u)
        dE = eq.equilibrium_energy_derivative(m, dom, u)
        rhs = (p.zeta_star - 1) * u * p.l_star**2 * p.R_star**2 * p.interface_area / (2 * p.sigma_star)
        assert abs(dE - rhs) <= 1e-9 * (1 + abs(dE))
        h = 1e-6 * u
        fd = (eq.equilibrium_energy(m, dom, u + h) - eq.equilibrium_energy(m, dom, u - h)) / (2 * h)
        assert abs(fd - dE) <= 1e-5 * (1 + abs(dE))
        assert np.sign(dE) == np.sign(p.zeta_star - 1)


def test_zero_latent_heat_point():
    m = mt.example_model()
    dom = big_ball()
    from scipy.optimize import brentq

    u0 = brentq(lambda x: m.lambda_derivs(x)[1], 0.05, 0.3, xtol=1e-15)
    p = eq.indicators(m, dom, u0)
    assert p.l_star == pytest.approx(0.0, abs=1e-12)
    assert not p.l_star_nonzero
    dE = eq.equilibrium_energy_derivative(m, dom, u0)
    assert dE == pytest.approx(p.heat_capacity + p.kappa_gamma * p.interface_area, rel=1e-10)
    assert dE > 0


def test_two_spheres_below_threshold_give_one_positive():
    dom = eq.DomainSpec.ball(3, 2.0, {2: 1.0})
    p = eq.indicators(sc.affine_model(4.0, 0.01, gamma=0.1), dom, 0.5, m=2)
    assert p.zeta_star < 1
    assert p.predicted_positive_eigenvalues == 1


def test_large_surface_heat_capacity_stabilises_two_spheres():
    dom = eq.DomainSpec.ball(3, 2.0, {2: 1.0})
    p = eq.indicators(sc.affine_model(2.6, 1.0), dom, 0.5, m=2)
    assert p.eta_star > 1
    assert p.predicted_positive_eigenvalues == 0


def test_zeta_splits_into_bulk_and_surface_parts():
    m = sc.contrast_model()
    dom = eq.DomainSpec.ball(3, 1.0)
    p = eq.indicators(m, dom, 0.5)
    bulk = 2 * p.sigma_star * p.heat_capacity / (p.u_star * p.l_star**2 * p.R_star**2 * p.interface_area)
    assert p.zeta_star == pytest.approx(bulk + p.eta_star, rel=1e-14)


def test_eta_independent_of_m():
    m = sc.affine_model(4.0, 1.0)
    dom = eq.DomainSpec.ball(3, 2.0, {2: 1.0, 3: 0.9})
    etas = [eq.indicators(m, dom, 0.5, k).eta_star for k in (1, 2, 3)]
    assert etas[0] == pytest.approx(etas[1], rel=1e-15) == etas[2]


def test_radius_times_phi():
    m = sc.contrast_model()
    for u in np.linspace(0.05, 1.0, 30):
        assert eq.radius(m, u) * m.phi_derivs(u)[0] == pytest.approx(2 * m.sigma(u), rel=1e-14)


def test_radius_equal_to_bound_is_infeasible():
    m = sc.affine_model(4.0, 1.0)
    R = eq.radius(m, 0.5)
    dom = eq.DomainSpec.ball(3, R)
    assert not eq.indicators(m, dom, 0.5).feasible


def test_solve_for_energy_round_trip():
    m = sc.contrast_model()
    dom = eq.DomainSpec.ball(3, 1.0)
    E0 = eq.equilibrium_energy(m, dom, 0.5)
    roots = eq.solve_for_energy(m, dom, E0)
    assert any(abs(r.u_star - 0.5) < 1e-10 for r in roots)


def test_solve_for_energy_above_maximum_is_empty():
    m = sc.affine_model(4.0, 0.1, gamma=0.1)
    dom = eq.DomainSpec.ball(3, 1.0)
    assert eq.solve_for_energy(m, dom, 1e3) == []


def test_non_monotone_energy_gives_two_classified_roots():
    m = sc.affine_model(4.0, 0.1, gamma=0.1)
    dom = eq.DomainSpec.ball(3, 1.0)
    roots = eq.solve_for_energy(m, dom, 24.65)
    assert len(roots) == 2
    zetas = sorted(r.point.zeta_star for r in roots)
    assert zetas[0] < 1 < zetas[1]
    for r in roots:
        u = r.u_star
        h = 1e-6 * u
        fd = (eq.equilibrium_energy(m, dom, u + h) - eq.equilibrium_energy(m, dom, u - h)) / (2 * h)
        assert np.sign(fd) == np.sign(r.point.zeta_star - 1)


def test_bifurcation_rows_have_expected_columns():
    rows = eq.bifurcation_curve(sc.contrast_model(), eq.DomainSpec.ball(3, 1.0), points=64)
    assert rows
    assert set(rows[0]) == {"u", "R", "E_e", "E_e_prime", "zeta", "eta", "l_star", "feasible", "predicted_unstable"}


def test_domain_from_dict():
    d = eq.domain_from_dict({"n": 3, "R_Omega": 2.0, "R_m": {"2": 1.0}})
    assert d.max_radius(1) == 2.0 and d.max_radius(2) == 1.0
    assert d.omega_volume == pytest.approx(4 * math.pi * 8 / 3)
