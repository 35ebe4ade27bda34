import math

import numpy as np
import pytest
from scipy import special

from stefan_lab import equilibrium as eq
from stefan_lab import scenarios as sc
from stefan_lab import spectral as sp
from stefan_lab.errors import SchemaError


@pytest.fixture(scope="module")
def contrast():
    return sp.setup(sc.contrast_model(), sc.U_STAR, sc.R_OMEGA)


def bessel_dtn(geom, c, l, lam):
    """Exact ``d1 w'(R-) - d2 w'(R+)`` for n = 3 with ``w(R) = 1`` and insulated outer wall."""
    R, Ro = geom.R_star, geom.R_Omega
    k1 = math.sqrt(lam * c.kappa1 / c.d1)
    k2 = math.sqrt(lam * c.kappa2 / c.d2)
    i = lambda x, d=False: special.spherical_in(l, x, derivative=d)
    k = lambda x, d=False: special.spherical_kn(l, x, derivative=d)
    s_in = k1 * i(k1 * R, True) / i(k1 * R)
    coef = -i(k2 * Ro, True) / k(k2 * Ro, True)
    w = lambda x, d=False: i(x, d) + coef * k(x, d)
    s_out = k2 * w(k2 * R, True) / w(k2 * R)
    return c.d1 * s_in - c.d2 * s_out


@pytest.mark.parametrize("l", [0, 1, 2, 4])
@pytest.mark.parametrize("lam", [0.1, 3.0, 50.0])
def test_dtn_matches_spherical_bessel(contrast, l, lam):
    geom, c = contrast
    ref = bessel_dtn(geom, c, l, lam)
    assert sp.dtn(geom, c, l, lam) == pytest.approx(ref, rel=2e-5)


@pytest.mark.parametrize("l", [1, 2, 3])
def test_static_dtn_matches_harmonic_closed_form(contrast, l):
    geom, c = contrast
    n, R, Ro = geom.n, geom.R_star, geom.R_Omega
    # outer: A r^l + B r^-(l+n-2), w(R) = 1, w'(Ro) = 0
    q = l + n - 2
    ratio = l * Ro ** (l + q) / q  # B / A
    A = 1.0 / (R**l + ratio * R**-q)
    B = ratio * A
    dw_out = l * A * R ** (l - 1) - q * B * R ** (-q - 1)
    ref = c.d1 * l / R - c.d2 * dw_out
    assert sp.dtn(geom, c, l, 0.0) == pytest.approx(ref, rel=1e-6)


def test_dtn_energy_identity(contrast):
    geom, c = contrast
    for l in (0, 3):
        for lam in np.geomspace(1e-4, 1e6, 11):
            chk = sp.dtn_energy_check(geom, c, l, lam)
            assert abs(chk.defect) <= 1e-8 * (1 + chk.D)


def test_dtn_positive_and_increasing(contrast):
    geom, c = contrast
    lams = np.geomspace(1e-4, 1e6, 25)
    for l in (0, 2):
        D = np.array([sp.dtn(geom, c, l, x) for x in lams])
        assert np.all(D > 0)
        assert np.all(np.diff(D) > 0)


def test_boundary_layer(contrast):
    geom, c = contrast
    lam = 1e6
    target = math.sqrt(c.kappa1 * c.d1) + math.sqrt(c.kappa2 * c.d2)
    assert sp.dtn(geom, c, 0, lam) / math.sqrt(lam) == pytest.approx(target, rel=0.01)
    sol = sp.radial_transmission_solve(geom, c, 0, lam)
    width = math.sqrt(c.d1 / (lam * c.kappa1))
    far = sol.inner.r < geom.R_star - 10 * width
    assert np.max(np.abs(sol.inner.w[far])) < 1e-3


def test_lambda_t_limits(contrast):
    geom, c = contrast
    assert sp.a0_limit_defect(geom, c) <= 1e-4
    for l in (0, 1, 2):
        assert sp.kappa_inv_limit_defect(geom, c, l) <= 1e-4


@pytest.mark.parametrize("scenario", sc.regime_scenarios(), ids=lambda s: s.name)
def test_positive_eigenvalue_count(scenario):
    model = scenario.model
    geom, c = sp.setup(model, sc.U_STAR, sc.R_OMEGA)
    point = eq.indicators(model, eq.DomainSpec.ball(3, sc.R_OMEGA), sc.U_STAR)
    rep = sp.find_spectrum(geom, c, predicted=point.predicted_positive_eigenvalues)
    assert rep.total_positive == scenario.predicted_positive
    assert rep.match
    assert rep.kernel_dim == 4
    assert not rep.inconclusive


def test_mismatch_is_reported_not_raised(contrast):
    geom, c = contrast
    rep = sp.find_spectrum(geom, c, l_max=1, predicted=99)
    assert rep.match is False


def test_higher_modes_have_positive_b(contrast):
    geom, c = contrast
    grid = sp.scan_grid(sp.default_lambda_max(geom, c), points=60)
    for l in range(1, 9):
        assert min(sp.b_lambda(geom, c, l, x) for x in grid) > 0


def test_kernel_dimension_and_direction_n2():
    model = sc.affine_model(4.0, 1.0, gamma=0.1, n=2)
    geom, c = sp.setup(model, sc.U_STAR, sc.R_OMEGA)
    km = sp.kernel_modes(geom, c)
    assert sum(v["nullity"] * v["mult"] for v in km.values()) == 3
    ref = sp.kernel_pair_direction(geom, c)
    assert km[0]["direction"]["v_Gamma"] == pytest.approx(ref["v"], rel=1e-8)


@pytest.mark.parametrize("idx, sign", [(0, 1), (1, -1), (3, 1), (4, -1)])
def test_principal_eigenvalue_sign(idx, sign):
    s = sc.regime_scenarios()[idx]
    geom, c = sp.setup(s.model, sc.U_STAR, sc.R_OMEGA)
    lam = sp.principal_eigenvalue(geom, c)
    assert np.sign(lam) == sign
    if sign > 0:
        assert sp.b_lambda(geom, c, 0, lam) == pytest.approx(0.0, abs=1e-8)


def test_multiplicity():
    assert [sp.multiplicity(3, l) for l in range(4)] == [1, 3, 5, 7]
    assert [sp.multiplicity(2, l) for l in range(4)] == [1, 2, 2, 2]


@pytest.mark.parametrize("kappa, m, expected", [(1.0, 2, 2), (1.0, 3, 3), (0.01, 2, 1), (0.01, 3, 2)])
def test_multi_sphere_counts(kappa, m, expected):
    dom = eq.DomainSpec.ball(3, 2.0, {2: 1.0, 3: 0.9})
    rep = sp.multi_sphere_mean_mode(sc.affine_model(4.0, kappa, gamma=0.1), dom, sc.U_STAR, m)
    assert rep.unstable_directions == expected


def test_geometry_schema():
    with pytest.raises(SchemaError):
        sp.geometry_from_dict({"n": 3})
    g = sp.geometry_from_dict({"n": 3, "R_Omega": 1.0}, R_star=0.5)
    assert g.interface_area == pytest.approx(math.pi)


def test_root_grows_as_eta_approaches_one():
    cases = [(sc.affine_model(B, 1.0), sc.U_STAR, sc.R_OMEGA) for B in (3.5, 3.0, 2.97)]
    rows = sp.largest_root_sweep(cases, cells=1000)
    etas = [r["eta"] for r in rows]
    roots = [r["largest_root"] for r in rows]
    assert etas == sorted(etas) and etas[-1] < 1
    assert not any(r["inconclusive"] for r in rows)
    assert roots == sorted(roots) and roots[-1] > 100 * roots[0]
