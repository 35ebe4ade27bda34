import numpy as np
import pytest

from stefan_lab import hanzawa as hz
from stefan_lab.errors import DomainError


@pytest.fixture(params=[3, 2], ids=["n=3", "n=2"])
def sphere(request):
    return hz.ReferenceSphere(n=request.param, S=1.0, n_theta=64, n_phi=128)


def test_reference_sphere_curvature(sphere):
    H = hz.mean_curvature(sphere, np.zeros(sphere.mesh()[0].shape if sphere.n == 3 else sphere.phi.shape))
    assert np.max(np.abs(H + (sphere.n - 1) / sphere.S)) <= 1e-13


@pytest.mark.parametrize("c", [-0.2, 0.1, 0.25])
def test_concentric_sphere_curvature(sphere, c):
    shape = sphere.mesh()[0].shape if sphere.n == 3 else sphere.phi.shape
    H = hz.mean_curvature(sphere, np.full(shape, c))
    assert np.max(np.abs(H + (sphere.n - 1) / (sphere.S + c))) <= max(1e-10, hz.roundoff_floor(sphere))


def test_shifted_sphere_normal_and_curvature(sphere):
    delta = 0.1
    rho = hz.shifted_sphere(sphere, delta)
    nf = hz.normal_and_beta(sphere, rho)
    assert np.max(np.abs(np.linalg.norm(nf.nu, axis=-1) - 1)) <= 1e-14
    assert np.max(np.abs(nf.nu - hz.shifted_sphere_normal(sphere, delta))) <= 1e-5
    H = hz.mean_curvature(sphere, rho)
    assert np.max(np.abs(H + (sphere.n - 1) / sphere.S)) <= 1e-4


def test_harmonics_are_laplace_beltrami_eigenfunctions():
    sph = hz.ReferenceSphere(n=3, n_theta=64, n_phi=128)
    for l in (1, 2, 4):
        for m in (0, 1, -2 if l >= 2 else 0):
            Y = hz.harmonic(sph, l, m)
            err = hz.linearized_curvature(sph, Y) - hz.harmonic_eigenvalue(3, l, 1.0) * Y
            h = np.pi / sph.n_theta
            assert np.max(np.abs(err)) <= (l + 1) ** 4 * h**4


def test_linearisation_matches_finite_difference():
    sph = hz.ReferenceSphere(n=3, n_theta=64, n_phi=128)
    Y = hz.harmonic(sph, 2, 1)
    Y = Y / np.max(np.abs(Y))
    h = 1e-4
    fd = (hz.mean_curvature(sph, h * Y) - hz.mean_curvature(sph, -h * Y)) / (2 * h)
    assert np.max(np.abs(fd - hz.linearized_curvature(sph, Y))) <= 1e-6


def test_gates():
    sph = hz.ReferenceSphere(n=3, n_theta=32, n_phi=64)
    t = sph.mesh()[0]
    with pytest.raises(DomainError):
        hz.mean_curvature(sph, np.full(t.shape, 0.3))
    with pytest.raises(DomainError):
        hz.mean_curvature(sph, 0.2 * np.cos(t))


def test_sphere_validation():
    with pytest.raises(DomainError):
        hz.ReferenceSphere(n=4)
    with pytest.raises(DomainError):
        hz.ReferenceSphere(n=3, n_phi=63)


@pytest.mark.parametrize("n", [3, 2])
def test_battery_passes(n):
    rep = hz.battery_report(n=n, S=1.0, grid=(64, 128))
    assert rep["passed"], [c for c in rep["checks"] if not c["passed"]]


def test_battery_other_radius():
    rep = hz.battery_report(n=3, S=2.0, grid=(64, 128))
    assert rep["passed"]


def test_constant_height_keeps_reference_normal(sphere):
    shape = sphere.mesh()[0].shape if sphere.n == 3 else sphere.phi.shape
    nf = hz.normal_and_beta(sphere, np.full(shape, 0.2))
    assert all(np.max(np.abs(a)) <= 1e-12 for a in nf.alpha)
    assert np.max(np.abs(nf.beta - 1.0)) <= 1e-15
    assert np.max(np.abs(nf.nu - sphere.unit_points())) <= 1e-12


def test_linearisation_of_constant_direction(sphere):
    shape = sphere.mesh()[0].shape if sphere.n == 3 else sphere.phi.shape
    out = hz.linearized_curvature(sphere, np.ones(shape))
    assert np.max(np.abs(out - (sphere.n - 1) / sphere.S**2)) <= 1e-12


def test_degree_one_directions_are_neutral(sphere):
    for m in ((0, 1, -1) if sphere.n == 3 else (0,)):
        Y = hz.harmonic(sphere, 1, m)
        assert np.max(np.abs(hz.linearized_curvature(sphere, Y))) <= 1e-4
