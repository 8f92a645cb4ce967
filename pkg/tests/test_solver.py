import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from cornerscatter.coefficients import bump_diffeomorphism, constant_medium, pushforward_medium
from cornerscatter.farfield import farfield_from_boundary, relative_pattern_error
from cornerscatter.geometry import build_disk_domain, build_sector_domain, build_star_domain, mesh_domain
from cornerscatter.oracles import mie_disk_farfield
from cornerscatter.solver import (
    QUAD_BARY,
    QUAD_W,
    FactorizedTransmission,
    TransmissionProblem,
    WaveField,
    assemble_matrices,
    assemble_source,
    assemble_transmission_system,
    default_mode_cutoff,
    dtn_coefficients,
    nonscattering_field,
    solve_scattered_field,
    transmission_sources,
)
from cornerscatter.waves import fourier_bessel_wave, hankel1, hankel1_derivative, plane_wave

DISK = build_disk_domain(0.5)
SECTOR = build_sector_domain(3 * math.pi / 4, 0.5)


@pytest.fixture(scope="module")
def disk_mesh():
    return mesh_domain(DISK, 0.08, 1.0)


@pytest.fixture(scope="module")
def sector_mesh():
    return mesh_domain(SECTOR, 0.06, 1.0)


def test_dtn_symmetry_in_order():
    orders, lam = dtn_coefficients(1.0, 1.0, 20)
    for m in range(1, 21):
        assert lam[orders == m][0] == lam[orders == -m][0]


@pytest.mark.parametrize("kR", [1.0, 5.0, 10.0])
def test_dtn_outgoing_flux(kR):
    _, lam = dtn_coefficients(kR, 1.0, 40)
    assert np.all(lam.imag > 0)


@pytest.mark.parametrize("m", [0, 1, 4, 9])
def test_dtn_is_the_radial_derivative_of_an_outgoing_mode(m):
    kappa, R = 1.3, 1.1
    orders, lam = dtn_coefficients(kappa, R, 12)
    dr = kappa * hankel1_derivative(m, kappa * R)
    assert abs(dr - lam[orders == m][0] * hankel1(m, kappa * R)) < 1e-12 * abs(dr)


def test_cutoff_floor():
    mesh = mesh_domain(DISK, 0.1, 1.0)
    med = constant_medium(DISK, 1.0, rho=2.0)
    assert default_mode_cutoff(1.0, 1.0) == 16
    with pytest.raises(ValueError):
        TransmissionProblem(mesh, med, plane_wave(1.0, (1, 0)), N=5)


def test_identity_medium_zero_source(disk_mesh):
    med = constant_medium(DISK, 1.0)
    A, rhs = assemble_transmission_system(TransmissionProblem(disk_mesh, med, plane_wave(1.0, (1, 0))))
    assert not np.any(rhs)
    u = solve_scattered_field(TransmissionProblem(disk_mesh, med, fourier_bessel_wave(1.0, 3)))
    assert np.all(u.values == 0)


def test_matrix_complex_symmetric(sector_mesh):
    med = constant_medium(SECTOR, 1.0, rho=2.0, c0=0.3)
    system = assemble_matrices(sector_mesh, med, 16)
    A = system.matrix
    assert abs(A - A.T).max() <= 1e-14 * abs(A).max()
    assert abs(A - A.conj().T).max() > 1e-3


def test_stiffness_row_sums(sector_mesh):
    med = constant_medium(SECTOR, 1.0, rho=2.0, c0=0.3)
    K = assemble_matrices(sector_mesh, med, 16).stiffness
    assert np.abs(K @ np.ones(K.shape[0])).max() < 1e-12


def test_mass_integrates_density():
    mesh = mesh_domain(DISK, 0.05, 1.0)
    med = constant_medium(DISK, 2.0, rho=3.0)
    M = assemble_matrices(mesh, med, 16).mass
    one = np.ones(M.shape[0])
    # kappa^2 (pi R^2 + (rho - 1) pi a^2)
    expected = 4.0 * (math.pi + 2.0 * math.pi * 0.25)
    assert one @ M @ one == pytest.approx(expected, rel=5e-3)


def test_weak_source_matches_distributional_form():
    """b against a smooth test function equals int f phi + int g phi (inward normal convention)."""
    mesh = mesh_domain(DISK, 0.02, 1.0)
    med = constant_medium(DISK, 1.0, rho=2.0, c0=0.5)
    w = plane_wave(1.0, (0.6, 0.8))
    phi = lambda p: np.exp(p[:, 0]) * np.cos(p[:, 1])  # noqa: E731
    b = assemble_source(mesh, med, w)
    lhs = b @ phi(mesh.vertices)
    # route two: polar Gauss on the disk and on its boundary
    xr, wr = np.polynomial.legendre.leggauss(40)
    r = 0.25 * (xr + 1)
    n_t = 256
    t = 2 * math.pi * np.arange(n_t) / n_t
    R, T = np.meshgrid(r, t, indexing="ij")
    pts = np.c_[(R * np.cos(T)).ravel(), (R * np.sin(T)).ravel()]
    wts = np.outer(0.25 * wr * r, np.full(n_t, 2 * math.pi / n_t)).ravel()
    f = transmission_sources(med, w, pts)
    bnd = 0.5 * np.c_[np.cos(t), np.sin(t)]
    inward = -bnd / 0.5
    _, g = transmission_sources(med, w, bnd, inward)
    rhs = np.sum(wts * f * phi(pts)) + 0.5 * np.sum(g * phi(bnd)) * 2 * math.pi / n_t
    assert abs(lhs - rhs) < 2e-3 * abs(rhs)


def test_disk_against_mie(disk_mesh):
    med = constant_medium(DISK, 1.0, rho=2.0)
    w = plane_wave(1.0, (1.0, 0.0))
    u = solve_scattered_field(TransmissionProblem(disk_mesh, med, w))
    err = relative_pattern_error(farfield_from_boundary(u, 1.0, 0.75), mie_disk_farfield(1.0, 2.0, 0.5, w))
    assert err < 0.02


def test_reciprocity():
    """u_inf(-d1; d2) = u_inf(-d2; d1) up to a few discretization errors."""
    d1 = np.array([1.0, 0.0])
    d2 = np.array([math.cos(2.0), math.sin(2.0)])
    gaps, scale = [], []
    for h in (0.06, 0.03):
        mesh = mesh_domain(SECTOR, h, 1.0)
        fact = FactorizedTransmission(mesh, constant_medium(SECTOR, 1.0, rho=2.0, c0=0.4))
        p1 = farfield_from_boundary(fact.solve(plane_wave(1.0, d1)), 1.0, 0.75)
        p2 = farfield_from_boundary(fact.solve(plane_wave(1.0, d2)), 1.0, 0.75)
        a = p1(math.atan2(-d2[1], -d2[0]))[0]
        b = p2(math.atan2(-d1[1], -d1[0]))[0]
        gaps.append(abs(a - b))
        scale.append(a)
    disc = abs(scale[0] - scale[1])
    assert gaps[1] <= 3 * disc
    assert gaps[1] < 1e-2 * abs(scale[1])


def test_factorization_reuse_and_residual(sector_mesh):
    fact = FactorizedTransmission(sector_mesh, constant_medium(SECTOR, 1.0, rho=2.0))
    u = fact.solve(fourier_bessel_wave(1.0, 2))
    rhs = -assemble_source(sector_mesh, fact.medium, fourier_bessel_wave(1.0, 2))
    res = np.linalg.norm(fact.system.matrix @ u.values - rhs) / np.linalg.norm(rhs)
    assert res < 1e-10
    assert fact.condition_estimate() > 1


def test_wavefield_interpolates_linear_functions(sector_mesh):
    vals = 2 * sector_mesh.vertices[:, 0] - 3j * sector_mesh.vertices[:, 1] + 1
    u = WaveField("manufactured", sector_mesh, vals)
    pts = np.array([[0.1, 0.2], [-0.3, 0.4], [0.55, -0.1]])
    assert np.allclose(u(pts), 2 * pts[:, 0] - 3j * pts[:, 1] + 1, atol=1e-13)
    assert np.allclose(u.gradient(pts), [[2, -3j]] * 3, atol=1e-12)
    assert np.isnan(u([[2.0, 0.0]])[0])
    assert np.allclose((2 * u)(pts), 2 * u(pts))


def test_nonscattering_field():
    spec = build_star_domain(0.6, 0.1, 3)
    phi = bump_diffeomorphism((0, 0), 0.35, 0.1)
    w = plane_wave(1.0, (1.0, 0.0))
    u = nonscattering_field(phi, spec, w)
    out = np.array([[0.8, 0.0], [0.0, -0.9]])
    assert np.all(u(out) == 0)
    x = np.array([[0.1, 0.05]])
    assert u(x)[0] == pytest.approx(w(phi.inverse(x))[0] - w(x)[0])
    # outside the bump support the map is the identity
    assert u([[0.45, 0.0]])[0] == 0


def test_pushforward_scatters_weakly():
    spec = build_star_domain(0.6, 0.1, 3)
    phi = bump_diffeomorphism((0, 0), 0.35, 0.1)
    med = pushforward_medium(phi, spec, 1.0)
    mesh = mesh_domain(spec, 0.04, 1.0)
    u = solve_scattered_field(TransmissionProblem(mesh, med, plane_wave(1.0, (1.0, 0.0))))
    inner = np.array([[0.1, 0.1], [-0.2, 0.05]])
    exact = nonscattering_field(phi, spec, plane_wave(1.0, (1.0, 0.0)))
    assert np.abs(u(inner) - exact(inner)).max() < 1e-3
    assert np.abs(u(np.array([[0.9, 0.0]]))).max() < 1e-4


@given(st.floats(0.0, 1.0), st.floats(0.0, 1.0))
def test_quadrature_exact_for_quintics(s, t):
    # degree-5 Dunavant: exact on x^a y^b with a + b <= 5 over the reference triangle
    pts = QUAD_BARY[:, 1:]
    a, b = int(5 * s), int((5 - int(5 * s)) * t)
    approx = 0.5 * np.sum(QUAD_W * pts[:, 0] ** a * pts[:, 1] ** b)
    exact = math.factorial(a) * math.factorial(b) / math.factorial(a + b + 2)
    assert approx == pytest.approx(exact, rel=1e-13)
