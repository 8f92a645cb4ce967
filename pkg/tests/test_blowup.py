import math
from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from cornerscatter.blowup import (
    blowup_limit_fit,
    classify_support,
    decay_trace,
    nondegeneracy_check,
    rescale_field,
    unit_ball_grid,
    weiss_energy,
    weiss_trace,
)
from cornerscatter.coefficients import CoefficientField, corner_twist_diffeomorphism
from cornerscatter.geometry import build_disk_domain, build_sector_domain
from cornerscatter.oracles import (
    ClosedFormField,
    fullplane_blowup_solution,
    halfspace_blowup_solution,
    radius_squared,
    xvars,
)
from cornerscatter.solver import closed_form_field, nonscattering_field
from cornerscatter.waves import HarmonicPolynomial2D, plane_wave

QUARTER_R2 = ClosedFormField(radius_squared(2) * Fraction(1, 4))
ONE = HarmonicPolynomial2D(0, 1, 0)
X2 = HarmonicPolynomial2D(1, 1 / 2j, -1 / 2j)


def _cubic_fullplane():
    x1, x2 = xvars(2)
    return fullplane_blowup_solution(X2, x2 ** 3 - x1 ** 2 * x2 * 3)


def _manufactured_halfspace(H, noise=0.3):
    v = halfspace_blowup_solution(H, 1.0)
    m = H.m

    def value(p):
        p = np.atleast_2d(p)
        r = np.hypot(p[:, 0], p[:, 1])
        th = np.arctan2(p[:, 1], p[:, 0])
        bump = noise * r ** (m + 1) * (np.sin(th) + r * np.cos(3 * th))
        return np.where(p[:, 1] > 1e-12, v(p) + bump, 0.0)

    return v, closed_form_field(value)


# --- rescaling --------------------------------------------------------------


def test_unit_ball_grid_layout():
    pts, r, th = unit_ball_grid(8, 4)
    assert pts.shape == (32, 2)
    assert np.allclose(np.hypot(*pts.T).reshape(4, 8), r[:, None])
    assert r[-1] == 1.0


def test_rescale_identity_at_unit_scale():
    f = _cubic_fullplane()
    rs = rescale_field(f, (0, 0), 1.0, 3)
    assert np.array_equal(rs.values, f(rs.points).astype(complex))


@given(st.floats(0.01, 5.0))
def test_rescale_homogeneous_is_scale_free(r):
    f = _cubic_fullplane()
    a = rescale_field(f, (0, 0), 1.0, 3).values
    b = rescale_field(f, (0, 0), r, 3).values
    assert np.allclose(a, b, rtol=1e-10, atol=1e-12)


@given(st.complex_numbers(max_magnitude=10, allow_nan=False, allow_infinity=False), st.floats(0.05, 2.0))
def test_rescale_is_linear(alpha, r):
    f = _cubic_fullplane()
    g = closed_form_field(lambda p: alpha * f(p))
    assert np.allclose(rescale_field(g, (0.1, 0.2), r, 2).values,
                       alpha * rescale_field(f, (0.1, 0.2), r, 2).values, rtol=1e-12, atol=1e-12)


def test_rescale_rejects_bad_scale():
    with pytest.raises(ValueError):
        rescale_field(QUARTER_R2, (0, 0), 0.0, 2)


# --- decay ------------------------------------------------------------------


def test_decay_exponent_examples():
    t = decay_trace(QUARTER_R2, (0, 0), [0.4, 0.2, 0.1, 0.05])
    assert t.exponent == pytest.approx(2.0, abs=0.05)
    assert np.all(np.diff(t.S) >= 0)
    x1, x2 = xvars(2)
    half = ClosedFormField(x2, (0.0, math.pi))
    assert decay_trace(half, (0, 0), [0.4, 0.2, 0.1, 0.05]).exponent == pytest.approx(1.0, abs=0.05)


def test_decay_zero_field_is_undefined():
    zero = closed_form_field(lambda p: np.zeros(len(p)), lambda p: np.zeros((len(p), 2)))
    t = decay_trace(zero, (0, 0), [0.2, 0.1, 0.05])
    assert t.exponent is None and "zero" in t.note and not t.violation


def test_decay_violation_flag():
    t = decay_trace(QUARTER_R2, (0, 0), [0.4, 0.2, 0.1], target=3)
    assert t.violation
    assert not decay_trace(QUARTER_R2, (0, 0), [0.4, 0.2, 0.1], target=2).violation


@given(st.complex_numbers(min_magnitude=1e-3, max_magnitude=1e3, allow_nan=False, allow_infinity=False))
def test_decay_exponent_scale_invariant(c):
    f = _cubic_fullplane()
    g = closed_form_field(lambda p: c * f(p), lambda p: c * f.gradient(p))
    radii = [0.3, 0.15, 0.075]
    assert decay_trace(g, (0, 0), radii).exponent == pytest.approx(decay_trace(f, (0, 0), radii).exponent, abs=1e-9)


# --- Weiss energy -------------------------------------------------------------


@pytest.mark.parametrize("s", [0.25, 0.5, 1.0])
def test_weiss_quarter_r2_is_pi_over_eight(s):
    WA, W = weiss_energy(QUARTER_R2, ONE, None, s, 2)
    assert W == pytest.approx(math.pi / 8, abs=1e-10)
    assert WA == W


def test_weiss_cubic_fullplane_matches_exact():
    from cornerscatter.oracles import weiss_energy_exact

    f = _cubic_fullplane()
    exact = float(weiss_energy_exact(f.poly, X2.to_multipoly(), 3)) * math.pi
    for s in (0.25, 0.5, 1.0):
        assert weiss_energy(f, X2, None, s, 3)[1] == pytest.approx(exact, abs=1e-10)


def test_weiss_zero_field():
    zero = closed_form_field(lambda p: np.zeros(len(p)), lambda p: np.zeros((len(p), 2)))
    assert weiss_energy(zero, X2, None, 0.5, 3) == (0.0, 0.0)


def test_weiss_order_must_match_degree():
    with pytest.raises(ValueError):
        weiss_energy(QUARTER_R2, ONE, None, 0.5, 3)


def test_weiss_halfspace_sector_breaks():
    v = halfspace_blowup_solution(X2, 1.0)
    t = weiss_trace(v, None, None, [1.0, 0.5, 0.25], 1)
    assert np.ptp(t.W) < 1e-10


def test_weiss_lipschitz_medium_gap_is_linear_in_r():
    M = np.array([[0.5, 0.1], [0.1, 0.2]])
    medium = CoefficientField(1.0, build_disk_domain(2.0),
                              anisotropy=lambda p: np.hypot(p[:, 0], p[:, 1])[:, None, None] * M)
    radii = [1.0, 0.5, 0.25, 0.125]
    gaps = [abs(np.subtract(*weiss_energy(QUARTER_R2, ONE, medium, r, 2))) for r in radii]
    ratios = np.array(gaps) / radii
    assert ratios.max() < 1.01 * ratios.min()


# --- support and fitting --------------------------------------------------------


def test_support_classes():
    assert classify_support(rescale_field(QUARTER_R2, (0, 0), 1, 2)).kind == "full"
    half = classify_support(rescale_field(halfspace_blowup_solution(X2, 1.0), (0, 0), 1, 1))
    assert half.kind == "half-space"
    assert np.allclose(half.normal, [0, 1], atol=0.05)
    zero = closed_form_field(lambda p: np.zeros(len(p)))
    assert classify_support(rescale_field(zero, (0, 0), 1, 1)).kind == "empty"


@pytest.mark.parametrize("deg", [60, 90, 120, 135, 240])
def test_sector_support_angle(deg):
    th = math.radians(deg)

    def value(p):
        phi = np.mod(np.arctan2(p[:, 1], p[:, 0]), 2 * math.pi)
        return np.where(phi <= th, np.sum(p ** 2, axis=1) * np.sin(math.pi * np.minimum(phi, th) / th), 0.0)

    f = closed_form_field(value)
    sc = classify_support(rescale_field(f, (0, 0), 1, 2))
    assert sc.kind == "sector" and abs(math.degrees(sc.angle) - deg) < 5


def test_fit_fullplane_exact():
    f = _cubic_fullplane()
    fit = blowup_limit_fit(f, (0, 0), 3, [0.4, 0.2, 0.1, 0.05])
    assert fit.converged and fit.support.kind == "full" and fit.family == "full-plane"
    assert fit.fit_residual < 1e-8
    # Delta v = H = x2, i.e. (z - zbar) / 2i in the z^j zbar^(1-j) basis
    assert np.allclose(fit.H_fit, [-1 / 2j, 1 / 2j])


@pytest.mark.parametrize("m", [1, 2, 3])
def test_fit_manufactured_halfspace(m):
    H = HarmonicPolynomial2D(m, 0.8 + 0.3j, -0.4 + 0.5j)
    v, u = _manufactured_halfspace(H)
    radii = [0.1, 0.05, 0.025, 0.0125]
    fit = blowup_limit_fit(u, (0, 0), m, radii)
    assert fit.converged and fit.support.kind == "half-space"
    pts, _, _ = unit_ball_grid()
    assert np.abs(fit.evaluate(pts) - v(pts)).max() < 2 * radii[-1]
    c = 0.5 * (H.a - H.b)
    assert abs(fit.harmonic.a - c) < 1e-3 * abs(c) and abs(fit.harmonic.b + c) < 1e-3 * abs(c)


def test_fit_refuses_without_contraction():
    # order too high: rescalings blow up like r^-1
    v, u = _manufactured_halfspace(HarmonicPolynomial2D(1, 1.0, 0.0))
    fit = blowup_limit_fit(u, (0, 0), 2, [0.1, 0.05, 0.025])
    assert not fit.converged and fit.coefficients is None and fit.notes
    forced = blowup_limit_fit(u, (0, 0), 2, [0.1, 0.05, 0.025], force_fit=True)
    assert forced.coefficients is not None


def test_fit_radii_guards():
    with pytest.raises(ValueError):
        blowup_limit_fit(QUARTER_R2, (0, 0), 2, [0.2, 0.1])
    with pytest.raises(ValueError):
        blowup_limit_fit(QUARTER_R2, (0, 0), 2, [0.1, 0.2, 0.05])


def test_fit_pushforward_corner_sector():
    spec = build_sector_domain(2 * math.pi / 3, 0.5)
    phi = corner_twist_diffeomorphism(spec, 0.3)
    u = nonscattering_field(phi, spec, plane_wave(1.0, (math.cos(0.3), math.sin(0.3))))
    fit = blowup_limit_fit(u, (0, 0), 3, [0.1, 0.05, 0.025, 0.0125])
    assert fit.support.kind == "sector"
    assert abs(math.degrees(fit.support.angle) - 120) < 5


# --- non-degeneracy -----------------------------------------------------------------


def test_nondegeneracy_quarter_r2():
    res = nondegeneracy_check(QUARTER_R2, (0, 0), 2, 0.5)
    assert res.passed
    assert res.c_eps == pytest.approx(9 / 16, rel=1e-12)


def test_nondegeneracy_grid_search_oracle():
    # brute-force sup over a fine disk grid around x = (1, 0)
    t = np.linspace(0, 2 * math.pi, 721)
    s = np.linspace(0, 0.5, 201)
    S, T = np.meshgrid(s, t)
    y = np.c_[(1 + S * np.cos(T)).ravel(), (S * np.sin(T)).ravel()]
    assert np.max(np.sum(y ** 2, axis=1)) / 4 == pytest.approx(9 / 16, rel=1e-12)


def test_nondegeneracy_zero_field_fails():
    zero = closed_form_field(lambda p: np.zeros(len(p)))
    res = nondegeneracy_check(zero, (0, 0), 2, 0.25)
    assert not res.passed and res.reason == "empty support"


@pytest.mark.parametrize("eps", [0.1, 0.25, 0.5, 0.9])
def test_nondegeneracy_halfspace(eps):
    v = halfspace_blowup_solution(HarmonicPolynomial2D(2, 1.0, 0.2j), 1.0)
    res = nondegeneracy_check(v, (0, 0), 2, eps)
    assert res.passed and res.c_eps > 0
    assert np.nanmax(res.min_ratios) - np.nanmin(res.min_ratios) < 1e-10 * np.nanmax(res.min_ratios)


def test_nondegeneracy_detects_faster_decay():
    # |x|^2 vanishes faster than |x|^1: the ratio decays like |x|
    res = nondegeneracy_check(QUARTER_R2, (0, 0), 1, 0.25)
    assert not res.passed and res.slope == pytest.approx(-1.0, abs=1e-6)
    # against |x|^3 the ratio grows, which is not a failure
    assert nondegeneracy_check(QUARTER_R2, (0, 0), 3, 0.25).passed


def test_nondegeneracy_eps_guard():
    with pytest.raises(ValueError):
        nondegeneracy_check(QUARTER_R2, (0, 0), 2, 1.0)


@given(st.integers(1, 4), st.floats(-2.0, 2.0).filter(lambda t: abs(t) > 1e-3))
def test_homogeneous_plus_remainder_is_cauchy(m, noise):
    _, u = _manufactured_halfspace(HarmonicPolynomial2D(m, 1.0, 0.5j), noise)
    fit = blowup_limit_fit(u, (0, 0), m, [0.2, 0.1, 0.05, 0.025])
    assert fit.converged
    assert np.all(np.diff(fit.gaps) < 0)
