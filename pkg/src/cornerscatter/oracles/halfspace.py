"""Explicit blowup solutions and the distributional residual oracle."""

from __future__ import annotations

import math
from dataclasses import dataclass
from functools import lru_cache
from fractions import Fraction
from typing import Callable

import numpy as np

from ..polynomials import GaussianRational, MultiPoly, complex_power, radius_squared
from ..waves import HarmonicPolynomial2D

Array = np.ndarray

N_TEST_FUNCTIONS = 50
RESIDUAL_QUAD_TOL = 1e-13


class QuadratureError(ArithmeticError):
    pass


@lru_cache(maxsize=None)
def gauss_legendre(n: int) -> tuple[Array, Array]:
    return np.polynomial.legendre.leggauss(n)


def _angle_in(theta, lo, hi):
    """theta (mod 2 pi) in the closed arc [lo, hi]."""
    width = hi - lo
    t = np.mod(theta - lo, 2 * math.pi)
    return (t <= width + 1e-14) | (t >= 2 * math.pi - 1e-14)


@dataclass(frozen=True)
class ClosedFormField:
    """Polynomial field restricted to a closed sector (or the whole plane).

    ``sector`` is (theta_minus, theta_plus) with theta_minus < theta_plus,
    or None for the full plane.  Outside the sector the field is zero.
    """

    poly: MultiPoly
    sector: tuple[float, float] | None = None
    label: str = ""

    def inside(self, pts) -> Array:
        pts = np.atleast_2d(pts)
        if self.sector is None:
            return np.ones(len(pts), dtype=bool)
        th = np.arctan2(pts[:, 1], pts[:, 0])
        return _angle_in(th, *self.sector) | (np.hypot(pts[:, 0], pts[:, 1]) == 0)

    def __call__(self, pts) -> Array:
        pts = np.atleast_2d(np.asarray(pts, dtype=float))
        return np.where(self.inside(pts), self.poly(pts), 0.0)

    def gradient(self, pts) -> Array:
        pts = np.atleast_2d(np.asarray(pts, dtype=float))
        return np.where(self.inside(pts)[:, None], self.poly.gradient(pts), 0.0)

    @property
    def support(self):
        return self

    @property
    def extent(self) -> float:
        return math.inf


def _harmonic_poly(H) -> MultiPoly:
    if isinstance(H, HarmonicPolynomial2D):
        return H.to_multipoly()
    return H


def fullplane_blowup_solution(H, w: MultiPoly | None = None) -> ClosedFormField:
    """v = |x|^2 H / (4m + 4) + w with Delta v = H exactly."""
    Hp = _harmonic_poly(H)
    if not Hp.laplacian().is_zero:
        raise ValueError("H is not harmonic")
    if not Hp.is_homogeneous():
        raise ValueError("H must be homogeneous")
    m = max(Hp.degree(), 0)
    w = MultiPoly.zero(2) if w is None else w
    if not w.laplacian().is_zero:
        raise ValueError("w is not harmonic")
    if not w.is_zero and not w.is_homogeneous(m + 2):
        raise ValueError(f"w must be homogeneous of degree {m + 2}")
    v = radius_squared(2) * Hp * Fraction(1, 4 * m + 4) + w
    assert v.laplacian() == Hp
    return ClosedFormField(v, None, label="full-plane")


def halfspace_constant(c0: float) -> float:
    """Constant C* in v = C* (a - b) r^m (e^{im theta} - e^{-im theta}).

    Fixed by the distributional residual: the normal-derivative jump of v
    on {x2 = 0} equals c0 d_nu H only for C* = c0 / 2.
    """
    return 0.5 * c0


def halfspace_blowup_solution(H: HarmonicPolynomial2D, c0: float, constant: float | None = None) -> ClosedFormField:
    """Field supported on {x2 >= 0} with Delta v = c0 (nu . grad H) on {x2 = 0}, nu = e2."""
    if H.m == 0:
        raise ValueError("the half-space solution needs m >= 1")
    C = halfspace_constant(c0) if constant is None else constant
    coeff = GaussianRational.from_complex(complex(C) * (H.a - H.b))
    poly = (complex_power(H.m) - complex_power(H.m, conj=True)) * coeff
    return ClosedFormField(poly, (0.0, math.pi), label="half-space")


# ---------------------------------------------------------------------------
# Distributional residual
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class Bump:
    """phi(x) = (1 - |x - c|^2 / r^2)^4 on the ball B_r(c)."""

    center: tuple[float, float]
    radius: float

    def value(self, pts) -> Array:
        d2 = np.sum((np.atleast_2d(pts) - self.center) ** 2, axis=1) / self.radius ** 2
        return np.where(d2 < 1, (1 - d2) ** 4, 0.0)

    def laplacian(self, pts) -> Array:
        # phi = g(s), s = |x-c|^2/r^2; Delta phi = (4 s g''(s) + 4 g'(s)) / r^2 in 2D
        s = np.sum((np.atleast_2d(pts) - self.center) ** 2, axis=1) / self.radius ** 2
        g1 = -4 * (1 - s) ** 3
        g2 = 12 * (1 - s) ** 2
        return np.where(s < 1, (4 * s * g2 + 4 * g1) / self.radius ** 2, 0.0)


def default_test_family(rays: tuple[float, float], n: int = N_TEST_FUNCTIONS, seed: int = 7) -> list[Bump]:
    """Bumps centred near the two rays, several covering the corner."""
    rng = np.random.default_rng(seed)
    out = []
    for j in range(n):
        ray = rays[j % 2]
        t = rng.uniform(0.0, 0.9)
        off = rng.uniform(-0.12, 0.12)
        e = np.array([math.cos(ray), math.sin(ray)])
        nrm = np.array([-e[1], e[0]])
        c = t * e + off * nrm
        r = rng.uniform(0.15, 0.35)
        out.append(Bump((float(c[0]), float(c[1])), float(r)))
    return out


def _ray_ball_interval(theta: float, bump: Bump):
    """Parameter interval of {t e_theta : t >= 0} inside the bump's ball."""
    e = np.array([math.cos(theta), math.sin(theta)])
    c = np.asarray(bump.center)
    p = c @ e
    q = c @ c - bump.radius ** 2
    disc = p * p - q
    if disc <= 0:
        return None
    s = math.sqrt(disc)
    lo, hi = max(p - s, 0.0), p + s
    return (lo, hi) if hi > lo else None


def _area_integral(f: Callable[[Array], Array], bump: Bump, sector, n_rho: int = 12) -> complex:
    """int over B_r(c) intersected with the sector of f, in polar coordinates about c."""
    c = np.asarray(bump.center, dtype=float)
    r = bump.radius
    xr, wr = gauss_legendre(n_rho)
    rays = [] if sector is None else list(sector)

    # critical directions: towards the corner and towards ray/circle crossings
    crit = [0.0, 2 * math.pi]
    if sector is not None:
        crit.append(math.atan2(-c[1], -c[0]) % (2 * math.pi))
        for th in rays:
            iv = _ray_ball_interval(th, bump)
            if iv is None:
                continue
            e = np.array([math.cos(th), math.sin(th)])
            for t in iv:
                p = t * e - c
                if np.hypot(*p) > 1e-14:
                    crit.append(math.atan2(p[1], p[0]) % (2 * math.pi))
    crit = np.unique(np.array(crit))

    def inner_many(psi: Array) -> Array:
        d = np.c_[np.cos(psi), np.sin(psi)]
        cuts = [np.zeros_like(psi), np.full_like(psi, r)]
        for th in rays:
            e = np.array([math.cos(th), math.sin(th)])
            det = -d[:, 0] * e[1] + d[:, 1] * e[0]
            ok = np.abs(det) > 1e-15
            sd = np.where(ok, det, 1.0)
            rho = (c[0] * e[1] - c[1] * e[0]) / sd
            t = (-d[:, 0] * c[1] + d[:, 1] * c[0]) / sd
            hit = ok & (rho > 0) & (t > 0) & (rho < r)
            cuts.append(np.where(hit, rho, r))
        cuts = np.sort(np.stack(cuts, 1), axis=1)
        lo, hi = cuts[:, :-1], cuts[:, 1:]
        half = 0.5 * (hi - lo)
        rho = half[..., None] * xr + (0.5 * (hi + lo))[..., None]
        pts = c + rho[..., None] * d[:, None, None, :]
        vals = f(pts.reshape(-1, 2)).reshape(rho.shape)
        seg = half * np.sum(wr * rho * vals, axis=-1)
        if sector is not None:
            mid = c + (0.5 * (hi + lo))[..., None] * d[:, None, :]
            keep = _angle_in(np.arctan2(mid[..., 1], mid[..., 0]), *sector) & (half > 5e-16)
            seg = np.where(keep, seg, 0.0)
        return seg.sum(axis=1)

    def gauss(lo, hi, n):
        x, w = gauss_legendre(n)
        psi = 0.5 * (hi - lo) * x + 0.5 * (hi + lo)
        return 0.5 * (hi - lo) * np.sum(w * inner_many(psi))

    total = 0j
    for lo, hi in zip(crit[:-1], crit[1:]):
        if hi - lo < 1e-15:
            continue
        stack = [(lo, hi, 0)]
        while stack:
            a, b, depth = stack.pop()
            coarse, fine = gauss(a, b, 20), gauss(a, b, 40)
            if abs(fine - coarse) < RESIDUAL_QUAD_TOL or depth > 12:
                if depth > 12 and abs(fine - coarse) > 1e-10:
                    raise QuadratureError("angular quadrature failed to converge")
                total += fine
            else:
                m = 0.5 * (a + b)
                stack += [(a, m, depth + 1), (m, b, depth + 1)]
    return total


def _line_integral(H: HarmonicPolynomial2D, bump: Bump, theta: float, normal: Array, n: int = 16) -> complex:
    iv = _ray_ball_interval(theta, bump)
    if iv is None:
        return 0j
    lo, hi = iv
    x, w = gauss_legendre(n)
    t = 0.5 * (hi - lo) * x + 0.5 * (hi + lo)
    e = np.array([math.cos(theta), math.sin(theta)])
    pts = t[:, None] * e
    integrand = (H.gradient(pts) @ normal) * bump.value(pts)
    return 0.5 * (hi - lo) * np.sum(w * integrand)


def inward_normals(sector: tuple[float, float]) -> tuple[Array, Array]:
    """Unit normals of the bounding rays pointing into the sector."""
    lo, hi = sector
    n_lo = np.array([math.cos(lo + math.pi / 2), math.sin(lo + math.pi / 2)])
    n_hi = np.array([math.cos(hi - math.pi / 2), math.sin(hi - math.pi / 2)])
    return n_lo, n_hi


@dataclass(frozen=True)
class ResidualReport:
    residual: float
    normalization: float
    per_test: Array


def distributional_residual_report(v, H: HarmonicPolynomial2D, c0: float,
                                   sector: tuple[float, float] = (0.0, math.pi),
                                   tests: list[Bump] | None = None) -> ResidualReport:
    """max_j |int v Delta phi_j - c0 sum_pm int_{Gamma_pm} (nu_pm . grad H) phi_j|.

    ``normalization`` is the largest Bernoulli term over the family, so the
    relative size of a mismatch can be read off directly.
    """
    tests = default_test_family(sector) if tests is None else tests
    n_lo, n_hi = inward_normals(sector)
    res, bern = [], []
    for b in tests:
        lhs = _area_integral(lambda p, b=b: v(p) * b.laplacian(p), b, sector)
        rhs = c0 * (_line_integral(H, b, sector[0], n_lo) + _line_integral(H, b, sector[1], n_hi))
        res.append(abs(lhs - rhs))
        bern.append(abs(rhs))
    res = np.array(res)
    return ResidualReport(float(res.max()), float(max(bern)), res)


def distributional_residual(v, H: HarmonicPolynomial2D, c0: float,
                            sector: tuple[float, float] = (0.0, math.pi)) -> float:
    return distributional_residual_report(v, H, c0, sector).residual
