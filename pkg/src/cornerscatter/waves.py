"""Bessel and Hankel functions, incident waves, and leading harmonic parts."""

from __future__ import annotations

import cmath
import math
from dataclasses import dataclass, field

import numpy as np
from scipy import special

from .polynomials import GaussianRational, MultiPoly, complex_power

Array = np.ndarray

MAX_TAYLOR_DEGREE = 12


class SpecialFunctionError(ArithmeticError):
    """Bessel or Hankel evaluation overflowed or was called out of range."""


class VanishingToHighOrder(ValueError):
    """All Taylor parts below the maximal degree vanish."""


class NonHarmonicLeadingPart(ValueError):
    """The lowest nonvanishing Taylor part is not harmonic."""


# ---------------------------------------------------------------------------
# Special functions
# ---------------------------------------------------------------------------


def bessel_j(m, x):
    """J_m(x) for integer m (negative orders via J_{-m} = (-1)^m J_m), x >= 0."""
    x = np.asarray(x, dtype=float)
    if np.any(x < 0):
        raise SpecialFunctionError("bessel_j expects nonnegative arguments")
    m = np.asarray(m)
    sign = np.where((m < 0) & (np.abs(m) % 2 == 1), -1.0, 1.0)
    val = sign * special.jv(np.abs(m), x)
    if not np.all(np.isfinite(val)):
        raise SpecialFunctionError(f"J_m overflow for m={m}, x={x}")
    return val


def bessel_y(m, x):
    x = np.asarray(x, dtype=float)
    if np.any(x <= 0):
        raise SpecialFunctionError("bessel_y expects positive arguments")
    m = np.asarray(m)
    sign = np.where((m < 0) & (np.abs(m) % 2 == 1), -1.0, 1.0)
    val = sign * special.yv(np.abs(m), x)
    if not np.all(np.isfinite(val)):
        raise SpecialFunctionError(f"Y_m overflow for m={m}, x={x}")
    return val


def hankel1(m, x):
    """H_m^(1)(x) = J_m(x) + i Y_m(x) for x > 0."""
    x = np.asarray(x, dtype=float)
    if np.any(x <= 0):
        raise SpecialFunctionError("hankel1 expects positive arguments")
    m = np.asarray(m)
    sign = np.where((m < 0) & (np.abs(m) % 2 == 1), -1.0, 1.0)
    val = sign * special.hankel1(np.abs(m), x)
    if not np.all(np.isfinite(val)):
        raise SpecialFunctionError(f"H_m overflow for m={m}, x={x}")
    return val


def hankel1_derivative(m, x):
    """d/dx H_m^(1)(x) = (H_{m-1} - H_{m+1}) / 2."""
    m = np.asarray(m)
    return 0.5 * (hankel1(m - 1, x) - hankel1(m + 1, x))


def bessel_j_derivative(m, x):
    m = np.asarray(m)
    return 0.5 * (bessel_j(m - 1, x) - bessel_j(m + 1, x))


def bessel_series_coefficient(k: int, n: int, kappa: float) -> float:
    """Coefficient of rho^k in J_n(kappa rho) (zero unless k - |n| is even and >= 0)."""
    an = abs(n)
    if k < an or (k - an) % 2:
        return 0.0
    j = (k - an) // 2
    sign = (-1) ** j * ((-1) ** an if n < 0 else 1)
    return sign * (kappa / 2.0) ** k / (math.factorial(j) * math.factorial(j + an))


# ---------------------------------------------------------------------------
# Harmonic polynomials
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class HarmonicPolynomial2D:
    """H = a r^m e^{i m theta} + b r^m e^{-i m theta} = a z^m + b zbar^m."""

    m: int
    a: complex
    b: complex

    def __post_init__(self):
        if self.m < 0:
            raise ValueError("degree must be nonnegative")

    @property
    def is_real(self) -> bool:
        return abs(self.b - np.conj(self.a)) <= 1e-14 * max(1.0, abs(self.a))

    def __call__(self, pts) -> Array:
        pts = np.atleast_2d(pts)
        z = pts[:, 0] + 1j * pts[:, 1]
        if self.m == 0:
            return np.full(len(pts), self.a + self.b, dtype=complex)
        return self.a * z ** self.m + self.b * np.conj(z) ** self.m

    def gradient(self, pts) -> Array:
        pts = np.atleast_2d(pts)
        if self.m == 0:
            return np.zeros((len(pts), 2), dtype=complex)
        z = pts[:, 0] + 1j * pts[:, 1]
        da = self.m * self.a * z ** (self.m - 1)
        db = self.m * self.b * np.conj(z) ** (self.m - 1)
        # d/dx1 z^m = m z^{m-1}, d/dx2 z^m = i m z^{m-1}
        return np.stack([da + db, 1j * da - 1j * db], axis=-1)

    def to_multipoly(self) -> MultiPoly:
        """Exact polynomial with the binary-rational images of a and b."""
        a = GaussianRational.from_complex(self.a)
        b = GaussianRational.from_complex(self.b)
        if self.m == 0:
            return MultiPoly.constant(2, a + b)
        return complex_power(self.m) * a + complex_power(self.m, conj=True) * b

    def scaled(self, c: complex) -> "HarmonicPolynomial2D":
        return HarmonicPolynomial2D(self.m, c * self.a, c * self.b)


# ---------------------------------------------------------------------------
# Incident waves
# ---------------------------------------------------------------------------


def _mode(n: int, kappa: float, pts: Array) -> Array:
    r = np.hypot(pts[:, 0], pts[:, 1])
    th = np.arctan2(pts[:, 1], pts[:, 0])
    return bessel_j(n, kappa * r) * np.exp(1j * n * th)


@dataclass(frozen=True)
class IncidentWave:
    """Entire Helmholtz solution: plane, Fourier-Bessel, or a superposition.

    Fourier-Bessel derivatives use L(+-) = d1 +- i d2, which shift the order:
    L+ [J_n e^{in th}] = -kappa J_{n+1} e^{i(n+1) th},
    L- [J_n e^{in th}] =  kappa J_{n-1} e^{i(n-1) th}.
    """

    kind: str
    kappa: float
    direction: tuple[float, float] | None = None
    order: int | None = None
    terms: tuple = field(default_factory=tuple)

    def __post_init__(self):
        if self.kappa <= 0:
            raise ValueError("wavenumber must be positive")
        if self.kind == "plane":
            d = np.asarray(self.direction, dtype=float)
            if abs(np.linalg.norm(d) - 1.0) > 1e-12:
                raise ValueError("plane-wave direction must be a unit vector")
        elif self.kind == "fourier-bessel":
            if self.order is None or int(self.order) != self.order:
                raise ValueError("Fourier-Bessel wave needs an integer order")
        elif self.kind == "superposition":
            if not self.terms:
                raise ValueError("empty superposition")
            for w, _ in self.terms:
                if w.kappa != self.kappa:
                    raise ValueError("superposed waves must share the wavenumber")
        else:
            raise ValueError(f"unknown incident kind {self.kind!r}")

    @property
    def theta_d(self) -> float:
        return math.atan2(self.direction[1], self.direction[0])

    def __call__(self, pts) -> Array:
        pts = np.atleast_2d(np.asarray(pts, dtype=float))
        k = self.kappa
        if self.kind == "plane":
            return np.exp(1j * k * pts @ np.asarray(self.direction))
        if self.kind == "fourier-bessel":
            return _mode(self.order, k, pts)
        return sum(c * w(pts) for w, c in self.terms)

    def gradient(self, pts) -> Array:
        pts = np.atleast_2d(np.asarray(pts, dtype=float))
        k = self.kappa
        if self.kind == "plane":
            d = np.asarray(self.direction)
            return 1j * k * self(pts)[:, None] * d
        if self.kind == "fourier-bessel":
            n = self.order
            lp = -k * _mode(n + 1, k, pts)
            lm = k * _mode(n - 1, k, pts)
            return np.stack([(lp + lm) / 2, (lp - lm) / 2j], axis=-1)
        return sum(c * w.gradient(pts) for w, c in self.terms)

    def hessian(self, pts) -> Array:
        pts = np.atleast_2d(np.asarray(pts, dtype=float))
        k = self.kappa
        if self.kind == "plane":
            d = np.asarray(self.direction)
            return -k * k * self(pts)[:, None, None] * np.outer(d, d)
        if self.kind == "fourier-bessel":
            n = self.order
            pp = k * k * _mode(n + 2, k, pts)
            mm = k * k * _mode(n - 2, k, pts)
            pm = -k * k * _mode(n, k, pts)
            h11 = (pp + 2 * pm + mm) / 4
            h22 = -(pp - 2 * pm + mm) / 4
            h12 = (pp - mm) / 4j
            return np.stack([np.stack([h11, h12], -1), np.stack([h12, h22], -1)], -2)
        return sum(c * w.hessian(pts) for w, c in self.terms)

    def regular_coefficients(self, x0, nmax: int) -> dict[int, complex]:
        """beta_n with w(x0 + rho e^{i psi}) = sum_n beta_n J_n(kappa rho) e^{i n psi}."""
        x0 = np.asarray(x0, dtype=float)
        k = self.kappa
        ns = range(-nmax, nmax + 1)
        if self.kind == "plane":
            phase = cmath.exp(1j * k * float(x0 @ np.asarray(self.direction)))
            td = self.theta_d
            return {n: phase * 1j ** n * cmath.exp(-1j * n * td) for n in ns}
        if self.kind == "fourier-bessel":
            # Graf's addition theorem about x0 = r0 e^{i th0}
            r0 = float(np.hypot(*x0))
            th0 = math.atan2(x0[1], x0[0])
            m = self.order
            return {n: complex(bessel_j(m - n, k * r0)) * cmath.exp(1j * (m - n) * th0) for n in ns}
        out = {n: 0j for n in ns}
        for w, c in self.terms:
            for n, v in w.regular_coefficients(x0, nmax).items():
                out[n] += c * v
        return out


def plane_wave(kappa: float, d) -> IncidentWave:
    d = tuple(float(v) for v in d)
    return IncidentWave("plane", float(kappa), direction=d)


def fourier_bessel_wave(kappa: float, m: int) -> IncidentWave:
    return IncidentWave("fourier-bessel", float(kappa), order=int(m))


def superposition(waves, coefficients) -> IncidentWave:
    waves = list(waves)
    if not waves:
        raise ValueError("empty superposition")
    return IncidentWave("superposition", waves[0].kappa,
                        terms=tuple((w, complex(c)) for w, c in zip(waves, coefficients, strict=True)))


def helmholtz_residual(w: IncidentWave, pts, step: float = 1e-2) -> float:
    """Max |(Delta + kappa^2) w| by a fourth-order five-point stencil per axis."""
    pts = np.atleast_2d(np.asarray(pts, dtype=float))
    c = np.array([-1.0, 16.0, -30.0, 16.0, -1.0]) / (12 * step * step)
    lap = np.zeros(len(pts), dtype=complex)
    for axis in range(2):
        e = np.zeros(2)
        e[axis] = step
        for j, cj in zip(range(-2, 3), c):
            lap += cj * w(pts + j * e)
    return float(np.max(np.abs(lap + w.kappa ** 2 * w(pts))))


def leading_harmonic_part(w: IncidentWave, x0=(0.0, 0.0), subtract_constant: bool = False,
                          max_degree: int = MAX_TAYLOR_DEGREE, rtol: float = 1e-12):
    """Lowest nonvanishing Taylor part of w (or w - w(x0)) at x0.

    Built from the regular-wave coefficients beta_n about x0: the degree-k
    part is sum_n beta_n s_{k,n} rho^k e^{i n psi}, with s_{k,n} the rho^k
    coefficient of J_n(kappa rho).  Returns (m, H) with H a polynomial in
    x - x0.
    """
    beta = w.regular_coefficients(x0, max_degree)
    scale = max(abs(v) for v in beta.values())
    if scale == 0:
        raise VanishingToHighOrder("wave vanishes identically")
    tol = rtol * scale
    k = w.kappa
    for deg in range(0, max_degree + 1):
        parts = {}
        for n in range(-deg, deg + 1, 2):
            coeff = beta[n] * bessel_series_coefficient(deg, n, k)
            if deg == 0 and subtract_constant:
                coeff = 0.0
            if abs(beta[n]) > tol and coeff != 0:
                parts[n] = coeff
        if not parts:
            continue
        off = {n: c for n, c in parts.items() if abs(n) != deg}
        if off:
            raise NonHarmonicLeadingPart(
                f"degree-{deg} part has non-harmonic modes {sorted(off)}; "
                "subtracting w(x0) breaks the Helmholtz equation")
        a = parts.get(deg, 0.0)
        b = parts.get(-deg, 0.0)
        if deg == 0:
            return 0, HarmonicPolynomial2D(0, complex(a), 0j)
        return deg, HarmonicPolynomial2D(deg, complex(a), complex(b))
    raise VanishingToHighOrder(f"all Taylor parts below degree {max_degree + 1} vanish")
