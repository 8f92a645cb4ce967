"""Linear algebra of harmonic homogeneous polynomials on a sector."""

from __future__ import annotations

import cmath
import math

import numpy as np

from ..waves import HarmonicPolynomial2D

KERNEL_TOL = 1e-12


def _check(m: int, theta0: float) -> None:
    if m < 1:
        raise ValueError("degree must be at least 1")
    if not 0 < theta0 < 2 * math.pi:
        raise ValueError("sector angle must lie in (0, 2 pi)")


def _is_pi_multiple(x: float) -> bool:
    q = x / math.pi
    return abs(q - round(q)) < KERNEL_TOL


def sector_system_matrix(m: int, theta0: float) -> np.ndarray:
    """Matrix acting on (a, b) after the antipodal extension is imposed on theta = theta0.

    Row 1: Dirichlet condition, (a - b)(e - 1/e) = 0.
    Row 2: Bernoulli condition, a/e - b e = 0, with e = e^{i m theta0}.
    """
    _check(m, theta0)
    e = cmath.exp(1j * m * theta0)
    ei = cmath.exp(-1j * m * theta0)
    return np.array([[e - ei, -e + ei], [ei, -e]])


def sector_system_determinant(m: int, theta0: float) -> float:
    """det of :func:`sector_system_matrix`; equals 4 sin^2(m theta0).

    Angles with m theta0 / pi within 1e-12 of an integer are detected and
    return exactly 0, so the degenerate case is not lost to rounding.
    """
    if _is_pi_multiple(m * theta0):
        _check(m, theta0)
        return 0.0
    (p, q), (r, s) = sector_system_matrix(m, theta0)
    det = p * s - q * r
    return float(det.real)


def sector_neumann_matrix(m: int, theta0: float) -> np.ndarray:
    """d_theta H = 0 at theta = 0 and theta0 for H = a z^m + b zbar^m, divided by i m r^m."""
    _check(m, theta0)
    e = cmath.exp(1j * m * theta0)
    return np.array([[1.0, -1.0], [e, -1.0 / e]])


def sector_neumann_kernel_dim(m: int, theta0: float) -> int:
    """1 iff some nonzero H of degree m has d_theta H = 0 on both rays.

    The determinant of :func:`sector_neumann_matrix` is 2 i sin(m theta0),
    so the kernel is nontrivial exactly when |sin(m theta0)| < 1e-12.
    """
    M = sector_neumann_matrix(m, theta0)
    det = M[0, 0] * M[1, 1] - M[0, 1] * M[1, 0]
    return int(abs(det) / 2 < KERNEL_TOL)


def sector_neumann_witness(m: int, theta0: float) -> HarmonicPolynomial2D | None:
    """H = r^m (e^{im theta} + e^{-im theta}) = 2 r^m cos(m theta) when the kernel is nontrivial."""
    if not sector_neumann_kernel_dim(m, theta0):
        return None
    return HarmonicPolynomial2D(m, 1.0 + 0j, 1.0 + 0j)
