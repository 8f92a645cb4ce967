"""Separation-of-variables far field for a penetrable disk."""

from __future__ import annotations

import math

import numpy as np

from ..farfield import FarFieldPattern, farfield_normalization
from ..waves import (IncidentWave, bessel_j, bessel_j_derivative, hankel1,
                     hankel1_derivative)

MIE_TOL = 1e-14
MAX_MODES = 400


class InteriorResonance(ArithmeticError):
    """The 2x2 matching matrix of some mode is singular."""


def mie_scattered_coefficients(kappa: float, rho0: float, a: float, beta: dict[int, complex],
                               center=(0.0, 0.0)) -> dict[int, complex]:
    """s_m with u_sc = sum_m s_m H_m(kappa r) e^{i m theta} outside the disk.

    Per mode: t J_m(k1 a) - s H_m(kappa a) = beta J_m(kappa a) and
    t k1 J_m'(k1 a) - s kappa H_m'(kappa a) = beta kappa J_m'(kappa a),
    with k1 = kappa sqrt(rho0).
    """
    if rho0 <= 0:
        raise ValueError("density must be positive")
    k1 = kappa * math.sqrt(rho0)
    out = {}
    for m, b in beta.items():
        if b == 0:
            continue
        M = np.array([[bessel_j(m, k1 * a), -hankel1(m, kappa * a)],
                      [k1 * bessel_j_derivative(m, k1 * a), -kappa * hankel1_derivative(m, kappa * a)]],
                     dtype=complex)
        rhs = b * np.array([bessel_j(m, kappa * a), kappa * bessel_j_derivative(m, kappa * a)])
        col = np.abs(M).max(axis=0)
        Ms = M / col
        if np.linalg.cond(Ms) > 1e12:
            raise InteriorResonance(f"matching matrix singular for mode {m}")
        _, s = np.linalg.solve(Ms, rhs) / col
        out[m] = complex(s)
    return out


def mie_disk_farfield(kappa: float, rho0: float, a: float, w: IncidentWave,
                      n_max: int | None = None) -> FarFieldPattern:
    """Far-field pattern of the disk of radius a centred at the origin.

    The mode cutoff grows until two consecutive orders fall below 1e-14
    relative to the largest coefficient, or is fixed by ``n_max``.
    """
    if w.kind not in ("plane", "fourier-bessel", "superposition"):
        raise ValueError("unsupported incident wave")
    if n_max is None:
        n = int(math.ceil(kappa * a)) + 10
        while True:
            beta = w.regular_coefficients((0.0, 0.0), n)
            s = mie_scattered_coefficients(kappa, rho0, a, beta)
            c = {m: v * farfield_normalization(m, kappa) for m, v in s.items()}
            big = max((abs(v) for v in c.values()), default=0.0)
            tail = [abs(c.get(m, 0)) + abs(c.get(-m, 0)) for m in (n - 1, n)]
            if big == 0 or max(tail) < MIE_TOL * big or n >= MAX_MODES:
                break
            n = min(2 * n, MAX_MODES)
    else:
        n = n_max
        beta = w.regular_coefficients((0.0, 0.0), n)
        s = mie_scattered_coefficients(kappa, rho0, a, beta)
    orders = np.arange(-n, n + 1)
    coeffs = np.array([s.get(int(m), 0j) for m in orders]) * farfield_normalization(orders, kappa)
    return FarFieldPattern(orders, coeffs, float(kappa), None)
