"""Exact disk and circle moments, and exact Weiss energies of polynomial fields."""

from __future__ import annotations

import math
from fractions import Fraction

from ..polynomials import MultiPoly


def _double_factorial(k: int) -> int:
    return math.prod(range(k, 0, -2)) if k > 0 else 1


def circle_moment(a: int, b: int) -> Fraction:
    """int_0^{2pi} cos^a sin^b d theta divided by pi (exact)."""
    if a % 2 or b % 2:
        return Fraction(0)
    # 2 (a-1)!! (b-1)!! / (a+b)!!
    return Fraction(2 * _double_factorial(a - 1) * _double_factorial(b - 1), _double_factorial(a + b))


def disk_moment(a: int, b: int) -> Fraction:
    """int_{B_1} x^a y^b dx divided by pi (exact)."""
    return circle_moment(a, b) / (a + b + 2)


def _integrate(p: MultiPoly, moment) -> Fraction:
    total = Fraction(0)
    for (a, b), c in p.terms.items():
        if hasattr(c, "im"):
            raise ValueError("exact moments need real rational coefficients")
        total += c * moment(a, b)
    return total


def weiss_energy_exact(v: MultiPoly, H: MultiPoly, order: int) -> Fraction:
    """W(1, v) / pi for real rational polynomials with A = Id.

    W(1, v) = int_{B_1} (|grad v|^2 + 2 H v) - order int_{dB_1} v^2.
    """
    if v.nvars != 2 or H.nvars != 2:
        raise ValueError("planar polynomials expected")
    vol = v.diff(0) * v.diff(0) + v.diff(1) * v.diff(1) + H * v * 2
    return _integrate(vol, disk_moment) - order * _integrate(v * v, circle_moment)
