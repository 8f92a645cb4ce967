"""Exact Cauchy-Kowalevski solution for the half-space Bernoulli problem."""

from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction

from ..polynomials import MultiPoly


class CauchyKowalevskiError(ValueError):
    pass


@dataclass(frozen=True)
class CKChecks:
    harmonic: bool
    dirichlet: bool
    neumann: bool

    @property
    def all(self) -> bool:
        return self.harmonic and self.dirichlet and self.neumann


def tangential_laplacian(p: MultiPoly) -> MultiPoly:
    return p.laplacian(range(1, p.nvars))


def cauchy_kowalevski_halfspace(P: MultiPoly, c0, n: int | None = None, verify: bool = True) -> MultiPoly:
    """w = -c0 sum_l (-1)^l Delta'^l (d1 P)|_{x1=0} x1^{2l+1} / (2l+1)!.

    The unique harmonic w with w = 0 and d1 w = -c0 d1 P on {x1 = 0}.
    """
    n = P.nvars if n is None else n
    if n < 2 or P.nvars != n:
        raise CauchyKowalevskiError("dimension must be at least 2 and match P")
    if not P.is_homogeneous():
        raise CauchyKowalevskiError("P must be homogeneous")
    k = P.degree()
    c0 = Fraction(c0) if not hasattr(c0, "im") else c0
    g = P.diff(0).restrict(0)
    x1 = MultiPoly.variable(n, 0)
    w = MultiPoly.zero(n)
    term = g
    for ell in range(0, (k - 1) // 2 + 1 if k >= 1 else 0):
        w = w + term * x1 ** (2 * ell + 1) * Fraction((-1) ** ell, math.factorial(2 * ell + 1))
        term = tangential_laplacian(term)
    w = w * (-c0)
    if verify:
        checks = verify_cauchy_kowalevski(w, P, c0)
        if not checks.all:
            raise CauchyKowalevskiError(f"exact checks failed: {checks}")
    return w


def verify_cauchy_kowalevski(w: MultiPoly, P: MultiPoly, c0) -> CKChecks:
    """Exact coefficient-level checks: harmonic, Dirichlet, Neumann."""
    return CKChecks(
        harmonic=w.laplacian().is_zero,
        dirichlet=w.restrict(0).is_zero,
        neumann=(w.diff(0).restrict(0) + P.diff(0).restrict(0) * c0).is_zero,
    )


def random_homogeneous(n: int, k: int, rng, max_num: int = 9, max_den: int = 5) -> MultiPoly:
    """Random homogeneous degree-k polynomial in n variables with small rational coefficients."""
    from itertools import combinations_with_replacement

    terms = {}
    for combo in combinations_with_replacement(range(n), k):
        e = [0] * n
        for i in combo:
            e[i] += 1
        if rng.random() < 0.7:
            terms[tuple(e)] = Fraction(int(rng.integers(-max_num, max_num + 1)), int(rng.integers(1, max_den + 1)))
    if not any(terms.values()):
        terms[(k,) + (0,) * (n - 1)] = Fraction(1)
    return MultiPoly(n, terms)
