"""Exact multivariate polynomials over the rationals and the Gaussian rationals."""

from __future__ import annotations

import math
from fractions import Fraction
from numbers import Rational
from typing import Iterable, Mapping

import numpy as np


class GaussianRational:
    """Exact complex number re + i im with Fraction parts."""

    __slots__ = ("re", "im")

    def __init__(self, re=0, im=0):
        self.re = Fraction(re)
        self.im = Fraction(im)

    @classmethod
    def from_complex(cls, z: complex) -> "GaussianRational":
        """Exact binary-rational image of a floating point complex number."""
        z = complex(z)
        return cls(Fraction(z.real), Fraction(z.imag))

    def _coerce(self, other):
        if isinstance(other, GaussianRational):
            return other
        if isinstance(other, (int, Fraction, Rational)):
            return GaussianRational(other, 0)
        if isinstance(other, complex):
            return GaussianRational.from_complex(other)
        if isinstance(other, float):
            return GaussianRational(Fraction(other), 0)
        return NotImplemented

    def __add__(self, other):
        o = self._coerce(other)
        if o is NotImplemented:
            return o
        return GaussianRational(self.re + o.re, self.im + o.im)

    __radd__ = __add__

    def __neg__(self):
        return GaussianRational(-self.re, -self.im)

    def __sub__(self, other):
        o = self._coerce(other)
        if o is NotImplemented:
            return o
        return GaussianRational(self.re - o.re, self.im - o.im)

    def __rsub__(self, other):
        return (-self) + other

    def __mul__(self, other):
        o = self._coerce(other)
        if o is NotImplemented:
            return o
        return GaussianRational(self.re * o.re - self.im * o.im, self.re * o.im + self.im * o.re)

    __rmul__ = __mul__

    def __truediv__(self, other):
        o = self._coerce(other)
        if o is NotImplemented:
            return o
        den = o.re * o.re + o.im * o.im
        if den == 0:
            raise ZeroDivisionError("division by exact zero")
        num = self * o.conjugate()
        return GaussianRational(num.re / den, num.im / den)

    def __pow__(self, k: int):
        if k < 0:
            return GaussianRational(1) / self ** (-k)
        out = GaussianRational(1)
        for _ in range(k):
            out = out * self
        return out

    def conjugate(self):
        return GaussianRational(self.re, -self.im)

    def __eq__(self, other):
        o = self._coerce(other)
        if o is NotImplemented:
            return False
        return self.re == o.re and self.im == o.im

    def __hash__(self):
        return hash((self.re, self.im))

    def __bool__(self):
        return bool(self.re) or bool(self.im)

    def __complex__(self):
        return complex(float(self.re), float(self.im))

    def __repr__(self):
        return f"GaussianRational({self.re}, {self.im})"


I = GaussianRational(0, 1)


def _normalize(c):
    """Collapse Gaussian rationals with zero imaginary part to Fraction."""
    if isinstance(c, GaussianRational):
        return c.re if c.im == 0 else c
    return Fraction(c)


def _is_zero(c) -> bool:
    return not c


class MultiPoly:
    """Polynomial in n variables: exponent tuple -> exact coefficient.

    Zero coefficients are never stored, so equality is structural.
    """

    __slots__ = ("nvars", "terms", "_numeric")

    def __init__(self, nvars: int, terms: Mapping[tuple, object] | None = None):
        if nvars < 1:
            raise ValueError("need at least one variable")
        self.nvars = nvars
        self._numeric = None
        self.terms: dict[tuple, object] = {}
        for e, c in (terms or {}).items():
            e = tuple(int(k) for k in e)
            if len(e) != nvars or min(e) < 0:
                raise ValueError(f"bad exponent {e}")
            c = _normalize(c)
            if not _is_zero(c):
                self.terms[e] = c

    # constructors ------------------------------------------------------
    @classmethod
    def zero(cls, nvars: int) -> "MultiPoly":
        return cls(nvars)

    @classmethod
    def constant(cls, nvars: int, c) -> "MultiPoly":
        return cls(nvars, {(0,) * nvars: c})

    @classmethod
    def variable(cls, nvars: int, i: int) -> "MultiPoly":
        e = [0] * nvars
        e[i] = 1
        return cls(nvars, {tuple(e): 1})

    @classmethod
    def monomial(cls, exps: Iterable[int], c=1) -> "MultiPoly":
        exps = tuple(exps)
        return cls(len(exps), {exps: c})

    # arithmetic --------------------------------------------------------
    def _check(self, other: "MultiPoly"):
        if other.nvars != self.nvars:
            raise ValueError("variable count mismatch")

    def __add__(self, other):
        if not isinstance(other, MultiPoly):
            other = MultiPoly.constant(self.nvars, other)
        self._check(other)
        out = dict(self.terms)
        for e, c in other.terms.items():
            out[e] = out.get(e, 0) + c
        return MultiPoly(self.nvars, out)

    __radd__ = __add__

    def __neg__(self):
        return MultiPoly(self.nvars, {e: -c for e, c in self.terms.items()})

    def __sub__(self, other):
        return self + (-other)

    def __rsub__(self, other):
        return (-self) + other

    def __mul__(self, other):
        if not isinstance(other, MultiPoly):
            return MultiPoly(self.nvars, {e: c * other for e, c in self.terms.items()})
        self._check(other)
        out: dict[tuple, object] = {}
        for e1, c1 in self.terms.items():
            for e2, c2 in other.terms.items():
                e = tuple(a + b for a, b in zip(e1, e2))
                out[e] = out.get(e, 0) + c1 * c2
        return MultiPoly(self.nvars, out)

    __rmul__ = __mul__

    def __pow__(self, k: int):
        out = MultiPoly.constant(self.nvars, 1)
        for _ in range(k):
            out = out * self
        return out

    def __eq__(self, other):
        if not isinstance(other, MultiPoly):
            other = MultiPoly.constant(self.nvars, other)
        return self.nvars == other.nvars and self.terms == other.terms

    def __hash__(self):
        return hash((self.nvars, frozenset(self.terms.items())))

    def __repr__(self):
        if not self.terms:
            return "MultiPoly(0)"
        parts = [f"{c}*x^{e}" for e, c in sorted(self.terms.items())]
        return "MultiPoly(" + " + ".join(parts) + ")"

    # structure ---------------------------------------------------------
    @property
    def is_zero(self) -> bool:
        return not self.terms

    def degree(self) -> int:
        """Total degree; -1 for the zero polynomial."""
        return max((sum(e) for e in self.terms), default=-1)

    def is_homogeneous(self, k: int | None = None) -> bool:
        degs = {sum(e) for e in self.terms}
        if not degs:
            return True
        return len(degs) == 1 and (k is None or degs == {k})

    def homogeneous_part(self, k: int) -> "MultiPoly":
        return MultiPoly(self.nvars, {e: c for e, c in self.terms.items() if sum(e) == k})

    def conjugate(self) -> "MultiPoly":
        return MultiPoly(self.nvars, {e: (c.conjugate() if isinstance(c, GaussianRational) else c)
                                      for e, c in self.terms.items()})

    # calculus ----------------------------------------------------------
    def diff(self, i: int, times: int = 1) -> "MultiPoly":
        p = self
        for _ in range(times):
            out = {}
            for e, c in p.terms.items():
                if e[i] > 0:
                    ne = list(e)
                    ne[i] -= 1
                    out[tuple(ne)] = c * e[i]
            p = MultiPoly(self.nvars, out)
        return p

    def laplacian(self, variables: Iterable[int] | None = None) -> "MultiPoly":
        idx = range(self.nvars) if variables is None else variables
        out = MultiPoly.zero(self.nvars)
        for i in idx:
            out = out + self.diff(i, 2)
        return out

    def restrict(self, i: int, value=0) -> "MultiPoly":
        """Substitute x_i = value (exact); the variable count is kept."""
        value = Fraction(value) if not isinstance(value, GaussianRational) else value
        out: dict[tuple, object] = {}
        for e, c in self.terms.items():
            ne = list(e)
            k = ne[i]
            ne[i] = 0
            factor = value ** k if k else 1
            if not factor:
                continue
            ne = tuple(ne)
            out[ne] = out.get(ne, 0) + c * factor
        return MultiPoly(self.nvars, out)

    def scaled(self, t) -> "MultiPoly":
        """p(t x) exactly."""
        t = Fraction(t)
        return MultiPoly(self.nvars, {e: c * t ** sum(e) for e, c in self.terms.items()})

    # numerics ----------------------------------------------------------
    def __call__(self, pts) -> np.ndarray:
        pts = np.atleast_2d(np.asarray(pts, dtype=float))
        if pts.shape[1] != self.nvars:
            raise ValueError("point dimension mismatch")
        if not self.terms:
            return np.zeros(len(pts), dtype=complex)
        if self._numeric is None:
            exps = np.array(list(self.terms.keys()), dtype=int)
            coeffs = np.array([complex(c) for c in self.terms.values()])
            self._numeric = (exps, coeffs)
        exps, coeffs = self._numeric
        out = np.zeros(len(pts), dtype=complex)
        for e, c in zip(exps, coeffs):
            term = np.full(len(pts), c)
            for i, k in enumerate(e):
                if k:
                    term = term * pts[:, i] ** k
            out += term
        return out

    def gradient(self, pts) -> np.ndarray:
        return np.stack([self.diff(i)(pts) for i in range(self.nvars)], axis=-1)

    # text format -------------------------------------------------------
    def to_lines(self) -> list[str]:
        lines = []
        for e, c in sorted(self.terms.items()):
            if isinstance(c, GaussianRational):
                cs = f"{c.re}{'+' if c.im >= 0 else '-'}{abs(c.im)}i"
            else:
                cs = str(c)
            lines.append(" ".join([cs] + [str(k) for k in e]))
        return lines

    @classmethod
    def from_lines(cls, lines: Iterable[str]) -> "MultiPoly":
        """Parse lines ``c e1 ... en``; c is a rational, optionally ``re+imi``."""
        terms: dict[tuple, object] = {}
        nvars = None
        for raw in lines:
            line = raw.split("#", 1)[0].strip()
            if not line:
                continue
            tok = line.split()
            e = tuple(int(t) for t in tok[1:])
            if nvars is None:
                nvars = len(e)
            elif len(e) != nvars:
                raise ValueError(f"inconsistent exponent length in line {raw!r}")
            c = _parse_coefficient(tok[0])
            terms[e] = terms.get(e, 0) + c
        if nvars is None:
            raise ValueError("empty polynomial file")
        return cls(nvars, terms)


def _parse_coefficient(s: str):
    if s.endswith("i"):
        body = s[:-1]
        # split at the last sign that is not an exponent or leading sign
        for k in range(len(body) - 1, 0, -1):
            if body[k] in "+-" and body[k - 1] not in "eE/":
                return GaussianRational(Fraction(body[:k]), Fraction(body[k:]))
        return GaussianRational(0, Fraction(body))
    return Fraction(s)


def xvars(n: int) -> list[MultiPoly]:
    return [MultiPoly.variable(n, i) for i in range(n)]


def radius_squared(n: int) -> MultiPoly:
    return sum((x * x for x in xvars(n)), MultiPoly.zero(n))


def complex_power(m: int, conj: bool = False) -> MultiPoly:
    """(x1 + i x2)^m, or (x1 - i x2)^m, expanded exactly."""
    s = -1 if conj else 1
    terms = {}
    for j in range(m + 1):
        terms[(m - j, j)] = (I * s) ** j * math.comb(m, j)
    return MultiPoly(2, terms)
