from fractions import Fraction

import numpy as np
import pytest
import sympy
from hypothesis import given
from hypothesis import strategies as st

from cornerscatter.polynomials import GaussianRational, MultiPoly, complex_power, radius_squared, xvars

fractions = st.fractions(min_value=-5, max_value=5, max_denominator=7)
gaussians = st.builds(GaussianRational, fractions, fractions)


@st.composite
def polys(draw, nvars=2, max_deg=4):
    n_terms = draw(st.integers(0, 5))
    terms = {}
    for _ in range(n_terms):
        e = tuple(draw(st.integers(0, max_deg)) for _ in range(nvars))
        terms[e] = draw(st.one_of(fractions, gaussians))
    return MultiPoly(nvars, terms)


def to_sympy(p: MultiPoly, syms):
    out = 0
    for e, c in p.terms.items():
        cs = sympy.Rational(c.re.numerator, c.re.denominator) + sympy.I * sympy.Rational(
            c.im.numerator, c.im.denominator) if isinstance(c, GaussianRational) else sympy.Rational(
            c.numerator, c.denominator)
        out += cs * sympy.prod([s ** k for s, k in zip(syms, e)])
    return sympy.expand(out)


def test_laplacian_examples():
    x1, x2 = xvars(2)
    assert radius_squared(2).laplacian() == MultiPoly.constant(2, 4)
    assert (x2 ** 3 - x1 ** 2 * x2 * 3).laplacian().is_zero
    assert (radius_squared(2) * x2 * Fraction(1, 8)).laplacian() == x2


def test_zero_coefficients_are_dropped():
    x1, _ = xvars(2)
    assert (x1 - x1).terms == {}
    assert MultiPoly(2, {(1, 0): 0}).is_zero


@given(gaussians, gaussians, gaussians)
def test_gaussian_field_axioms(a, b, c):
    assert (a + b) * c == a * c + b * c
    if b:
        assert (a / b) * b == a
    assert (a * b).conjugate() == a.conjugate() * b.conjugate()


@given(polys(), polys())
def test_product_rule_and_sympy_agreement(p, q):
    s = sympy.symbols("x1 x2")
    assert to_sympy(p * q, s) == sympy.expand(to_sympy(p, s) * to_sympy(q, s))
    for i in range(2):
        assert (p * q).diff(i) == p.diff(i) * q + p * q.diff(i)
        assert to_sympy(p.diff(i), s) == sympy.diff(to_sympy(p, s), s[i])


@given(polys(nvars=3, max_deg=3))
def test_laplacian_against_sympy(p):
    s = sympy.symbols("x1 x2 x3")
    expected = sum(sympy.diff(to_sympy(p, s), v, 2) for v in s)
    assert to_sympy(p.laplacian(), s) == sympy.expand(expected)


@given(polys(), st.floats(-2, 2), st.floats(-2, 2))
def test_numeric_evaluation(p, x, y):
    s = sympy.symbols("x1 x2")
    exact = complex(to_sympy(p, s).subs({s[0]: x, s[1]: y}).evalf())
    assert p(np.array([[x, y]]))[0] == pytest.approx(exact, rel=1e-9, abs=1e-9)


@given(st.integers(0, 8))
def test_complex_powers_are_harmonic(m):
    z, zb = complex_power(m), complex_power(m, conj=True)
    assert z.laplacian().is_zero and zb.laplacian().is_zero
    assert z.conjugate() == zb
    assert z.is_homogeneous(m)


@given(polys())
def test_text_roundtrip(p):
    assert MultiPoly.from_lines(p.to_lines() or ["0 0 0"]) == p


def test_homogeneous_scaling():
    x1, x2 = xvars(2)
    p = x1 ** 3 - x1 * x2 ** 2 * 3
    assert p.scaled(Fraction(2)) == p * 8
    assert p.restrict(1, 0) == x1 ** 3
