from fractions import Fraction

import pytest
from hypothesis import given
from hypothesis import strategies as st

from polydeflate.poly import (
    DimensionError,
    Polynomial,
    PolySystem,
    display_scalar,
    eorder_key,
    factorial_of,
    format_poly,
    grlex_key,
    is_scalar_multiple,
    monomials_of_degree,
    monomials_upto,
    round_scalar,
)

F = Fraction


def x(i, n=2):
    return Polynomial.variable(i, n)


small = st.fractions(min_value=-5, max_value=5, max_denominator=4)


@st.composite
def polys(draw, nvars=2, max_deg=3, max_terms=5):
    k = draw(st.integers(0, max_terms))
    terms = {}
    for _ in range(k):
        e = tuple(draw(st.integers(0, max_deg)) for _ in range(nvars))
        terms[e] = draw(small)
    return Polynomial(terms, nvars)


points = st.tuples(small, small)


def test_construction_drops_zeros_and_checks_lengths():
    p = Polynomial({(1, 0): 0, (0, 1): 3}, 2)
    assert p.terms == {(0, 1): 3}
    with pytest.raises(DimensionError):
        Polynomial({(1,): 1}, 2)
    with pytest.raises(ValueError):
        Polynomial({(-1, 0): 1}, 2)


def test_arithmetic_and_degree():
    p = x(0) + x(1) ** 2
    q = x(0) ** 2 + x(1) ** 2
    assert (p * q).degree() == 4
    assert (p - p).is_zero()
    assert (p * 0).is_zero()
    assert (2 * p).coefficient((0, 2)) == 2


def test_diff_and_partial():
    p = x(0) ** 3 * x(1) ** 2 + 5 * x(1)
    assert p.partial(0) == 3 * x(0) ** 2 * x(1) ** 2
    assert p.partial(1, 2) == 2 * x(0) ** 3
    assert p.diff((1, 1)) == 6 * x(0) ** 2 * x(1)
    assert p.gradient() == [p.partial(0), p.partial(1)]


def test_evaluate_exact_and_complex():
    p = x(0) ** 2 + x(1)
    assert p.evaluate((F(1, 2), F(1, 4))) == F(1, 2)
    assert p.evaluate((1j, 1)) == 0


def test_shift_recenters():
    p = (x(0) - 1) ** 2 + (x(1) + 2)
    g = p.shift((1, -2))
    assert g == x(0) ** 2 + x(1)


def test_substitute_and_embed():
    p = x(0) * x(1) + x(1)
    assert p.substitute({0: 2}) == 3 * x(1)
    q = p.embed(3, [0, 2])
    assert q.coefficient((1, 0, 1)) == 1 and q.nvars == 3


def test_orderings():
    assert grlex_key((2, 0)) > grlex_key((1, 1)) > grlex_key((0, 2)) > grlex_key((1, 0))
    E = [(0, 1), (1, 0), (0, 0), (2, 0)]
    assert sorted(E, key=eorder_key) == [(0, 0), (1, 0), (0, 1), (2, 0)]
    assert len(monomials_of_degree(3, 2)) == 6
    assert len(monomials_upto(4, 2)) == 15
    assert factorial_of((3, 2)) == 12


def test_scalar_multiple():
    p = x(0) + 2 * x(1)
    assert is_scalar_multiple(-3 * p, p)
    assert not is_scalar_multiple(p + 1, p)


def test_format_order_and_signs():
    p = x(0) - 4 * x(0) * x(1) + 2 * x(1)
    assert format_poly(p) == "-4*x1*x2 + x1 + 2*x2"
    assert format_poly(Polynomial.zero(2)) == "0"
    assert format_poly(F(1, 2) * x(0) ** 2, ["a", "b"]) == "1/2*a^2"


def test_polysystem_checks():
    with pytest.raises(DimensionError):
        PolySystem([x(0)], ["a", "b", "c"])
    with pytest.raises(DimensionError):
        PolySystem([x(0)], ["a", "b"], (0,))
    s = PolySystem([x(0), x(1)], ["a", "b"], (0, 0))
    assert s.is_exact() and s.point_is_exact()


@given(polys(), polys(), polys())
def test_ring_axioms(p, q, r):
    assert p + q == q + p
    assert p * q == q * p
    assert (p + q) * r == p * r + q * r
    assert (p * q) * r == p * (q * r)


@given(polys(), polys(), st.integers(0, 1))
def test_leibniz_rule(p, q, j):
    assert (p * q).partial(j) == p.partial(j) * q + p * q.partial(j)


@given(polys(), points, points)
def test_shift_then_evaluate(p, xi, y):
    # g(y) = p(y + xi)
    g = p.shift(xi)
    assert g.evaluate(y) == p.evaluate((y[0] + xi[0], y[1] + xi[1]))


@given(polys(), polys(), points)
def test_evaluation_is_a_homomorphism(p, q, pt):
    assert (p * q).evaluate(pt) == p.evaluate(pt) * q.evaluate(pt)
    assert (p - q).evaluate(pt) == p.evaluate(pt) - q.evaluate(pt)


def test_display_rounding():
    assert round_scalar(0.99999999999999978) == 1.0
    assert round_scalar(2.0854035044132432e-14) == pytest.approx(2.08540350441e-14, rel=1e-12)
    assert round_scalar(complex(-1.0, 1.1e-15)) == -1.0
    assert round_scalar(complex(3.3e-16, 0.43301270189221863)) == 0.433012701892j
    assert round_scalar(F(1, 3)) == F(1, 3)
    assert display_scalar(complex(0.5, -0.25)) == "(0.5-0.25*I)"
    assert display_scalar(0.1 + 0.2) == "0.3"
    assert display_scalar(F(-3, 4)) == "-3/4"
