from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from polydeflate.deflate1 import (
    DeflationError,
    SimpleRootError,
    block_partition,
    bordered_minor,
    combine_differentials,
    deflate_once,
    deflate_until_simple,
    jacobian_at,
    kernel_differentials,
)
from polydeflate.dual import dual_space
from polydeflate.linalg import det
from polydeflate.parse import parse_system
from polydeflate.poly import Polynomial, PolySystem, format_poly

F = Fraction


def test_ex33_single_step(bundled):
    f = bundled("ex33")
    g = deflate_once(f)
    assert len(g.polys) == 3
    x1, x2 = Polynomial.variable(0, 2), Polynomial.variable(1, 2)
    added = g.polys[-1]
    want = 2 * x2 - 4 * x1 * x2
    assert added == want or added == -want


def test_block_partition_exact(bundled):
    bp = block_partition(bundled("ex33"), (0, 0))
    assert bp.r == 1 and bp.pivot_cols == [0] and bp.kernel_cols == [1]
    J = jacobian_at(bundled("ex33"), (0, 0))
    assert det(J[np.ix_(bp.rows, bp.pivot_cols)]) != 0


def test_block_partition_float(bundled):
    f = bundled("sys3")
    bp = block_partition(f, f.point)
    assert bp.r == 1 and bp.tol_used == 1e-8
    assert bp.gap is not None and bp.gap < 1e-8


@pytest.mark.parametrize("name", ["ex33", "ex42", "caprasse", "sys2", "sys4"])
def test_differentials_annihilate_jacobian(bundled, name):
    f = bundled(name)
    xi = f.point
    J = jacobian_at(f, xi)
    for lam in kernel_differentials(f, xi):
        v = np.array(lam.at(xi), dtype=object if J.dtype == object else complex)
        r = J.dot(v)
        assert all(abs(complex(x)) < 1e-9 for x in r)
        assert any(abs(complex(x)) > 0 for x in v)


def test_bordered_minor_equals_differential(bundled):
    f = bundled("sys2")
    bp = block_partition(f, f.point)
    diffs = kernel_differentials(f, f.point, partition=bp)
    for lam, col in zip(diffs, bp.kernel_cols):
        for j in range(len(f.polys)):
            if j in bp.rows:
                continue
            assert lam.apply(f.polys[j]) == bordered_minor(f, bp, col, j)


def test_simple_root_rejected():
    f = parse_system("vars x y\npoly x + y\npoly x - y\npoint 0 0\n")
    with pytest.raises(SimpleRootError):
        kernel_differentials(f)
    g, rep = deflate_until_simple(f)
    assert rep.iterations == 0 and rep.simple and g.polys == f.polys


def test_i_set_validation(bundled):
    f = bundled("ex33")
    for bad in ([], [0], [2], [1, 1]):
        with pytest.raises(ValueError):
            deflate_once(f, i_set=bad)
    with pytest.raises(ValueError):
        deflate_once(f, i_set=[1], weights=[1, 2])


def test_combine_is_linear(bundled):
    f = bundled("caprasse")
    diffs = kernel_differentials(f)
    assert len(diffs) == 2
    w = [F(2), F(-3)]
    lam = combine_differentials(diffs, w)
    p = f.polys[0]
    lhs = lam.apply(p)
    rhs = diffs[0].apply(p) * w[0] + diffs[1].apply(p) * w[1]
    assert (lhs - rhs).max_coeff() < 1e-12


def test_report_fields(bundled):
    g, rep = deflate_until_simple(bundled("sys2"))
    assert rep.simple and rep.iterations == 3
    assert rep.ranks[-1] == 3
    assert rep.ranks == sorted(rep.ranks)
    assert rep.steps[-1].npolys_after == len(g.polys)
    assert all(s.residual == 0 for s in rep.steps)
    assert all(s.raw_count >= len(s.added) for s in rep.steps)


def test_no_duplicates_or_zero_polys(bundled):
    g, _ = deflate_until_simple(bundled("sys4"))
    assert all(not p.is_zero() for p in g.polys)
    assert len({format_poly(p) for p in g.polys}) == len(g.polys)


def test_seed_is_reproducible(bundled):
    a, _ = deflate_until_simple(bundled("sys2"), seed=5)
    b, _ = deflate_until_simple(bundled("sys2"), seed=5)
    assert a.polys == b.polys


def test_max_iter_exhausted(bundled):
    with pytest.raises(DeflationError) as info:
        deflate_until_simple(bundled("sys4"), max_iter=2)
    assert info.value.report.iterations == 2
    assert not info.value.report.simple


def test_strategy_all(bundled):
    g, rep = deflate_until_simple(bundled("ex42"), strategy="all")
    assert rep.simple and rep.iterations == 2


def test_bad_options(bundled):
    with pytest.raises(ValueError):
        deflate_until_simple(bundled("ex33"), strategy="some")
    with pytest.raises(ValueError):
        deflate_until_simple(bundled("ex33"), direction="random")


def test_polish_keeps_accurate_root(bundled):
    f = bundled("sys3")
    g, rep = deflate_until_simple(f, polish=True)
    assert rep.simple
    assert max(abs(a - b) for a, b in zip(g.point, f.point)) < 1e-8


@pytest.mark.parametrize("name", ["ex42", "sys2", "caprasse"])
def test_polish_repairs_perturbed_root(bundled, name):
    f = bundled(name)
    xi = tuple(complex(v) + 1e-9 for v in f.point)
    g, rep = deflate_until_simple(f, xi, polish=True)
    assert rep.simple
    assert max(abs(a - complex(b)) for a, b in zip(g.point, f.point)) < 1e-12


@given(
    st.integers(-2, 2), st.integers(-2, 2),
    st.integers(1, 3), st.integers(-3, 3).filter(lambda v: v != 0),
)
def test_deflation_reaches_simple_root_on_planted_singularities(a, b, k, c):
    # (y - a)^k*(...) style singularity at (a, b), shifted so it is not at the origin
    x = Polynomial.variable(0, 2) - a
    y = Polynomial.variable(1, 2) - b
    f = PolySystem([x + c * y ** 2, x ** 2 + y ** (k + 1)], ["x", "y"], (F(a), F(b)))
    ms = dual_space(f)
    g, rep = deflate_until_simple(f)
    assert rep.simple
    assert rep.iterations <= ms.nil_index
    assert all(q.evaluate(f.point) == 0 for q in g.polys)
