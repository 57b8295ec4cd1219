import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from polydeflate.deflate_mu import build_extended_system, initial_mu
from polydeflate.dual import dual_space
from polydeflate.newton import (
    CompiledSystem,
    NonConvergenceError,
    convergence_order,
    newton_iterate,
    randomize_square,
    refine_with_structure,
    verify_simple,
)
from polydeflate.parse import parse_system
from polydeflate.systems import family

# reference ex42 iterates, ten decimals, in
# (x1, x2, mu[x1,x2], mu[x2,x1^2], mu[x2,x1*x2]) order
EX42_TABLE = [
    [0.0297431315, 0.0351989647, 1.0480778978, 0.9975178694, 1.0227973199],
    [0.0005578682, 0.0008806394, 0.9997438194, 0.9999134370, 0.9996904740],
    [0.0000001981, -0.0000001864, 1.0000002375, 0.9999999998, 1.0000002150],
    [0.0, 0.0, 1.0, 1.0, 1.0],
]


def circle_line():
    return parse_system("vars x y\npoly x^2 + y^2 - 2\npoly x - y\npoint 1 1\n")


def test_compiled_system_matches_exact():
    f = circle_line()
    F, J = CompiledSystem(f.polys)(np.array([0.5, 2.0]))
    assert np.allclose(F, [0.25 + 4 - 2, -1.5])
    assert np.allclose(J, [[1.0, 4.0], [1.0, -1.0]])


def test_randomize_is_seeded_and_shaped(bundled):
    ext = build_extended_system(bundled("caprasse"), dual_space(bundled("caprasse")).E)
    a = randomize_square(ext, seed=3)
    b = randomize_square(ext, seed=3)
    c = randomize_square(ext, seed=4)
    assert a.combo_matrix.shape == (ext.nvars, len(ext.polys))
    assert np.array_equal(a.combo_matrix, b.combo_matrix)
    assert not np.array_equal(a.combo_matrix, c.combo_matrix)
    assert np.abs(a.combo_matrix).max() <= 1


def test_randomize_passthrough_and_errors():
    f = circle_line()
    sq = randomize_square(f, randomize=False)
    assert sq.combo_matrix is None and sq.polys == f.polys
    g = parse_system("vars x y\npoly x\n")
    with pytest.raises(ValueError):
        randomize_square(g)


def test_newton_quadratic_on_simple_root():
    tr = newton_iterate(randomize_square(circle_line(), randomize=False), [1.3, 0.8])
    assert tr.converged and tr.quadratic_flag
    assert np.allclose(tr.final, [1.0, 1.0], atol=1e-14)
    assert tr.residuals[-1] < 1e-14
    assert tr.order_estimate is not None and tr.order_estimate > 1.6


def test_newton_linear_at_singular_root(bundled):
    # ex33 has a double root at the origin; squared Newton converges slowly
    sq = randomize_square(bundled("ex33"), randomize=False)
    tr = newton_iterate(sq, [0.1, 0.1], max_iter=8)
    assert not tr.quadratic_flag


def test_singular_jacobian_stops():
    f = parse_system("vars x y\npoly x^2\npoly y^2\n")
    tr = newton_iterate(randomize_square(f, randomize=False), [0.0, 0.0])
    assert not tr.converged and "singular" in tr.message


def test_convergence_order_helper():
    assert convergence_order([1e-1, 1e-2, 1e-4, 1e-8]) == pytest.approx(2.0)
    assert convergence_order([1e-1, 5e-2, 2.5e-2]) == pytest.approx(1.0)
    assert convergence_order([1e-1, 1e-2]) is None
    # steps at round-off level are ignored
    assert convergence_order([1e-1, 1e-2, 1e-4, 1e-20]) == pytest.approx(2.0)


def test_verify_simple(bundled):
    ok, info = verify_simple(circle_line(), (1, 1))
    assert ok and info["rank"] == 2
    ok, info = verify_simple(bundled("ex33"), (0, 0))
    assert not ok and info["rank"] == 1
    ok, _ = verify_simple(circle_line(), (1.0, 1.1))
    assert not ok


def test_ex42_gauss_newton_table(bundled):
    ext = build_extended_system(bundled("ex42"), [(0, 0), (1, 0), (0, 1)], orthogonal=False)
    sq = randomize_square(ext, randomize=False)
    tr = newton_iterate(sq, [0.1, 0.12, 1.25, 1.1, 1.72], max_iter=4)
    for row, want in zip(tr.points[1:], EX42_TABLE):
        assert np.abs(np.round(row, 10) - want).max() < 1e-10 + 1e-12
    assert abs(tr.points[4][0] - 2.084095775e-14) < 1e-16
    assert tr.quadratic_flag


# Gauss-Newton iterates computed in exact rational arithmetic (sympy normal
# equations), same coordinate order as EX42_TABLE; in rows 1 and 3 the
# tenth decimal of x1 rounds one unit away from EX42_TABLE
EX42_EXACT = [
    [0.029743131447568447, 0.035198964732580798, 1.0480778978232412, 0.99751786940574764, 1.0227973198873480],
    [0.00055786818342589145, 0.00088063942134530808, 0.99974381941514542, 0.99991343699624548, 0.99969047399195050],
    [1.9815493707731292e-7, -1.8644635878450947e-7, 1.0000002375272342, 0.99999999981926979, 1.0000002149694518],
    [2.0840959898319517e-14, -1.9808979511244202e-14, 1.0000000000000453, 1.0, 1.0000000000000454],
]


def test_ex42_iterates_match_exact_arithmetic(bundled):
    ext = build_extended_system(bundled("ex42"), [(0, 0), (1, 0), (0, 1)], orthogonal=False)
    tr = newton_iterate(randomize_square(ext, randomize=False), [0.1, 0.12, 1.25, 1.1, 1.72], max_iter=4)
    for row, want in zip(tr.points[1:], EX42_EXACT):
        assert np.abs(np.asarray(row, dtype=float) - want).max() < 1e-14


def test_caprasse_perturb_and_recover(bundled):
    f = bundled("caprasse")
    ms = dual_space(f)
    ext = build_extended_system(f, ms.E)
    mu = np.array(initial_mu(ext.pm, ms), dtype=complex)
    xi = np.array(f.point, dtype=complex)
    res = refine_with_structure(f, xi + 1e-3, ms, mu0=mu + 1e-3)
    assert res.trace.converged and len(res.trace.steps) <= 8
    assert np.abs(res.xi - xi).max() < 1e-10
    for k, v in ms.nu.items():
        assert abs(res.nu[k] - v) < 1e-10
    ok, _ = verify_simple(ext, list(res.trace.final))
    assert ok


def test_refine_requires_structure_or_E(bundled):
    with pytest.raises(ValueError):
        refine_with_structure(bundled("ex42"))
    with pytest.raises(ValueError):
        refine_with_structure(bundled("ex42"), E=[(0, 0), (1, 0), (2, 0)])


def test_refine_raises_on_failure(bundled):
    f = bundled("ex42")
    ms = dual_space(f)
    with pytest.raises(NonConvergenceError) as info:
        refine_with_structure(f, (0.4, -0.3), ms, max_iter=1)
    assert info.value.trace is not None


def test_family_recovery():
    f = family(3)
    ms = dual_space(f)
    ext = build_extended_system(f, ms.E)
    mu = np.array(initial_mu(ext.pm, ms), dtype=float)
    res = refine_with_structure(f, np.full(3, 1e-4), ms, mu0=mu + 1e-4)
    assert np.abs(res.xi).max() < 1e-10
    assert np.abs(res.mu - mu).max() < 1e-10


@given(st.floats(-0.3, 0.3), st.floats(-0.3, 0.3), st.integers(0, 50))
def test_newton_converges_near_simple_root(dx, dy, seed):
    f = circle_line()
    sq = randomize_square(f, seed=seed)
    tr = newton_iterate(sq, [1 + dx, 1 + dy])
    assert tr.converged
    assert np.allclose(tr.final, [1, 1], atol=1e-10)
