"""Iterative deflation by first-order kernel differentials and bordered minors.

At each step the Jacobian at the approximate root is split as
``[[A, B], [C, D]]`` with ``A`` an invertible ``r x r`` block.  Each of the
``c = n - r`` columns of ``B`` yields a differential ``sum_k lambda_k d_k``
whose coefficients are signed ``r x r`` minors of ``[A | B_i]``; applying it
to ``f_j`` gives the ``(r+1) x (r+1)`` determinant of ``A`` bordered by
``B_i`` and the row of ``f_j``.  These polynomials are appended to the
system and the process repeats until the Jacobian has full rank.
"""
from __future__ import annotations

import time
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Sequence

import numpy as np
import scipy.linalg

from .linalg import DEFAULT_TOL, det, numerical_rank
from .poly import Polynomial, PolySystem, format_poly, is_exact_scalar, is_scalar_multiple

FLOAT_CHOP = 1e-14


class SimpleRootError(ValueError):
    """The Jacobian already has full column rank: nothing to deflate."""


class DeflationError(RuntimeError):
    def __init__(self, msg, report=None):
        super().__init__(msg)
        self.report = report


@dataclass
class BlockPartition:
    r: int
    row_perm: list[int]
    col_perm: list[int]
    tol_used: float
    gap: float | None = None

    @property
    def rows(self):
        return self.row_perm[: self.r]

    @property
    def pivot_cols(self):
        return self.col_perm[: self.r]

    @property
    def kernel_cols(self):
        return self.col_perm[self.r:]


@dataclass
class KernelDifferential:
    """``sum_j coeffs[j] * d/dx_j`` with polynomial coefficients."""

    coeffs: list[Polynomial]
    border_col: int

    def apply(self, p: Polynomial) -> Polynomial:
        out = Polynomial.zero(p.nvars)
        for j, lam in enumerate(self.coeffs):
            if not lam.is_zero():
                dp = p.partial(j)
                if not dp.is_zero():
                    out = out + lam * dp
        return out

    def at(self, xi) -> list:
        return [lam.evaluate(xi) for lam in self.coeffs]


@dataclass
class DeflationStep:
    i_set: list[int]
    added: list[Polynomial]
    rank_before: int
    raw_count: int
    npolys_after: int
    residual: float
    weights: list | None = None


@dataclass
class DeflationReport:
    steps: list[DeflationStep] = field(default_factory=list)
    final_rank: int = 0
    nvars: int = 0
    simple: bool = False
    strategy: str = "single"
    timings_ms: dict = field(default_factory=dict)

    @property
    def iterations(self) -> int:
        return len(self.steps)

    @property
    def ranks(self) -> list[int]:
        return [s.rank_before for s in self.steps] + [self.final_rank]


# -- helpers ------------------------------------------------------------------
def _domain_exact(f: PolySystem, xi) -> bool:
    return f.is_exact() and all(is_exact_scalar(v) for v in xi)


def jacobian_at(f: PolySystem, xi, jac=None) -> np.ndarray:
    jac = f.jacobian() if jac is None else jac
    M = np.empty((len(f.polys), f.nvars), dtype=object)
    for i, row in enumerate(jac):
        for j, p in enumerate(row):
            M[i, j] = p.evaluate(xi)
    if _domain_exact(f, xi):
        return M
    return M.astype(np.complex128 if any(isinstance(v, complex) for v in M.flat) else np.float64)


def block_partition(f: PolySystem, xi, tol: float = DEFAULT_TOL) -> BlockPartition:
    """Row/column permutations exposing an invertible leading block of ``J_f(xi)``.

    The order comes from column-pivoted QR of the (floating) Jacobian; in the
    exact domain the rank is exact and the block is checked to be nonsingular,
    falling back to exact elimination order when the QR choice is singular.
    """
    J = jacobian_at(f, xi)
    if J.dtype == object:
        ex = numerical_rank(J)
        Jf = J.astype(np.float64)
        fl = numerical_rank(Jf, tol) if np.any(Jf) else None
        r = ex.rank
        if fl is not None and r > 0:
            rows = fl.row_perm[:r]
            cols = fl.col_perm[:r]
            if fl.rank == r and det(J[np.ix_(rows, cols)]) != 0:
                return BlockPartition(r, fl.row_perm, fl.col_perm, 0.0, fl.gap)
            _, _, rp = scipy.linalg.qr(Jf[:, ex.col_perm[:r]].T, pivoting=True)
            rows = [int(i) for i in rp[:r]]
            if det(J[np.ix_(rows, ex.col_perm[:r])]) != 0:
                row_perm = rows + [i for i in range(J.shape[0]) if i not in rows]
                return BlockPartition(r, row_perm, ex.col_perm, 0.0, None)
            return BlockPartition(r, ex.row_perm, ex.col_perm, 0.0, None)
        col_perm = fl.col_perm if fl is not None else list(range(J.shape[1]))
        return BlockPartition(0, list(range(J.shape[0])), col_perm, 0.0, None)
    rr = numerical_rank(J, tol)
    return BlockPartition(rr.rank, rr.row_perm, rr.col_perm, tol, rr.gap)


def _chop(p: Polynomial) -> Polynomial:
    return p if p.is_exact() else p.chop(FLOAT_CHOP)


# -- public operations --------------------------------------------------------
def kernel_differentials(
    f: PolySystem, xi=None, tol: float = DEFAULT_TOL, partition: BlockPartition | None = None
) -> list[KernelDifferential]:
    """The ``c = n - r`` Cramer differentials of the block partition at ``xi``."""
    xi = f.point if xi is None else tuple(xi)
    bp = block_partition(f, xi, tol) if partition is None else partition
    n = f.nvars
    r = bp.r
    if r >= n:
        raise SimpleRootError("Jacobian has full column rank; the root is already simple")
    jac = f.jacobian()
    rows = bp.rows
    A = np.empty((r, r), dtype=object)
    for a, i in enumerate(rows):
        for b, j in enumerate(bp.pivot_cols):
            A[a, b] = jac[i][j]
    detA = det(A) if r else Polynomial.constant(1, n)
    out = []
    for col in bp.kernel_cols:
        coeffs = [Polynomial.zero(n) for _ in range(n)]
        coeffs[col] = _chop(detA)
        for k, pc in enumerate(bp.pivot_cols):
            Ak = A.copy()
            for a, i in enumerate(rows):
                Ak[a, k] = jac[i][col]
            coeffs[pc] = _chop(-det(Ak))
        out.append(KernelDifferential(coeffs, col))
    return out


def bordered_minor(f: PolySystem, partition: BlockPartition, col: int, j: int) -> Polynomial:
    """Determinant of ``A`` bordered by kernel column ``col`` and the row of ``f_j``."""
    jac = f.jacobian()
    rows = partition.rows + [j]
    cols = partition.pivot_cols + [col]
    M = np.empty((len(rows), len(cols)), dtype=object)
    for a, i in enumerate(rows):
        for b, c in enumerate(cols):
            M[a, b] = jac[i][c]
    return det(M)


def combine_differentials(diffs: Sequence[KernelDifferential], weights: Sequence) -> KernelDifferential:
    n = len(diffs[0].coeffs)
    coeffs = []
    for j in range(n):
        acc = Polynomial.zero(diffs[0].coeffs[j].nvars)
        for d, w in zip(diffs, weights):
            if w != 0 and not d.coeffs[j].is_zero():
                acc = acc + d.coeffs[j] * w
        coeffs.append(_chop(acc))
    return KernelDifferential(coeffs, diffs[0].border_col)


def _is_redundant(p: Polynomial, existing: Sequence[Polynomial]) -> bool:
    return any(p == q or is_scalar_multiple(p, q) for q in existing)


def deflate_once(
    f: PolySystem,
    xi=None,
    i_set: Sequence[int] = (1,),
    tol: float = DEFAULT_TOL,
    weights: Sequence | None = None,
    partition: BlockPartition | None = None,
    return_step: bool = False,
):
    """Append the differentials indexed by ``i_set`` (1-based) applied to every ``f_j``.

    With ``weights`` the selected differentials are first merged into a
    single one, ``sum_i w_i Lambda_i``; this is the bordered determinant
    whose border column is the same combination of kernel columns.
    Identically zero polynomials, duplicates and exact scalar multiples of
    polynomials already present are dropped.
    """
    xi = f.point if xi is None else tuple(xi)
    bp = block_partition(f, xi, tol) if partition is None else partition
    c = f.nvars - bp.r
    i_set = list(i_set)
    if not i_set or any(not isinstance(i, (int, np.integer)) or i < 1 or i > c for i in i_set):
        raise ValueError(f"i_set must be a nonempty subset of 1..{c}, got {i_set}")
    if len(set(i_set)) != len(i_set):
        raise ValueError("i_set has repeated indices")
    diffs = kernel_differentials(f, xi, tol, bp)
    chosen = [diffs[i - 1] for i in i_set]
    if weights is not None:
        if len(weights) != len(chosen):
            raise ValueError("one weight per selected differential is needed")
        chosen = [combine_differentials(chosen, weights)]
    skip = set(bp.rows)
    polys = list(f.polys)
    added = []
    raw = 0
    for lam in chosen:
        for j, p in enumerate(f.polys):
            if j in skip:
                continue  # repeated row: the bordered determinant vanishes
            raw += 1
            q = _chop(lam.apply(p))
            if q.is_zero() or _is_redundant(q, polys):
                continue
            polys.append(q)
            added.append(q)
    g = f.with_polys(polys)
    if not return_step:
        return g
    res = max((abs(complex(q.evaluate(xi))) for q in added), default=0.0)
    step = DeflationStep(i_set, added, bp.r, raw, len(polys), res, list(weights) if weights is not None else None)
    return g, step


def _generic_weights(c: int, rng: np.random.Generator, exact: bool):
    if exact:
        return [Fraction(int(v)) for v in rng.choice([-3, -2, -1, 1, 2, 3], size=c)]
    return [float(v) for v in rng.uniform(-1.0, 1.0, size=c)]


def _polish(f: PolySystem, xi, tol: float = DEFAULT_TOL):
    """One damped Gauss-Newton step on the whole (overdetermined) system.

    Rows are scaled by their largest coefficient and singular directions
    below ``tol`` relative are truncated.  The step is capped at
    ``sqrt(tol) * max(1, |xi|)`` (a local correction, not a root search) and
    halved until the scaled residual strictly drops; otherwise ``xi`` is
    returned unchanged.
    """
    w = np.array([1.0 / max(p.max_coeff(), 1e-300) for p in f.polys])

    def resid(pt):
        return w * np.array([complex(v) for v in f.evaluate(pt)])

    F = resid(xi)
    r0 = np.abs(F).max() if F.size else 0.0
    if r0 == 0.0:
        return tuple(xi)
    J = w[:, None] * jacobian_at(f, xi).astype(np.complex128)
    x0 = np.array([complex(v) for v in xi])
    step = np.linalg.lstsq(J, -F, rcond=tol)[0]
    cap = np.sqrt(tol) * max(1.0, np.abs(x0).max())
    size = np.abs(step).max()
    if size > cap:
        step = step * (cap / size)
    real = all(not isinstance(v, complex) for v in xi)
    for _ in range(20):
        x = tuple(float(v.real) if real else complex(v) for v in x0 + step)
        if np.abs(resid(x)).max() < r0:
            return x
        step = step / 2
    return tuple(xi)


def deflate_until_simple(
    f: PolySystem,
    xi=None,
    tol: float = DEFAULT_TOL,
    max_iter: int = 50,
    strategy: str = "single",
    direction: str = "generic",
    seed: int = 0,
    polish: bool = False,
):
    """Deflate until the Jacobian at ``xi`` has full column rank.

    ``strategy='single'`` adds one differential per step, ``'all'`` adds all
    ``c`` of them.  For ``single``, ``direction='generic'`` uses a seeded
    random combination of the ``c`` kernel differentials and
    ``direction='first'`` uses the first one in pivoting order.
    Returns ``(deflated_system, report)``.
    """
    if strategy not in ("single", "all"):
        raise ValueError("strategy must be 'single' or 'all'")
    if direction not in ("generic", "first"):
        raise ValueError("direction must be 'generic' or 'first'")
    if max_iter < 1:
        raise ValueError("max_iter must be at least 1")
    xi = f.point if xi is None else tuple(xi)
    if xi is None:
        raise ValueError("a point is required")
    rng = np.random.default_rng(seed)
    report = DeflationReport(nvars=f.nvars, strategy=strategy)
    t0 = time.perf_counter()
    g = f
    for _ in range(max_iter + 1):
        bp = block_partition(g, xi, tol)
        if bp.r == g.nvars:
            report.final_rank = bp.r
            report.simple = True
            break
        if len(report.steps) == max_iter:
            report.final_rank = bp.r
            report.timings_ms["deflate"] = 1e3 * (time.perf_counter() - t0)
            raise DeflationError(
                f"Jacobian rank {bp.r} < {g.nvars} after {max_iter} deflation steps", report
            )
        c = g.nvars - bp.r
        if strategy == "all":
            g, step = deflate_once(g, xi, range(1, c + 1), tol, partition=bp, return_step=True)
        elif direction == "first" or c == 1:
            g, step = deflate_once(g, xi, [1], tol, partition=bp, return_step=True)
        else:
            w = _generic_weights(c, rng, _domain_exact(g, xi))
            g, step = deflate_once(g, xi, range(1, c + 1), tol, weights=w, partition=bp, return_step=True)
        report.steps.append(step)
        if polish:
            xi = _polish(g, xi, tol)
    report.timings_ms["deflate"] = 1e3 * (time.perf_counter() - t0)
    g = PolySystem(g.polys, g.varnames, xi, dict(g.meta))
    return g, report


def describe_report(report: DeflationReport, varnames) -> list[str]:
    lines = []
    for k, s in enumerate(report.steps, 1):
        lines.append(
            f"step {k}: rank {s.rank_before}, differentials {s.i_set}, added {len(s.added)} "
            f"(raw {s.raw_count}), total {s.npolys_after}, residual {s.residual:.3e}"
        )
        for p in s.added:
            lines.append("    " + format_poly(p, varnames))
    return lines
