"""Newton refinement, random squaring and simple-root checks."""
from __future__ import annotations

import math
import time
import warnings
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Sequence

import numpy as np
import scipy.linalg

from .deflate_mu import ExtendedSystem, build_extended_system, initial_mu
from .dual import MultiplicityStructure, apply_monomial_power
from .kernels import PackedPolys, pack_polys
from .linalg import DEFAULT_TOL, numerical_rank
from .poly import Polynomial, PolySystem

QUADRATIC_ORDER = 1.6


class NonConvergenceError(RuntimeError):
    def __init__(self, msg, trace=None):
        super().__init__(msg)
        self.trace = trace


class CompiledSystem:
    """Fast float/complex evaluation of a list of polynomials and its Jacobian."""

    def __init__(self, polys: Sequence[Polynomial], nvars: int | None = None):
        self.polys = list(polys)
        self.nvars = nvars if nvars is not None else (self.polys[0].nvars if self.polys else 0)
        self.packed: PackedPolys = pack_polys(self.polys, self.nvars)

    def __len__(self):
        return len(self.polys)

    def __call__(self, x):
        x = np.asarray(x)
        if x.dtype == object:
            x = x.astype(np.complex128 if any(isinstance(v, complex) for v in x) else np.float64)
        return self.packed(x)


@dataclass
class SquareSystem:
    source: CompiledSystem
    combo_matrix: np.ndarray | None
    seed: int | None
    nvars: int

    def evaluate(self, x):
        F, J = self.source(x)
        if self.combo_matrix is None:
            return F, J
        return self.combo_matrix @ F, self.combo_matrix @ J

    @property
    def m(self) -> int:
        return self.nvars if self.combo_matrix is not None else len(self.source)

    @property
    def polys(self) -> list[Polynomial]:
        if self.combo_matrix is None:
            return list(self.source.polys)
        out = []
        for row in self.combo_matrix:
            acc = Polynomial.zero(self.nvars)
            for c, p in zip(row, self.source.polys):
                acc = acc + p.to_float() * float(c)
            out.append(acc)
        return out


@dataclass
class NewtonTrace:
    iterates: list = field(default_factory=list)  # (point, residual, step)
    converged: bool = False
    quadratic_flag: bool = False
    order_estimate: float | None = None
    message: str = ""
    elapsed_ms: float = 0.0

    @property
    def points(self):
        return [p for p, _, _ in self.iterates]

    @property
    def steps(self):
        return [s for _, _, s in self.iterates[1:]]

    @property
    def residuals(self):
        return [r for _, r, _ in self.iterates]

    @property
    def final(self):
        return self.iterates[-1][0]


def _as_system(sys):
    if isinstance(sys, ExtendedSystem):
        return sys.polys, sys.nvars
    if isinstance(sys, PolySystem):
        return sys.polys, sys.nvars
    polys = list(sys)
    return polys, polys[0].nvars


def randomize_square(sys, m: int | None = None, seed: int = 0, randomize: bool = True) -> SquareSystem:
    """``m`` random combinations of the equations, weights uniform on ``[-1, 1]``.

    The weights come from ``numpy.random.default_rng(seed)`` so the same
    seed gives the same matrix.  With ``randomize=False`` a square input is
    passed through and a non-square one is kept as is (Gauss-Newton).
    """
    polys, nvars = _as_system(sys)
    m = nvars if m is None else m
    M = len(polys)
    if M < m:
        raise ValueError(f"{M} equations cannot be squared to {m} unknowns")
    comp = CompiledSystem(polys, nvars)
    if not randomize:
        return SquareSystem(comp, None, None, nvars)
    rng = np.random.default_rng(seed)
    C = rng.uniform(-1.0, 1.0, size=(m, M))
    return SquareSystem(comp, C, seed, nvars)


def _max_abs(v) -> float:
    return float(np.max(np.abs(v))) if len(v) else 0.0


def convergence_order(steps: Sequence[float], scale: float = 1.0) -> float | None:
    """Order estimate from the last three step sizes above round-off."""
    floor = 1e-13 * max(1.0, scale)
    s = [v for v in steps if v > floor]
    if len(s) < 3:
        return None
    a, b, c = s[-3:]
    if not a > b > c:
        return None
    den = math.log(b / a)
    return math.log(c / b) / den if den != 0 else None


def newton_iterate(
    sq: SquareSystem, start, tol: float = 1e-12, max_iter: int = 50, rank_tol: float = DEFAULT_TOL
) -> NewtonTrace:
    """Newton's method; LU solves for square systems, least squares otherwise.

    Stops when the step max-norm drops below ``tol``.  A numerically
    singular Jacobian ends the run with ``converged=False``.
    """
    t0 = time.perf_counter()
    x = np.array(start, dtype=object)
    cplx = any(isinstance(v, complex) for v in x)
    x = x.astype(np.complex128 if cplx else np.float64)
    trace = NewtonTrace()
    F, J = sq.evaluate(x)
    if np.iscomplexobj(F) and not np.iscomplexobj(x):
        x = x.astype(np.complex128)
    trace.iterates.append((x.copy(), _max_abs(F), None))
    square = J.shape[0] == J.shape[1]
    for _ in range(max_iter):
        if not np.all(np.isfinite(F)):
            trace.message = "non-finite residual"
            break
        if square:
            with warnings.catch_warnings():
                # exact singularity is detected from the pivots just below
                warnings.simplefilter("ignore", scipy.linalg.LinAlgWarning)
                lu, piv = scipy.linalg.lu_factor(J, check_finite=False)
            d = np.abs(np.diag(lu))
            if d.size == 0 or d.min() <= rank_tol * max(d.max(), 1e-300):
                trace.message = "singular Jacobian"
                break
            dx = scipy.linalg.lu_solve((lu, piv), -F, check_finite=False)
        else:
            dx, _, rank, _ = np.linalg.lstsq(J, -F, rcond=rank_tol)
            if rank < J.shape[1]:
                trace.message = "rank-deficient Jacobian"
                break
        x = x + dx
        F, J = sq.evaluate(x)
        step = _max_abs(dx)
        trace.iterates.append((x.copy(), _max_abs(F), step))
        if step < tol or _max_abs(F) == 0.0:
            trace.converged = True
            break
    else:
        trace.message = f"no convergence in {max_iter} iterations"
    scale = _max_abs(x) if len(x) else 1.0
    trace.order_estimate = convergence_order(trace.steps, scale)
    trace.quadratic_flag = trace.order_estimate is not None and trace.order_estimate >= QUADRATIC_ORDER
    trace.elapsed_ms = 1e3 * (time.perf_counter() - t0)
    return trace


def verify_simple(sys, point, tol: float = DEFAULT_TOL, residual_tol: float | None = None):
    """``(ok, info)``: residual max-norm within tolerance and full column rank."""
    polys, nvars = _as_system(sys)
    comp = CompiledSystem(polys, nvars)
    F, J = comp(np.array(point, dtype=object))
    res = _max_abs(F)
    rr = numerical_rank(J, tol)
    rtol = tol if residual_tol is None else residual_tol
    ok = res <= rtol and rr.rank == nvars
    return ok, {
        "residual": res,
        "rank": rr.rank,
        "ncols": nvars,
        "nrows": len(polys),
        "smallest_singular_value": rr.singular_values[-1] if rr.singular_values else None,
        "largest_singular_value": rr.singular_values[0] if rr.singular_values else None,
    }


@dataclass
class RefineResult:
    xi: np.ndarray
    mu: np.ndarray
    nu: dict
    trace: NewtonTrace
    extended: ExtendedSystem
    square: SquareSystem
    seeds_tried: list


def _full_nu_table(ext: ExtendedSystem, mu, keys) -> dict:
    mats = ext.pm.numeric(list(mu))
    d = ext.pm.delta
    e0 = np.zeros(d, dtype=mats[0].dtype)
    e0[0] = 1
    pos = {a: i for i, a in enumerate(ext.pm.E)}
    cache = {}
    out = {}
    for alpha, beta in keys:
        if beta not in cache:
            cache[beta] = apply_monomial_power(mats, beta, e0.copy())
        out[(alpha, beta)] = cache[beta][pos[alpha]]
    return out


def refine_with_structure(
    f: PolySystem,
    xi=None,
    ms: MultiplicityStructure | None = None,
    tol: float = 1e-12,
    max_iter: int = 50,
    seed: int = 0,
    E=None,
    orthogonal: bool = True,
    mu0=None,
    retries: int = 3,
    rank_tol: float = DEFAULT_TOL,
    randomize: bool = True,
) -> RefineResult:
    """Refine a root and its structure constants on the extended system.

    Builds the extended system for ``E`` (default ``ms.E``), squares it with
    random combinations and runs Newton from ``(xi, mu0)``; ``mu0`` defaults
    to the dual coefficients in ``ms``.  On a singular start the seed is
    bumped, up to ``retries`` extra attempts.  ``randomize=False`` runs
    Gauss-Newton on the full overdetermined system instead.  When ``E`` is
    ``ms.E`` the ν values for every key of ``ms.nu`` are rebuilt from the
    refined matrices.
    """
    xi = f.point if xi is None else tuple(xi)
    if E is None:
        if ms is None:
            raise ValueError("either ms or E is required")
        E = ms.E
    ext = build_extended_system(f, E, symbolic_point=True, orthogonal=orthogonal)
    if mu0 is None:
        if ms is None:
            raise ValueError("starting mu values need a multiplicity structure")
        mu0 = initial_mu(ext.pm, ms)
    start = list(xi) + list(mu0)
    seeds = []
    trace = sq = None
    for attempt in range(retries + 1):
        s = seed + attempt
        seeds.append(s)
        sq = randomize_square(ext, seed=s, randomize=randomize)
        trace = newton_iterate(sq, start, tol, max_iter, rank_tol)
        if trace.converged or not randomize or "Jacobian" not in trace.message:
            break
    if not trace.converged:
        raise NonConvergenceError(f"extended-system Newton failed: {trace.message}", trace)
    x = trace.final
    n = f.nvars
    same_E = ms is not None and set(ms.E) == set(ext.pm.E)
    keys = list(ms.nu.keys()) if same_E else []
    nu = _full_nu_table(ext, x[n:], keys) if keys else {}
    return RefineResult(x[:n], x[n:], nu, trace, ext, sq, seeds)
