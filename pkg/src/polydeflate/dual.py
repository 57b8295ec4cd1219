"""Local dual space at an isolated root through Macaulay multiplicity matrices.

Functionals are stored in Taylor-scaled form: a coefficient ``c`` at
exponent ``beta`` stands for ``c * (1/beta!) * d^beta`` evaluated at the
root.  In this normalization applying a functional to ``p`` is a dot
product with the Taylor coefficients of ``p`` around the root, and the
value on ``(x - xi)^alpha`` is simply the coefficient stored at ``alpha``.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from fractions import Fraction
from typing import Sequence

import numpy as np

from . import kernels
from .linalg import DEFAULT_TOL, null_space, sparse_null_space
from .poly import (
    Exponent,
    Polynomial,
    PolySystem,
    display_scalar,
    factorial_of,
    format_scalar,
    grlex_key,
    eorder_key,
    is_exact_scalar,
    monomials_upto,
    round_scalar,
)


class NotARootError(ValueError):
    """The supplied point does not annihilate the system within tolerance."""


class NonIsolatedError(RuntimeError):
    """The Macaulay kernel dimension kept growing up to ``d_max``."""


@dataclass(frozen=True)
class DualFunctional:
    coeffs: dict
    nvars: int

    def __post_init__(self):
        object.__setattr__(self, "coeffs", {tuple(e): c for e, c in self.coeffs.items() if c != 0})

    @property
    def order(self) -> int:
        return max((sum(e) for e in self.coeffs), default=0)

    def coefficient(self, e: Sequence[int]):
        return self.coeffs.get(tuple(e), 0)

    def leading_exponent(self) -> Exponent:
        return max(self.coeffs, key=grlex_key)

    def apply(self, p: Polynomial, xi: Sequence):
        g = p.shift(xi)
        return sum((c * g.coefficient(e) for e, c in self.coeffs.items()), 0)

    __call__ = apply

    def derivation(self, i: int) -> "DualFunctional":
        """The functional ``p -> self((x_i - xi_i) * p)``."""
        out = {}
        for e, c in self.coeffs.items():
            if e[i]:
                out[e[:i] + (e[i] - 1,) + e[i + 1:]] = c
        return DualFunctional(out, self.nvars)

    def to_string(self, varnames: Sequence[str] | None = None, digits: int | None = None) -> str:
        """Render as a sum of scaled derivatives; ``digits`` rounds float coefficients for display."""
        if varnames is None:
            varnames = [f"x{i + 1}" for i in range(self.nvars)]
        if not self.coeffs:
            return "0"
        fmt = format_scalar if digits is None else display_scalar
        out = ""
        for e, c in sorted(self.coeffs.items(), key=lambda t: grlex_key(t[0])):
            scale = Fraction(1, factorial_of(e)) if is_exact_scalar(c) else 1 / factorial_of(e)
            c = c * scale
            if digits is not None:
                c = round_scalar(c, digits)
                if c == 0:
                    continue
            mono = "*".join(
                f"d{varnames[j]}" + (f"^{a}" if a > 1 else "") for j, a in enumerate(e) if a
            )
            neg = not isinstance(c, complex) and c < 0
            if neg:
                c = -c
            body = (mono if c == 1 else f"{fmt(c)}*{mono}") if mono else fmt(c)
            if out:
                out += (" - " if neg else " + ") + body
            else:
                out = ("-" if neg else "") + body
        return out or "0"

    def __str__(self):
        return self.to_string()


@dataclass
class MultiplicityStructure:
    E: list
    dual: list
    delta: int
    nil_index: int
    nu: dict
    point: tuple
    nvars: int
    exact: bool = False
    kernel_dims: list = field(default_factory=list)
    mac_shapes: list = field(default_factory=list)

    def index_of(self, alpha: Sequence[int]) -> int:
        return self.E.index(tuple(alpha))


# -- Macaulay matrices --------------------------------------------------------
def _centered_generators(f: PolySystem, xi, exact: bool) -> list[Polynomial]:
    gs = [p.shift(xi) for p in f.polys]
    if not exact:
        gs = [g.to_float() for g in gs]
    return gs


def macaulay_matrix(f: PolySystem, xi=None, d: int = 1, centered: bool = False, scaled: bool = False):
    """Multiplicity matrix of order ``d``.

    Row ``(beta, i)`` (``beta`` in ascending graded-lex order, ``i`` inner)
    holds the derivatives ``d^alpha (x^beta f_i)`` at ``xi`` for all
    ``|alpha| <= d`` in ascending graded-lex order.  ``centered`` uses
    ``(x - xi)^beta`` as multipliers (same row space); ``scaled`` divides
    column ``alpha`` by ``alpha!``.
    """
    if d < 1:
        raise ValueError("d must be at least 1")
    xi = f.point if xi is None else tuple(xi)
    if xi is None:
        raise ValueError("no point given")
    if len(xi) != f.nvars:
        raise ValueError(f"point has {len(xi)} coordinates, expected {f.nvars}")
    n = f.nvars
    cols = monomials_upto(n, d)
    col_index = {e: k for k, e in enumerate(cols)}
    betas = monomials_upto(n, d - 1)
    exact = f.is_exact() and all(is_exact_scalar(v) for v in xi)
    M = np.empty((len(betas) * len(f.polys), len(cols)), dtype=object)
    M[:] = Fraction(0) if exact else 0.0
    row = 0
    for beta in betas:
        mult = Polynomial.monomial(beta)
        for p in f.polys:
            if centered:
                g = mult * p.shift(xi)
            else:
                g = (mult * p).shift(xi)
            for e, c in g.terms.items():
                k = col_index.get(e)
                if k is not None:
                    M[row, k] = c if scaled else c * factorial_of(e)
            row += 1
    if not exact:
        M = M.astype(np.complex128 if any(isinstance(v, complex) for v in M.flat) else np.float64)
    return M


def _sparse_rows(gs, n: int, d: int, col_index: dict) -> list[dict]:
    rows = []
    for beta in monomials_upto(n, d - 1):
        b = sum(beta)
        for g in gs:
            row = {}
            for e, c in g.terms.items():
                if b + sum(e) <= d:
                    row[col_index[tuple(x + y for x, y in zip(e, beta))]] = c
            rows.append(row)
    return rows


def _dense_matrix(packed, n: int, d: int, npolys: int) -> np.ndarray:
    coef, owner, exps = packed
    betas = np.array(monomials_upto(n, d - 1), dtype=np.int64).reshape(-1, n)
    ncols = len(monomials_upto(n, d))
    return kernels.macaulay_fill(coef, owner, exps, betas, npolys, d, ncols)


def _pack_dense(gs, n: int):
    coef, owner, exps = [], [], []
    cplx = any(isinstance(c, complex) for g in gs for c in g.terms.values())
    for i, g in enumerate(gs):
        for e, c in g.terms.items():
            coef.append(complex(c) if cplx else float(c))
            owner.append(i)
            exps.append(e)
    return (
        np.array(coef, dtype=np.complex128 if cplx else np.float64),
        np.array(owner, dtype=np.int64),
        np.array(exps, dtype=np.int64).reshape(-1, n),
    )


# -- dual basis ---------------------------------------------------------------
def _echelon_float(K: np.ndarray, cols: list, counts: list[int], pivot_tol: float):
    """Reduce a kernel basis so that pivots are grlex-leading monomials.

    Columns are scanned from the largest monomial down; ``counts[t]`` is the
    number of pivots expected in degree ``t``.
    """
    K = K.copy()
    m = K.shape[0]
    scale = float(np.max(np.abs(K))) if K.size else 1.0
    thr = pivot_tol * scale
    by_degree: dict[int, list[int]] = {}
    for k, e in enumerate(cols):
        by_degree.setdefault(sum(e), []).append(k)
    pivots: list[int] = []
    r = 0

    def eliminate(c, p):
        nonlocal r
        if p != r:
            K[[r, p]] = K[[p, r]]
        K[r] = K[r] / K[r, c]
        for i in range(m):
            if i != r:
                K[i] = K[i] - K[i, c] * K[r]
        K[:, c] = 0
        K[r, c] = 1
        pivots.append(c)
        r += 1

    for t in range(len(counts) - 1, -1, -1):
        need = counts[t]
        chosen = 0
        for c in reversed(by_degree.get(t, [])):
            if chosen == need or r >= m:
                break
            col = np.abs(K[r:, c])
            p = int(np.argmax(col))
            if col[p] > thr:
                eliminate(c, r + p)
                chosen += 1
        # too strict a threshold: take the strongest remaining columns
        while chosen < need and r < m:
            cand = [c for c in by_degree.get(t, []) if c not in pivots]
            best = max(cand, key=lambda c: float(np.max(np.abs(K[r:, c]))))
            p = int(np.argmax(np.abs(K[r:, best])))
            eliminate(best, r + p)
            chosen += 1
    return K[:r], pivots


def _kernel_dim_float(M: np.ndarray, tol: float) -> int:
    s = np.linalg.svd(M, compute_uv=False)
    smax = s[0] if s.size else 0.0
    scale = smax if smax > tol else 1.0
    return M.shape[1] - int(np.sum(s > tol * scale))


def dual_space(
    f: PolySystem,
    xi=None,
    tol: float = DEFAULT_TOL,
    d_max: int = 32,
    exact: bool | None = None,
    pivot_tol: float = 1e-6,
) -> MultiplicityStructure:
    """Multiplicity structure of ``f`` at ``xi``.

    The kernel of the order-``d`` Macaulay matrix is computed for
    ``d = 1, 2, ...`` until its dimension stops growing.  The exact path
    (rational system and point that is an exact root) uses fraction
    elimination; otherwise SVD with relative threshold ``tol``.
    """
    xi = f.point if xi is None else tuple(xi)
    if xi is None:
        raise ValueError("dual_space needs a point")
    if len(xi) != f.nvars:
        raise ValueError(f"point has {len(xi)} coordinates, expected {f.nvars}")
    n = f.nvars
    can_exact = f.is_exact() and all(is_exact_scalar(v) for v in xi)
    gs_exact = [p.shift(xi) for p in f.polys] if can_exact else None
    if exact is None:
        exact = can_exact and all(g.constant_term() == 0 for g in gs_exact)
    elif exact and not can_exact:
        raise ValueError("exact mode needs rational coefficients and a rational point")

    if exact:
        gs = gs_exact
        if any(g.constant_term() != 0 for g in gs):
            raise NotARootError("point is not a root of the system")
    else:
        gs = gs_exact if gs_exact is not None else [p.shift(xi) for p in f.polys]
        gs = [g.to_float() for g in gs]
        for p, g in zip(f.polys, gs):
            if abs(complex(g.constant_term())) > tol * max(1.0, p.max_coeff()):
                raise NotARootError(
                    f"point is not a root: residual {abs(complex(g.constant_term())):.3e}"
                )
        packed = _pack_dense(gs, n)

    dims = [1]
    shapes = []
    prev = None  # kernel data at d-1
    cur = None
    for d in range(1, d_max + 1):
        cols = monomials_upto(n, d)
        col_index = {e: k for k, e in enumerate(cols)}
        nrows = len(gs) * len(monomials_upto(n, d - 1))
        shapes.append((nrows, len(cols)))
        if exact:
            basis = sparse_null_space(_sparse_rows(gs, n, d, col_index), len(cols))
            cur = (cols, basis)
            h = len(basis)
        else:
            M = _dense_matrix(packed, n, d, len(gs))
            h = _kernel_dim_float(M, tol)
            cur = (cols, M)
        if h == dims[-1]:
            break
        dims.append(h)
        prev = cur
    else:
        raise NonIsolatedError(
            f"kernel dimension still growing at d_max={d_max} (dims {dims}); "
            "root not isolated or tolerance too loose"
        )

    o = len(dims) - 1
    delta = dims[-1]
    if o == 0:
        E = [(0,) * n]
        dual = [DualFunctional({(0,) * n: Fraction(1) if exact else 1.0}, n)]
        return MultiplicityStructure(E, dual, 1, 0, {}, tuple(xi), n, exact, dims, shapes)

    cols, data = prev
    if exact:
        pairs = []
        for vec in data:
            lead = max(vec, key=lambda k: grlex_key(cols[k]))
            pairs.append((cols[lead], {cols[k]: v for k, v in vec.items()}))
    else:
        vecs = null_space(data, tol)
        K = np.array(vecs)
        if K.shape[0] != delta:
            raise NonIsolatedError("kernel dimension changed between rank tests")
        counts = [dims[0]] + [dims[t] - dims[t - 1] for t in range(1, len(dims))]
        R, pivots = _echelon_float(K, cols, counts, pivot_tol)
        pairs = []
        for row, c in zip(R, pivots):
            alpha = cols[c]
            key = grlex_key(alpha)
            coeffs = {}
            for k, v in enumerate(row):
                if grlex_key(cols[k]) > key or abs(v) <= 1e-13:
                    continue
                coeffs[cols[k]] = complex(v) if np.iscomplexobj(row) else float(v)
            coeffs[alpha] = 1.0
            pairs.append((alpha, coeffs))

    pairs.sort(key=lambda t: eorder_key(t[0]))
    E = [a for a, _ in pairs]
    Eset = set(E)
    dual = []
    for alpha, coeffs in pairs:
        clean = {e: c for e, c in coeffs.items() if e == alpha or e not in Eset}
        dual.append(DualFunctional(clean, n))
    zero = Fraction(0) if exact else 0.0
    nu = {}
    for alpha, lam in zip(E, dual):
        ka = grlex_key(alpha)
        for beta in monomials_upto(n, sum(alpha)):
            if beta in Eset or grlex_key(beta) >= ka:
                continue
            nu[(alpha, beta)] = lam.coeffs.get(beta, zero)
    return MultiplicityStructure(E, dual, delta, o, nu, tuple(xi), n, exact, dims, shapes)


# -- derived quantities -------------------------------------------------------
def breadth(ms: MultiplicityStructure) -> int:
    return sum(1 for a in ms.E if sum(a) == 1)


def multiplication_matrices(ms: MultiplicityStructure) -> list[np.ndarray]:
    """Numeric matrices of multiplication by ``x_j - xi_j`` in the primal basis.

    ``M[j][i, k]`` is the value of the ``i``-th dual functional on
    ``(x - xi)^(alpha_k + e_j)``; the matrices are strictly lower triangular.
    """
    n, dlt = ms.nvars, ms.delta
    zero = Fraction(0) if ms.exact else 0.0
    out = []
    for j in range(n):
        M = np.empty((dlt, dlt), dtype=object)
        M[:] = zero
        for k, ak in enumerate(ms.E):
            tgt = ak[:j] + (ak[j] + 1,) + ak[j + 1:]
            for i, lam in enumerate(ms.dual):
                M[i, k] = lam.coeffs.get(tgt, zero)
        if not ms.exact:
            M = M.astype(np.complex128 if any(isinstance(v, complex) for v in M.flat) else np.float64)
        out.append(M)
    return out


def apply_monomial_power(mats: list[np.ndarray], gamma: Sequence[int], v: np.ndarray) -> np.ndarray:
    """``M1^g1 ... Mn^gn v`` (the last factor acts first)."""
    for j in range(len(gamma) - 1, -1, -1):
        for _ in range(gamma[j]):
            v = mats[j].dot(v)
    return v


def nu_outside_Eplus(ms: MultiplicityStructure, gamma: Sequence[int], i: int, mats=None):
    """Value of the ``i``-th dual functional on ``(x - xi)^gamma`` from the matrices alone."""
    gamma = tuple(gamma)
    if sum(gamma) > ms.nil_index:
        return Fraction(0) if ms.exact else 0.0
    mats = multiplication_matrices(ms) if mats is None else mats
    e0 = np.empty(ms.delta, dtype=mats[0].dtype)
    e0[:] = Fraction(0) if ms.exact else 0
    e0[0] = Fraction(1) if ms.exact else 1
    return apply_monomial_power(mats, gamma, e0)[i]
