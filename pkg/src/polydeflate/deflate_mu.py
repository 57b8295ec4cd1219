"""One-step deflation through parametric multiplication matrices.

Given the primal exponents ``E = [alpha_0 = 0, alpha_1, ...]`` the matrix
of multiplication by ``x_j - z_j`` in the basis ``(x - z)^alpha_i`` is
written with unknown entries ``mu``.  Requiring every input polynomial to
reduce to zero and the matrices to commute gives a polynomial system in
``(z, mu)`` whose root ``(xi, nu)`` is simple.

Matrix convention: ``M_j[i, k]`` is the coefficient of ``(x-z)^alpha_i`` in
``(x-z)^(alpha_k + e_j)``; the matrices are strictly lower triangular, so
their transposes are the strictly upper triangular ones.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Sequence

import numpy as np

from .poly import Exponent, Polynomial, PolySystem, eorder_key, format_monomial, monomials_of_degree


class InvalidEError(ValueError):
    """The exponent set is not a valid primal support."""


@dataclass(frozen=True)
class MuVariable:
    alpha: Exponent
    target: Exponent

    def label(self, varnames: Sequence[str]) -> str:
        a = format_monomial(self.alpha, varnames) or "1"
        t = format_monomial(self.target, varnames) or "1"
        return f"mu[{a},{t}]"


@dataclass
class ParametricMatrixSet:
    E: list
    entries: list  # n object arrays with entries 0, 1 or an index into mu_vars (as ("mu", idx))
    mu_vars: list
    orthogonal: bool = True

    @property
    def n(self) -> int:
        return len(self.entries)

    @property
    def delta(self) -> int:
        return len(self.E)

    def mu_index(self, alpha, target) -> int:
        return self.mu_vars.index(MuVariable(tuple(alpha), tuple(target)))

    def symbolic(self, nvars: int, offset: int) -> list[np.ndarray]:
        """Matrices with Polynomial entries; mu variable ``m`` is ring variable ``offset + m``."""
        mats = []
        for ent in self.entries:
            M = np.empty(ent.shape, dtype=object)
            for idx, v in np.ndenumerate(ent):
                if isinstance(v, tuple):
                    M[idx] = Polynomial.variable(offset + v[1], nvars)
                else:
                    M[idx] = Polynomial.constant(v, nvars)
            mats.append(M)
        return mats

    def numeric(self, mu_values: Sequence) -> list[np.ndarray]:
        vals = list(mu_values)
        cplx = any(isinstance(v, complex) for v in vals)
        exact = all(isinstance(v, (int, Fraction)) for v in vals)
        out = []
        for ent in self.entries:
            M = np.empty(ent.shape, dtype=object)
            for idx, v in np.ndenumerate(ent):
                M[idx] = vals[v[1]] if isinstance(v, tuple) else (Fraction(v) if exact else v)
            if not exact:
                M = M.astype(np.complex128 if cplx else np.float64)
            out.append(M)
        return out

    def transpose_display(self, j: int, varnames=None) -> list[list[str]]:
        """Rows of ``M_j`` transposed, entries rendered as strings."""
        out = []
        d = self.delta
        for k in range(d):
            row = []
            for i in range(d):
                v = self.entries[j][i, k]
                row.append(f"mu{v[1] + 1}" if isinstance(v, tuple) else str(v))
            out.append(row)
        return out


@dataclass
class ExtendedSystem:
    polys: list
    origin: list
    pm: ParametricMatrixSet
    nz: int
    varnames: list
    raw_count: int
    raw_normal_form: int
    raw_commutator: int
    symbolic_point: bool = True
    point: tuple | None = None

    @property
    def nmu(self) -> int:
        return len(self.pm.mu_vars)

    @property
    def nvars(self) -> int:
        return len(self.varnames)

    def bound(self, npolys_input: int) -> int:
        n, d = self.pm.n, self.pm.delta
        return npolys_input * d + n * (n - 1) * (d - 1) * (d - 2) // 4

    def as_polysystem(self, point=None) -> PolySystem:
        return PolySystem(list(self.polys), list(self.varnames), point, {"extended": True})

    def mu_labels(self, base_varnames) -> list[str]:
        return [m.label(base_varnames) for m in self.pm.mu_vars]


# -- construction -------------------------------------------------------------
def validate_E(E: Sequence[Sequence[int]], n: int | None = None) -> list[Exponent]:
    """Check and sort a primal exponent set: contains 0, connected to 1, no repeats."""
    E = [tuple(int(a) for a in e) for e in E]
    if not E:
        raise InvalidEError("E is empty")
    n = len(E[0]) if n is None else n
    if any(len(e) != n for e in E):
        raise InvalidEError(f"every exponent in E must have length {n}")
    if any(a < 0 for e in E for a in e):
        raise InvalidEError("negative exponent in E")
    if len(set(E)) != len(E):
        raise InvalidEError("E has repeated exponents")
    S = set(E)
    if (0,) * n not in S:
        raise InvalidEError("E must contain the zero exponent")
    for e in E:
        if any(e) and not any(
            e[i] and (e[:i] + (e[i] - 1,) + e[i + 1:]) in S for i in range(n)
        ):
            raise InvalidEError(f"E is not closed under subtraction: no predecessor of {e} in E")
    return sorted(E, key=eorder_key)


def build_parametric_matrices(E: Sequence[Sequence[int]], orthogonal: bool = True) -> ParametricMatrixSet:
    """Parametric multiplication matrices for the primal exponents ``E``.

    For ``k < i`` and ``t = alpha_k + e_j`` the entry ``M_j[i, k]`` is 1 when
    ``t = alpha_i``.  With ``orthogonal=True`` (dual basis orthogonal to
    ``E``) it is 0 when ``t`` is in ``E`` or has larger degree than
    ``alpha_i``, otherwise the unknown ``mu[alpha_i, t]``.  With
    ``orthogonal=False`` only targets ``alpha_m`` with ``m < i`` are fixed to
    0 and every other entry is unknown.  Unknowns are numbered by first
    occurrence in ``(i, k, j)`` order.
    """
    E = validate_E(E)
    n = len(E[0])
    d = len(E)
    pos = {e: m for m, e in enumerate(E)}
    entries = [np.zeros((d, d), dtype=object) for _ in range(n)]
    mu_vars: list[MuVariable] = []
    mu_pos: dict[MuVariable, int] = {}
    for i in range(d):
        ai = E[i]
        for k in range(i):
            for j in range(n):
                ak = E[k]
                t = ak[:j] + (ak[j] + 1,) + ak[j + 1:]
                if t == ai:
                    entries[j][i, k] = 1
                    continue
                if orthogonal:
                    if t in pos or sum(ai) < sum(t):
                        continue
                elif t in pos and pos[t] < i:
                    continue
                mv = MuVariable(ai, t)
                if mv not in mu_pos:
                    mu_pos[mv] = len(mu_vars)
                    mu_vars.append(mv)
                entries[j][i, k] = ("mu", mu_pos[mv])
    return ParametricMatrixSet(E, entries, mu_vars, orthogonal)


def _matvec(M: np.ndarray, v: list) -> list:
    d = len(v)
    out = []
    for i in range(d):
        acc = None
        for k in range(d):
            a = M[i, k]
            if a.is_zero() or v[k].is_zero():
                continue
            t = a * v[k]
            acc = t if acc is None else acc + t
        out.append(acc if acc is not None else Polynomial.zero(v[0].nvars))
    return out


def _matmul(A: np.ndarray, B: np.ndarray, nvars: int) -> np.ndarray:
    d = A.shape[0]
    C = np.empty((d, d), dtype=object)
    for i in range(d):
        for k in range(d):
            acc = Polynomial.zero(nvars)
            for m in range(d):
                if not A[i, m].is_zero() and not B[m, k].is_zero():
                    acc = acc + A[i, m] * B[m, k]
            C[i, k] = acc
    return C


class _PowerCache:
    """Memoized ``M1^g1 ... Mn^gn e_0`` over the (z, mu) ring."""

    def __init__(self, mats, nvars):
        self.mats = mats
        self.nvars = nvars
        d = mats[0].shape[0]
        e0 = [Polynomial.constant(1, nvars)] + [Polynomial.zero(nvars) for _ in range(d - 1)]
        self.cache = {(0,) * len(mats): e0}

    def get(self, gamma):
        gamma = tuple(gamma)
        v = self.cache.get(gamma)
        if v is None:
            j = next(i for i, g in enumerate(gamma) if g)
            prev = self.get(gamma[:j] + (gamma[j] - 1,) + gamma[j + 1:])
            v = None if prev is None else _matvec(self.mats[j], prev)
            if v is not None and all(p.is_zero() for p in v):
                v = None
            self.cache[gamma] = v
        return v


def _ring_layout(n: int, m: int):
    return n + m, list(range(n))


def parametric_normal_form(
    p: Polynomial,
    pm: ParametricMatrixSet,
    symbolic_point: bool = True,
    point=None,
    _cache: _PowerCache | None = None,
) -> list[Polynomial]:
    """Residue vector of ``p`` in the parametric basis.

    Entry ``i`` is ``sum_gamma (1/gamma!) d^gamma p(z) [M(mu)^gamma e_0]_i``
    with ``M^gamma = M1^g1 ... Mn^gn``.  The result lives in the ring of
    ``n + |mu|`` variables (``z`` first).  With ``symbolic_point=False``
    the coordinates ``z`` are replaced by ``point``.
    """
    n = pm.n
    if p.nvars != n:
        raise ValueError(f"polynomial has {p.nvars} variables, E has length {n}")
    m = len(pm.mu_vars)
    N, zpos = _ring_layout(n, m)
    cache = _cache or _PowerCache(pm.symbolic(N, n), N)
    out = [Polynomial.zero(N) for _ in range(pm.delta)]
    bound = min(p.degree(), pm.delta - 1)
    exact = p.is_exact()
    for t in range(bound + 1):
        for gamma in _exponents_of_degree(n, t):
            v = cache.get(gamma)
            if v is None:
                continue
            dp = p.diff(gamma)
            if dp.is_zero():
                continue
            fact = math.prod(math.factorial(a) for a in gamma)
            dp = dp / (Fraction(fact) if exact else float(fact)) if fact != 1 else dp
            if not symbolic_point:
                dp = Polynomial.constant(dp.evaluate(point), n)
            coef = dp.embed(N, zpos)
            for i in range(pm.delta):
                if not v[i].is_zero():
                    out[i] = out[i] + coef * v[i]
    return out


def _exponents_of_degree(n: int, t: int):
    return monomials_of_degree(n, t)


def commutator_equations(pm: ParametricMatrixSet, nvars: int | None = None, offset: int | None = None):
    """Nonzero entries of ``M_a M_b - M_b M_a`` for ``a < b`` with their positions."""
    n = pm.n
    offset = n if offset is None else offset
    N = offset + len(pm.mu_vars) if nvars is None else nvars
    mats = pm.symbolic(N, offset)
    eqs, tags = [], []
    raw = 0
    d = pm.delta
    for a in range(n):
        for b in range(a + 1, n):
            C = _matmul(mats[a], mats[b], N) - _matmul(mats[b], mats[a], N)
            for i in range(d):
                for k in range(d):
                    if i - k >= 2:
                        raw += 1
                    if not C[i, k].is_zero():
                        eqs.append(C[i, k])
                        tags.append(("commutator", a, b, i, k))
    return eqs, tags, raw


def build_extended_system(
    f: PolySystem,
    E: Sequence[Sequence[int]],
    symbolic_point: bool = True,
    orthogonal: bool = True,
    point=None,
) -> ExtendedSystem:
    """All normal-form entries of every ``f_k`` followed by the commutator entries.

    Variables are ``z_1..z_n`` (named after the input variables) followed by
    ``mu1..muM``.  Identically zero polynomials are dropped; raw counts are
    kept for comparison with the theoretical bound.
    """
    pm = build_parametric_matrices(E, orthogonal)
    n = f.nvars
    if pm.n != n:
        raise InvalidEError(f"E has exponents of length {pm.n}, system has {n} variables")
    if not symbolic_point:
        point = f.point if point is None else tuple(point)
        if point is None:
            raise ValueError("a point is needed when the point is not symbolic")
    m = len(pm.mu_vars)
    N, _ = _ring_layout(n, m)
    cache = _PowerCache(pm.symbolic(N, n), N)
    polys, origin = [], []
    raw_nf = 0
    for k, p in enumerate(f.polys):
        nf = parametric_normal_form(p, pm, symbolic_point, point, cache)
        for i, q in enumerate(nf):
            raw_nf += 1
            if not q.is_zero():
                polys.append(q)
                origin.append(("normal_form", k, i))
    eqs, tags, raw_c = commutator_equations(pm, N, n)
    polys += eqs
    origin += tags
    varnames = list(f.varnames) + [f"mu{t + 1}" for t in range(m)]
    ext = ExtendedSystem(polys, origin, pm, n, varnames, raw_nf + raw_c, raw_nf, raw_c, symbolic_point, point)
    if len(polys) > ext.bound(len(f.polys)):
        raise AssertionError("extended system exceeds the theoretical size bound")
    if m > n * pm.delta * (pm.delta - 1) // 2:
        raise AssertionError("too many mu variables")
    return ext


def initial_mu(pm: ParametricMatrixSet, ms) -> list:
    """Starting values for the unknowns read from a multiplicity structure.

    ``mu[alpha_i, t]`` starts at the coefficient of ``t`` in the dual
    functional paired with ``alpha_i``.  Exponents missing from ``ms.E``
    make that lookup meaningless and raise.
    """
    pos = {e: i for i, e in enumerate(ms.E)}
    zero = Fraction(0) if ms.exact else 0.0
    out = []
    for mv in pm.mu_vars:
        if mv.alpha not in pos:
            raise InvalidEError(f"exponent {mv.alpha} is not in the computed primal support")
        out.append(ms.dual[pos[mv.alpha]].coeffs.get(mv.target, zero))
    return out
