"""Rank, null space, echelon forms and small determinants.

Matrices are plain numpy arrays.  Floating matrices (``float64`` or
``complex128``) go through SVD / pivoted QR; ``object`` arrays holding
:class:`~fractions.Fraction` entries are handled by exact elimination;
``object`` arrays of :class:`~polydeflate.poly.Polynomial` entries only
support :func:`det` (cofactor expansion over the polynomial ring).
"""
from __future__ import annotations

from dataclasses import dataclass, field
from fractions import Fraction
from functools import lru_cache

import numpy as np
import scipy.linalg

from .poly import Polynomial, is_exact_scalar

DEFAULT_TOL = 1e-8


@dataclass
class RankResult:
    rank: int
    row_perm: list[int]
    col_perm: list[int]
    tol_used: float
    singular_values: list[float] = field(default_factory=list)

    @property
    def gap(self) -> float | None:
        """First dropped over last kept singular value; small means a clean gap."""
        s = self.singular_values
        if not s or self.rank == 0 or self.rank >= len(s):
            return None
        return s[self.rank] / s[self.rank - 1] if s[self.rank - 1] else None


def is_exact_matrix(M) -> bool:
    M = np.asarray(M, dtype=object) if not isinstance(M, np.ndarray) else M
    if M.dtype != object:
        return False
    return all(is_exact_scalar(v) for v in M.flat)


def as_exact(M) -> np.ndarray:
    A = np.empty(np.shape(M), dtype=object)
    for idx, v in np.ndenumerate(np.asarray(M, dtype=object)):
        A[idx] = Fraction(v)
    return A


def as_float(M) -> np.ndarray:
    A = np.asarray(M)
    if A.dtype == object:
        if any(isinstance(v, complex) for v in A.flat):
            return A.astype(np.complex128)
        return A.astype(np.float64)
    return A


# -- exact elimination --------------------------------------------------------
def _exact_rref(A: np.ndarray):
    """Reduced row echelon form over Q; returns (R, pivot_cols, row_order)."""
    R = [list(map(Fraction, row)) for row in A]
    m = len(R)
    n = len(R[0]) if m else 0
    rows_idx = list(range(m))
    pivots = []
    r = 0
    for c in range(n):
        p = next((i for i in range(r, m) if R[i][c] != 0), None)
        if p is None:
            continue
        R[r], R[p] = R[p], R[r]
        rows_idx[r], rows_idx[p] = rows_idx[p], rows_idx[r]
        inv = 1 / R[r][c]
        R[r] = [v * inv for v in R[r]]
        for i in range(m):
            if i != r and R[i][c] != 0:
                f = R[i][c]
                R[i] = [a - f * b for a, b in zip(R[i], R[r])]
        pivots.append(c)
        r += 1
        if r == m:
            break
    return R, pivots, rows_idx


def sparse_rref(rows: list[dict], ncols: int | None = None) -> dict[int, dict]:
    """Exact sparse reduced row echelon form.

    ``rows`` are dicts ``col -> Fraction``.  Pivots are the smallest column
    index of each reduced row.  Returns ``{pivot_col: row}`` with each row
    normalized to a unit pivot and free of the other pivot columns.
    """
    piv: dict[int, dict] = {}
    for row in rows:
        r = {k: Fraction(v) for k, v in row.items() if v != 0}
        while r:
            c = min(r)
            p = piv.get(c)
            if p is None:
                f = r[c]
                piv[c] = {k: v / f for k, v in r.items()}
                break
            f = r[c]
            for k, v in p.items():
                nv = r.get(k, 0) - f * v
                if nv:
                    r[k] = nv
                else:
                    r.pop(k, None)
    # back substitution, highest pivot first
    for c in sorted(piv, reverse=True):
        row = piv[c]
        for c2 in sorted(piv):
            if c2 >= c:
                break
            other = piv[c2]
            f = other.get(c)
            if f:
                for k, v in row.items():
                    nv = other.get(k, 0) - f * v
                    if nv:
                        other[k] = nv
                    else:
                        other.pop(k, None)
    return piv


def sparse_null_space(rows: list[dict], ncols: int) -> list[dict]:
    """Kernel basis of a sparse exact matrix, one vector per free column.

    The vector attached to free column ``f`` has a 1 at ``f``, zeros on the
    other free columns, and its remaining support on pivot columns ``< f``.
    """
    piv = sparse_rref(rows, ncols)
    free = [c for c in range(ncols) if c not in piv]
    basis = []
    for f in free:
        v = {f: Fraction(1)}
        for c, row in piv.items():
            a = row.get(f)
            if a:
                v[c] = -a
        basis.append(v)
    return basis


# -- public operations --------------------------------------------------------
def numerical_rank(M, tol: float = DEFAULT_TOL) -> RankResult:
    """Rank with row/column permutations exposing a well-conditioned leading block.

    Floating input: singular values above ``tol * s_max`` count; the column
    order comes from column-pivoted QR, the row order from pivoted QR of the
    selected columns' transpose.  Exact input: exact elimination with the
    lowest-index nonzero pivot.
    """
    A = np.asarray(M)
    if A.size == 0:
        raise ValueError("empty matrix")
    if A.ndim != 2:
        raise ValueError("matrix must be two-dimensional")
    m, n = A.shape
    if A.dtype == object and is_exact_matrix(A):
        _, pivots, rows_idx = _exact_rref(A)
        r = len(pivots)
        col_perm = pivots + [c for c in range(n) if c not in pivots]
        row_perm = rows_idx[:r] + sorted(rows_idx[r:])
        return RankResult(r, row_perm, col_perm, 0.0, [])
    F = as_float(A)
    s = np.linalg.svd(F, compute_uv=False)
    smax = s[0] if s.size else 0.0
    scale = smax if smax > tol else 1.0
    r = int(np.sum(s > tol * scale))
    _, _, cp = scipy.linalg.qr(F, pivoting=True, mode="economic")
    col_perm = [int(c) for c in cp]
    if r > 0:
        _, _, rp = scipy.linalg.qr(F[:, col_perm[:r]].T, pivoting=True, mode="economic")
        sel = [int(i) for i in rp[:r]]
    else:
        sel = []
    row_perm = sel + [i for i in range(m) if i not in sel]
    return RankResult(r, row_perm, col_perm, tol, [float(v) for v in s])


def null_space(M, tol: float = DEFAULT_TOL) -> list[np.ndarray]:
    """Basis of ``{v : M v ~ 0}``: orthonormal (float) or reduced echelon (exact)."""
    A = np.asarray(M)
    if A.ndim != 2:
        raise ValueError("matrix must be two-dimensional")
    m, n = A.shape
    if n == 0:
        return []
    if A.dtype == object and is_exact_matrix(A):
        rows = [{j: v for j, v in enumerate(row) if v != 0} for row in A]
        out = []
        for vec in sparse_null_space(rows, n):
            v = np.array([Fraction(0)] * n, dtype=object)
            for k, val in vec.items():
                v[k] = val
            out.append(v)
        return out
    F = as_float(A)
    if m == 0:
        return list(np.eye(n, dtype=F.dtype))
    _, s, vh = np.linalg.svd(F, full_matrices=True)
    smax = s[0] if s.size else 0.0
    scale = smax if smax > tol else 1.0
    r = int(np.sum(s > tol * scale))
    return [vh[k].conj() for k in range(r, n)]


def row_echelon(M, tol: float = 0.0, column_order=None):
    """Reduced row echelon form and pivot columns.

    Columns are scanned in ``column_order`` (default left to right).  For
    each column the largest remaining entry is taken as pivot if it exceeds
    ``tol`` times the largest entry of the matrix; ``tol = 0`` means any
    nonzero entry (exact domain).  Rows past the rank are returned as zeros.
    """
    A = np.asarray(M)
    exact = A.dtype == object and is_exact_matrix(A)
    if exact:
        R = as_exact(A)
    else:
        R = np.array(as_float(A), dtype=np.complex128 if np.iscomplexobj(as_float(A)) else np.float64)
    m, n = R.shape
    order = list(range(n)) if column_order is None else list(column_order)
    if exact:
        big = 0
    else:
        big = float(np.max(np.abs(R))) if R.size else 0.0
    thresh = tol * big
    pivots = []
    r = 0
    for c in order:
        if r >= m:
            break
        if exact:
            p = next((i for i in range(r, m) if R[i, c] != 0), None)
        else:
            col = np.abs(R[r:, c])
            k = int(np.argmax(col)) if col.size else 0
            p = r + k if col.size and col[k] > thresh and col[k] > 0 else None
        if p is None:
            continue
        if p != r:
            R[[r, p]] = R[[p, r]]
        R[r] = R[r] / R[r, c]
        for i in range(m):
            if i != r and R[i, c] != 0:
                R[i] = R[i] - R[i, c] * R[r]
        if not exact:
            R[:, c] = 0
            R[r, c] = 1
        pivots.append(c)
        r += 1
    R[r:] = Fraction(0) if exact else 0
    return R, pivots


def _cofactor_det(rows: tuple[tuple, ...]):
    """Laplace expansion along the first row with memoized minors."""
    k = len(rows)
    if k == 0:
        return 1

    @lru_cache(maxsize=None)
    def minor(start: int, cols: tuple[int, ...]):
        if start == k:
            return 1
        total = None
        for pos, c in enumerate(cols):
            entry = rows[start][c]
            if _is_zero(entry):
                continue
            sub = minor(start + 1, cols[:pos] + cols[pos + 1:])
            if _is_zero(sub):
                continue
            term = entry * sub
            if pos % 2:
                term = -term
            total = term if total is None else total + term
        return 0 if total is None else total

    return minor(0, tuple(range(k)))


def _is_zero(v) -> bool:
    if isinstance(v, Polynomial):
        return v.is_zero()
    return v == 0


def det(M):
    """Determinant: exact for rationals, LU for floats, cofactor expansion for polynomials."""
    A = np.asarray(M, dtype=object) if not isinstance(M, np.ndarray) else M
    if A.ndim != 2 or A.shape[0] != A.shape[1]:
        raise ValueError("determinant of a non-square matrix")
    n = A.shape[0]
    if n == 0:
        return Fraction(1)
    if A.dtype == object:
        if any(isinstance(v, Polynomial) for v in A.flat):
            nv = next(v.nvars for v in A.flat if isinstance(v, Polynomial))
            rows = tuple(
                tuple(v if isinstance(v, Polynomial) else Polynomial.constant(v, nv) for v in row)
                for row in A
            )
            out = _cofactor_det(rows)
            return out if isinstance(out, Polynomial) else Polynomial.constant(out, nv)
        if is_exact_matrix(A):
            R = [list(map(Fraction, row)) for row in A]
            sign = 1
            d = Fraction(1)
            for c in range(n):
                p = next((i for i in range(c, n) if R[i][c] != 0), None)
                if p is None:
                    return Fraction(0)
                if p != c:
                    R[c], R[p] = R[p], R[c]
                    sign = -sign
                d *= R[c][c]
                for i in range(c + 1, n):
                    if R[i][c] != 0:
                        f = R[i][c] / R[c][c]
                        R[i] = [a - f * b for a, b in zip(R[i], R[c])]
            return sign * d
    return np.linalg.det(as_float(A))
