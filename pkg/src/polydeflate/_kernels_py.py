"""Numpy implementations of the hot kernels.

Used when the compiled extension is unavailable.  The signatures mirror
``_ckernels`` exactly; see :mod:`polydeflate.kernels` for the data layout.
"""
from __future__ import annotations

import numpy as np

BACKEND = "python"


def _binom_table(nmax: int, kmax: int) -> np.ndarray:
    # C[a, b] for 0 <= a <= nmax, 0 <= b <= kmax, as int64
    C = np.zeros((nmax + 1, kmax + 1), dtype=np.int64)
    C[:, 0] = 1
    for a in range(1, nmax + 1):
        C[a, 1:] = C[a - 1, 1:] + C[a - 1, :-1]
    return C


def grlex_rank(exps: np.ndarray) -> np.ndarray:
    """Position of each exponent row in the ascending graded-lex enumeration."""
    exps = np.atleast_2d(np.asarray(exps, dtype=np.int64))
    K, n = exps.shape
    if K == 0:
        return np.zeros(0, dtype=np.int64)
    t = exps.sum(axis=1)
    tmax = int(t.max())
    C = _binom_table(tmax + n, n)
    # monomials of degree < t in n variables: C(t-1+n, n)
    idx = np.where(t > 0, C[np.maximum(t - 1 + n, 0), n], 0)
    s = t.copy()
    for p in range(n - 1):
        m = n - p - 1
        x = exps[:, p]
        idx += C[s + m, m] - C[s - x + m, m]
        s = s - x
    return idx


def macaulay_fill(coef, owner, exps, betas, npolys: int, d: int, ncols: int):
    """Dense Macaulay block from centered, Taylor-scaled generator terms.

    ``exps``/``coef``/``owner`` list the terms of the shifted generators;
    row ``b * npolys + i`` holds ``y^betas[b] * g_i`` truncated at degree ``d``.
    """
    coef = np.asarray(coef)
    owner = np.asarray(owner, dtype=np.int64)
    exps = np.asarray(exps, dtype=np.int64).reshape(len(coef), -1)
    betas = np.asarray(betas, dtype=np.int64).reshape(len(betas), -1)
    M = np.zeros((len(betas) * npolys, ncols), dtype=coef.dtype)
    if len(coef) == 0 or len(betas) == 0:
        return M
    tdeg = exps.sum(axis=1)
    bdeg = betas.sum(axis=1)
    B, T = len(betas), len(coef)
    bi, ti = np.meshgrid(np.arange(B), np.arange(T), indexing="ij")
    bi, ti = bi.ravel(), ti.ravel()
    keep = bdeg[bi] + tdeg[ti] <= d
    bi, ti = bi[keep], ti[keep]
    cols = grlex_rank(betas[bi] + exps[ti])
    rows = bi * npolys + owner[ti]
    np.add.at(M, (rows, cols), coef[ti])
    return M


def eval_packed(coef, owner, ptr, var, exp, nout: int, x):
    """Values and dense Jacobian of a packed polynomial batch at ``x``.

    Term ``t`` is ``coef[t] * prod(x[var[k]] ** exp[k] for k in ptr[t]:ptr[t+1])``
    and contributes to output ``owner[t]``.  Every term has at least one
    (var, exp) entry; constants use ``exp == 0``.
    """
    x = np.asarray(x)
    coef = np.asarray(coef)
    dtype = np.result_type(coef.dtype, x.dtype, np.float64)
    nvars = x.shape[0]
    ptr = np.asarray(ptr, dtype=np.int64)
    var = np.asarray(var, dtype=np.int64)
    exp = np.asarray(exp, dtype=np.int64)
    owner = np.asarray(owner, dtype=np.int64)
    F = np.zeros(nout, dtype=dtype)
    J = np.zeros((nout, nvars), dtype=dtype)
    T = len(coef)
    if T == 0:
        return F, J
    emax = int(exp.max()) if exp.size else 0
    P = np.ones((nvars, emax + 1), dtype=dtype)
    for k in range(1, emax + 1):
        P[:, k] = P[:, k - 1] * x
    lengths = np.diff(ptr)
    L = int(lengths.max())
    # padded factor table, one row per term
    slot = np.arange(len(var)) - np.repeat(ptr[:-1], lengths)
    term_of = np.repeat(np.arange(T), lengths)
    fac = np.ones((T, L), dtype=dtype)
    fac[term_of, slot] = P[var, exp]
    pre = np.cumprod(np.concatenate([np.ones((T, 1), dtype=dtype), fac[:, :-1]], axis=1), axis=1)
    suf = np.cumprod(np.concatenate([fac[:, 1:], np.ones((T, 1), dtype=dtype)], axis=1)[:, ::-1], axis=1)[:, ::-1]
    vals = coef * pre[:, -1] * fac[:, -1]
    np.add.at(F, owner, vals)
    nz = exp > 0
    if np.any(nz):
        k = np.nonzero(nz)[0]
        t = term_of[k]
        s = slot[k]
        dv = coef[t] * exp[k] * P[var[k], exp[k] - 1] * pre[t, s] * suf[t, s]
        np.add.at(J, (owner[t], var[k]), dv)
    return F, J
