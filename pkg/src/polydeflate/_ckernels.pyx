# cython: boundscheck=False, wraparound=False, cdivision=True, language_level=3
"""Compiled hot kernels; drop-in replacements for ``_kernels_py``."""
import numpy as np
cimport numpy as cnp
from libc.stdint cimport int64_t

cnp.import_array()

BACKEND = "cython"

ctypedef fused scalar_t:
    double
    double complex


cdef int64_t[:, ::1] _binom_table(Py_ssize_t nmax, Py_ssize_t kmax):
    cdef int64_t[:, ::1] C = np.zeros((nmax + 1, kmax + 1), dtype=np.int64)
    cdef Py_ssize_t a, b
    for a in range(nmax + 1):
        C[a, 0] = 1
        for b in range(1, kmax + 1):
            if a > 0:
                C[a, b] = C[a - 1, b] + C[a - 1, b - 1]
    return C


cdef inline int64_t _rank_one(const int64_t* e, Py_ssize_t n, int64_t[:, ::1] C) noexcept nogil:
    cdef int64_t t = 0, s, x, idx = 0
    cdef Py_ssize_t p, m
    for p in range(n):
        t += e[p]
    if t > 0:
        idx = C[t - 1 + n, n]
    s = t
    for p in range(n - 1):
        m = n - p - 1
        x = e[p]
        idx += C[s + m, m] - C[s - x + m, m]
        s -= x
    return idx


def grlex_rank(exps):
    cdef int64_t[:, ::1] E = np.ascontiguousarray(np.atleast_2d(exps), dtype=np.int64)
    cdef Py_ssize_t K = E.shape[0], n = E.shape[1], k
    out = np.zeros(K, dtype=np.int64)
    if K == 0:
        return out
    cdef int64_t[::1] o = out
    cdef int64_t tmax = int(np.asarray(E).sum(axis=1).max())
    cdef int64_t[:, ::1] C = _binom_table(tmax + n, n)
    for k in range(K):
        o[k] = _rank_one(&E[k, 0], n, C)
    return out


def _fill(scalar_t[::1] coef, const int64_t[::1] owner, const int64_t[:, ::1] exps,
          const int64_t[:, ::1] betas, Py_ssize_t npolys, int64_t d, scalar_t[:, ::1] M):
    cdef Py_ssize_t T = coef.shape[0], B = betas.shape[0], n = betas.shape[1]
    cdef Py_ssize_t b, t, p
    cdef int64_t bdeg, tdeg
    cdef int64_t[:, ::1] C = _binom_table(d + n, n)
    cdef int64_t[::1] tdegs = np.zeros(T, dtype=np.int64)
    cdef int64_t[::1] buf = np.zeros(max(n, 1), dtype=np.int64)
    for t in range(T):
        tdeg = 0
        for p in range(n):
            tdeg += exps[t, p]
        tdegs[t] = tdeg
    with nogil:
        for b in range(B):
            bdeg = 0
            for p in range(n):
                bdeg += betas[b, p]
            for t in range(T):
                if bdeg + tdegs[t] > d:
                    continue
                for p in range(n):
                    buf[p] = betas[b, p] + exps[t, p]
                M[b * npolys + owner[t], _rank_one(&buf[0], n, C)] += coef[t]


def macaulay_fill(coef, owner, exps, betas, Py_ssize_t npolys, int64_t d, Py_ssize_t ncols):
    coef = np.ascontiguousarray(coef)
    if coef.dtype != np.complex128:
        coef = coef.astype(np.float64)
    owner = np.ascontiguousarray(owner, dtype=np.int64)
    betas = np.ascontiguousarray(betas, dtype=np.int64).reshape(len(betas), -1)
    exps = np.ascontiguousarray(exps, dtype=np.int64).reshape(len(coef), betas.shape[1])
    M = np.zeros((len(betas) * npolys, ncols), dtype=coef.dtype)
    if len(coef) and len(betas):
        _fill(coef, owner, exps, betas, npolys, d, M)
    return M


def _eval(scalar_t[::1] coef, const int64_t[::1] owner, const int64_t[::1] ptr,
          const int64_t[::1] var, const int64_t[::1] exp, scalar_t[::1] x,
          scalar_t[:, ::1] P, scalar_t[::1] F, scalar_t[:, ::1] J):
    cdef Py_ssize_t T = coef.shape[0], nvars = x.shape[0], emax = P.shape[1] - 1
    cdef Py_ssize_t t, k, q, j, i
    cdef scalar_t val, dv
    with nogil:
        for j in range(nvars):
            P[j, 0] = 1
            for k in range(1, emax + 1):
                P[j, k] = P[j, k - 1] * x[j]
        for t in range(T):
            i = owner[t]
            val = coef[t]
            for k in range(ptr[t], ptr[t + 1]):
                val = val * P[var[k], exp[k]]
            F[i] += val
            for k in range(ptr[t], ptr[t + 1]):
                if exp[k] == 0:
                    continue
                dv = coef[t] * <double>exp[k] * P[var[k], exp[k] - 1]
                for q in range(ptr[t], ptr[t + 1]):
                    if q != k:
                        dv = dv * P[var[q], exp[q]]
                J[i, var[k]] += dv


def eval_packed(coef, owner, ptr, var, exp, Py_ssize_t nout, x):
    x = np.asarray(x)
    coef = np.asarray(coef)
    dtype = np.result_type(coef.dtype, x.dtype, np.float64)
    if dtype != np.complex128:
        dtype = np.float64
    coef = np.ascontiguousarray(coef, dtype=dtype)
    x = np.ascontiguousarray(x, dtype=dtype)
    exp = np.ascontiguousarray(exp, dtype=np.int64)
    emax = int(exp.max()) if exp.size else 0
    nvars = x.shape[0]
    P = np.empty((nvars, emax + 1), dtype=dtype)
    F = np.zeros(nout, dtype=dtype)
    J = np.zeros((nout, nvars), dtype=dtype)
    if len(coef):
        _eval(coef, np.ascontiguousarray(owner, dtype=np.int64),
              np.ascontiguousarray(ptr, dtype=np.int64),
              np.ascontiguousarray(var, dtype=np.int64), exp, x, P, F, J)
    return F, J
