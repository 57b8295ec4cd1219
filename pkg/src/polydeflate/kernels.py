"""Backend selection for the hot kernels.

The compiled extension is used when it imports; otherwise the numpy
fallback is used.  Setting ``POLYDEFLATE_KERNELS=python`` forces the
fallback.

Packed polynomial layout (see :func:`pack_polys`): term ``t`` has
coefficient ``coef[t]``, belongs to output ``owner[t]`` and owns the
``(var, exp)`` pairs ``ptr[t]:ptr[t+1]``.
"""
from __future__ import annotations

import os
from dataclasses import dataclass

import numpy as np

from . import _kernels_py

_backend = _kernels_py
if os.environ.get("POLYDEFLATE_KERNELS", "").lower() != "python":
    try:
        from . import _ckernels as _backend  # type: ignore[no-redef]
    except ImportError:  # extension not built
        _backend = _kernels_py

BACKEND: str = _backend.BACKEND
grlex_rank = _backend.grlex_rank
macaulay_fill = _backend.macaulay_fill
eval_packed = _backend.eval_packed


@dataclass
class PackedPolys:
    coef: np.ndarray
    owner: np.ndarray
    ptr: np.ndarray
    var: np.ndarray
    exp: np.ndarray
    nout: int
    nvars: int

    def __call__(self, x, backend=None):
        fn = eval_packed if backend is None else backend.eval_packed
        return fn(self.coef, self.owner, self.ptr, self.var, self.exp, self.nout, np.asarray(x))


def pack_polys(polys, nvars: int | None = None) -> PackedPolys:
    """Flatten polynomials into the CSR-like layout used by :func:`eval_packed`."""
    if nvars is None:
        nvars = polys[0].nvars if polys else 0
    coef, owner, ptr, var, exp = [], [], [0], [], []
    cplx = False
    for i, p in enumerate(polys):
        for e, c in p.terms.items():
            if isinstance(c, complex):
                cplx = True
            coef.append(c)
            owner.append(i)
            nz = [(j, a) for j, a in enumerate(e) if a]
            if not nz:
                nz = [(0, 0)]
            for j, a in nz:
                var.append(j)
                exp.append(a)
            ptr.append(len(var))
    dtype = np.complex128 if cplx else np.float64
    return PackedPolys(
        np.array([complex(c) if cplx else float(c) for c in coef], dtype=dtype),
        np.array(owner, dtype=np.int64),
        np.array(ptr, dtype=np.int64),
        np.array(var, dtype=np.int64),
        np.array(exp, dtype=np.int64),
        len(polys),
        nvars,
    )
