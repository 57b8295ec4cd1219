"""Compare the compiled kernels with the numpy fallback on realistic workloads.

    python benchmarks/bench_kernels.py [--repeat N]
"""
import argparse
import timeit

import numpy as np

from polydeflate import _kernels_py
from polydeflate.deflate_mu import build_extended_system
from polydeflate.dual import _pack_dense, dual_space
from polydeflate.kernels import pack_polys
from polydeflate.poly import monomials_upto
from polydeflate.systems import family, load

try:
    from polydeflate import _ckernels
except ImportError:
    _ckernels = None


def workloads():
    sys1 = load("sys1")
    n = sys1.nvars
    exps = np.array(monomials_upto(n, 12), dtype=np.int64)
    yield "grlex_rank, 4 vars, deg <= 12", lambda m: m.grlex_rank(exps)

    coef, owner, e = _pack_dense([p.shift(sys1.point) for p in sys1.polys], n)
    d = 10
    betas = np.array(monomials_upto(n, d - 1), dtype=np.int64)
    ncols = len(monomials_upto(n, d))
    yield (
        f"macaulay_fill, sys1 order {d} ({len(betas) * len(sys1.polys)}x{ncols})",
        lambda m: m.macaulay_fill(coef, owner, e, betas, len(sys1.polys), d, ncols),
    )

    f = family(4)
    ext = build_extended_system(f, dual_space(f).E)
    pk = pack_polys(ext.polys, ext.nvars)
    x = np.random.default_rng(0).uniform(-1, 1, ext.nvars)
    yield (
        f"eval_packed, family n=4 extended ({len(ext.polys)} polys, {ext.nvars} vars)",
        lambda m: pk(x, backend=m),
    )


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--repeat", type=int, default=5)
    args = ap.parse_args()
    backends = [("python", _kernels_py)] + ([("cython", _ckernels)] if _ckernels else [])
    if _ckernels is None:
        print("compiled extension not built; timing the fallback only")
    print(f"{'workload':<58}" + "".join(f"{b:>12}" for b, _ in backends) + f"{'speedup':>10}")
    for label, fn in workloads():
        times = []
        for _, mod in backends:
            number = 1
            while timeit.timeit(lambda: fn(mod), number=number) < 0.2:
                number *= 2
            times.append(min(timeit.repeat(lambda: fn(mod), number=number, repeat=args.repeat)) / number)
        cells = "".join(f"{t * 1e3:>10.3f}ms" for t in times)
        speed = f"{times[0] / times[1]:>9.1f}x" if len(times) == 2 else ""
        print(f"{label:<58}{cells}{speed}")


if __name__ == "__main__":
    main()
