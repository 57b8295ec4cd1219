"""Command-line front end: ``deflate --method ... --input FILE``.

Exit codes: 0 success, 1 input error, 2 numerical failure, 3 no convergence.
"""
from __future__ import annotations

import argparse
import json
import sys
import time
from dataclasses import dataclass
from fractions import Fraction

import numpy as np

from . import __version__
from .deflate1 import DeflationError, SimpleRootError, deflate_until_simple
from .deflate_mu import InvalidEError, build_extended_system
from .dual import NonIsolatedError, NotARootError, breadth, dual_space
from .newton import NonConvergenceError, refine_with_structure, verify_simple
from .parse import ParseError, format_system, parse_expression, parse_system
from .poly import PolySystem, display_scalar, format_monomial, format_poly, format_scalar
from .systems import BUNDLED, bundled_text, family

SCHEMA = 1
EXIT_OK, EXIT_PARSE, EXIT_NUMERIC, EXIT_NOCONV = 0, 1, 2, 3


@dataclass
class RunConfig:
    method: str = "dual-only"
    tol: float = 1e-8
    max_iter: int = 50
    seed: int = 0
    strategy: str = "single"
    output: str = "text"
    symbolic_point: bool = False
    direction: str = "generic"
    d_max: int = 32
    E: list | None = None
    orthogonal: bool = True
    randomize: bool = True
    start: list | None = None
    newton_tol: float = 1e-12

    def __post_init__(self):
        if self.method not in ("determinantal", "mu", "dual-only"):
            raise ValueError(f"unknown method {self.method!r}")
        if not self.tol > 0:
            raise ValueError("tol must be positive")
        if self.max_iter < 1:
            raise ValueError("max-iter must be at least 1")
        if self.strategy not in ("single", "all"):
            raise ValueError("strategy must be single or all")


class RunError(Exception):
    def __init__(self, msg, code, report=None):
        super().__init__(msg)
        self.code = code
        self.report = report


# -- JSON encoding ------------------------------------------------------------
def encode_scalar(c):
    if isinstance(c, bool):
        return c
    if isinstance(c, (int, np.integer)):
        return int(c)
    if isinstance(c, Fraction):
        return str(c) if c.denominator != 1 else int(c)
    if isinstance(c, (complex, np.complexfloating)):
        c = complex(c)
        if c.imag == 0:
            return c.real
        return {"re": c.real, "im": c.imag}
    if isinstance(c, (float, np.floating)):
        return float(c)
    return c


def _clean_complex(v, eps=1e-14):
    """Drop round-off imaginary/real parts far below the other component."""
    if isinstance(v, (complex, np.complexfloating)):
        v = complex(v)
        re, im = v.real, v.imag
        mag = abs(v)
        if abs(im) <= eps * max(mag, 1.0):
            return re
        if abs(re) <= eps * max(mag, 1.0):
            return complex(0.0, im)
    return v


def _point_list(pt):
    return [encode_scalar(_clean_complex(v)) for v in pt]


def _trace_json(trace):
    rows = []
    for k, (p, r, s) in enumerate(trace.iterates):
        rows.append({"iteration": k, "point": _point_list(p), "residual": r, "step": s})
    return rows


# -- pipeline -----------------------------------------------------------------
def _structure_fields(ms, varnames):
    return {
        "multiplicity": ms.delta,
        "nil_index": ms.nil_index,
        "breadth": breadth(ms),
        "E": [list(a) for a in ms.E],
        "E_monomials": [format_monomial(a, varnames) or "1" for a in ms.E],
        "dual_basis": [
            [{"exponent": list(e), "coefficient": encode_scalar(_clean_complex(c))} for e, c in sorted(lam.coeffs.items())]
            for lam in ms.dual
        ],
        "dual_basis_text": [lam.to_string(varnames, digits=None if ms.exact else 12) for lam in ms.dual],
        "nu": [
            {
                "alpha": list(a),
                "beta": list(b),
                "label": f"nu[{format_monomial(a, varnames) or '1'},{format_monomial(b, varnames)}]",
                "value": encode_scalar(_clean_complex(v)),
            }
            for (a, b), v in ms.nu.items()
        ],
        "kernel_dims": list(ms.kernel_dims),
        "macaulay_shapes": [list(s) for s in ms.mac_shapes],
        "exact": ms.exact,
    }


def _blank_report(cfg: RunConfig, sys_: PolySystem) -> dict:
    return {
        "schema": SCHEMA,
        "version": __version__,
        "method": cfg.method,
        "status": "error",
        "verified": False,
        "input": {
            "vars": list(sys_.varnames),
            "polys": [format_poly(p, sys_.varnames) for p in sys_.polys],
            "point": _point_list(sys_.point) if sys_.point is not None else None,
            "domain": "exact" if sys_.is_exact() else "float",
        },
        "multiplicity": None,
        "nil_index": None,
        "breadth": None,
        "dual_basis": [],
        "E": [],
        "deflated_system": [],
        "counts": {"polys": len(sys_.polys), "vars": sys_.nvars, "iterations": 0},
        "newton_trace": [],
        "timings_ms": {},
        "config": {
            "tol": cfg.tol,
            "max_iter": cfg.max_iter,
            "seed": cfg.seed,
            "strategy": cfg.strategy,
            "direction": cfg.direction,
            "symbolic_point": cfg.symbolic_point,
        },
    }


def _timed(report, stage, fn, *a, **kw):
    t = time.perf_counter()
    try:
        return fn(*a, **kw)
    finally:
        report["timings_ms"][stage] = 1e3 * (time.perf_counter() - t)


def run(cfg: RunConfig, sys_: PolySystem) -> dict:
    """Execute one pipeline and return the JSON-ready report.

    Raises :class:`RunError` carrying the exit code and the partial report.
    """
    report = _blank_report(cfg, sys_)
    try:
        if cfg.method == "mu" and cfg.symbolic_point:
            return _run_symbolic(cfg, sys_, report)
        if sys_.point is None:
            raise RunError("a 'point' line is required for this method", EXIT_PARSE, report)
        if cfg.method == "dual-only":
            ms = _timed(report, "dual", dual_space, sys_, None, cfg.tol, cfg.d_max)
            report.update(_structure_fields(ms, sys_.varnames))
            report["status"] = "ok"
            report["verified"] = True
            return report
        if cfg.method == "determinantal":
            return _run_determinantal(cfg, sys_, report)
        return _run_mu(cfg, sys_, report)
    except RunError:
        raise
    except (NotARootError, NonIsolatedError, InvalidEError, SimpleRootError) as e:
        report["status"] = "numeric-error"
        report["error"] = str(e)
        raise RunError(str(e), EXIT_NUMERIC, report) from e
    except (DeflationError, NonConvergenceError) as e:
        report["status"] = "no-convergence"
        report["error"] = str(e)
        raise RunError(str(e), EXIT_NOCONV, report) from e
    except (ValueError, ZeroDivisionError, np.linalg.LinAlgError) as e:
        report["status"] = "numeric-error"
        report["error"] = str(e)
        raise RunError(str(e), EXIT_NUMERIC, report) from e


def _run_determinantal(cfg, sys_, report):
    try:
        ms = _timed(report, "dual", dual_space, sys_, None, cfg.tol, cfg.d_max)
        report.update(_structure_fields(ms, sys_.varnames))
    except (NonIsolatedError, NotARootError) as e:
        report["dual_error"] = str(e)
    try:
        g, rep = _timed(
            report, "deflate", deflate_until_simple, sys_, None, cfg.tol, cfg.max_iter,
            cfg.strategy, cfg.direction, cfg.seed,
        )
    except SimpleRootError:
        raise
    except DeflationError as e:
        if e.report is not None:
            report["steps"] = _steps_json(e.report, sys_.varnames)
            report["counts"]["iterations"] = e.report.iterations
        raise
    report["deflated_system"] = [format_poly(p, g.varnames) for p in g.polys]
    report["counts"] = {"polys": len(g.polys), "vars": g.nvars, "iterations": rep.iterations}
    report["steps"] = _steps_json(rep, sys_.varnames)
    report["ranks"] = rep.ranks
    ok, info = _timed(report, "verify", verify_simple, g, g.point, cfg.tol)
    report["verify"] = info
    report["verified"] = bool(ok)
    report["status"] = "ok" if ok else "not-verified"
    if not ok:
        raise RunError("deflated system failed the simple-root check", EXIT_NOCONV, report)
    return report


def _steps_json(rep, varnames):
    return [
        {
            "rank": s.rank_before,
            "differentials": list(s.i_set),
            "weights": [encode_scalar(w) for w in s.weights] if s.weights is not None else None,
            "added": [format_poly(p, varnames) for p in s.added],
            "raw_count": s.raw_count,
            "polys_after": s.npolys_after,
            "residual": s.residual,
        }
        for s in rep.steps
    ]


def _ext_fields(ext, base_varnames, npolys):
    labels = ext.mu_labels(base_varnames)
    return {
        "deflated_system": [format_poly(p, ext.varnames) for p in ext.polys],
        "origin": [list(o) for o in ext.origin],
        "mu_variables": [{"name": f"mu{k + 1}", "label": lab} for k, lab in enumerate(labels)],
        "raw_counts": {
            "normal_form": ext.raw_normal_form,
            "commutator": ext.raw_commutator,
            "total": ext.raw_count,
            "bound": ext.bound(npolys),
        },
        "parametric_matrices_transposed": [ext.pm.transpose_display(j) for j in range(ext.pm.n)],
    }


def _run_symbolic(cfg, sys_, report):
    if cfg.E is None:
        raise RunError("--symbolic-point needs --E", EXIT_PARSE, report)
    ext = _timed(report, "extend", build_extended_system, sys_, cfg.E, True, cfg.orthogonal)
    report.update(_ext_fields(ext, sys_.varnames, len(sys_.polys)))
    report["E"] = [list(a) for a in ext.pm.E]
    report["counts"] = {"polys": len(ext.polys), "vars": ext.nvars, "iterations": 0}
    report["status"] = "ok"
    report["verified"] = True
    return report


def _run_mu(cfg, sys_, report):
    ms = None
    if cfg.start is None or cfg.E is None:
        ms = _timed(report, "dual", dual_space, sys_, None, cfg.tol, cfg.d_max)
        report.update(_structure_fields(ms, sys_.varnames))
    E = cfg.E if cfg.E is not None else ms.E
    n = sys_.nvars
    xi = tuple(sys_.point)
    mu0 = None
    if cfg.start is not None:
        xi, mu0 = tuple(cfg.start[:n]), list(cfg.start[n:])
    res = _timed(
        report, "refine", refine_with_structure, sys_, xi, ms, cfg.newton_tol, cfg.max_iter,
        cfg.seed, E, cfg.orthogonal, mu0, 3, cfg.tol, cfg.randomize,
    )
    ext = res.extended
    if mu0 is not None and len(mu0) != len(ext.pm.mu_vars):
        raise RunError(f"--start needs {n + len(ext.pm.mu_vars)} values", EXIT_PARSE, report)
    report.update(_ext_fields(ext, sys_.varnames, len(sys_.polys)))
    report["E"] = [list(a) for a in ext.pm.E]
    report["counts"] = {"polys": len(ext.polys), "vars": ext.nvars, "iterations": len(res.trace.steps)}
    report["newton_trace"] = _trace_json(res.trace)
    report["quadratic_flag"] = res.trace.quadratic_flag
    report["order_estimate"] = res.trace.order_estimate
    report["seeds_tried"] = res.seeds_tried
    report["refined_point"] = _point_list(res.xi)
    report["refined_mu"] = _point_list(res.mu)
    if res.nu:
        report["refined_nu"] = [
            {"alpha": list(a), "beta": list(b), "value": encode_scalar(_clean_complex(v))}
            for (a, b), v in res.nu.items()
        ]
    ok, info = _timed(report, "verify", verify_simple, ext, list(res.trace.final), cfg.tol)
    report["verify"] = info
    report["verified"] = bool(ok)
    report["status"] = "ok" if ok else "not-verified"
    if not ok:
        raise RunError("extended system failed the simple-root check", EXIT_NOCONV, report)
    return report


def emit_family(n: int) -> PolySystem:
    return family(n)


# -- text rendering -----------------------------------------------------------
def _fmt(v):
    if isinstance(v, dict) and "re" in v:
        v = complex(v["re"], v["im"])
    if isinstance(v, str):
        return v
    return display_scalar(v) if isinstance(v, (int, float, complex)) else str(v)


def render_text(report: dict) -> str:
    out = [f"method: {report['method']}    status: {report['status']}"]
    inp = report["input"]
    out.append(f"input: {len(inp['polys'])} polynomials in {len(inp['vars'])} variables ({inp['domain']})")
    if report.get("multiplicity") is not None:
        out.append(
            f"multiplicity {report['multiplicity']}, nil-index {report['nil_index']}, breadth {report['breadth']}"
        )
        out.append("primal basis: " + ", ".join(report.get("E_monomials", [])))
        out.append("dual basis:")
        for s in report.get("dual_basis_text", []):
            out.append("    " + s)
        if report.get("nu"):
            out.append("nu table:")
            for row in report["nu"]:
                out.append(f"    {row['label']} = {_fmt(row['value'])}")
    if report.get("steps"):
        out.append("deflation steps:")
        for k, s in enumerate(report["steps"], 1):
            out.append(
                f"  step {k}: rank {s['rank']}, added {len(s['added'])} (raw {s['raw_count']}), "
                f"total {s['polys_after']}, residual {s['residual']:.3e}"
            )
            for p in s["added"]:
                out.append("      " + p)
    if report.get("mu_variables"):
        out.append("mu variables:")
        for m in report["mu_variables"]:
            out.append(f"    {m['name']} = {m['label']}")
    if report["method"] != "dual-only" and report.get("deflated_system"):
        out.append(f"system ({len(report['deflated_system'])} polynomials):")
        for p in report["deflated_system"]:
            out.append("    " + p)
    c = report["counts"]
    out.append(f"counts: polys {c['polys']}, vars {c['vars']}, iterations {c['iterations']}")
    if report.get("newton_trace"):
        out.append("newton:")
        for row in report["newton_trace"]:
            pt = ", ".join(_fmt(v) for v in row["point"])
            step = "" if row["step"] is None else f"  step {row['step']:.3e}"
            out.append(f"  {row['iteration']:2d}: residual {row['residual']:.3e}{step}  [{pt}]")
        out.append(f"quadratic convergence: {report.get('quadratic_flag')}")
    if report.get("refined_nu"):
        out.append("refined nu:")
        for row in report["refined_nu"]:
            out.append(f"    {row['alpha']} {row['beta']} = {_fmt(row['value'])}")
    if "verify" in report:
        v = report["verify"]
        out.append(f"verified: {report['verified']} (rank {v['rank']}/{v['ncols']}, residual {v['residual']:.3e})")
    if report.get("error"):
        out.append("error: " + report["error"])
    out.append("timings (ms): " + ", ".join(f"{k} {v:.1f}" for k, v in report["timings_ms"].items()))
    return "\n".join(out)


# -- argument handling --------------------------------------------------------
def parse_E(text: str, n: int | None = None) -> list:
    """``"0,0;1,0;0,1"`` -> ``[(0,0), (1,0), (0,1)]``."""
    out = []
    for chunk in text.split(";"):
        chunk = chunk.strip()
        if not chunk:
            continue
        try:
            out.append(tuple(int(v) for v in chunk.split(",")))
        except ValueError as e:
            raise ParseError(f"bad exponent {chunk!r} in --E") from e
    if n is not None and any(len(e) != n for e in out):
        raise ParseError(f"--E exponents must have {n} entries")
    return out


def parse_values(text: str) -> list:
    out = []
    for chunk in text.split(","):
        p, _ = parse_expression(chunk.strip(), [])
        out.append(p.constant_term())
    return out


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="deflate", description="Deflate isolated singular roots of polynomial systems.")
    ap.add_argument("--method", choices=["determinantal", "mu", "dual-only"], default="dual-only")
    src = ap.add_mutually_exclusive_group()
    src.add_argument("--input", help="system file ('-' for stdin)")
    src.add_argument("--family-n", type=int, metavar="N", help="use the breadth-two family with N variables")
    src.add_argument("--example", choices=BUNDLED, help="use a bundled example system")
    ap.add_argument("--tol", type=float, default=1e-8, help="relative rank tolerance (default 1e-8)")
    ap.add_argument("--seed", type=int, default=0)
    ap.add_argument("--max-iter", type=int, default=50)
    ap.add_argument("--strategy", choices=["single", "all"], default="single")
    ap.add_argument("--direction", choices=["generic", "first"], default="generic",
                    help="kernel differential used by the single strategy")
    ap.add_argument("--symbolic-point", action="store_true", help="keep the point symbolic (needs --E)")
    ap.add_argument("--output", choices=["text", "json"], default="text")
    ap.add_argument("--E", dest="E", help="primal exponents, e.g. '0,0;1,0;0,1'")
    ap.add_argument("--non-orthogonal", action="store_true",
                    help="parametric matrices without the orthogonality zeros")
    ap.add_argument("--no-randomize", action="store_true", help="Gauss-Newton on the full extended system")
    ap.add_argument("--start", help="comma-separated start values for (z, mu)")
    ap.add_argument("--d-max", type=int, default=32)
    ap.add_argument("--print-system", action="store_true", help="print the input system and exit")
    ap.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    return ap


def _load_input(args) -> PolySystem:
    if args.family_n is not None:
        return emit_family(args.family_n)
    if args.example:
        return parse_system(bundled_text(args.example))
    if args.input is None:
        raise ParseError("one of --input, --example or --family-n is required")
    text = sys.stdin.read() if args.input == "-" else open(args.input, encoding="utf-8").read()
    return parse_system(text)


def main(argv=None) -> int:
    ap = build_parser()
    args = ap.parse_args(argv)
    try:
        sys_ = _load_input(args)
        if args.print_system:
            sys.stdout.write(format_system(sys_))
            return EXIT_OK
        cfg = RunConfig(
            method=args.method, tol=args.tol, max_iter=args.max_iter, seed=args.seed,
            strategy=args.strategy, output=args.output, symbolic_point=args.symbolic_point,
            direction=args.direction, d_max=args.d_max,
            E=parse_E(args.E, sys_.nvars) if args.E else None,
            orthogonal=not args.non_orthogonal, randomize=not args.no_randomize,
            start=parse_values(args.start) if args.start else None,
        )
    except (ParseError, OSError) as e:
        print(f"deflate: {e}", file=sys.stderr)
        return EXIT_PARSE
    except ValueError as e:
        print(f"deflate: {e}", file=sys.stderr)
        return EXIT_PARSE
    code = EXIT_OK
    try:
        report = run(cfg, sys_)
    except RunError as e:
        print(f"deflate: {e}", file=sys.stderr)
        report, code = e.report, e.code
    if report is not None:
        if cfg.output == "json":
            json.dump(report, sys.stdout, indent=2)
            sys.stdout.write("\n")
        else:
            print(render_text(report))
    return code


if __name__ == "__main__":  # pragma: no cover
    sys.exit(main())
