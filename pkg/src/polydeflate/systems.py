"""Bundled example systems and the breadth-two family generator."""
from __future__ import annotations

from fractions import Fraction
from importlib import resources

from .parse import parse_system
from .poly import Polynomial, PolySystem

BUNDLED = ("ex33", "ex42", "caprasse", "sys1", "sys2", "sys3", "sys4")


def bundled_text(name: str) -> str:
    if name not in BUNDLED:
        raise KeyError(f"unknown bundled system {name!r}; choose from {', '.join(BUNDLED)}")
    return resources.files("polydeflate").joinpath("data", f"{name}.sys").read_text()


def load(name: str) -> PolySystem:
    return parse_system(bundled_text(name))


def family(n: int) -> PolySystem:
    """``x1^3+x1^2-x2^2, x_i^3+x_i^2-x_{i+1} (1<i<n), x_n^2`` at the origin."""
    if n < 2:
        raise ValueError("family size must be at least 2")
    x = [Polynomial.variable(i, n) for i in range(n)]
    polys = [x[0] ** 3 + x[0] ** 2 - x[1] ** 2]
    for i in range(1, n - 1):
        polys.append(x[i] ** 3 + x[i] ** 2 - x[i + 1])
    polys.append(x[n - 1] ** 2)
    return PolySystem(polys, [f"x{i + 1}" for i in range(n)], (Fraction(0),) * n, {"domain": "exact"})
