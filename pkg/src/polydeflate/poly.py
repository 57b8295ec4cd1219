"""Sparse multivariate polynomials over exact rationals or machine floats.

A :class:`Polynomial` is an immutable map from exponent tuples to
coefficients.  Coefficients are :class:`fractions.Fraction` in the exact
domain and ``float`` (or ``complex``) in the floating-point domain; mixing
the two promotes to floating point, following Python's numeric tower.

Monomials are compared in graded lexicographic order with the first
variable largest, see :func:`grlex_key`.
"""
from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, field
from fractions import Fraction
from numbers import Number
from typing import Iterable, Mapping, Sequence

Exponent = tuple[int, ...]


class DimensionError(ValueError):
    """Operands live in polynomial rings with different variable counts."""


def _normalize(c):
    if isinstance(c, bool):
        c = int(c)
    if isinstance(c, int):
        return Fraction(c)
    if isinstance(c, complex) and c.imag == 0.0:
        return c.real
    return c


def is_exact_scalar(c) -> bool:
    return isinstance(c, (int, Fraction))


def grlex_key(e: Exponent):
    """Sort key for graded lex order (ascending), x1 > x2 > ... > xn."""
    return (sum(e), e)


def eorder_key(e: Exponent):
    """Sort key used for primal exponent lists: degree first, then x1 before x2."""
    return (sum(e), tuple(-a for a in e))


def monomials_of_degree(n: int, t: int) -> list[Exponent]:
    """All exponents of total degree ``t`` in ``n`` variables, lex ascending."""
    if n == 0:
        return [()] if t == 0 else []
    out = []
    for first in range(t + 1):
        for rest in monomials_of_degree(n - 1, t - first):
            out.append((first,) + rest)
    return out


def monomials_upto(n: int, d: int) -> list[Exponent]:
    """All exponents with total degree ``<= d`` in ascending graded lex order."""
    out: list[Exponent] = []
    for t in range(d + 1):
        out.extend(monomials_of_degree(n, t))
    return out


def factorial_of(e: Exponent) -> int:
    out = 1
    for a in e:
        out *= math.factorial(a)
    return out


class Polynomial:
    """Immutable sparse polynomial in ``nvars`` variables."""

    __slots__ = ("nvars", "terms", "_hash")

    def __init__(self, terms: Mapping[Exponent, object] | None = None, nvars: int = 1):
        if nvars < 0:
            raise ValueError("nvars must be non-negative")
        clean = {}
        for e, c in (terms or {}).items():
            e = tuple(int(a) for a in e)
            if len(e) != nvars:
                raise DimensionError(f"exponent {e} does not have length {nvars}")
            if any(a < 0 for a in e):
                raise ValueError(f"negative exponent in {e}")
            c = _normalize(c)
            if c != 0:
                clean[e] = c
        self.nvars = nvars
        self.terms = clean
        self._hash = None

    # -- construction helpers -------------------------------------------------
    @classmethod
    def zero(cls, nvars: int) -> "Polynomial":
        return cls({}, nvars)

    @classmethod
    def constant(cls, c, nvars: int) -> "Polynomial":
        return cls({(0,) * nvars: c}, nvars)

    @classmethod
    def variable(cls, i: int, nvars: int) -> "Polynomial":
        e = [0] * nvars
        e[i] = 1
        return cls({tuple(e): 1}, nvars)

    @classmethod
    def monomial(cls, e: Sequence[int], c=1) -> "Polynomial":
        return cls({tuple(e): c}, len(e))

    @classmethod
    def _raw(cls, terms: dict, nvars: int) -> "Polynomial":
        # terms already clean: no zeros, right lengths, normalized scalars
        p = object.__new__(cls)
        p.nvars = nvars
        p.terms = terms
        p._hash = None
        return p

    # -- basic queries ------------------------------------------------------
    def is_zero(self) -> bool:
        return not self.terms

    def is_exact(self) -> bool:
        return all(is_exact_scalar(c) for c in self.terms.values())

    def is_constant(self) -> bool:
        return all(not any(e) for e in self.terms)

    def degree(self) -> int:
        """Total degree; the zero polynomial has degree -1."""
        return max((sum(e) for e in self.terms), default=-1)

    def coefficient(self, e: Sequence[int]):
        return self.terms.get(tuple(e), 0)

    def constant_term(self):
        return self.terms.get((0,) * self.nvars, 0)

    def leading_term(self):
        """(exponent, coefficient) of the grlex-largest monomial."""
        e = max(self.terms, key=grlex_key)
        return e, self.terms[e]

    def sorted_terms(self, descending: bool = True):
        return sorted(self.terms.items(), key=lambda t: grlex_key(t[0]), reverse=descending)

    def variables_used(self) -> set[int]:
        return {i for e in self.terms for i, a in enumerate(e) if a}

    def __len__(self):
        return len(self.terms)

    def __eq__(self, other):
        if isinstance(other, Polynomial):
            return self.nvars == other.nvars and self.terms == other.terms
        if isinstance(other, Number):
            return self.terms == Polynomial.constant(other, self.nvars).terms
        return NotImplemented

    def __hash__(self):
        if self._hash is None:
            self._hash = hash((self.nvars, frozenset(self.terms.items())))
        return self._hash

    def __repr__(self):
        return f"Polynomial({format_poly(self)!r}, nvars={self.nvars})"

    # -- arithmetic -----------------------------------------------------------
    def _coerce(self, other) -> "Polynomial":
        if isinstance(other, Polynomial):
            if other.nvars != self.nvars:
                raise DimensionError(f"nvars mismatch: {self.nvars} vs {other.nvars}")
            return other
        if isinstance(other, Number):
            return Polynomial.constant(other, self.nvars)
        raise TypeError(f"cannot combine Polynomial with {type(other).__name__}")

    def __add__(self, other):
        try:
            other = self._coerce(other)
        except TypeError:
            return NotImplemented
        out = dict(self.terms)
        for e, c in other.terms.items():
            v = out.get(e, 0) + c
            if v != 0:
                out[e] = v
            else:
                out.pop(e, None)
        return Polynomial._raw(out, self.nvars)

    __radd__ = __add__

    def __neg__(self):
        return Polynomial._raw({e: -c for e, c in self.terms.items()}, self.nvars)

    def __sub__(self, other):
        try:
            other = self._coerce(other)
        except TypeError:
            return NotImplemented
        return self + (-other)

    def __rsub__(self, other):
        return (-self) + other

    def scale(self, c) -> "Polynomial":
        c = _normalize(c)
        if c == 0:
            return Polynomial.zero(self.nvars)
        return Polynomial._raw({e: v * c for e, v in self.terms.items() if v * c != 0}, self.nvars)

    def __mul__(self, other):
        if isinstance(other, Number):
            return self.scale(other)
        try:
            other = self._coerce(other)
        except TypeError:
            return NotImplemented
        if len(self.terms) < len(other.terms):
            a, b = self.terms, other.terms
        else:
            a, b = other.terms, self.terms
        out: dict = {}
        for ea, ca in a.items():
            for eb, cb in b.items():
                e = tuple(x + y for x, y in zip(ea, eb))
                out[e] = out.get(e, 0) + ca * cb
        return Polynomial._raw({e: c for e, c in out.items() if c != 0}, self.nvars)

    __rmul__ = __mul__

    def __truediv__(self, other):
        if isinstance(other, Polynomial):
            if not other.is_constant() or other.is_zero():
                raise ZeroDivisionError("division by a non-constant or zero polynomial")
            other = other.constant_term()
        if not isinstance(other, Number):
            return NotImplemented
        other = _normalize(other)
        if other == 0:
            raise ZeroDivisionError("division by zero")
        if is_exact_scalar(other):
            return self.scale(1 / Fraction(other))
        return self.scale(1 / other)

    def __pow__(self, k: int):
        if not isinstance(k, int) or k < 0:
            raise ValueError("exponent must be a non-negative integer")
        result = Polynomial.constant(1, self.nvars)
        base = self
        while k:
            if k & 1:
                result = result * base
            k >>= 1
            if k:
                base = base * base
        return result

    # -- calculus -----------------------------------------------------------
    def partial(self, j: int, times: int = 1) -> "Polynomial":
        out = {}
        for e, c in self.terms.items():
            a = e[j]
            if a < times:
                continue
            f = 1
            for k in range(times):
                f *= a - k
            ne = e[:j] + (a - times,) + e[j + 1:]
            out[ne] = c * f
        return Polynomial._raw(out, self.nvars)

    def diff(self, beta: Sequence[int]) -> "Polynomial":
        """Iterated partial derivative ``d^|beta| p / dx^beta`` (no 1/beta! factor)."""
        if len(beta) != self.nvars:
            raise DimensionError("beta length does not match nvars")
        out = {}
        for e, c in self.terms.items():
            f = 1
            ok = True
            for a, b in zip(e, beta):
                if a < b:
                    ok = False
                    break
                for k in range(b):
                    f *= a - k
            if ok:
                out[tuple(a - b for a, b in zip(e, beta))] = c * f
        return Polynomial._raw(out, self.nvars)

    def gradient(self) -> list["Polynomial"]:
        return [self.partial(j) for j in range(self.nvars)]

    def evaluate(self, pt: Sequence):
        if len(pt) != self.nvars:
            raise DimensionError(f"point has length {len(pt)}, expected {self.nvars}")
        pt = [_normalize(v) for v in pt]
        powers: list[dict[int, object]] = [dict() for _ in range(self.nvars)]
        total = 0
        for e, c in self.terms.items():
            t = c
            for j, a in enumerate(e):
                if a:
                    pj = powers[j]
                    v = pj.get(a)
                    if v is None:
                        v = pt[j] ** a
                        pj[a] = v
                    t = t * v
            total = total + t
        return total

    __call__ = evaluate

    def shift(self, xi: Sequence) -> "Polynomial":
        """Return ``q`` with ``q(y) = p(y + xi)``."""
        if len(xi) != self.nvars:
            raise DimensionError(f"shift vector has length {len(xi)}, expected {self.nvars}")
        xi = [_normalize(v) for v in xi]
        if all(v == 0 for v in xi):
            return self
        # binomial expansion of (y_j + xi_j)^a, cached per (j, a)
        cache: dict[tuple[int, int], list[tuple[int, object]]] = {}

        def expand(j, a):
            key = (j, a)
            if key not in cache:
                cache[key] = [
                    (k, math.comb(a, k) * xi[j] ** (a - k))
                    for k in range(a + 1)
                    if xi[j] != 0 or k == a
                ]
            return cache[key]

        out: dict = {}
        for e, c in self.terms.items():
            partial_terms = [((), c)]
            for j, a in enumerate(e):
                nxt = []
                for pe, pc in partial_terms:
                    for k, w in expand(j, a):
                        nxt.append((pe + (k,), pc * w))
                partial_terms = nxt
            for pe, pc in partial_terms:
                out[pe] = out.get(pe, 0) + pc
        return Polynomial({e: c for e, c in out.items()}, self.nvars)

    def substitute(self, values: Mapping[int, object]) -> "Polynomial":
        """Substitute constants for some variables, keeping the ring unchanged."""
        out: dict = {}
        for e, c in self.terms.items():
            ne = list(e)
            for j, v in values.items():
                if e[j]:
                    c = c * _normalize(v) ** e[j]
                    ne[j] = 0
            ne = tuple(ne)
            out[ne] = out.get(ne, 0) + c
        return Polynomial(out, self.nvars)

    def embed(self, nvars: int, positions: Sequence[int] | None = None) -> "Polynomial":
        """Map into a ring with ``nvars`` variables; variable i goes to ``positions[i]``."""
        if positions is None:
            positions = range(self.nvars)
        positions = list(positions)
        if len(positions) != self.nvars:
            raise DimensionError("positions must list one target per variable")
        out = {}
        for e, c in self.terms.items():
            ne = [0] * nvars
            for a, p in zip(e, positions):
                ne[p] += a
            out[tuple(ne)] = c
        return Polynomial._raw(out, nvars)

    def map_coefficients(self, fn) -> "Polynomial":
        return Polynomial({e: fn(c) for e, c in self.terms.items()}, self.nvars)

    def to_float(self) -> "Polynomial":
        return self.map_coefficients(lambda c: complex(c) if isinstance(c, complex) else float(c))

    def chop(self, rel: float) -> "Polynomial":
        """Drop floating coefficients below ``rel`` times the largest magnitude."""
        if not self.terms or self.is_exact():
            return self
        m = max(abs(c) for c in self.terms.values())
        return Polynomial({e: c for e, c in self.terms.items() if abs(c) > rel * m}, self.nvars)

    def max_coeff(self) -> float:
        return max((abs(complex(c)) for c in self.terms.values()), default=0.0)


# -- functional aliases -------------------------------------------------------
def add(p: Polynomial, q: Polynomial) -> Polynomial:
    return p + q


def mul(p: Polynomial, q: Polynomial) -> Polynomial:
    return p * q


def diff(p: Polynomial, beta: Sequence[int]) -> Polynomial:
    return p.diff(beta)


def evaluate(p: Polynomial, pt: Sequence):
    return p.evaluate(pt)


def shift(p: Polynomial, xi: Sequence) -> Polynomial:
    return p.shift(xi)


def is_scalar_multiple(p: Polynomial, q: Polynomial) -> bool:
    """True when ``p == c*q`` for some nonzero scalar ``c`` (exact comparison)."""
    if p.nvars != q.nvars or set(p.terms) != set(q.terms) or not p.terms:
        return False
    it = iter(p.terms)
    e0 = next(it)
    ratio = p.terms[e0] / q.terms[e0]
    return all(p.terms[e] == ratio * q.terms[e] for e in p.terms)


@dataclass
class PolySystem:
    """Ordered list of polynomials with variable names and an optional point."""

    polys: list[Polynomial]
    varnames: list[str]
    point: tuple | None = None
    meta: dict = field(default_factory=dict)

    def __post_init__(self):
        n = len(self.varnames)
        if n == 0:
            raise ValueError("a system needs at least one variable")
        for p in self.polys:
            if p.nvars != n:
                raise DimensionError(f"polynomial has {p.nvars} variables, system has {n}")
        if self.point is not None:
            self.point = tuple(_normalize(v) for v in self.point)
            if len(self.point) != n:
                raise DimensionError(f"point has {len(self.point)} coordinates, expected {n}")

    @property
    def nvars(self) -> int:
        return len(self.varnames)

    def __len__(self):
        return len(self.polys)

    def is_exact(self) -> bool:
        return all(p.is_exact() for p in self.polys)

    def point_is_exact(self) -> bool:
        return self.point is not None and all(is_exact_scalar(v) for v in self.point)

    def evaluate(self, pt: Sequence | None = None) -> list:
        pt = self.point if pt is None else pt
        return [p.evaluate(pt) for p in self.polys]

    def jacobian(self) -> list[list[Polynomial]]:
        return [p.gradient() for p in self.polys]

    def with_polys(self, polys: Iterable[Polynomial]) -> "PolySystem":
        return PolySystem(list(polys), list(self.varnames), self.point, dict(self.meta))


# -- printing -----------------------------------------------------------------
def format_scalar(c) -> str:
    c = _normalize(c)
    if isinstance(c, Fraction):
        return str(c)
    if isinstance(c, complex):
        return f"({format_scalar(c.real)}{'+' if math.copysign(1, c.imag) > 0 else '-'}{format_scalar(abs(c.imag))}*I)"
    s = format(c, ".17g")
    if not any(ch in s for ch in ".eEn"):
        s += ".0"
    return s


def round_scalar(c, digits: int = 12):
    """Round a float or complex to ``digits`` significant digits for display.

    A complex component below ``10**-digits`` times the modulus is treated
    as round-off and dropped.  Exact scalars pass through unchanged.
    """
    if is_exact_scalar(c):
        return c
    c = complex(c)
    tiny = 10.0 ** -digits * abs(c)
    re, im = (0.0 if abs(v) <= tiny else float(f"{v:.{digits}g}") for v in (c.real, c.imag))
    return complex(re, im) if im else re


def display_scalar(c, digits: int = 12) -> str:
    """Short human-readable form; unlike :func:`format_scalar` it does not round-trip."""
    c = _normalize(round_scalar(c, digits))
    if isinstance(c, Fraction):
        return str(c)
    if isinstance(c, complex):
        if not c.real:
            return f"{c.imag!r}*I"
        sign = "+" if c.imag > 0 else "-"
        return f"({c.real!r}{sign}{abs(c.imag)!r}*I)"
    return repr(c)


def format_monomial(e: Exponent, varnames: Sequence[str]) -> str:
    parts = []
    for a, name in zip(e, varnames):
        if a == 1:
            parts.append(name)
        elif a > 1:
            parts.append(f"{name}^{a}")
    return "*".join(parts)


def format_poly(p: Polynomial, varnames: Sequence[str] | None = None) -> str:
    """Render in graded-lex descending order using the input grammar."""
    if varnames is None:
        varnames = [f"x{i + 1}" for i in range(p.nvars)]
    if p.is_zero():
        return "0"
    out = []
    for i, (e, c) in enumerate(p.sorted_terms(descending=True)):
        mono = format_monomial(e, varnames)
        negative = (not isinstance(c, complex)) and c < 0
        mag = -c if negative else c
        if mono:
            if is_exact_scalar(mag) and mag == 1:
                body = mono
            else:
                body = f"{format_scalar(mag)}*{mono}"
        else:
            body = format_scalar(mag)
        if i == 0:
            out.append(f"-{body}" if negative else body)
        else:
            out.append(f" - {body}" if negative else f" + {body}")
    return "".join(out)
