"""Reader for the line-oriented polynomial system format.

::

    # comment
    vars x1 x2
    poly x1 + x2^2
    poly x1^2 + x2^2
    point 0 0

Expressions use ``+ - * / ^ ( )``, integer, decimal and ``a/b`` literals,
``sqrt(k)`` for a positive integer ``k`` and ``I`` for the imaginary unit.
``*`` is mandatory between factors.  Point coordinates are constant
expressions separated by whitespace, or by commas when a comma is present.
The system is exact when every literal is an integer or a fraction.
"""
from __future__ import annotations

import math
import re
from fractions import Fraction

from .poly import Polynomial, PolySystem, format_poly, format_scalar

RESERVED = {"sqrt", "I", "vars", "poly", "point"}


class ParseError(ValueError):
    def __init__(self, msg: str, line: int = 0, col: int = 0):
        self.msg, self.line, self.col = msg, line, col
        where = f"line {line}, column {col}: " if line else ""
        super().__init__(where + msg)


_TOKEN = re.compile(
    r"\s*(?:(?P<num>\d+\.\d*(?:[eE][+-]?\d+)?|\.\d+(?:[eE][+-]?\d+)?|\d+(?:[eE][+-]?\d+)?)"
    r"|(?P<name>[A-Za-z_][A-Za-z_0-9]*)|(?P<op>[-+*/^(),]))"
)


def _tokenize(text: str, line: int, offset: int):
    toks = []
    pos = 0
    while pos < len(text):
        if text[pos:].strip() == "":
            break
        m = _TOKEN.match(text, pos)
        if not m or m.end() == pos:
            col = offset + len(text[pos:]) - len(text[pos:].lstrip()) + pos + 1
            raise ParseError(f"unexpected character {text[pos:].lstrip()[:1]!r}", line, col)
        kind = m.lastgroup
        toks.append((kind, m.group(kind), offset + m.start(kind) + 1))
        pos = m.end()
    return toks


class _ExprParser:
    def __init__(self, toks, varnames, line, nvars):
        self.toks = toks
        self.i = 0
        self.vars = {v: k for k, v in enumerate(varnames)}
        self.line = line
        self.nvars = nvars
        self.floaty = False

    def peek(self):
        return self.toks[self.i] if self.i < len(self.toks) else (None, None, self._end_col())

    def _end_col(self):
        if not self.toks:
            return 1
        k, v, c = self.toks[-1]
        return c + len(v)

    def take(self):
        t = self.peek()
        self.i += 1
        return t

    def expect(self, op):
        k, v, c = self.take()
        if v != op:
            raise ParseError(f"expected {op!r}, found {v if v is not None else 'end of line'!r}", self.line, c)

    def parse(self):
        if not self.toks:
            raise ParseError("empty expression", self.line, 1)
        p = self.expr()
        k, v, c = self.peek()
        if k is not None:
            raise ParseError(f"unexpected token {v!r}", self.line, c)
        return p

    def expr(self):
        p = self.term()
        while self.peek()[1] in ("+", "-"):
            op = self.take()[1]
            q = self.term()
            p = p + q if op == "+" else p - q
        return p

    def term(self):
        p = self.unary()
        while self.peek()[1] in ("*", "/"):
            op, col = self.take()[1], self.peek()[2]
            q = self.unary()
            if op == "*":
                p = p * q
            else:
                if not q.is_constant() or q.is_zero():
                    raise ParseError("division by a non-constant or zero expression", self.line, col)
                p = p / q.constant_term()
        return p

    def unary(self):
        if self.peek()[1] == "-":
            self.take()
            return -self.unary()
        if self.peek()[1] == "+":
            self.take()
            return self.unary()
        return self.power()

    def power(self):
        base = self.atom()
        if self.peek()[1] == "^":
            self.take()
            k, v, c = self.take()
            if k != "num" or not v.isdigit():
                raise ParseError("exponent must be a non-negative integer", self.line, c)
            base = base ** int(v)
        return base

    def atom(self):
        k, v, c = self.take()
        if k == "num":
            if v.isdigit():
                return Polynomial.constant(Fraction(int(v)), self.nvars)
            self.floaty = True
            return Polynomial.constant(float(v), self.nvars)
        if k == "name":
            if v == "sqrt":
                self.expect("(")
                k2, v2, c2 = self.take()
                if k2 != "num" or not v2.isdigit() or int(v2) <= 0:
                    raise ParseError("sqrt takes a positive integer literal", self.line, c2)
                self.expect(")")
                self.floaty = True
                r = math.isqrt(int(v2))
                if r * r == int(v2):
                    return Polynomial.constant(float(r), self.nvars)
                return Polynomial.constant(math.sqrt(int(v2)), self.nvars)
            if v == "I":
                return Polynomial.constant(1j, self.nvars)
            if v not in self.vars:
                raise ParseError(f"unknown variable {v!r}", self.line, c)
            return Polynomial.variable(self.vars[v], self.nvars)
        if v == "(":
            p = self.expr()
            self.expect(")")
            return p
        raise ParseError(f"unexpected {v if v is not None else 'end of line'!r}", self.line, c)


def parse_expression(text: str, varnames, line: int = 1, offset: int = 0):
    """Parse one expression; returns ``(Polynomial, uses_float_literals)``."""
    toks = _tokenize(text, line, offset)
    ep = _ExprParser(toks, list(varnames), line, len(varnames))
    p = ep.parse()
    return p, ep.floaty


def _split_point(body: str, body_col: int):
    """Yield ``(text, column)`` chunks of a point line."""
    if "," in body:
        pieces, start = [], 0
        for m in re.finditer(",", body):
            pieces.append((body[start:m.start()], body_col + start))
            start = m.end()
        pieces.append((body[start:], body_col + start))
    else:
        pieces = [(m.group(), body_col + m.start()) for m in re.finditer(r"\S+", body)]
    return pieces


def parse_system(text: str, require_point: bool = False) -> PolySystem:
    varnames = None
    polys = []
    point = None
    floaty = False
    for ln, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0]
        if not line.strip():
            continue
        m = re.match(r"\s*(\S+)", line)
        kw = m.group(1)
        body = line[m.end():]
        body_col = m.end()
        if kw == "vars":
            if varnames is not None:
                raise ParseError("duplicate 'vars' line", ln, m.start(1) + 1)
            names = body.split()
            if not names:
                raise ParseError("'vars' needs at least one name", ln, m.end() + 1)
            for nm in names:
                col = body_col + body.index(nm) + 1
                if not re.fullmatch(r"[A-Za-z_][A-Za-z_0-9]*", nm) or nm in RESERVED:
                    raise ParseError(f"invalid variable name {nm!r}", ln, col)
            if len(set(names)) != len(names):
                raise ParseError("repeated variable name", ln, body_col + 1)
            varnames = names
        elif kw == "poly":
            if varnames is None:
                raise ParseError("'poly' before 'vars'", ln, m.start(1) + 1)
            p, fl = parse_expression(body, varnames, ln, body_col)
            floaty |= fl
            polys.append(p)
        elif kw == "point":
            if varnames is None:
                raise ParseError("'point' before 'vars'", ln, m.start(1) + 1)
            if point is not None:
                raise ParseError("duplicate 'point' line", ln, m.start(1) + 1)
            coords = []
            for chunk, col in _split_point(body, body_col):
                if not chunk.strip():
                    raise ParseError("empty point coordinate", ln, col + 1)
                lead = len(chunk) - len(chunk.lstrip())
                p, fl = parse_expression(chunk.strip(), [], ln, col + lead)
                coords.append(p.constant_term() if not p.is_zero() else Fraction(0))
            if len(coords) != len(varnames):
                raise ParseError(
                    f"point has {len(coords)} coordinates, expected {len(varnames)}", ln, body_col + 1
                )
            point = tuple(coords)
        else:
            raise ParseError(f"unknown directive {kw!r}", ln, m.start(1) + 1)
    if varnames is None:
        raise ParseError("missing 'vars' line")
    if not polys:
        raise ParseError("no 'poly' lines")
    if require_point and point is None:
        raise ParseError("missing 'point' line")
    if floaty:
        polys = [p.to_float() for p in polys]
    return PolySystem(polys, varnames, point, {"domain": "float" if floaty else "exact"})


def format_system(sys: PolySystem) -> str:
    lines = ["vars " + " ".join(sys.varnames)]
    lines += ["poly " + format_poly(p, sys.varnames) for p in sys.polys]
    if sys.point is not None:
        lines.append("point " + " ".join(format_scalar(v).replace(" ", "") for v in sys.point))
    return "\n".join(lines) + "\n"
