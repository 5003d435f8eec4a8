"""Scalar functions given as expression text on a compact interval.

Expressions are parsed into small immutable trees and evaluated on numpy
arrays under extended-real rules:

* ``0 * (+-inf) = 0``
* ``a / 0 = sign(a) * inf`` for ``a != 0``; ``0 / 0`` is a domain error
* ``inf - inf`` and ``inf / inf`` are domain errors
* ``log(0) = -inf``; ``log`` of a negative number is a domain error
* a negative base raised to a non-integer power is a domain error
* ``0 ^ p = +inf`` for ``p < 0``

An expression may carry explicit point values (``"sign(x) @ {0: 0}"``) which
take precedence over the tree at exactly those points.
"""

from __future__ import annotations

import math
import re
from dataclasses import dataclass, field
from typing import Iterable, Sequence

import numpy as np

from .errors import EvaluationDomainError, ExprSyntaxError, UnknownIdentifierError

__all__ = [
    "Interval",
    "FuncExpr",
    "Grid",
    "SampledFunction",
    "parse_expr",
    "eval_expr",
    "eval_array",
    "make_grid",
    "sample",
    "format_real",
    "DEFAULT_GRID_N",
    "DEFAULT_GRID_LEVELS",
]

DEFAULT_GRID_N = 4097
DEFAULT_GRID_LEVELS = 12


def format_real(v: float) -> str:
    """Shortest round-trip decimal text for a float (``inf``/``-inf`` allowed)."""
    v = float(v)
    if math.isinf(v):
        return "inf" if v > 0 else "-inf"
    if v == 0.0:
        return "0"
    text = repr(v)
    if text.endswith(".0"):
        text = text[:-2]
    return text


@dataclass(frozen=True)
class Interval:
    lo: float
    hi: float

    def __post_init__(self):
        lo, hi = float(self.lo), float(self.hi)
        if not (math.isfinite(lo) and math.isfinite(hi)) or not lo < hi:
            raise ValueError(f"interval needs finite lo < hi, got [{self.lo}, {self.hi}]")
        object.__setattr__(self, "lo", lo)
        object.__setattr__(self, "hi", hi)

    @property
    def width(self) -> float:
        return self.hi - self.lo

    def contains(self, t: float) -> bool:
        return self.lo <= t <= self.hi

    def to_unit(self, x):
        """Affine map onto [-1, 1]."""
        return (2.0 * (np.asarray(x, dtype=float) - self.lo) / self.width) - 1.0

    def from_unit(self, s):
        return self.lo + (np.asarray(s, dtype=float) + 1.0) * (self.width / 2.0)


# ---------------------------------------------------------------------------
# expression tree


class Node:
    __slots__ = ()


@dataclass(frozen=True)
class Const(Node):
    value: float


@dataclass(frozen=True)
class Var(Node):
    pass


@dataclass(frozen=True)
class Neg(Node):
    arg: Node


@dataclass(frozen=True)
class BinOp(Node):
    op: str  # one of + - * /
    left: Node
    right: Node


@dataclass(frozen=True)
class Pow(Node):
    base: Node
    exponent: float


@dataclass(frozen=True)
class Call(Node):
    fn: str
    args: tuple


@dataclass(frozen=True)
class Piecewise(Node):
    """``pieces[0]`` left of ``breaks[0]``, ``pieces[i]`` on ``[breaks[i-1], breaks[i])``,
    ``pieces[-1]`` from ``breaks[-1]`` on."""

    breaks: tuple
    pieces: tuple


UNARY_FUNCTIONS = ("abs", "sign", "sin", "cos", "exp", "log")
BINARY_FUNCTIONS = ("min", "max")


@dataclass(frozen=True)
class FuncExpr:
    """Parsed scalar function with optional explicit point values."""

    root: Node
    overrides: tuple = ()  # sorted ((point, value), ...)

    def __post_init__(self):
        items = self.overrides.items() if isinstance(self.overrides, dict) else self.overrides
        norm = tuple(sorted((float(p), float(v)) for p, v in items))
        pts = [p for p, _ in norm]
        if len(set(pts)) != len(pts):
            raise ValueError("duplicate override point")
        if any(not math.isfinite(p) for p in pts):
            raise ValueError("override points must be finite")
        object.__setattr__(self, "overrides", norm)

    @property
    def override_map(self) -> dict:
        return dict(self.overrides)

    @property
    def override_points(self) -> list:
        return [p for p, _ in self.overrides]

    def has_override(self, t: float) -> bool:
        return float(t) in self.override_map

    def breakpoints(self) -> list:
        """Breakpoints of every piecewise node in the tree (sorted, unique)."""
        found = set()
        _collect_breaks(self.root, found)
        return sorted(found)

    def __call__(self, t):
        if np.ndim(t) == 0:
            return eval_expr(self, float(t))
        return eval_array(self, t)

    def to_text(self) -> str:
        text = _print(self.root)
        if self.overrides:
            body = ", ".join(f"{format_real(p)}: {format_real(v)}" for p, v in self.overrides)
            text += " @ {" + body + "}"
        return text

    def __str__(self):
        return self.to_text()

    # small algebra used by the approximation layers
    def with_overrides(self, overrides) -> "FuncExpr":
        return FuncExpr(self.root, overrides)

    def scaled(self, c: float) -> "FuncExpr":
        c = float(c)
        ov = {p: _ext_mul(c, v) for p, v in self.overrides}
        return FuncExpr(BinOp("*", Const(c), self.root), ov)

    def times(self, other: "FuncExpr") -> "FuncExpr":
        """Pointwise product; override points of either factor keep their exact product."""
        pts = set(self.override_points) | set(other.override_points)
        ov = {p: _ext_mul(eval_expr(self, p), eval_expr(other, p)) for p in pts}
        return FuncExpr(BinOp("*", self.root, other.root), ov)


def _ext_mul(a: float, b: float) -> float:
    if (a == 0.0 and math.isinf(b)) or (b == 0.0 and math.isinf(a)):
        return 0.0
    return a * b


def _collect_breaks(node, acc):
    if isinstance(node, Piecewise):
        acc.update(node.breaks)
        for p in node.pieces:
            _collect_breaks(p, acc)
    elif isinstance(node, BinOp):
        _collect_breaks(node.left, acc)
        _collect_breaks(node.right, acc)
    elif isinstance(node, (Neg,)):
        _collect_breaks(node.arg, acc)
    elif isinstance(node, Pow):
        _collect_breaks(node.base, acc)
    elif isinstance(node, Call):
        for a in node.args:
            _collect_breaks(a, acc)


def _contains_var(node) -> bool:
    if isinstance(node, Var):
        return True
    if isinstance(node, Const):
        return False
    if isinstance(node, Neg):
        return _contains_var(node.arg)
    if isinstance(node, BinOp):
        return _contains_var(node.left) or _contains_var(node.right)
    if isinstance(node, Pow):
        return _contains_var(node.base)
    if isinstance(node, Call):
        return any(_contains_var(a) for a in node.args)
    if isinstance(node, Piecewise):
        return True
    raise TypeError(node)


# ---------------------------------------------------------------------------
# printing (output always re-parses to an equivalent tree)


def _num_text(v: float) -> str:
    s = format_real(v)
    return f"({s})" if s.startswith("-") else s


def _print(node) -> str:
    if isinstance(node, Const):
        if math.isinf(node.value):
            return "(1/0)" if node.value > 0 else "(-1/0)"
        return _num_text(node.value)
    if isinstance(node, Var):
        return "x"
    if isinstance(node, Neg):
        return f"(-{_print(node.arg)})"
    if isinstance(node, BinOp):
        return f"({_print(node.left)} {node.op} {_print(node.right)})"
    if isinstance(node, Pow):
        return f"({_print(node.base)})^({format_real(node.exponent)})"
    if isinstance(node, Call):
        return f"{node.fn}(" + ", ".join(_print(a) for a in node.args) + ")"
    if isinstance(node, Piecewise):
        parts = [_print(node.pieces[0])]
        for b, p in zip(node.breaks, node.pieces[1:]):
            parts += [format_real(b), _print(p)]
        return "piecewise(" + ", ".join(parts) + ")"
    raise TypeError(node)


# ---------------------------------------------------------------------------
# parsing

_TOKEN_RE = re.compile(
    r"\s*(?:(?P<num>(?:\d+\.?\d*|\.\d+)(?:[eE][+-]?\d+)?)"
    r"|(?P<id>[A-Za-z_][A-Za-z_0-9]*)"
    r"|(?P<op>[-+*/^(),@{}:]))"
)


@dataclass
class _Tok:
    kind: str  # num, id, op, end
    text: str
    offset: int  # byte offset


def _tokenize(text: str) -> list:
    toks = []
    pos = 0
    n = len(text)

    def byte_off(i):
        return len(text[:i].encode("utf-8"))

    while True:
        while pos < n and text[pos].isspace():
            pos += 1
        if pos >= n:
            break
        m = _TOKEN_RE.match(text, pos)
        if not m or m.lastgroup is None:
            raise ExprSyntaxError(f"unexpected character {text[pos]!r}", byte_off(pos), text=text)
        start = m.start(m.lastgroup)
        toks.append(_Tok(m.lastgroup, m.group(m.lastgroup), byte_off(start)))
        pos = m.end()
    toks.append(_Tok("end", "", byte_off(n)))
    return toks


class _Parser:
    def __init__(self, text: str):
        self.text = text
        self.toks = _tokenize(text)
        self.i = 0

    @property
    def tok(self) -> _Tok:
        return self.toks[self.i]

    def error(self, message, expected=None, cls=ExprSyntaxError):
        raise cls(message, self.tok.offset, expected, text=self.text)

    def accept(self, text) -> bool:
        if self.tok.kind == "op" and self.tok.text == text:
            self.i += 1
            return True
        return False

    def expect(self, text):
        if not self.accept(text):
            found = self.tok.text or "end of input"
            self.error(f"unexpected {found!r}", expected=text)

    def full(self) -> FuncExpr:
        root = self.expr()
        overrides = {}
        if self.accept("@"):
            self.expect("{")
            while True:
                point = self.signed_number(allow_inf=False)
                self.expect(":")
                value = self.signed_number(allow_inf=True)
                if point in overrides:
                    self.error(f"duplicate override point {format_real(point)}")
                overrides[point] = value
                if self.accept("}"):
                    break
                self.expect(",")
        if self.tok.kind != "end":
            self.error(f"unexpected {self.tok.text!r}", expected="end of input")
        return FuncExpr(root, overrides)

    def expr(self):
        node = self.term()
        while self.tok.kind == "op" and self.tok.text in "+-":
            op = self.tok.text
            self.i += 1
            node = BinOp(op, node, self.term())
        return node

    def term(self):
        node = self.factor()
        while self.tok.kind == "op" and self.tok.text in "*/":
            op = self.tok.text
            self.i += 1
            node = BinOp(op, node, self.factor())
        return node

    def factor(self):
        if self.accept("-"):
            return Neg(self.factor())
        if self.accept("+"):
            return self.factor()
        base = self.atom()
        if self.accept("^"):
            return Pow(base, self.exponent())
        return base

    def exponent(self) -> float:
        if self.tok.kind == "op" and self.tok.text == "(":
            start = self.tok.offset
            self.i += 1
            node = self.expr()
            self.expect(")")
            if _contains_var(node):
                raise ExprSyntaxError("exponent must be constant", start, "number", text=self.text)
            value = float(_eval(node, np.zeros(1))[0])
            if not math.isfinite(value):
                raise ExprSyntaxError("exponent must be finite", start, "number", text=self.text)
            return value
        return self.signed_number(allow_inf=False)

    def signed_number(self, allow_inf: bool) -> float:
        sign = 1.0
        if self.accept("-"):
            sign = -1.0
        elif self.accept("+"):
            pass
        tok = self.tok
        if tok.kind == "num":
            self.i += 1
            return sign * float(tok.text)
        if allow_inf and tok.kind == "id" and tok.text == "inf":
            self.i += 1
            return sign * math.inf
        self.error(f"unexpected {tok.text or 'end of input'!r}", expected="number")

    def atom(self):
        tok = self.tok
        if tok.kind == "num":
            self.i += 1
            return Const(float(tok.text))
        if tok.kind == "id":
            name = tok.text
            if name == "x":
                self.i += 1
                return Var()
            if name in UNARY_FUNCTIONS or name in BINARY_FUNCTIONS or name == "piecewise":
                self.i += 1
                self.expect("(")
                if name == "piecewise":
                    node = self.piecewise_body()
                elif name in BINARY_FUNCTIONS:
                    a = self.expr()
                    self.expect(",")
                    node = Call(name, (a, self.expr()))
                else:
                    node = Call(name, (self.expr(),))
                self.expect(")")
                return node
            self.error(f"unknown identifier {name!r}", cls=UnknownIdentifierError)
        if self.accept("("):
            node = self.expr()
            self.expect(")")
            return node
        self.error(f"unexpected {tok.text or 'end of input'!r}", expected="expression")

    def piecewise_body(self):
        pieces = [self.expr()]
        breaks = []
        while self.accept(","):
            at = self.tok.offset
            b = self.signed_number(allow_inf=False)
            if breaks and not b > breaks[-1]:
                raise ExprSyntaxError("piecewise breakpoints must increase", at, text=self.text)
            breaks.append(b)
            self.expect(",")
            pieces.append(self.expr())
        if not breaks:
            self.error("piecewise needs at least one breakpoint", expected=",")
        return Piecewise(tuple(breaks), tuple(pieces))


def parse_expr(text: str) -> FuncExpr:
    """Parse expression text (optionally followed by ``@ {p: v, ...}``).

    >>> parse_expr("sign(x) @ {0: 0}").override_map
    {0.0: 0.0}
    """
    if not text or not text.strip():
        raise ExprSyntaxError("empty expression", 0, "expression", text=text)
    return _Parser(text).full()


# ---------------------------------------------------------------------------
# evaluation


def _domain(mask, x, message):
    idx = int(np.flatnonzero(mask)[0])
    raise EvaluationDomainError(message, point=float(x[idx]))


def _eval(node, x):
    if isinstance(node, Const):
        return np.full(x.shape, node.value)
    if isinstance(node, Var):
        return x.copy()
    if isinstance(node, Neg):
        return -_eval(node.arg, x)
    if isinstance(node, BinOp):
        a = _eval(node.left, x)
        b = _eval(node.right, x)
        with np.errstate(all="ignore"):
            if node.op == "+":
                r = a + b
            elif node.op == "-":
                r = a - b
            elif node.op == "*":
                r = a * b
                r[((a == 0) & np.isinf(b)) | ((b == 0) & np.isinf(a))] = 0.0
            else:
                r = a / b
                zero = b == 0
                if zero.any():
                    bad = zero & (a == 0)
                    if bad.any():
                        _domain(bad, x, "0/0")
                    r[zero] = np.sign(a[zero]) * np.inf
        bad = np.isnan(r)
        if bad.any():
            _domain(bad, x, f"undefined extended-real operation {node.op!r}")
        return r
    if isinstance(node, Pow):
        a = _eval(node.base, x)
        p = node.exponent
        if not float(p).is_integer():
            neg = a < 0
            if neg.any():
                _domain(neg, x, f"negative base to non-integer power {p}")
        with np.errstate(all="ignore"):
            r = np.power(a, p)
        if p < 0:
            r[a == 0] = np.inf
        bad = np.isnan(r)
        if bad.any():
            _domain(bad, x, "undefined power")
        return r
    if isinstance(node, Call):
        if node.fn in BINARY_FUNCTIONS:
            a = _eval(node.args[0], x)
            b = _eval(node.args[1], x)
            return np.minimum(a, b) if node.fn == "min" else np.maximum(a, b)
        a = _eval(node.args[0], x)
        fn = node.fn
        if fn == "abs":
            return np.abs(a)
        if fn == "sign":
            return np.sign(a)
        if fn in ("sin", "cos"):
            inf = np.isinf(a)
            if inf.any():
                _domain(inf, x, f"{fn} of infinity")
            return np.sin(a) if fn == "sin" else np.cos(a)
        if fn == "exp":
            with np.errstate(over="ignore"):
                return np.exp(a)
        if fn == "log":
            neg = a < 0
            if neg.any():
                _domain(neg, x, "log of a negative number")
            with np.errstate(divide="ignore"):
                return np.log(a)
        raise TypeError(fn)
    if isinstance(node, Piecewise):
        out = np.empty(x.shape)
        idx = np.searchsorted(np.asarray(node.breaks), x, side="right")
        for k, piece in enumerate(node.pieces):
            sel = idx == k
            if sel.any():
                out[sel] = _eval(piece, x[sel])
        return out
    raise TypeError(node)


def eval_array(e: FuncExpr, t) -> np.ndarray:
    """Evaluate ``e`` at every point of ``t`` (override values win)."""
    x = np.array(t, dtype=float, ndmin=1)
    if not np.all(np.isfinite(x)):
        raise ValueError("evaluation points must be finite")
    if not e.overrides:
        return _eval(e.root, x) if x.size else np.empty(0)
    out = np.empty(x.shape)
    free = np.ones(x.shape, dtype=bool)
    for p, v in e.overrides:
        hit = x == p
        out[hit] = v
        free &= ~hit
    if free.any():
        out[free] = _eval(e.root, x[free])
    return out


def eval_expr(e: FuncExpr, t: float) -> float:
    t = float(t)
    if not math.isfinite(t):
        raise ValueError("evaluation point must be finite")
    ov = e.override_map
    if t in ov:
        return ov[t]
    return float(_eval(e.root, np.array([t]))[0])


# ---------------------------------------------------------------------------
# grids

GRID_SCHEMES = ("uniform", "chebyshev", "refined")


@dataclass(frozen=True)
class Grid:
    interval: Interval
    points: np.ndarray = field(repr=False)
    scheme: str = "uniform"
    special_points: tuple = ()

    def __len__(self):
        return len(self.points)


@dataclass(frozen=True)
class SampledFunction:
    grid: Grid
    values: np.ndarray = field(repr=False)


def cascade_offsets(delta0: float, levels: int) -> np.ndarray:
    return delta0 * np.exp2(-np.arange(levels + 1, dtype=float))


def make_grid(
    interval: Interval,
    n: int = DEFAULT_GRID_N,
    scheme: str = "uniform",
    special_points: Iterable[float] = (),
    delta0: float | None = None,
    levels: int = DEFAULT_GRID_LEVELS,
) -> Grid:
    """Build a sampling grid over ``interval``.

    ``uniform`` and ``chebyshev`` place ``n`` base points. ``refined`` uses a
    uniform base and adds, around every special point ``a``, the points
    ``a +- delta0 * 2**-k`` for ``k = 0..levels`` (clipped to the interval).
    Special points are always grid points.
    """
    if n < 2:
        raise ValueError("grid needs n >= 2")
    if scheme not in GRID_SCHEMES:
        raise ValueError(f"unknown grid scheme {scheme!r}")
    specials = sorted({float(a) for a in special_points})
    for a in specials:
        if not interval.contains(a):
            raise ValueError(f"special point {a} outside [{interval.lo}, {interval.hi}]")
    lo, hi = interval.lo, interval.hi
    if scheme == "chebyshev":
        base = interval.from_unit(np.cos(np.pi * np.arange(n - 1, -1, -1) / (n - 1)))
    else:
        base = np.linspace(lo, hi, n)
    parts = [base, np.array(specials, dtype=float), np.array([lo, hi])]
    if scheme == "refined" and specials:
        if delta0 is None:
            delta0 = interval.width / 8.0
        offs = cascade_offsets(delta0, levels)
        for a in specials:
            parts += [a - offs, a + offs]
    pts = np.unique(np.clip(np.concatenate(parts), lo, hi))
    return Grid(interval, pts, scheme, tuple(specials))


def sample(e: FuncExpr, g: Grid) -> SampledFunction:
    return SampledFunction(g, eval_array(e, g.points))


def merge_points(*groups: Sequence[float]) -> list:
    return sorted({float(p) for grp in groups for p in grp})
