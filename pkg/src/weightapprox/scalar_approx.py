"""Scalar polynomial approximation in weighted sup norms.

Three engines build a polynomial of a given degree:

``chebyshev``
    interpolation at Chebyshev points of the second kind (near-best for
    continuous targets, coefficients via a type-I DCT, Clenshaw evaluation);
``bernstein``
    the Bernstein operator on equispaced nodes (de Casteljau evaluation);
``lawson``
    discrete weighted near-minimax fit by Lawson's iteratively reweighted
    least squares in the Chebyshev basis.  This is the engine that copes with
    weights vanishing at interior points, where interpolation of any fixed
    surrogate stalls.

``auto`` tries ``chebyshev`` first and falls back to ``lawson`` at the same
degree when the target is missed.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, Optional, Union

import numpy as np
from numpy.polynomial import chebyshev as cheb
from scipy.fft import dct

from .errors import (
    BridgeOverlap,
    EvaluationDomainError,
    MaxDegreeExceeded,
    MissingOverride,
    WeightApproxError,
    WeightUnbounded,
)
from .funcspec import (
    BinOp,
    Const,
    FuncExpr,
    Grid,
    Interval,
    Piecewise,
    Var,
    eval_array,
    eval_expr,
    format_real,
    make_grid,
    merge_points,
)
from .weights import (
    DEFAULT_THRESHOLDS,
    LEFT,
    REGULAR,
    ScalarWeight,
    SingularityReport,
    Thresholds,
    check_bounded,
    classify_weight,
    invert_weight,
)

BASES = ("monomial", "chebyshev", "bernstein")
ENGINES = ("auto", "chebyshev", "bernstein", "lawson")
DEFAULT_MAX_DEGREE = 512


@dataclass(frozen=True)
class Polynomial:
    interval: Interval
    basis: str
    coefficients: tuple

    def __post_init__(self):
        if self.basis not in BASES:
            raise ValueError(f"unknown basis {self.basis!r}")
        coeffs = tuple(float(c) for c in np.ravel(self.coefficients))
        if not coeffs:
            raise ValueError("polynomial needs at least one coefficient")
        object.__setattr__(self, "coefficients", coeffs)

    @property
    def degree(self) -> int:
        return len(self.coefficients) - 1

    def __call__(self, x):
        scalar = np.ndim(x) == 0
        xs = np.array(x, dtype=float, ndmin=1)
        c = np.asarray(self.coefficients)
        if self.basis == "monomial":
            out = np.full(xs.shape, c[-1])
            for ck in c[-2::-1]:
                out = out * xs + ck
        elif self.basis == "chebyshev":
            out = cheb.chebval(self.interval.to_unit(xs), c)
        else:
            out = _de_casteljau(c, (xs - self.interval.lo) / self.interval.width)
        return float(out[0]) if scalar else out

    def scaled(self, c: float) -> "Polynomial":
        return Polynomial(self.interval, self.basis, tuple(c * a for a in self.coefficients))

    def csv_row(self) -> tuple:
        return (self.basis, format_real(self.interval.lo), format_real(self.interval.hi)) + tuple(
            format_real(a) for a in self.coefficients
        )


def _de_casteljau(coeffs: np.ndarray, s: np.ndarray, chunk: int = 4096) -> np.ndarray:
    n = len(coeffs) - 1
    out = np.empty(s.shape)
    for start in range(0, s.size, chunk):
        t = s[start:start + chunk]
        b = np.repeat(coeffs[:, None], t.size, axis=1)
        u = 1.0 - t
        for r in range(1, n + 1):
            b[: n - r + 1] = u * b[: n - r + 1] + t * b[1 : n - r + 2]
        out[start:start + chunk] = b[0]
    return out


@dataclass(frozen=True)
class ApproxResult:
    poly: Polynomial
    weighted_error: float
    degree: int
    sweep_trace: tuple  # ((degree, error), ...)
    regularization_radius: float = 0.0
    engine: str = "chebyshev"
    grid: Optional[Grid] = field(default=None, repr=False, compare=False)

    def trace_rows(self) -> list:
        return [("degree", "weighted_error")] + [
            (str(d), format_real(e)) for d, e in self.sweep_trace
        ]


# ---------------------------------------------------------------------------
# engines


def _node_values(f, nodes: np.ndarray) -> np.ndarray:
    v = np.asarray(f(nodes), dtype=float)
    bad = ~np.isfinite(v)
    if bad.any():
        raise EvaluationDomainError("infinite value at an interpolation node", float(nodes[np.flatnonzero(bad)[0]]))
    return v


def bernstein_approx(f, interval: Interval, n: int) -> Polynomial:
    """Degree-``n`` Bernstein polynomial of ``f``; coefficients are ``f`` at equispaced nodes."""
    if n < 0:
        raise ValueError("degree must be >= 0")
    nodes = interval.lo + np.arange(n + 1) * (interval.width / n) if n else np.array([interval.lo])
    nodes[-1] = interval.hi if n else nodes[-1]
    return Polynomial(interval, "bernstein", tuple(_node_values(f, nodes)))


def chebyshev_points(interval: Interval, n: int) -> np.ndarray:
    if n == 0:
        return np.array([interval.from_unit(0.0)], dtype=float).ravel()
    return interval.from_unit(np.cos(np.pi * np.arange(n + 1) / n))


def chebyshev_interp(f, interval: Interval, n: int) -> Polynomial:
    """Interpolant of ``f`` at the ``n + 1`` Chebyshev points of the second kind."""
    if n < 0:
        raise ValueError("degree must be >= 0")
    v = _node_values(f, chebyshev_points(interval, n))
    if n == 0:
        return Polynomial(interval, "chebyshev", (v[0],))
    c = dct(v, type=1) / n
    c[0] /= 2.0
    c[-1] /= 2.0
    return Polynomial(interval, "chebyshev", tuple(c))


def lawson_fit(
    target: np.ndarray, weight: np.ndarray, x: np.ndarray, interval: Interval, n: int,
    iterations: int = 12,
) -> Polynomial:
    """Near-minimax fit of ``target`` in the discrete norm ``max |target - p| * weight``.

    Points with zero weight carry no information and are dropped.
    """
    keep = (weight > 0) & np.isfinite(weight) & np.isfinite(target)
    x, t, wv = x[keep], target[keep], weight[keep]
    V = cheb.chebvander(interval.to_unit(x), n) * wv[:, None]
    b = t * wv
    lam = np.full(x.size, 1.0 / x.size)
    best_err, best = math.inf, None
    for _ in range(iterations):
        s = np.sqrt(lam)
        c = np.linalg.lstsq(V * s[:, None], b * s, rcond=None)[0]
        e = np.abs(b - V @ c)
        m = float(e.max())
        if m < best_err:
            best_err, best = m, c
        total = float((lam * e).sum())
        if not total > 0:
            break
        lam = lam * e / total
    return Polynomial(interval, "chebyshev", tuple(best))


# ---------------------------------------------------------------------------
# error evaluation


def _values(obj, x: np.ndarray) -> np.ndarray:
    if isinstance(obj, ScalarWeight):
        return obj.values(x)
    if isinstance(obj, FuncExpr):
        return eval_array(obj, x)
    if isinstance(obj, (int, float)):
        return np.full(x.shape, float(obj))
    return np.asarray(obj(x), dtype=float)


def weighted_residual(f, p, w, x: np.ndarray) -> np.ndarray:
    """Pointwise ``|f - p| * w`` with ``0 * inf = 0``."""
    fv, pv, wv = _values(f, x), _values(p, x), _values(w, x)
    with np.errstate(invalid="ignore"):
        d = np.abs(fv - pv)
    d[fv == pv] = 0.0
    with np.errstate(invalid="ignore"):
        r = d * wv
    r[(d == 0) | (wv == 0)] = 0.0
    return r


def weighted_sup_error(f, p, w, g: Union[Grid, np.ndarray]) -> float:
    """``max |f - p| w`` over the grid; ``+inf`` is a legal result."""
    x = g.points if isinstance(g, Grid) else np.asarray(g, dtype=float)
    return float(weighted_residual(f, p, w, x).max())


# ---------------------------------------------------------------------------
# regularization


def _line(x0: float, y0: float, x1: float, y1: float):
    slope = (y1 - y0) / (x1 - x0)
    return BinOp("+", Const(y0), BinOp("*", Const(slope), BinOp("-", Var(), Const(x0))))


def singular_sides(report: SingularityReport) -> list:
    return [(e.point, e.side) for e in report.entries if e.label != REGULAR]


def regularize_near_singularities(f: FuncExpr, report: SingularityReport, eta: float) -> FuncExpr:
    """Replace ``f`` near each singular point by straight bridges.

    On a singular side of ``a`` the function is replaced on ``[a - eta, a)``
    (or ``[a, a + eta)``) by the segment joining ``f(a -+ eta)`` to ``f(a)``,
    so the result is continuous from that side.  Regular sides are left alone.
    """
    if not eta > 0:
        raise ValueError("bridge radius must be positive")
    iv = report.weight.interval
    sides = singular_sides(report)
    if not sides:
        return f
    points = sorted({a for a, _ in sides})
    for a in points:
        if not f.has_override(a):
            raise MissingOverride(a)
    for a, b in zip(points, points[1:]):
        if b - a < 2 * eta:
            raise BridgeOverlap(f"bridges of radius {eta} around {a} and {b} overlap")
    segs = []
    for a, side in sorted(sides):
        fa = eval_expr(f, a)
        if not math.isfinite(fa):
            raise EvaluationDomainError("bridge needs a finite value f(a)", a)
        if side == LEFT:
            s = max(a - eta, iv.lo)
            if s == a:
                continue
            ys = eval_expr(f, s)
            if not math.isfinite(ys):
                raise EvaluationDomainError("bridge end value is infinite", s)
            segs.append((s, a, _line(s, ys, a, fa)))
        else:
            e = min(a + eta, iv.hi)
            if e == a:
                continue
            ye = eval_expr(f, e)
            if not math.isfinite(ye):
                raise EvaluationDomainError("bridge end value is infinite", e)
            segs.append((a, e, _line(a, fa, e, ye)))
    root = f.root
    pieces, breaks = [root], []
    for s, e, line in segs:
        if breaks and breaks[-1] == s:
            pieces[-1] = line
        else:
            breaks.append(s)
            pieces.append(line)
        breaks.append(e)
        pieces.append(root)
    keep = {
        p: v for p, v in f.overrides
        if p in points or not any(s < p < e for s, e, _ in segs)
    }
    return FuncExpr(Piecewise(tuple(breaks), tuple(pieces)), keep)


# ---------------------------------------------------------------------------
# degree sweep


def power_sweep(max_degree: int, start: int = 4) -> list:
    out, n = [], start
    while n <= max_degree:
        out.append(n)
        n *= 2
    return out


class ScalarProblem:
    """Everything needed to build and score approximants of ``f`` against ``w``
    at a given degree; shared by the sweep and the convergence report."""

    def __init__(
        self,
        f: FuncExpr,
        w: ScalarWeight,
        eps: Optional[float] = None,
        report: Optional[SingularityReport] = None,
        grid: Optional[Grid] = None,
        grid_n: Optional[int] = None,
        thresholds: Thresholds = DEFAULT_THRESHOLDS,
    ):
        self.f, self.w = f, w
        self.interval = iv = w.interval
        self.report = report if report is not None else classify_weight(w, thresholds=thresholds)
        if grid is None:
            specials = merge_points(
                self.report.points,
                [p for p in f.override_points if iv.contains(p)],
                [p for p in f.breakpoints() if iv.contains(p)],
            )
            kw = {} if grid_n is None else {"n": grid_n}
            grid = make_grid(iv, scheme="refined", special_points=specials, **kw)
        self.grid = grid
        self.eta = 0.0
        self.surrogate = f
        if singular_sides(self.report):
            self.eta, self.surrogate = self._choose_bridge(eps if eps else 1e-3)
        self._fit_cache = {}

    def _choose_bridge(self, eps: float):
        iv = self.interval
        rep = self.report
        pts = sorted({a for a, _ in singular_sides(rep)})
        anchors = merge_points(pts, [iv.lo, iv.hi])
        gaps = [b - a for a, b in zip(anchors, anchors[1:]) if b > a]
        gap = min(gaps) if gaps else iv.width
        local_sup = max(
            e.estimate.outer_sup for e in rep.entries if e.label != REGULAR
        )
        if not math.isfinite(local_sup):
            local_sup = 0.0
        eta = min(eps / (2.0 * (1.0 + local_sup)), gap / 4.0, iv.width / 8.0)
        probe = self._bridge_probe(pts, eta)
        g = regularize_near_singularities(self.f, rep, eta)
        for _ in range(60):
            if weighted_sup_error(self.f, g, self.w, probe) < eps / 2.0:
                break
            eta /= 2.0
            probe = self._bridge_probe(pts, eta)
            g = regularize_near_singularities(self.f, rep, eta)
        return eta, g

    def _bridge_probe(self, pts, eta) -> np.ndarray:
        iv = self.interval
        s = np.linspace(0.0, 1.0, 257)
        parts = [self.grid.points]
        for a in pts:
            parts += [a - eta * s, a + eta * s]
        x = np.concatenate(parts)
        return np.unique(x[(x >= iv.lo) & (x <= iv.hi)])

    def error(self, p) -> float:
        return weighted_sup_error(self.f, p, self.w, self.grid)

    def _fit_points(self, n: int) -> np.ndarray:
        iv = self.interval
        parts = [self.grid.points, chebyshev_points(iv, 4 * n)]
        offs = (iv.width / 8.0) * np.logspace(-14, 0, 200)
        for a in self.report.singular_points:
            parts += [a - offs, a + offs]
        x = np.concatenate(parts)
        return np.unique(x[(x >= iv.lo) & (x <= iv.hi)])

    def _lawson(self, n: int) -> Polynomial:
        x = self._fit_points(n)
        fv = eval_array(self.f, x)
        bad = ~np.isfinite(fv)
        if bad.any():
            fv[bad] = eval_array(self.surrogate, x[bad])
        return lawson_fit(fv, self.w.values(x), x, self.interval, n)

    def build(self, n: int, engine: str, eps: Optional[float] = None):
        """Approximant of degree ``n`` and its weighted error on the evaluation grid."""
        if engine == "chebyshev":
            p = chebyshev_interp(self.surrogate, self.interval, n)
        elif engine == "bernstein":
            p = bernstein_approx(self.surrogate, self.interval, n)
        elif engine == "lawson":
            p = self._lawson(n)
        elif engine == "auto":
            p, err = self.build(n, "chebyshev")
            if eps is not None and err < eps:
                return p, err
            q, qerr = self.build(n, "lawson")
            return (q, qerr) if qerr < err else (p, err)
        else:
            raise ValueError(f"unknown engine {engine!r}")
        return p, self.error(p)


def _diagnose(f: FuncExpr, w: ScalarWeight, report: SingularityReport) -> str:
    from .membership import check_scalar_membership

    try:
        v = check_scalar_membership(f, w, report)
    except WeightApproxError as exc:
        return f"membership could not be checked: {exc}"
    if v.member:
        return "all probed H0 conditions pass; degree budget too small"
    fails = "; ".join(c.explain() for c in v.failures)
    if not v.finite_norm:
        fails = "weighted norm is infinite; " + fails
    return f"stagnation expected, f violates H0: {fails}"


def approx_scalar_weighted(
    f: FuncExpr,
    w: ScalarWeight,
    eps: float,
    engine: str = "auto",
    max_degree: int = DEFAULT_MAX_DEGREE,
    report: Optional[SingularityReport] = None,
    grid: Optional[Grid] = None,
    grid_n: Optional[int] = None,
    thresholds: Thresholds = DEFAULT_THRESHOLDS,
) -> ApproxResult:
    """Sweep degrees 4, 8, 16, ... and return the first polynomial whose weighted
    error against the original ``f`` is below ``eps``.

    Singular points of ``w`` are bridged first so interpolation engines see a
    continuous target; the bridge radius is shrunk until the bridge alone costs
    less than ``eps / 2`` in the weighted norm.
    """
    if not eps > 0:
        raise ValueError("eps must be positive")
    if engine not in ENGINES:
        raise ValueError(f"unknown engine {engine!r}")
    if report is None:
        report = classify_weight(w, thresholds=thresholds)
    bounded = check_bounded(w, report)
    if not bounded.bounded:
        raise WeightUnbounded(f"weight {w.expr} is not essentially bounded")
    prob = ScalarProblem(f, w, eps, report, grid, grid_n, thresholds)
    trace = []
    for n in power_sweep(max_degree):
        p, err = prob.build(n, engine, eps)
        trace.append((n, err))
        if err < eps:
            return ApproxResult(p, err, n, tuple(trace), prob.eta, engine, prob.grid)
    raise MaxDegreeExceeded(
        f"no degree <= {max_degree} reached weighted error {format_real(eps)}",
        trace,
        _diagnose(f, w, report),
    )


# ---------------------------------------------------------------------------
# divide-out route for invertible weights


@dataclass(frozen=True)
class DivideOutResult:
    q: Polynomial
    inverse_weight: FuncExpr
    weighted_error: float  # || f - q / w ||_{L_inf(w)}
    unweighted_error: float  # || f w - q ||_{L_inf}
    degree: int
    sweep_trace: tuple

    @property
    def identity_gap(self) -> float:
        return abs(self.weighted_error - self.unweighted_error)

    def approximant(self) -> Callable:
        """The function ``q * w^-1`` approximating ``f``."""
        q, inv = self.q, self.inverse_weight
        return lambda x: q(x) * eval_array(inv, x)


def divide_out_approx(
    f: FuncExpr,
    w: ScalarWeight,
    eps: float,
    engine: str = "chebyshev",
    max_degree: int = DEFAULT_MAX_DEGREE,
    grid: Optional[Grid] = None,
    grid_n: Optional[int] = None,
) -> DivideOutResult:
    """Approximate ``f w`` by ``q`` in the plain sup norm; ``q / w`` then
    approximates ``f`` in the weighted norm with the same error."""
    if engine not in ("chebyshev", "bernstein"):
        raise ValueError("divide-out route uses the chebyshev or bernstein engine")
    inv = invert_weight(w)
    iv = w.interval
    fw = f.times(w.expr)
    if grid is None:
        specials = merge_points(
            [p for p in fw.override_points if iv.contains(p)],
            [p for p in fw.breakpoints() if iv.contains(p)],
        )
        kw = {} if grid_n is None else {"n": grid_n}
        grid = make_grid(iv, scheme="refined", special_points=specials, **kw)
    build = chebyshev_interp if engine == "chebyshev" else bernstein_approx
    trace = []
    for n in [0, 1, 2] + power_sweep(max_degree):
        if n > max_degree:
            break
        q = build(fw, iv, n)
        rhs = weighted_sup_error(fw, q, 1.0, grid)
        trace.append((n, rhs))
        if rhs < eps or (rhs == 0.0 and eps >= 0):
            approx = lambda x, q=q: q(x) * eval_array(inv, x)  # noqa: E731
            lhs = weighted_sup_error(f, approx, w, grid)
            return DivideOutResult(q, inv, lhs, rhs, n, tuple(trace))
    raise MaxDegreeExceeded(
        f"f w is not approximable to {format_real(eps)} by degree <= {max_degree} "
        "(f w is numerically discontinuous)",
        trace,
    )
