"""Scalar and coordinatewise vector weights, one-sided essential limits and
the regular / type 1 / type 2 / type 3 classification of points.

Essential limits are estimated on a cascade of shrinking one-sided windows
``(a, a + delta0 * 2**-k]`` (or the mirror image on the left).  Test functions
are assumed to be piecewise continuous representatives, so sampled limits
stand in for essential ones.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable, Iterable, Optional

import numpy as np
from scipy.optimize import minimize_scalar

from .errors import NotInvertible, WeightInvalid
from .funcspec import (
    BinOp,
    Call,
    Const,
    FuncExpr,
    Grid,
    Interval,
    Neg,
    eval_array,
    format_real,
    make_grid,
    merge_points,
)

REGULAR = "regular"
TYPE1 = "type1"
TYPE2 = "type2"
TYPE3 = "type3"
LABELS = (REGULAR, TYPE1, TYPE2, TYPE3)

RIGHT = "right"
LEFT = "left"

# low-discrepancy jitter for window samples
_GOLDEN = 0.6180339887498949


@dataclass(frozen=True)
class Thresholds:
    tol_zero: float = 1e-6
    tol_converge: float = 1e-4
    tol_detect: float = 1e-4
    huge_cut: float = 1e12


@dataclass(frozen=True)
class LimitParams:
    """Window cascade used to probe one-sided limits.

    ``delta0=None`` means ``(hi - lo) / 8`` of the interval at hand.  The
    innermost window additionally gets ``tail`` geometrically spaced samples
    approaching the point.
    """

    delta0: Optional[float] = None
    levels: int = 44
    samples_per_window: int = 8192
    tail: int = 64
    polish: int = 8
    resolution_cutoff: float = 1e-7


DEFAULT_THRESHOLDS = Thresholds()
DEFAULT_LIMITS = LimitParams()


# ---------------------------------------------------------------------------
# weights


def probe_grid(expr: FuncExpr, interval: Interval, points: Iterable[float] = (), n=None) -> Grid:
    specials = merge_points(
        points,
        [p for p in expr.override_points if interval.contains(p)],
        [p for p in expr.breakpoints() if interval.contains(p)],
    )
    kwargs = {} if n is None else {"n": n}
    return make_grid(interval, scheme="refined", special_points=specials, **kwargs)


@dataclass(frozen=True)
class ScalarWeight:
    """A nonnegative function on a compact interval with candidate singular points."""

    expr: FuncExpr
    interval: Interval
    declared_points: tuple = ()

    def __post_init__(self):
        pts = tuple(sorted({float(p) for p in self.declared_points}))
        for p in pts:
            if not self.interval.contains(p):
                raise WeightInvalid(f"declared point {format_real(p)} outside the interval")
        object.__setattr__(self, "declared_points", pts)
        g = probe_grid(self.expr, self.interval, pts)
        v = eval_array(self.expr, g.points)
        neg = v < 0
        if neg.any():
            at = g.points[np.flatnonzero(neg)[0]]
            raise WeightInvalid(f"weight {self.expr} is negative at x={format_real(at)}")
        z = v == 0
        run = z[:-2] & z[1:-1] & z[2:]
        if run.any():
            at = g.points[np.flatnonzero(run)[0]]
            raise WeightInvalid(
                f"weight {self.expr} vanishes on a subinterval near x={format_real(at)}"
            )

    def __call__(self, t):
        return self.expr(t)

    def values(self, x) -> np.ndarray:
        return eval_array(self.expr, x)

    def scaled(self, c: float) -> "ScalarWeight":
        return ScalarWeight(self.expr.scaled(c), self.interval, self.declared_points)

    def probe_grid(self, extra=(), n=None) -> Grid:
        return probe_grid(self.expr, self.interval, merge_points(self.declared_points, extra), n=n)


@dataclass(frozen=True)
class TailCertificate:
    """Declared decay ``|f_j(t)| <= C * r**j`` for every coordinate beyond the last one kept."""

    C: float
    r: float
    support_end: Optional[int] = None  # used when r == 0

    def __post_init__(self):
        if not self.C > 0:
            raise ValueError("tail certificate needs C > 0")
        if not 0 <= self.r < 1:
            raise ValueError("tail certificate needs 0 <= r < 1")


@dataclass(frozen=True)
class DimKind:
    """``finite`` with ``n`` coordinates, or ``truncated_l2`` keeping coordinates 0..n."""

    kind: str
    n: int
    tail: Optional[TailCertificate] = None
    tail_weight_bound: Optional[float] = None

    def __post_init__(self):
        if self.kind not in ("finite", "truncated_l2"):
            raise ValueError(f"unknown dimension kind {self.kind!r}")
        if self.kind == "finite" and self.n < 1:
            raise ValueError("finite dimension needs n >= 1")
        if self.kind == "truncated_l2":
            if self.n < 0:
                raise ValueError("truncation index must be >= 0")
            if self.tail is None:
                raise ValueError("truncated_l2 needs a tail certificate")

    @classmethod
    def finite(cls, n0: int) -> "DimKind":
        return cls("finite", int(n0))

    @classmethod
    def truncated_l2(cls, N: int, tail: TailCertificate, tail_weight_bound=None) -> "DimKind":
        return cls("truncated_l2", int(N), tail, tail_weight_bound)

    @property
    def length(self) -> int:
        return self.n if self.kind == "finite" else self.n + 1


@dataclass(frozen=True)
class VectorWeight:
    """Admissible-star weight: one scalar weight per coordinate."""

    components: tuple
    dim_kind: Optional[DimKind] = None

    def __post_init__(self):
        comps = tuple(self.components)
        if not comps:
            raise WeightInvalid("vector weight needs at least one component")
        for j, c in enumerate(comps):
            if not isinstance(c, ScalarWeight):
                raise WeightInvalid(f"component {j} is not a scalar weight")
        object.__setattr__(self, "components", comps)
        dk = self.dim_kind or DimKind.finite(len(comps))
        if dk.length != len(comps):
            raise WeightInvalid(f"dimension kind expects {dk.length} components, got {len(comps)}")
        object.__setattr__(self, "dim_kind", dk)

    def __len__(self):
        return len(self.components)


# ---------------------------------------------------------------------------
# one-sided limits


@dataclass(frozen=True)
class SideLimitEstimate:
    point: float
    side: str
    liminf_est: float
    limsup_est: float
    converged: bool
    window_trace: tuple  # ((size, inf, sup), ...) with strictly decreasing size

    @property
    def outer_sup(self) -> float:
        return self.window_trace[0][2]


def _jitter(n: int) -> np.ndarray:
    i = np.arange(n, dtype=float)
    s = (i + np.mod((i + 1.0) * _GOLDEN, 1.0)) / n
    s[-1] = 1.0
    return s


def _close(a: float, b: float, tol: float) -> bool:
    if math.isinf(a) or math.isinf(b):
        return a == b
    return abs(a - b) < tol


def _nudge(x: np.ndarray, toward: float, steps: int = 4) -> np.ndarray:
    y = x
    for _ in range(steps):
        y = np.nextafter(y, toward)
    return y


def _ill_conditioned(func, x, away: float, cutoff: float) -> bool:
    """True when moving samples by a few ulps changes ``func`` noticeably.

    Noise is measured against ``max(|f|, 1)``: absolute for moderate values
    (the classification thresholds are absolute), relative for huge ones.
    Windows failing this are below the resolution at which the expression
    can be evaluated (``sin(1/x)`` for tiny ``x``) and carry no information.
    """
    if x.size > 256:
        x = x[np.linspace(0, x.size - 1, 256).astype(int)]
    y = np.asarray(func(x), dtype=float)
    y2 = np.asarray(func(_nudge(x, away)), dtype=float)
    with np.errstate(invalid="ignore"):
        diff = np.where(y == y2, 0.0, np.abs(y2 - y))
        scale = np.maximum(np.maximum(np.abs(y), np.abs(y2)), 1.0)
        rel = np.where(np.isinf(scale), np.where(y == y2, 0.0, 1.0), diff / scale)
    return float(np.median(rel)) > cutoff


def _polish(func, x, v, lo, hi, inside, count, maximize, points=1024, rounds=8):
    """Sharpen the extreme sample values by zoomed resampling.

    Each of the ``count`` most extreme samples is bracketed by its neighbours,
    the bracket is resampled densely and the procedure repeats around the new
    extreme.  Unlike a local minimiser this copes with brackets holding many
    oscillations.
    """
    pick = np.argmax if maximize else np.argmin
    best = float(v.max() if maximize else v.min())
    u = np.linspace(0.0, 1.0, points)
    for i in np.argsort(-v if maximize else v)[:count]:
        a = float(x[i - 1]) if i > 0 else lo
        b = float(x[i + 1]) if i < x.size - 1 else hi
        for _ in range(rounds):
            if not a < b:
                break
            xs = np.unique(a + u * (b - a))
            xs = xs[inside(xs)]
            if xs.size < 3:
                break
            try:
                vs = np.asarray(func(xs), dtype=float)
            except (ArithmeticError, ValueError):
                break
            j = int(pick(vs))
            best = max(best, float(vs[j])) if maximize else min(best, float(vs[j]))
            a, b = float(xs[max(j - 1, 0)]), float(xs[min(j + 1, xs.size - 1)])
    return best


def window_cascade(
    func: Callable[[np.ndarray], np.ndarray],
    interval: Interval,
    a: float,
    side: str,
    params: LimitParams = DEFAULT_LIMITS,
    tol_converge: float = DEFAULT_THRESHOLDS.tol_converge,
) -> SideLimitEstimate:
    """Sample ``func`` on shrinking one-sided windows at ``a``.

    Window statistics are cumulative over nested windows, so sups never
    increase and infs never decrease as windows shrink.  The cascade stops
    early at the first window the expression cannot resolve in floating
    point; the extremes of the innermost window used are polished by local
    search.
    """
    a = float(a)
    if side not in (LEFT, RIGHT):
        raise ValueError(f"side must be 'left' or 'right', got {side!r}")
    if not interval.contains(a):
        raise ValueError(f"point {a} outside the interval")
    if (side == RIGHT and a >= interval.hi) or (side == LEFT and a <= interval.lo):
        raise ValueError(f"no room on the {side} of {a}")
    delta0 = params.delta0 if params.delta0 is not None else interval.width / 8.0
    sizes = delta0 * np.exp2(-np.arange(params.levels + 1, dtype=float))
    s = _jitter(params.samples_per_window)
    sgn = 1.0 if side == RIGHT else -1.0
    away = math.inf * sgn

    levels = []  # (h, x, v) from outer to inner
    for k in range(params.levels + 1):
        h = sizes[k]
        offs = h * s
        if k == params.levels and params.tail:
            offs = np.concatenate([h * np.exp2(-np.arange(1, params.tail + 1, dtype=float)), offs])
        x = a + sgn * offs
        keep = (x > a) & (x <= a + h) if side == RIGHT else (x < a) & (x >= a - h)
        keep &= (x >= interval.lo) & (x <= interval.hi)
        x = np.unique(x[keep])
        if x.size == 0:
            if not levels:
                raise ValueError(f"empty window at {a} ({side}) after clipping")
            break
        if levels and _ill_conditioned(func, x, away, params.resolution_cutoff):
            break
        levels.append((float(h), x, np.asarray(func(x), dtype=float)))

    h_in, x_in, v_in = levels[-1]
    if side == RIGHT:
        w_lo, w_hi = a, min(a + h_in, interval.hi)
        inside = lambda t: (t > a) & (t <= w_hi)  # noqa: E731
    else:
        w_lo, w_hi = max(a - h_in, interval.lo), a
        inside = lambda t: (t >= w_lo) & (t < a)  # noqa: E731
    inner_inf = _polish(func, x_in, v_in, w_lo, w_hi, inside, params.polish, maximize=False)
    inner_sup = _polish(func, x_in, v_in, w_lo, w_hi, inside, params.polish, maximize=True)

    stats = []
    inf_acc, sup_acc = inner_inf, inner_sup
    for h, _, v in reversed(levels):
        inf_acc = min(inf_acc, float(v.min()))
        sup_acc = max(sup_acc, float(v.max()))
        stats.append((h, inf_acc, sup_acc))
    stats.reverse()
    if len(stats) > 1:
        (_, inf_prev, sup_prev), (_, inf_last, sup_last) = stats[-2], stats[-1]
        converged = _close(sup_last, sup_prev, tol_converge) and _close(
            inf_last, inf_prev, tol_converge
        )
    else:
        inf_last, sup_last = stats[0][1], stats[0][2]
        converged = False
    return SideLimitEstimate(a, side, inf_last, sup_last, converged, tuple(stats))


def ess_limits_one_sided(
    w: ScalarWeight, a: float, side: str, params: LimitParams = DEFAULT_LIMITS,
    thresholds: Thresholds = DEFAULT_THRESHOLDS,
) -> SideLimitEstimate:
    return window_cascade(w.values, w.interval, a, side, params, thresholds.tol_converge)


# ---------------------------------------------------------------------------
# classification


@dataclass(frozen=True)
class SideClass:
    point: float
    side: str
    label: str
    estimate: SideLimitEstimate
    low_confidence: bool
    source: str = "declared"


def sides_of(interval: Interval, a: float) -> tuple:
    if a <= interval.lo:
        return (RIGHT,)
    if a >= interval.hi:
        return (LEFT,)
    return (LEFT, RIGHT)


def label_for(est: SideLimitEstimate, thresholds: Thresholds = DEFAULT_THRESHOLDS) -> str:
    # an unbounded one-sided limsup is reported as type 3 even when the
    # liminf is positive (a blow-up point gets the weighted-vanishing treatment)
    if est.limsup_est >= thresholds.huge_cut:
        return TYPE3
    if est.liminf_est > thresholds.tol_zero:
        return REGULAR
    if est.limsup_est <= thresholds.tol_zero:
        return TYPE1
    return TYPE2


def classify_point(
    w: ScalarWeight, a: float, params: LimitParams = DEFAULT_LIMITS,
    thresholds: Thresholds = DEFAULT_THRESHOLDS, source: str = "declared",
) -> dict:
    """Classify ``a`` from each side that lies inside the interval.

    Returns ``{side: SideClass}``; endpoints get a single entry.
    """
    out = {}
    for side in sides_of(w.interval, a):
        est = ess_limits_one_sided(w, a, side, params, thresholds)
        out[side] = SideClass(float(a), side, label_for(est, thresholds), est, not est.converged, source)
    return out


@dataclass(frozen=True)
class SingularityReport:
    weight: ScalarWeight
    entries: tuple  # SideClass, sorted by (point, side)
    auto_detected: tuple = ()

    @property
    def points(self) -> list:
        return sorted({e.point for e in self.entries})

    def get(self, point: float, side: str) -> Optional[SideClass]:
        for e in self.entries:
            if e.point == point and e.side == side:
                return e
        return None

    def _select(self, side, labels):
        return [e.point for e in self.entries if e.side == side and e.label in labels]

    @property
    def r_plus(self) -> list:
        return self._select(RIGHT, (REGULAR,))

    @property
    def r_minus(self) -> list:
        return self._select(LEFT, (REGULAR,))

    def s_plus(self, kind: Optional[int] = None) -> list:
        return self._select(RIGHT, (f"type{kind}",) if kind else (TYPE1, TYPE2, TYPE3))

    def s_minus(self, kind: Optional[int] = None) -> list:
        return self._select(LEFT, (f"type{kind}",) if kind else (TYPE1, TYPE2, TYPE3))

    @property
    def singular_points(self) -> list:
        return sorted({e.point for e in self.entries if e.label != REGULAR})

    def is_singular(self, point: float) -> bool:
        """Two-sided label, informational only."""
        return point in self.singular_points

    @property
    def low_confidence(self) -> bool:
        return any(e.low_confidence for e in self.entries)

    def csv_rows(self) -> list:
        rows = [("point", "side", "class", "liminf_est", "limsup_est", "converged")]
        for e in self.entries:
            rows.append(
                (
                    format_real(e.point),
                    e.side,
                    e.label,
                    format_real(e.estimate.liminf_est),
                    format_real(e.estimate.limsup_est),
                    "true" if e.estimate.converged else "false",
                )
            )
        return rows


def detect_candidates(w: ScalarWeight, grid: Grid, tol_detect: float, known=()) -> list:
    """Best-effort scan for zeros of ``w`` between grid points.

    Sampled local minima below ``tol_detect`` are refined by a bounded scalar
    minimisation over the neighbouring grid cell.
    """
    x = grid.points
    v = w.values(x)
    found = []
    scale = w.interval.width
    known = list(known)
    for k in range(1, len(x) - 1):
        if v[k] < 100 * tol_detect and v[k] <= v[k - 1] and v[k] <= v[k + 1]:
            cand, best = float(x[k]), float(v[k])
            if v[k] > 0:
                try:
                    res = minimize_scalar(
                        lambda t: float(w.values(np.array([t]))[0]),
                        bounds=(float(x[k - 1]), float(x[k + 1])),
                        method="bounded",
                        options={"xatol": 1e-15 * scale},
                    )
                    if res.success and res.fun < best:
                        cand, best = float(res.x), float(res.fun)
                except (ArithmeticError, ValueError):
                    pass
            if best < tol_detect and all(abs(cand - p) > 1e-9 * scale for p in known + found):
                found.append(cand)
    return found


def classify_weight(
    w: ScalarWeight,
    auto_detect: bool = True,
    params: LimitParams = DEFAULT_LIMITS,
    thresholds: Thresholds = DEFAULT_THRESHOLDS,
    grid: Optional[Grid] = None,
) -> SingularityReport:
    iv = w.interval
    sources = {iv.lo: "endpoint", iv.hi: "endpoint"}
    for p in w.expr.breakpoints():
        if iv.contains(p):
            sources.setdefault(p, "breakpoint")
    for p in w.expr.override_points:
        if iv.contains(p):
            sources.setdefault(p, "override")
    for p in w.declared_points:
        sources[p] = "declared" if sources.get(p) != "endpoint" else "endpoint"
    detected = []
    if auto_detect:
        g = grid or w.probe_grid()
        detected = detect_candidates(w, g, thresholds.tol_detect, known=list(sources))
        for p in detected:
            sources[p] = "detected"
    entries = []
    for p in sorted(sources):
        per_side = classify_point(w, p, params, thresholds, source=sources[p])
        entries.extend(per_side[s] for s in (LEFT, RIGHT) if s in per_side)
    return SingularityReport(w, tuple(entries), tuple(detected))


# ---------------------------------------------------------------------------
# boundedness and inversion


@dataclass(frozen=True)
class BoundedCheck:
    bounded: bool
    esssup_estimate: float


def check_bounded(w: ScalarWeight, report: Optional[SingularityReport] = None) -> BoundedCheck:
    if report is None:
        report = classify_weight(w)
    g = w.probe_grid(report.points)
    v = w.values(g.points)
    has_type3 = bool(report.s_plus(3) or report.s_minus(3))
    bounded = not (np.isinf(v).any() or has_type3)
    esssup = float(v.max()) if bounded else math.inf
    return BoundedCheck(bounded, esssup)


def _reciprocal(node):
    if isinstance(node, Const) and node.value != 0:
        return Const(1.0 / node.value)
    if isinstance(node, Call) and node.fn == "exp":
        return Call("exp", (Neg(node.args[0]),))
    return BinOp("/", Const(1.0), node)


def invert_weight(
    w: ScalarWeight, report: Optional[SingularityReport] = None,
    thresholds: Thresholds = DEFAULT_THRESHOLDS,
) -> FuncExpr:
    """Expression for ``1 / w``; fails when ``w`` gets close to zero anywhere."""
    g = w.probe_grid(report.points if report else ())
    v = w.values(g.points)
    low = v <= thresholds.tol_zero
    if low.any():
        at = g.points[np.flatnonzero(low)[0]]
        raise NotInvertible(f"weight {w.expr} is not invertible: w({format_real(at)}) <= {thresholds.tol_zero}")
    if report is None:
        report = classify_weight(w, thresholds=thresholds)
    if report.singular_points:
        raise NotInvertible(
            f"weight {w.expr} has singular points {[format_real(p) for p in report.singular_points]}"
        )
    ov = {p: (0.0 if math.isinf(val) else 1.0 / val) for p, val in w.expr.overrides}
    return FuncExpr(_reciprocal(w.expr.root), ov)
