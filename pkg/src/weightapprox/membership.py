"""Membership in the approximable classes H0 (scalar) and H (coordinatewise).

A function belongs to H0 for a weight ``w`` when it is one-sided continuous
at every regular side of a point and when ``|f(x) - f(a)| w(x)`` vanishes as
``x`` approaches a singular point ``a`` from a singular side.  Only a finite
set of points can be probed: the points of the weight's report, the special
points of ``f`` (explicit values, piecewise breakpoints) and the locations of
any large jumps found by a fine-grid scan.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Optional, Sequence

import numpy as np

from .errors import MissingOverride, ReportMismatch
from .funcspec import FuncExpr, eval_array, eval_expr, format_real, make_grid, merge_points
from .weights import (
    DEFAULT_LIMITS,
    DEFAULT_THRESHOLDS,
    REGULAR,
    LimitParams,
    ScalarWeight,
    SingularityReport,
    Thresholds,
    VectorWeight,
    classify_point,
    classify_weight,
    window_cascade,
)

CONTINUITY = "one-sided-continuity"
VANISHING = "weighted-vanishing"

DEFAULT_TOL = 1e-3
JUMP_CUT = 0.1


@dataclass(frozen=True)
class Condition:
    point: float
    side: str
    kind: str
    measured: float
    tolerance: float
    passed: bool
    low_confidence: bool = False
    label: str = REGULAR
    source: str = "report"

    def explain(self) -> str:
        verdict = "pass" if self.passed else "FAIL"
        if self.kind == CONTINUITY:
            what = f"{self.side} limit of |f(x) - f(a)| at a={format_real(self.point)} (regular side)"
        else:
            what = (
                f"{self.side} limit of |f(x) - f(a)| w(x) at a={format_real(self.point)} "
                f"({self.label} side)"
            )
        note = " [cascade not converged]" if self.low_confidence else ""
        return f"{verdict}: {what} = {format_real(self.measured)} vs tol {format_real(self.tolerance)}{note}"


@dataclass(frozen=True)
class MembershipVerdict:
    member: bool
    finite_norm: bool
    weighted_norm: float
    conditions: tuple
    scanned_points: tuple = ()

    @property
    def failures(self) -> list:
        return [c for c in self.conditions if not c.passed]

    def explain(self) -> list:
        lines = [
            f"weighted norm sup |f| w = {format_real(self.weighted_norm)} "
            f"({'finite' if self.finite_norm else 'INFINITE'})"
        ]
        lines += [c.explain() for c in self.conditions]
        if self.scanned_points:
            pts = ", ".join(format_real(p) for p in self.scanned_points)
            lines.append(f"jump scan added probe points: {pts}")
        lines.append("member" if self.member else "not a member")
        return lines

    def csv_rows(self, component: int = 0, header: bool = True) -> list:
        rows = [("component", "point", "side", "kind", "measured", "tolerance", "pass")] if header else []
        for c in self.conditions:
            rows.append(
                (
                    str(component),
                    format_real(c.point),
                    c.side,
                    c.kind,
                    format_real(c.measured),
                    format_real(c.tolerance),
                    "true" if c.passed else "false",
                )
            )
        return rows


@dataclass(frozen=True)
class VectorVerdict:
    member: bool
    component_verdicts: tuple

    def csv_rows(self) -> list:
        rows = [("component", "point", "side", "kind", "measured", "tolerance", "pass")]
        for j, v in enumerate(self.component_verdicts):
            rows += v.csv_rows(j, header=False)
        return rows


def _abs_diff(values: np.ndarray, ref: float) -> np.ndarray:
    with np.errstate(invalid="ignore"):
        d = np.abs(values - ref)
    d[values == ref] = 0.0
    return d


def _weighted(d: np.ndarray, wv: np.ndarray) -> np.ndarray:
    with np.errstate(invalid="ignore"):
        r = d * wv
    r[(d == 0) | (wv == 0)] = 0.0
    return r


def weighted_values(f: FuncExpr, w: ScalarWeight, x: np.ndarray) -> np.ndarray:
    """``|f(x)| w(x)`` with ``0 * inf = 0``."""
    return _weighted(np.abs(eval_array(f, x)), w.values(x))


def _locate_jump(f: FuncExpr, lo: float, hi: float, iterations: int = 80) -> tuple:
    """Bisect toward the larger half; returns the final bracket ``(lo, hi)``."""
    flo, fhi = eval_expr(f, lo), eval_expr(f, hi)
    for _ in range(iterations):
        m = 0.5 * (lo + hi)
        if m <= lo or m >= hi:
            break
        fm = eval_expr(f, m)
        left = abs(fm - flo) if fm != flo else 0.0
        right = abs(fhi - fm) if fhi != fm else 0.0
        if right >= left:
            lo, flo = m, fm
        else:
            hi, fhi = m, fm
    return lo, hi


def scan_jumps(
    f: FuncExpr, w: ScalarWeight, grid_points: np.ndarray, probed: Sequence[float],
    jump_cut: float = JUMP_CUT,
) -> list:
    """Locations of large weighted jumps of ``f`` between adjacent grid points
    that are not explained by an already probed point.

    A candidate is kept only if the jump survives bisection down to adjacent
    floats; steep but continuous stretches fade away under refinement.
    """
    fv = eval_array(f, grid_points)
    wv = w.values(grid_points)
    diff = _abs_diff(fv[1:], fv[:-1])
    jump = _weighted(diff, np.minimum(wv[1:], wv[:-1]))
    scale = w.interval.width
    probed = list(probed)
    found = []
    for k in np.flatnonzero(jump > jump_cut):
        lo, hi = float(grid_points[k]), float(grid_points[k + 1])
        if any(lo <= p <= hi for p in probed):
            continue
        a, b = _locate_jump(f, lo, hi)
        ends = np.array([a, b])
        final = _weighted(_abs_diff(eval_array(f, ends[1:]), eval_expr(f, a)), w.values(ends).min(keepdims=True))
        if not final[0] > jump_cut / 2:
            continue
        if all(abs(b - q) > 1e-9 * scale for q in probed + found):
            found.append(b)
    return sorted(found)


def check_scalar_membership(
    f: FuncExpr,
    w: ScalarWeight,
    report: Optional[SingularityReport] = None,
    tol: float = DEFAULT_TOL,
    params: LimitParams = DEFAULT_LIMITS,
    thresholds: Thresholds = DEFAULT_THRESHOLDS,
    jump_cut: float = JUMP_CUT,
    grid_n: Optional[int] = None,
) -> MembershipVerdict:
    """Decide ``f in H0`` for the weight ``w`` on the probed points.

    ``f`` must carry an explicit value at every singular point of the report,
    since the conditions there compare against ``f(a)``.
    """
    if report is None:
        report = classify_weight(w, params=params, thresholds=thresholds)
    elif report.weight != w:
        raise ReportMismatch("singularity report was produced for a different weight")
    iv = w.interval
    entries = {(e.point, e.side): e for e in report.entries}

    f_points = [p for p in merge_points(f.override_points, f.breakpoints()) if iv.contains(p)]
    for p in f_points:
        if (p, "left") not in entries and (p, "right") not in entries:
            for side, e in classify_point(w, p, params, thresholds, source="function").items():
                entries[(p, side)] = e

    probed = sorted({p for p, _ in entries})
    kw = {} if grid_n is None else {"n": grid_n}
    grid = make_grid(iv, scheme="refined", special_points=probed, **kw)
    scanned = scan_jumps(f, w, grid.points, probed, jump_cut)
    for p in scanned:
        for side, e in classify_point(w, p, params, thresholds, source="scan").items():
            entries[(p, side)] = e

    missing = [
        p for (p, _), e in entries.items()
        if e.label != REGULAR and e.source != "scan" and not f.has_override(p)
    ]
    if missing:
        raise MissingOverride(min(missing))

    conditions = []
    for (a, side), e in sorted(entries.items()):
        fa = eval_expr(f, a)
        if e.label == REGULAR:
            func = lambda x, fa=fa: _abs_diff(eval_array(f, x), fa)  # noqa: E731
            kind = CONTINUITY
        else:
            func = lambda x, fa=fa: _weighted(_abs_diff(eval_array(f, x), fa), w.values(x))  # noqa: E731
            kind = VANISHING
        est = window_cascade(func, iv, a, side, params, thresholds.tol_converge)
        measured = est.limsup_est
        passed = bool(est.converged and measured < tol)
        conditions.append(
            Condition(a, side, kind, measured, tol, passed, not est.converged, e.label, e.source)
        )

    # blow-ups at probed points show up in the cascades, not on the grid
    norm = float(weighted_values(f, w, grid.points).max())
    for a, side in entries:
        est = window_cascade(
            lambda x: weighted_values(f, w, x), iv, a, side, params, thresholds.tol_converge
        )
        norm = max(norm, est.limsup_est)
    finite = norm < thresholds.huge_cut
    member = finite and all(c.passed for c in conditions)
    return MembershipVerdict(member, finite, norm, tuple(conditions), tuple(scanned))


def check_vector_membership(
    F: Sequence[FuncExpr], W: VectorWeight, tol: float = DEFAULT_TOL, **kwargs
) -> VectorVerdict:
    if len(F) != len(W.components):
        raise ValueError(f"{len(F)} function components against {len(W.components)} weight components")
    verdicts = []
    for j, (f, w) in enumerate(zip(F, W.components)):
        try:
            verdicts.append(check_scalar_membership(f, w, tol=tol, **kwargs))
        except MissingOverride as exc:
            raise MissingOverride(exc.point, component=j) from exc
    return VectorVerdict(all(v.member for v in verdicts), tuple(verdicts))
