"""Approximation of vector-valued functions coordinate by coordinate.

A vector function is given by its coordinates ``f_j`` with respect to a fixed
orthonormal system, and an admissible-star weight by its coordinates ``w_j``.
The weighted norm at ``t`` is the Euclidean norm of ``(f_j(t) w_j(t))_j``.
Each coordinate is approximated to its own budget and the budgets are chosen so
the quadrature sum stays below the overall target.  Infinitely many
coordinates are handled by truncation under a declared geometric decay bound.
"""

from __future__ import annotations

import functools
import math
from dataclasses import dataclass
from typing import Callable, Optional

import numpy as np

from .errors import (
    CertificateInvalid,
    ComponentFailed,
    EvaluationDomainError,
    MaxDegreeExceeded,
    WeightUnbounded,
)
from .funcspec import FuncExpr, Grid, eval_array, format_real, make_grid, merge_points
from .scalar_approx import (
    DEFAULT_MAX_DEGREE,
    ApproxResult,
    ScalarProblem,
    approx_scalar_weighted,
    power_sweep,
)
from .weights import (
    DEFAULT_THRESHOLDS,
    DimKind,
    TailCertificate,
    Thresholds,
    VectorWeight,
    check_bounded,
    classify_weight,
)


@dataclass(frozen=True)
class VectorFunction:
    components: tuple
    dim_kind: Optional[DimKind] = None

    def __post_init__(self):
        comps = tuple(self.components)
        if not comps:
            raise ValueError("vector function needs at least one component")
        object.__setattr__(self, "components", comps)
        dk = self.dim_kind or DimKind.finite(len(comps))
        if dk.length != len(comps):
            raise ValueError(f"dimension kind expects {dk.length} components, got {len(comps)}")
        object.__setattr__(self, "dim_kind", dk)

    def __len__(self):
        return len(self.components)

    @classmethod
    def truncated(
        cls, component: Callable[[int], FuncExpr], cert: TailCertificate, tail_epsilon: float
    ) -> "VectorFunction":
        """Keep coordinates ``0..N`` with ``N = choose_truncation(cert, tail_epsilon)``."""
        N = choose_truncation(cert, tail_epsilon)
        return cls(tuple(component(j) for j in range(N + 1)), DimKind.truncated_l2(N, cert))


@dataclass(frozen=True)
class VectorPolynomial:
    components: tuple

    def __len__(self):
        return len(self.components)

    def __call__(self, t) -> np.ndarray:
        return np.array([p(t) for p in self.components])

    def csv_rows(self) -> list:
        width = max(p.degree for p in self.components) + 1
        header = ("component", "basis", "lo", "hi") + tuple(f"c{k}" for k in range(width))
        return [header] + [(str(j),) + p.csv_row() for j, p in enumerate(self.components)]


@dataclass(frozen=True)
class ApproxCertificate:
    budgets: tuple
    component_errors: tuple
    degrees: tuple
    total_weighted_error: float
    bound_kind: str  # "finite" or "infinite"
    bound_value: float
    tail_contribution: float = 0.0

    def csv_rows(self) -> list:
        rows = [("component", "budget", "measured_error", "degree")]
        for j, (b, e, d) in enumerate(zip(self.budgets, self.component_errors, self.degrees)):
            rows.append((str(j), format_real(b), format_real(e), str(d)))
        rows.append(("total_measured", "bound_value", "tail_contribution"))
        rows.append(
            (
                format_real(self.total_weighted_error),
                format_real(self.bound_value),
                format_real(self.tail_contribution),
            )
        )
        return rows


# ---------------------------------------------------------------------------
# norms


def _components(F) -> tuple:
    return F.components if isinstance(F, (VectorFunction, VectorPolynomial)) else tuple(F)


def weighted_products(F, W: VectorWeight, x: np.ndarray, P=None) -> np.ndarray:
    """Array of ``|f_j - p_j| w_j`` (or ``|f_j| w_j``) with ``0 * inf = 0``; one row per coordinate."""
    fs = _components(F)
    if len(fs) != len(W.components):
        raise ValueError(f"{len(fs)} function components against {len(W.components)} weight components")
    ps = _components(P) if P is not None else (None,) * len(fs)
    if len(ps) != len(fs):
        raise ValueError("polynomial and function component counts differ")
    rows = []
    for f, w, p in zip(fs, W.components, ps):
        fv = eval_array(f, x)
        if p is not None:
            pv = p(x)
            with np.errstate(invalid="ignore"):
                d = np.abs(fv - pv)
            d[fv == pv] = 0.0
        else:
            d = np.abs(fv)
        wv = w.values(x)
        with np.errstate(invalid="ignore"):
            r = d * wv
        r[(d == 0) | (wv == 0)] = 0.0
        rows.append(r)
    return np.vstack(rows)


def _pointwise_norm(prod: np.ndarray) -> np.ndarray:
    with np.errstate(over="ignore"):
        return np.sqrt(np.sum(prod * prod, axis=0))


def weighted_G_norm(F, W: VectorWeight, g, P=None) -> float:
    """``max_t sqrt(sum_j (f_j(t) w_j(t))^2)`` over the grid, of ``F - P`` when ``P`` is given."""
    x = g.points if isinstance(g, Grid) else np.asarray(g, dtype=float)
    return float(_pointwise_norm(weighted_products(F, W, x, P)).max())


def parseval_crosscheck(F, W: VectorWeight, g) -> float:
    """Largest disagreement between two independent evaluations of the pointwise norm.

    One path squares and sums the coordinate products in one vectorized
    reduction; the other folds them with ``hypot`` one coordinate at a time.
    """
    x = g.points if isinstance(g, Grid) else np.asarray(g, dtype=float)
    prod = weighted_products(F, W, x)
    a = _pointwise_norm(prod)
    b = functools.reduce(np.hypot, list(prod), np.zeros(x.shape))
    same = a == b
    with np.errstate(invalid="ignore"):
        d = np.abs(a - b)
    d[same] = 0.0
    return float(d.max())


# ---------------------------------------------------------------------------
# budgets and truncation


def allocate_budgets(eps: float, dim_kind: DimKind) -> tuple:
    if not eps > 0:
        raise ValueError("eps must be positive")
    if dim_kind.kind == "finite":
        return (eps / math.sqrt(dim_kind.n),) * dim_kind.n
    return tuple(eps / (j + 1) for j in range(dim_kind.n + 1))


def tail_bound(cert: TailCertificate, N: int) -> float:
    """Sup-norm bound ``C r^(N+1) / sqrt(1 - r^2)`` of the coordinates beyond ``N``."""
    if cert.r == 0:
        return 0.0
    return cert.C * cert.r ** (N + 1) / math.sqrt(1.0 - cert.r**2)


def choose_truncation(cert: TailCertificate, eps_tail: float) -> int:
    """Smallest ``N`` whose geometric tail bound is at most ``eps_tail``."""
    if not eps_tail > 0:
        raise ValueError("eps_tail must be positive")
    if cert.r == 0:
        if cert.support_end is None:
            raise ValueError("r = 0 needs a declared support end")
        return int(cert.support_end)
    N = max(0, math.ceil(math.log(eps_tail * math.sqrt(1 - cert.r**2) / cert.C) / math.log(cert.r)) - 1)
    # the closed form can be off by one in floating point
    while N > 0 and tail_bound(cert, N - 1) <= eps_tail:
        N -= 1
    while tail_bound(cert, N) > eps_tail:
        N += 1
    return N


def budget_factor(N: int) -> float:
    """``1 + sqrt(sum_{j<=N} 1/(j+1)^2 + 1/(N+1))``; the last term bounds the rest of the series."""
    s = math.fsum(1.0 / (j + 1) ** 2 for j in range(N + 1))
    return 1.0 + math.sqrt(s + 1.0 / (N + 1))


# ---------------------------------------------------------------------------
# assembly


def shared_grid(
    F, W: VectorWeight, reports, grid_n: Optional[int] = None, scheme: str = "refined"
) -> Grid:
    iv = W.components[0].interval
    specials = []
    for f, rep in zip(_components(F), reports):
        specials.append(rep.points)
        specials.append([p for p in f.override_points if iv.contains(p)])
        specials.append([p for p in f.breakpoints() if iv.contains(p)])
    kw = {} if grid_n is None else {"n": grid_n}
    return make_grid(iv, scheme=scheme, special_points=merge_points(*specials), **kw)


def _check_kinds(F: VectorFunction, W: VectorWeight):
    if len(F) != len(W):
        raise ValueError(f"{len(F)} function components against {len(W)} weight components")
    if F.dim_kind.kind != W.dim_kind.kind:
        raise ValueError(f"dimension kinds differ: {F.dim_kind.kind} vs {W.dim_kind.kind}")
    intervals = {w.interval for w in W.components}
    if len(intervals) != 1:
        raise ValueError("weight components live on different intervals")


def approx_vector(
    F: VectorFunction,
    W: VectorWeight,
    eps: float,
    engine: str = "auto",
    max_degree: int = DEFAULT_MAX_DEGREE,
    grid_n: Optional[int] = None,
    thresholds: Thresholds = DEFAULT_THRESHOLDS,
    scheme: str = "refined",
):
    """Approximate every coordinate to its budget and certify the total.

    Returns ``(VectorPolynomial, ApproxCertificate)``.  The total is measured on
    a grid shared by all coordinates, never derived from the budgets.
    """
    _check_kinds(F, W)
    budgets = allocate_budgets(eps, F.dim_kind)
    reports = [classify_weight(w, thresholds=thresholds) for w in W.components]
    sups = []
    for j, (w, rep) in enumerate(zip(W.components, reports)):
        b = check_bounded(w, rep)
        if not b.bounded:
            raise WeightUnbounded(f"weight component {j} ({w.expr}) is not essentially bounded", component=j)
        sups.append(b.esssup_estimate)
    grid = shared_grid(F, W, reports, grid_n, scheme)
    results: list[ApproxResult] = []
    for j, (f, w, rep, b) in enumerate(zip(F.components, W.components, reports, budgets)):
        try:
            results.append(
                approx_scalar_weighted(
                    f, w, b, engine=engine, max_degree=max_degree, report=rep, grid=grid,
                    thresholds=thresholds,
                )
            )
        except (MaxDegreeExceeded, EvaluationDomainError) as exc:
            raise ComponentFailed(j, exc) from exc
    P = VectorPolynomial(tuple(r.poly for r in results))
    total = weighted_G_norm(F, W, grid, P)
    errors = tuple(r.weighted_error for r in results)

    dk = F.dim_kind
    if dk.kind == "finite":
        kind, tail, bound = "finite", 0.0, eps
    else:
        declared = W.dim_kind.tail_weight_bound
        top = max(sups)
        if declared is None:
            declared = top
        elif declared > top:
            raise CertificateInvalid(
                f"declared tail weight bound {format_real(declared)} exceeds the largest "
                f"coordinate esssup {format_real(top)}"
            )
        kind = "infinite"
        tail = tail_bound(dk.tail, dk.n) * declared
        bound = eps * budget_factor(dk.n) + tail

    cert = ApproxCertificate(budgets, errors, tuple(r.degree for r in results), total, kind, bound, tail)
    bad = [j for j, (e, b) in enumerate(zip(errors, budgets)) if not e <= b]
    if bad:
        raise CertificateInvalid(f"component {bad[0]} exceeds its budget")
    if not total <= bound:
        raise CertificateInvalid(
            f"measured total {format_real(total)} exceeds the bound {format_real(bound)}"
        )
    return P, cert


@dataclass(frozen=True)
class SweepRow:
    degree: int
    component_errors: tuple
    total_error: float


def convergence_sweep(
    F: VectorFunction,
    W: VectorWeight,
    max_degree: int = DEFAULT_MAX_DEGREE,
    engine: str = "chebyshev",
    eps: Optional[float] = None,
    grid_n: Optional[int] = None,
    thresholds: Thresholds = DEFAULT_THRESHOLDS,
    scheme: str = "refined",
) -> list:
    """Errors at every degree of the power-of-two sweep, without stopping at success."""
    _check_kinds(F, W)
    reports = [classify_weight(w, thresholds=thresholds) for w in W.components]
    grid = shared_grid(F, W, reports, grid_n, scheme)
    problems = [
        ScalarProblem(f, w, eps, rep, grid, thresholds=thresholds)
        for f, w, rep in zip(F.components, W.components, reports)
    ]
    rows = []
    for n in power_sweep(max_degree):
        built = [pr.build(n, engine, eps) for pr in problems]
        P = VectorPolynomial(tuple(p for p, _ in built))
        total = weighted_G_norm(F, W, grid, P)
        rows.append(SweepRow(n, tuple(e for _, e in built), total))
    return rows
