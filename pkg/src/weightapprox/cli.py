"""Batch driver: ``weightapprox JOB`` reads a job file and writes CSV reports.

Job file format::

    interval = -1 1
    grid = 4097 refined

    [weight]
    w0 = abs(x)^0.5
    points = 0
    tail = 1 0.5          # optional; makes the problem a truncated l2 one

    [function]
    f0 = sign(x)@{0: 0}

    [task]
    kind = approx         # classify | member | approx | converge | psi
    epsilon = 0.05
    max_degree = 512
    engine = auto
    out = results         # directory, relative to the job file

Exit codes: 0 success, 1 IO error, 2 invalid job, 3 non-member,
4 approximation failure, 5 invalid, unbounded or non-invertible weight.
"""

from __future__ import annotations

import argparse
import csv
import os
import re
import sys
from dataclasses import dataclass, field, replace
from typing import Optional

from . import __version__
from .errors import (
    CertificateInvalid,
    ComponentFailed,
    EvaluationDomainError,
    ExprSyntaxError,
    JobError,
    MaxDegreeExceeded,
    MissingOverride,
    WeightInvalid,
)
from .funcspec import GRID_SCHEMES, FuncExpr, Interval, format_real, parse_expr
from .membership import DEFAULT_TOL, check_vector_membership
from .scalar_approx import DEFAULT_MAX_DEGREE, ENGINES, divide_out_approx
from .vector_approx import VectorFunction, approx_vector, convergence_sweep
from .weights import (
    DEFAULT_THRESHOLDS,
    DimKind,
    ScalarWeight,
    TailCertificate,
    VectorWeight,
    classify_weight,
)

EXIT_OK = 0
EXIT_IO = 1
EXIT_INVALID_JOB = 2
EXIT_NON_MEMBER = 3
EXIT_APPROX_FAILED = 4
EXIT_WEIGHT_INVALID = 5

TASK_KINDS = ("classify", "member", "approx", "converge", "psi")
SECTIONS = ("weight", "function", "task")
_COMPONENT = {"weight": re.compile(r"w(\d+)$"), "function": re.compile(r"f(\d+)$")}
_KEYS = {
    None: ("interval", "grid"),
    "weight": ("points", "tail"),
    "function": (),
    "task": ("kind", "epsilon", "max_degree", "engine", "out"),
}


@dataclass(frozen=True)
class Entry:
    value: str
    line: int


@dataclass
class JobSpec:
    path: str
    interval: Interval
    grid_n: Optional[int]
    grid_scheme: str
    weights: VectorWeight
    functions: Optional[VectorFunction]
    kind: str
    epsilon: Optional[float]
    max_degree: int
    engine: Optional[str]
    out: str
    points: tuple = field(default=())


# ---------------------------------------------------------------------------
# loading


def _read_sections(text: str) -> dict:
    sections = {None: {}}
    current = None
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if line.startswith("["):
            m = re.fullmatch(r"\[\s*(\w+)\s*\]", line)
            if not m or m.group(1) not in SECTIONS:
                raise JobError(f"unknown section header {line!r}", line=lineno)
            current = m.group(1)
            if current in sections:
                raise JobError("section appears twice", section=current, line=lineno)
            sections[current] = {}
            continue
        if "=" not in line:
            raise JobError("expected 'key = value'", section=current, line=lineno)
        key, value = (s.strip() for s in line.split("=", 1))
        known = key in _KEYS[current] or (current in _COMPONENT and _COMPONENT[current].match(key))
        if not known:
            raise JobError("unknown key", section=current, key=key, line=lineno)
        if key in sections[current]:
            raise JobError("key given twice", section=current, key=key, line=lineno)
        if not value:
            raise JobError("empty value", section=current, key=key, line=lineno)
        sections[current][key] = Entry(value, lineno)
    return sections


def _floats(entry: Entry, section, key, count=None) -> list:
    try:
        vals = [float(tok) for tok in entry.value.split()]
    except ValueError:
        raise JobError(f"expected numbers, got {entry.value!r}", section, key, entry.line) from None
    if count is not None and len(vals) != count:
        raise JobError(f"expected {count} numbers, got {len(vals)}", section, key, entry.line)
    return vals


def _expr(entry: Entry, section, key) -> FuncExpr:
    try:
        return parse_expr(entry.value)
    except ExprSyntaxError as exc:
        raise JobError(str(exc), section, key, entry.line) from None


def _components(sec: dict, section: str) -> list:
    found = {}
    for key, entry in sec.items():
        m = _COMPONENT[section].match(key)
        if m:
            found[int(m.group(1))] = (key, entry)
    if not found:
        prefix = "w" if section == "weight" else "f"
        raise JobError("no components given", section, f"{prefix}0")
    expected = list(range(len(found)))
    if sorted(found) != expected:
        missing = min(set(expected) - set(found))
        prefix = "w" if section == "weight" else "f"
        raise JobError("component indices must be 0, 1, 2, ...", section, f"{prefix}{missing}")
    return [(found[j][0], found[j][1], _expr(found[j][1], section, found[j][0])) for j in expected]


def load_job(path: str) -> JobSpec:
    """Parse and validate a job file; raises ``OSError`` or ``JobError``."""
    with open(path, encoding="utf-8") as fh:
        text = fh.read()
    sections = _read_sections(text)
    top = sections[None]

    if "interval" not in top:
        raise JobError("missing key", key="interval")
    lo, hi = _floats(top["interval"], None, "interval", 2)
    try:
        interval = Interval(lo, hi)
    except ValueError as exc:
        raise JobError(str(exc), key="interval", line=top["interval"].line) from None

    grid_n, scheme = None, "refined"
    if "grid" in top:
        toks = top["grid"].value.split()
        if len(toks) != 2 or not toks[0].isdigit() or toks[1] not in GRID_SCHEMES:
            raise JobError(
                f"expected '<n> <scheme>' with scheme in {GRID_SCHEMES}", key="grid", line=top["grid"].line
            )
        grid_n, scheme = int(toks[0]), toks[1]
        if grid_n < 3:
            raise JobError("grid needs at least 3 points", key="grid", line=top["grid"].line)

    if "task" not in sections or "kind" not in sections["task"]:
        raise JobError("missing key", section="task", key="kind")
    task = sections["task"]
    kind = task["kind"].value
    if kind not in TASK_KINDS:
        raise JobError(f"kind must be one of {TASK_KINDS}", "task", "kind", task["kind"].line)

    if "weight" not in sections:
        raise JobError("missing section", section="weight")
    wsec = sections["weight"]
    wcomps = _components(wsec, "weight")
    points = ()
    if "points" in wsec:
        points = tuple(_floats(wsec["points"], "weight", "points"))
        for p in points:
            if not interval.contains(p):
                raise JobError(
                    f"declared point {format_real(p)} outside the interval", "weight", "points", wsec["points"].line
                )
    dim = DimKind.finite(len(wcomps))
    if "tail" in wsec:
        C, r = _floats(wsec["tail"], "weight", "tail", 2)
        try:
            cert = TailCertificate(C, r, support_end=len(wcomps) - 1)
        except ValueError as exc:
            raise JobError(str(exc), "weight", "tail", wsec["tail"].line) from None
        dim = DimKind.truncated_l2(len(wcomps) - 1, cert)
    W = VectorWeight(tuple(ScalarWeight(e, interval, points) for _, _, e in wcomps), dim)

    F = None
    if kind != "classify":
        if "function" not in sections:
            raise JobError("missing section", section="function")
        fcomps = _components(sections["function"], "function")
        if len(fcomps) != len(wcomps):
            key, entry, _ = fcomps[-1]
            raise JobError(
                f"{len(fcomps)} function components against {len(wcomps)} weight components",
                "function", key, entry.line,
            )
        F = VectorFunction(tuple(e for _, _, e in fcomps), dim)

    eps = None
    if "epsilon" in task:
        (eps,) = _floats(task["epsilon"], "task", "epsilon", 1)
        if not eps > 0:
            raise JobError("epsilon must be positive", "task", "epsilon", task["epsilon"].line)
    elif kind in ("approx", "psi"):
        raise JobError("missing key", section="task", key="epsilon")

    max_degree = DEFAULT_MAX_DEGREE
    if "max_degree" in task:
        v = task["max_degree"].value
        if not v.isdigit():
            raise JobError("expected a nonnegative integer", "task", "max_degree", task["max_degree"].line)
        max_degree = int(v)

    engine = None
    if "engine" in task:
        engine = task["engine"].value
        allowed = ("chebyshev", "bernstein") if kind == "psi" else ENGINES
        if engine not in allowed:
            raise JobError(f"engine must be one of {allowed}", "task", "engine", task["engine"].line)

    base = os.path.dirname(os.path.abspath(path))
    out = task["out"].value if "out" in task else "."
    out = out if os.path.isabs(out) else os.path.join(base, out)
    return JobSpec(path, interval, grid_n, scheme, W, F, kind, eps, max_degree, engine, out, points)


# ---------------------------------------------------------------------------
# running


def _write_csv(path: str, rows) -> None:
    with open(path, "w", encoding="utf-8", newline="") as fh:
        csv.writer(fh, lineterminator="\n").writerows(rows)


def _classify(job, thresholds, explain, say) -> int:
    rows = None
    for j, w in enumerate(job.weights.components):
        rep = classify_weight(w, thresholds=thresholds)
        part = rep.csv_rows()
        if rows is None:
            rows = [part[0] + ("component",)]
        rows += [r + (str(j),) for r in part[1:]]
        if explain:
            for e in rep.entries:
                est = e.estimate
                say(
                    f"w{j} at {format_real(e.point)} {e.side}: {e.label} "
                    f"(liminf {format_real(est.liminf_est)}, limsup {format_real(est.limsup_est)}"
                    f"{', not converged' if not est.converged else ''})"
                )
    _write_csv(os.path.join(job.out, "classify.csv"), rows)
    return EXIT_OK


def _member(job, thresholds, tol, explain, say) -> int:
    verdict = check_vector_membership(
        job.functions.components, job.weights, tol=tol, thresholds=thresholds, grid_n=job.grid_n
    )
    _write_csv(os.path.join(job.out, "membership.csv"), verdict.csv_rows())
    if explain:
        for j, v in enumerate(verdict.component_verdicts):
            for line in v.explain():
                say(f"f{j}: {line}")
    say("member" if verdict.member else "not a member")
    return EXIT_OK if verdict.member else EXIT_NON_MEMBER


def _approx(job, thresholds, explain, say) -> int:
    try:
        P, cert = approx_vector(
            job.functions, job.weights, job.epsilon, engine=job.engine or "auto",
            max_degree=job.max_degree, grid_n=job.grid_n, thresholds=thresholds, scheme=job.grid_scheme,
        )
    except ComponentFailed as exc:
        say(str(exc))
        cause = exc.cause
        if explain and isinstance(cause, MaxDegreeExceeded):
            for d, e in cause.trace:
                say(f"  degree {d}: weighted error {format_real(e)}")
            if cause.diagnosis:
                say(f"  {cause.diagnosis}")
        return EXIT_APPROX_FAILED
    except CertificateInvalid as exc:
        say(f"certificate invalid: {exc}")
        return EXIT_APPROX_FAILED
    _write_csv(os.path.join(job.out, "polynomial.csv"), P.csv_rows())
    _write_csv(os.path.join(job.out, "certificate.csv"), cert.csv_rows())
    say(
        f"total weighted error {format_real(cert.total_weighted_error)} "
        f"<= bound {format_real(cert.bound_value)}"
    )
    return EXIT_OK


def _converge(job, thresholds, explain, say) -> int:
    rows = convergence_sweep(
        job.functions, job.weights, max_degree=job.max_degree, engine=job.engine or "chebyshev",
        eps=job.epsilon, grid_n=job.grid_n, thresholds=thresholds, scheme=job.grid_scheme,
    )
    n = len(job.functions)
    out = [("degree",) + tuple(f"error_{j}" for j in range(n)) + ("total_error",)]
    for r in rows:
        out.append((str(r.degree),) + tuple(format_real(e) for e in r.component_errors) + (format_real(r.total_error),))
    _write_csv(os.path.join(job.out, "converge.csv"), out)
    if explain:
        for r in rows:
            say(f"degree {r.degree}: total {format_real(r.total_error)}")
    return EXIT_OK


def _psi(job, thresholds, explain, say) -> int:
    out = [("component", "degree", "weighted_error", "unweighted_error", "identity_gap")]
    for j, (f, w) in enumerate(zip(job.functions.components, job.weights.components)):
        try:
            r = divide_out_approx(
                f, w, job.epsilon, engine=job.engine or "chebyshev", max_degree=job.max_degree,
                grid_n=job.grid_n,
            )
        except MaxDegreeExceeded as exc:
            say(f"component {j}: {exc}")
            return EXIT_APPROX_FAILED
        out.append(
            (str(j), str(r.degree), format_real(r.weighted_error), format_real(r.unweighted_error),
             format_real(r.identity_gap))
        )
        if explain:
            say(f"f{j}: |f - q/w|_w = {format_real(r.weighted_error)}, |fw - q| = {format_real(r.unweighted_error)}")
    _write_csv(os.path.join(job.out, "psi.csv"), out)
    return EXIT_OK


def run_job(job: JobSpec, tol_zero=None, tol_limit=None, explain=False, say=print) -> int:
    """Dispatch a loaded job; returns the exit status.  Weight errors surface as exceptions."""
    thresholds = DEFAULT_THRESHOLDS if tol_zero is None else replace(DEFAULT_THRESHOLDS, tol_zero=tol_zero)
    os.makedirs(job.out, exist_ok=True)
    if job.kind == "classify":
        return _classify(job, thresholds, explain, say)
    if job.kind == "member":
        return _member(job, thresholds, DEFAULT_TOL if tol_limit is None else tol_limit, explain, say)
    if job.kind == "approx":
        return _approx(job, thresholds, explain, say)
    if job.kind == "converge":
        return _converge(job, thresholds, explain, say)
    return _psi(job, thresholds, explain, say)


def _positive(text: str) -> float:
    v = float(text)
    if not v > 0:
        raise argparse.ArgumentTypeError("must be positive")
    return v


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="weightapprox", description="Weighted polynomial approximation jobs.")
    ap.add_argument("job", help="path to the job file")
    ap.add_argument("--tol-zero", type=_positive, help="liminf threshold separating regular from singular sides")
    ap.add_argument("--tol-limit", type=_positive, help="tolerance for the one-sided limit conditions of membership")
    ap.add_argument("--grid-n", type=int, help="override the number of base grid points")
    ap.add_argument("--explain", action="store_true", help="print the reasoning behind each verdict")
    ap.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    return ap


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    say = print

    def err(msg):
        print(f"weightapprox: {msg}", file=sys.stderr)

    try:
        job = load_job(args.job)
        if args.grid_n is not None:
            if args.grid_n < 3:
                raise JobError("--grid-n needs at least 3 points")
            job.grid_n = args.grid_n
        return run_job(job, args.tol_zero, args.tol_limit, args.explain, say)
    except OSError as exc:
        err(f"I/O error: {exc}")
        return EXIT_IO
    except WeightInvalid as exc:
        err(f"weight error: {exc}")
        return EXIT_WEIGHT_INVALID
    except (MaxDegreeExceeded, ComponentFailed) as exc:
        err(str(exc))
        return EXIT_APPROX_FAILED
    except (JobError, MissingOverride, EvaluationDomainError, ValueError) as exc:
        err(f"invalid job: {exc}")
        return EXIT_INVALID_JOB


if __name__ == "__main__":
    sys.exit(main())
