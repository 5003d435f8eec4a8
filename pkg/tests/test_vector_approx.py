import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from weightapprox.errors import CertificateInvalid, ComponentFailed, WeightUnbounded
from weightapprox.funcspec import Interval, make_grid, parse_expr
from weightapprox.scalar_approx import approx_scalar_weighted
from weightapprox.vector_approx import (
    VectorFunction,
    allocate_budgets,
    approx_vector,
    budget_factor,
    choose_truncation,
    convergence_sweep,
    parseval_crosscheck,
    tail_bound,
    weighted_G_norm,
)
from weightapprox.weights import DimKind, ScalarWeight, TailCertificate, VectorWeight

SYM = Interval(-1.0, 1.0)
UNIT = Interval(0.0, 1.0)


def W(*texts, iv=SYM, dim=None):
    return VectorWeight(tuple(ScalarWeight(parse_expr(t), iv) for t in texts), dim)


def F(*texts, dim=None):
    return VectorFunction(tuple(parse_expr(t) for t in texts), dim)


def geometric_family(cert, eps_tail):
    return VectorFunction.truncated(lambda j: parse_expr(f"{2.0 ** -j}*cos({j}*x)"), cert, eps_tail)


class TestNorm:
    def test_single_component_is_scalar_norm(self):
        g = make_grid(SYM, n=1001)
        f, w = "sign(x) @ {0: 0}", "abs(x)"
        x = g.points
        assert weighted_G_norm(F(f), W(w), g) == np.max(np.abs(np.sign(x)) * np.abs(x))

    def test_diagonal(self):
        assert weighted_G_norm(F("x", "x"), W("1", "1", iv=UNIT), make_grid(UNIT, n=101)) == math.sqrt(2)

    def test_dense_oracle(self):
        g = make_grid(SYM, n=10**5)
        got = weighted_G_norm(F("sign(x) @ {0: 0}", "x^2"), W("abs(x)", "1"), g)
        x = np.linspace(-1, 1, 10**5)
        assert got == pytest.approx(np.max(np.sqrt(x**2 + x**4)), rel=1e-15)
        assert got == pytest.approx(math.sqrt(2))

    def test_length_mismatch(self):
        with pytest.raises(ValueError):
            weighted_G_norm(F("x"), W("1", "1"), make_grid(SYM, n=11))

    def test_infinite(self):
        g = make_grid(SYM, n=11)
        assert weighted_G_norm(F("1 @ {0: 2}"), W("1/abs(x)"), g) == math.inf


class TestParseval:
    def test_single_component(self):
        assert parseval_crosscheck(F("sin(x)"), W("2 + x"), make_grid(SYM, n=513)) == 0.0

    def test_three_four_five(self):
        g = make_grid(SYM, n=11)
        assert weighted_G_norm(F("3", "4"), W("1", "1"), g) == 5.0
        assert parseval_crosscheck(F("3", "4"), W("1", "1"), g) == 0.0

    @settings(max_examples=25, deadline=None)
    @given(st.lists(st.lists(st.floats(-3, 3), min_size=1, max_size=5), min_size=8, max_size=8),
           st.lists(st.floats(0.1, 4), min_size=8, max_size=8))
    def test_random_polynomials(self, coeffs, scales):
        fs = [" + ".join(f"({c})*x^{k}" for k, c in enumerate(cs)) for cs in coeffs]
        ws = [f"{s} + sin({k + 1}*x)^2" for k, s in enumerate(scales)]
        assert parseval_crosscheck(F(*fs), W(*ws), make_grid(SYM, n=257)) < 1e-12


class TestBudgets:
    def test_finite(self):
        assert allocate_budgets(0.1, DimKind.finite(4)) == (0.05,) * 4

    def test_truncated(self):
        b = allocate_budgets(0.1, DimKind.truncated_l2(2, TailCertificate(1, 0.5)))
        assert b == pytest.approx((0.1, 0.05, 0.1 / 3))

    @pytest.mark.parametrize("n", [1, 3, 7, 100])
    def test_finite_soundness(self, n):
        b = allocate_budgets(0.3, DimKind.finite(n))
        assert math.sqrt(math.fsum(x * x for x in b)) == pytest.approx(0.3, rel=1e-12)

    def test_factor_against_partial_sum(self):
        partial = math.fsum(1.0 / (j + 1) ** 2 for j in range(10**6 + 1))
        assert 1 + math.sqrt(partial) == pytest.approx(2.28255, abs=1e-5)
        assert budget_factor(10**6) == pytest.approx(2.28255, abs=1e-5)
        # the remainder term keeps every truncated factor above the limit
        assert all(budget_factor(N) >= 1 + math.sqrt(math.pi**2 / 6) for N in (0, 1, 6, 50))


class TestTruncation:
    def test_half(self):
        cert = TailCertificate(1.0, 0.5)
        assert choose_truncation(cert, 0.01) == 6
        assert tail_bound(cert, 6) == pytest.approx(0.00902, abs=1e-5)
        assert tail_bound(cert, 5) == pytest.approx(0.01804, abs=1e-5)

    def test_partial_summation_oracle(self):
        cert = TailCertificate(1.0, 0.5)
        for N in (5, 6):
            direct = math.sqrt(math.fsum(0.5 ** (2 * j) for j in range(N + 1, 2000)))
            assert direct == pytest.approx(tail_bound(cert, N), rel=1e-12)

    def test_finite_support(self):
        assert choose_truncation(TailCertificate(1.0, 0.0, support_end=7), 1e-9) == 7

    def test_loose_target(self):
        cert = TailCertificate(1.0, 0.5)
        assert choose_truncation(cert, 2.0) == 0
        assert tail_bound(cert, 0) == pytest.approx(0.577, abs=1e-3)

    @settings(max_examples=60, deadline=None)
    @given(st.floats(0.01, 10), st.floats(0.01, 0.99), st.floats(1e-8, 5), st.floats(1e-8, 5))
    def test_monotone_and_minimal(self, C, r, e1, e2):
        cert = TailCertificate(C, r)
        lo, hi = sorted((e1, e2))
        assert choose_truncation(cert, hi) <= choose_truncation(cert, lo)
        N = choose_truncation(cert, lo)
        assert tail_bound(cert, N) <= lo
        if N > 0:
            assert tail_bound(cert, N - 1) > lo


class TestApproxVector:
    def test_three_components(self):
        P, cert = approx_vector(F("x", "x^2", "abs(x)"), W("1", "1", "1"), 0.05)
        assert cert.budgets == pytest.approx((0.05 / math.sqrt(3),) * 3)
        assert cert.budgets[0] == pytest.approx(0.02887, abs=1e-5)
        assert cert.total_weighted_error < 0.05
        assert all(e <= b for e, b in zip(cert.component_errors, cert.budgets))
        # independent residual on a fresh dense grid
        x = np.linspace(-1, 1, 10**5)
        res = np.sqrt((P.components[0](x) - x) ** 2 + (P.components[1](x) - x**2) ** 2
                      + (P.components[2](x) - np.abs(x)) ** 2)
        assert res.max() < 0.05

    def test_quadrature_dominance(self):
        _, cert = approx_vector(F("sin(3*x)", "sign(x) @ {0: 0}"), W("1", "abs(x)"), 0.1)
        quad = math.sqrt(math.fsum(e * e for e in cert.component_errors))
        assert cert.total_weighted_error <= quad + 1e-10

    def test_failing_component(self):
        with pytest.raises(ComponentFailed) as info:
            approx_vector(F("x", "abs(x)", "sign(x) @ {0: 0}"), W("1", "1", "1"), 0.5, max_degree=64)
        assert info.value.index == 2

    def test_unbounded_component(self):
        with pytest.raises(WeightUnbounded) as info:
            approx_vector(F("x", "x"), W("1", "1/abs(x) @ {0: 1}"), 0.1)
        assert info.value.component == 1

    def test_truncated_l2(self):
        cert = TailCertificate(1.0, 0.5)
        Fv = geometric_family(cert, 0.01)
        N = Fv.dim_kind.n
        assert N == 6
        Wv = W(*["1"] * (N + 1), dim=DimKind.truncated_l2(N, cert))
        _, c = approx_vector(Fv, Wv, 0.1)
        assert c.tail_contribution == pytest.approx(tail_bound(cert, 6))
        assert c.total_weighted_error <= 0.1 * 2.2826 + c.tail_contribution
        assert c.bound_value == pytest.approx(0.1 * budget_factor(6) + c.tail_contribution)

    def test_declared_tail_weight_too_large(self):
        cert = TailCertificate(1.0, 0.5)
        Fv = geometric_family(cert, 0.5)
        N = Fv.dim_kind.n
        Wv = W(*["1"] * (N + 1), dim=DimKind.truncated_l2(N, cert, tail_weight_bound=3.0))
        with pytest.raises(CertificateInvalid):
            approx_vector(Fv, Wv, 0.1)

    def test_kind_mismatch(self):
        cert = TailCertificate(1.0, 0.5)
        with pytest.raises(ValueError):
            approx_vector(F("x"), W("1", dim=DimKind.truncated_l2(0, cert)), 0.1)

    @pytest.mark.parametrize("f,w", [("sign(x) @ {0: 0}", "abs(x)"), ("abs(x)", "1")])
    def test_reduces_to_scalar(self, f, w):
        P, cert = approx_vector(F(f), W(w), 0.05)
        r = approx_scalar_weighted(parse_expr(f), ScalarWeight(parse_expr(w), SYM), 0.05)
        assert P.components[0] == r.poly
        assert cert.component_errors[0] == r.weighted_error

    def test_certificate_csv(self):
        _, cert = approx_vector(F("x", "x^2"), W("1", "1"), 0.05)
        rows = cert.csv_rows()
        assert rows[0] == ("component", "budget", "measured_error", "degree")
        assert rows[3] == ("total_measured", "bound_value", "tail_contribution")
        assert len(rows) == 5


def test_convergence_sweep_matches_norm():
    Fv, Wv = F("abs(x)", "x^3"), W("1", "2")
    rows = convergence_sweep(Fv, Wv, max_degree=64)
    assert [r.degree for r in rows] == [4, 8, 16, 32, 64]
    errs = [r.total_error for r in rows]
    assert errs[-1] < errs[0]
    for r in rows:
        assert r.total_error <= math.sqrt(sum(e * e for e in r.component_errors)) + 1e-12
