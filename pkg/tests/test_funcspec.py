import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from weightapprox.errors import EvaluationDomainError, ExprSyntaxError, UnknownIdentifierError
from weightapprox.funcspec import (
    BinOp,
    Call,
    Const,
    FuncExpr,
    Interval,
    Pow,
    Var,
    eval_array,
    eval_expr,
    format_real,
    make_grid,
    parse_expr,
    sample,
)


class TestParse:
    def test_power_of_abs(self):
        e = parse_expr("abs(x)^0.5")
        assert e.root == Pow(Call("abs", (Var(),)), 0.5)
        assert e.overrides == ()

    def test_override_clause(self):
        e = parse_expr("sign(x) @ {0: 0}")
        assert e.root == Call("sign", (Var(),))
        assert e.override_map == {0.0: 0.0}

    def test_unbalanced_paren(self):
        with pytest.raises(ExprSyntaxError) as info:
            parse_expr("abs(x")
        assert info.value.offset == 5
        assert info.value.expected == ")"

    def test_unknown_identifier(self):
        with pytest.raises(UnknownIdentifierError):
            parse_expr("tan(x)")

    def test_precedence(self):
        e = parse_expr("1 + 2*x^2")
        assert e(3.0) == 19.0

    def test_min_max(self):
        e = parse_expr("max(x, 0) - min(x, 0)")
        assert e(-2.0) == 2.0 and e(3.0) == 3.0

    def test_infinite_override(self):
        assert parse_expr("1/abs(x) @ {0: inf}")(0.0) == math.inf

    @pytest.mark.parametrize("text", ["", "x +", "x @ {0 0}", "x @ {0: 1, 0: 2}", "(x))"])
    def test_syntax_errors(self, text):
        with pytest.raises(ExprSyntaxError):
            parse_expr(text)

    def test_piecewise(self):
        e = parse_expr("piecewise(-1, 0, x, 0.5, 1)")
        assert [e(t) for t in (-0.5, 0.0, 0.25, 0.5, 0.9)] == [-1, 0, 0.25, 1, 1]
        assert e.breakpoints() == [0.0, 0.5]


class TestEval:
    def test_abs_at_zero(self):
        assert eval_expr(parse_expr("abs(x)"), 0.0) == 0.0

    def test_division_by_zero_is_infinite(self):
        assert eval_expr(parse_expr("1/abs(x)"), 0.0) == math.inf
        assert eval_expr(parse_expr("-1/abs(x)"), 0.0) == -math.inf

    def test_override_wins(self):
        assert eval_expr(parse_expr("sign(x) @ {0: 0}"), 0.0) == 0.0
        assert eval_expr(parse_expr("sign(x) @ {0: 7}"), 0.0) == 7.0

    def test_override_bypasses_domain_error(self):
        e = parse_expr("sin(1/x) @ {0: 0}")
        assert e(0.0) == 0.0
        with pytest.raises(EvaluationDomainError):
            parse_expr("sin(1/x)")(0.0)

    def test_zero_times_infinity(self):
        assert parse_expr("x * (1/x)")(0.0) == 0.0
        assert parse_expr("0 * (1/abs(x))")(0.0) == 0.0

    def test_negative_base_fractional_power(self):
        with pytest.raises(EvaluationDomainError) as info:
            parse_expr("x^0.5")(-0.25)
        assert info.value.point == -0.25

    def test_log(self):
        assert parse_expr("log(x)")(0.0) == -math.inf
        with pytest.raises(EvaluationDomainError):
            parse_expr("log(x)")(-1.0)

    def test_infinity_minus_infinity(self):
        with pytest.raises(EvaluationDomainError):
            parse_expr("1/abs(x) - 1/abs(x)")(0.0)

    def test_array_matches_scalar(self):
        e = parse_expr("exp(-x) * cos(3*x) + abs(x)^1.5")
        x = np.linspace(-1, 1, 101)
        assert np.array_equal(eval_array(e, x), np.array([eval_expr(e, t) for t in x]))

    def test_pure(self):
        e = parse_expr("sin(1/x) @ {0: 0}")
        x = np.linspace(-1, 1, 1001)
        assert np.array_equal(eval_array(e, x), eval_array(e, x))


class TestGrid:
    def test_uniform(self):
        g = make_grid(Interval(0, 1), n=3)
        assert list(g.points) == [0.0, 0.5, 1.0]

    def test_refined_cascade(self):
        g = make_grid(Interval(-1, 1), n=3, scheme="refined", special_points=[0], delta0=0.5, levels=2)
        for p in (-0.5, -0.25, -0.125, 0.0, 0.125, 0.25, 0.5):
            assert p in g.points
        assert np.count_nonzero(g.points == 0.0) == 1

    def test_special_point_outside(self):
        with pytest.raises(ValueError):
            make_grid(Interval(0, 1), special_points=[2.0])

    def test_invariants(self):
        for scheme in ("uniform", "chebyshev", "refined"):
            g = make_grid(Interval(-2, 3), n=65, scheme=scheme, special_points=[-2, 0.3, 3])
            assert g.points[0] == -2 and g.points[-1] == 3
            assert np.all(np.diff(g.points) > 0)

    def test_refinement_only_adds_points(self):
        iv = Interval(-1, 1)
        e = parse_expr("abs(x)^0.5")
        coarse = make_grid(iv, n=33, scheme="refined", special_points=[0.1], levels=4)
        fine = make_grid(iv, n=33, scheme="refined", special_points=[0.1], levels=9)
        assert set(coarse.points) <= set(fine.points)
        idx = np.searchsorted(fine.points, coarse.points)
        assert np.array_equal(sample(e, fine).values[idx], sample(e, coarse).values)

    def test_sample(self):
        g = make_grid(Interval(0, 1), n=3)
        assert list(sample(parse_expr("x"), g).values) == [0, 0.5, 1]
        g = make_grid(Interval(-1, 1), n=3)
        assert list(sample(parse_expr("x^2"), g).values) == [1, 0, 1]
        assert sample(parse_expr("1/abs(x)"), g).values[1] == math.inf


def test_format_real():
    assert format_real(1.0) == "1"
    assert format_real(-0.0) == "0"
    assert format_real(0.1) == "0.1"
    assert format_real(math.inf) == "inf"
    assert float(format_real(1 / 3)) == 1 / 3


# ---------------------------------------------------------------------------
# round trip

_numbers = st.floats(min_value=-50, max_value=50, allow_nan=False).map(lambda v: round(v, 3))


def _exprs():
    leaf = st.one_of(st.just(Var()), _numbers.map(Const))

    def grow(children):
        return st.one_of(
            st.tuples(st.sampled_from("+-*"), children, children).map(lambda t: BinOp(*t)),
            st.tuples(st.sampled_from(["abs", "sign", "sin", "cos"]), children).map(lambda t: Call(t[0], (t[1],))),
            st.tuples(children, children).map(lambda t: Call("max", t)),
            children.map(lambda c: Pow(Call("abs", (c,)), 2.0)),
        )

    return st.recursive(leaf, grow, max_leaves=8)


@settings(max_examples=150, deadline=None)
@given(
    _exprs(),
    st.dictionaries(st.sampled_from([-0.5, 0.0, 0.25]), _numbers, max_size=3),
)
def test_print_parse_round_trip(root, overrides):
    e = FuncExpr(root, overrides)
    again = parse_expr(e.to_text())
    x = np.concatenate([np.linspace(-1, 1, 41), [-0.5, 0.0, 0.25]])
    with np.errstate(all="ignore"):
        a, b = eval_array(e, x), eval_array(again, x)
    assert np.array_equal(a, b)
    assert again.overrides == e.overrides
