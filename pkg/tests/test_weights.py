import math

import numpy as np
import pytest

from weightapprox.errors import NotInvertible, WeightInvalid
from weightapprox.funcspec import Interval, eval_array, make_grid, parse_expr
from weightapprox.weights import (
    LEFT,
    REGULAR,
    RIGHT,
    TYPE1,
    TYPE2,
    TYPE3,
    DimKind,
    ScalarWeight,
    TailCertificate,
    VectorWeight,
    check_bounded,
    classify_point,
    classify_weight,
    ess_limits_one_sided,
    invert_weight,
)


def weight(text, points=()):
    return ScalarWeight(parse_expr(text), Interval(-1.0, 1.0), tuple(points))


def labels(w, a):
    return {side: c.label for side, c in classify_point(w, a).items()}


class TestConstruction:
    def test_negative_rejected(self):
        with pytest.raises(WeightInvalid):
            weight("x")

    def test_vanishing_on_subinterval_rejected(self):
        with pytest.raises(WeightInvalid):
            weight("max(x, 0)")

    def test_declared_point_outside(self):
        with pytest.raises(WeightInvalid):
            weight("1", points=[2.0])

    def test_infinite_values_allowed(self):
        assert weight("1/abs(x)").values(np.array([0.0]))[0] == math.inf

    def test_vector_component_count(self):
        w = weight("1")
        with pytest.raises(WeightInvalid):
            VectorWeight((w, w), DimKind.finite(3))
        assert len(VectorWeight((w, w))) == 2

    def test_tail_certificate(self):
        with pytest.raises(ValueError):
            TailCertificate(1.0, 1.0)
        with pytest.raises(ValueError):
            TailCertificate(0.0, 0.5)


class TestOneSidedLimits:
    def test_sqrt_abs(self):
        est = ess_limits_one_sided(weight("abs(x)^0.5"), 0.0, RIGHT)
        assert est.liminf_est < 1e-3 and est.limsup_est < 1e-3

    def test_oscillating_against_dense_oracle(self):
        w = weight("abs(sin(1/x)) @ {0: 0}")
        # oracle: a million log-spaced samples in (0, 1e-3]
        x = np.logspace(-9, -3, 10**6)
        dense = np.abs(np.sin(1.0 / x))
        assert dense.min() < 1e-3 and 0.99 <= dense.max() <= 1.0
        for side in (LEFT, RIGHT):
            est = ess_limits_one_sided(w, 0.0, side)
            assert est.liminf_est < 1e-3
            assert 0.99 <= est.limsup_est <= 1.0
            assert est.converged

    def test_constant(self):
        est = ess_limits_one_sided(weight("1 + 0*x"), 0.0, RIGHT)
        assert est.liminf_est == est.limsup_est == 1.0

    def test_no_room_at_endpoint(self):
        with pytest.raises(ValueError):
            ess_limits_one_sided(weight("1"), 1.0, RIGHT)
        with pytest.raises(ValueError):
            ess_limits_one_sided(weight("1"), -1.0, LEFT)

    @pytest.mark.parametrize("text", ["abs(x)^0.5", "abs(sin(1/x)) @ {0: 0}", "2 + sin(x)", "1/abs(x) @ {0: 1}"])
    def test_window_trace_shape(self, text):
        est = ess_limits_one_sided(weight(text), 0.0, LEFT)
        sizes = [h for h, _, _ in est.window_trace]
        assert all(a > b for a, b in zip(sizes, sizes[1:]))
        infs = [lo for _, lo, _ in est.window_trace]
        sups = [hi for _, _, hi in est.window_trace]
        assert all(b >= a - 1e-9 for a, b in zip(infs, infs[1:]))
        assert all(b <= a + 1e-9 for a, b in zip(sups, sups[1:]))
        assert est.liminf_est <= est.limsup_est


class TestClassify:
    def test_type1(self):
        assert labels(weight("abs(x)^0.5"), 0.0) == {LEFT: TYPE1, RIGHT: TYPE1}

    def test_type2(self):
        assert labels(weight("abs(sin(1/x)) @ {0: 0}"), 0.0) == {LEFT: TYPE2, RIGHT: TYPE2}

    def test_type3(self):
        assert labels(weight("1/abs(x) @ {0: 1}"), 0.0) == {LEFT: TYPE3, RIGHT: TYPE3}

    def test_one_sided_singularity(self):
        w = weight("piecewise(1, 0, x)")
        got = labels(w, 0.0)
        assert got == {LEFT: REGULAR, RIGHT: TYPE1}

    def test_endpoints_one_sided(self):
        rep = classify_weight(weight("1"))
        assert rep.singular_points == []
        assert rep.r_plus == [-1.0] and rep.r_minus == [1.0]

    def test_polynomial_zeros(self):
        rep = classify_weight(weight("abs(x)*abs(x - 0.5)", points=[0, 0.5]))
        assert rep.singular_points == [0.0, 0.5]
        assert rep.s_plus(1) == [0.0, 0.5] and rep.s_minus(1) == [0.0, 0.5]
        assert rep.r_plus == [-1.0] and rep.r_minus == [1.0]

    def test_auto_detection(self):
        rep = classify_weight(weight("abs(x)^0.5"))
        assert 0.0 in rep.auto_detected
        assert rep.get(0.0, RIGHT).label == TYPE1

    def test_auto_detection_off_grid(self):
        rep = classify_weight(weight("abs(x - 0.3)"))
        assert any(abs(p - 0.3) < 1e-9 for p in rep.singular_points)

    def test_partition(self):
        rep = classify_weight(weight("abs(x)*abs(x - 0.5)", points=[0, 0.5]))
        for r, s, parts in (
            (rep.r_plus, rep.s_plus(), [rep.s_plus(k) for k in (1, 2, 3)]),
            (rep.r_minus, rep.s_minus(), [rep.s_minus(k) for k in (1, 2, 3)]),
        ):
            assert not set(r) & set(s)
            assert sorted(s) == sorted(sum(parts, []))
        keys = [(e.point, e.side) for e in rep.entries]
        assert len(keys) == len(set(keys))

    @pytest.mark.parametrize("text", ["abs(x)^0.5", "abs(sin(1/x)) @ {0: 0}", "1/abs(x) @ {0: 1}", "2 + sin(x)"])
    @pytest.mark.parametrize("c", [1e-3, 7.0])
    def test_scale_invariance(self, text, c):
        w = weight(text)
        assert labels(w.scaled(c), 0.0) == labels(w, 0.0)

    def test_side_coherence(self):
        assert labels(weight("2 + sin(x)"), 0.3) == {LEFT: REGULAR, RIGHT: REGULAR}

    def test_csv(self):
        rows = classify_weight(weight("abs(x)^0.5")).csv_rows()
        assert rows[0] == ("point", "side", "class", "liminf_est", "limsup_est", "converged")
        assert ("0", "right", "type1") in [r[:3] for r in rows]


class TestBoundedAndInverse:
    def test_bounded(self):
        b = check_bounded(weight("abs(x)^0.5"))
        assert b.bounded and b.esssup_estimate == pytest.approx(1.0)

    def test_unbounded(self):
        assert not check_bounded(weight("1/abs(x) @ {0: 1}")).bounded

    def test_esssup_oracle(self):
        b = check_bounded(weight("2 + sin(x)"))
        assert b.esssup_estimate == pytest.approx(2 + math.sin(1.0), abs=1e-9)

    def test_invert_constant(self):
        assert invert_weight(weight("2"))(0.3) == 0.5

    def test_invert_exp(self):
        w = weight("exp(x)")
        inv = invert_weight(w)
        assert inv.to_text() == "exp((-x))"
        x = make_grid(w.interval).points
        assert np.max(np.abs(w.values(x) * eval_array(inv, x) - 1)) < 1e-12

    def test_invert_generic(self):
        w = weight("2 + sin(x)")
        x = make_grid(w.interval).points
        assert np.max(np.abs(w.values(x) * eval_array(invert_weight(w), x) - 1)) < 1e-12

    def test_not_invertible(self):
        with pytest.raises(NotInvertible):
            invert_weight(weight("abs(x)"))
