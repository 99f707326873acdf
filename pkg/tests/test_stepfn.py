import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from ncmax.algebra import Algebra, Operator
from ncmax.stepfn import (
    StepFunction,
    dilate,
    hl_majorize,
    lorentz_norm,
    mu,
    pointwise_le,
    sum_steps,
)
from strategies import operators


def steps():
    pieces = st.lists(st.tuples(st.floats(0.01, 10), st.floats(0.01, 5)), min_size=1, max_size=6)
    return pieces.map(lambda ps: StepFunction(tuple(sorted((v for v, _ in ps), reverse=True)),
                                              tuple(l for _, l in ps)))


class TestMu:
    def test_diagonal(self):
        f = mu(Operator(Algebra.matrix(2, 1.0), [np.diag([3.0, 1.0])]))
        assert f.pairs() == [(3.0, 1.0), (1.0, 1.0)]

    def test_weight_scales_lengths(self):
        f = mu(Operator(Algebra.matrix(2, 0.5), [2 * np.eye(2)]))
        assert f.pairs() == [(2.0, 1.0)]

    def test_nilpotent(self):
        f = mu(Operator(Algebra.matrix(2, 1.0), [np.array([[0.0, 1.0], [0.0, 0.0]])]))
        assert f(0.5) == pytest.approx(1.0) and f(1.5) == 0.0

    def test_subadditive_at_doubled_argument(self, rng):
        # mu(x + y)(s + t) <= mu(x)(s) + mu(y)(t), checked with s = t
        alg = Algebra.matrix(4, 1.0)
        for _ in range(20):
            a = rng.normal(size=(4, 4))
            b = rng.normal(size=(4, 4))
            x, y = Operator(alg, [a + a.T]), Operator(alg, [b + b.T])
            fxy, fx, fy = mu(x + y), mu(x), mu(y)
            for t in np.linspace(0, 1.9, 12):
                assert fxy(2 * t) <= fx(t) + fy(t) + 1e-10


class TestLorentz:
    def test_indicator_l2(self):
        assert lorentz_norm(StepFunction.indicator(1.0), 2, 2) == pytest.approx(1.0)

    def test_weak_norm(self):
        assert lorentz_norm(StepFunction.indicator(4.0), 2, np.inf) == pytest.approx(2.0)

    def test_l1(self):
        assert lorentz_norm(StepFunction((3.0, 1.0), (1.0, 1.0)), 1, 1) == pytest.approx(4.0)

    @given(operators())
    def test_matches_schatten(self, x):
        for p in (1.0, 2.0, 3.5):
            assert lorentz_norm(mu(x), p, p) == pytest.approx(x.lp_norm(p), rel=1e-9)

    @given(steps(), st.floats(0.1, 10))
    def test_dilation_norm(self, f, s):
        # ||D_s f||_p = s^{1/p} ||f||_p
        for p in (1.0, 2.0, 4.0):
            assert lorentz_norm(dilate(f, s), p, p) == pytest.approx(s ** (1 / p) * lorentz_norm(f, p, p), rel=1e-9)

    @given(steps())
    def test_monotone_in_second_index(self, f):
        # with the normalization (q/p)^{1/q} the norms decrease in q
        vals = [(q / 2.0) ** (1 / q) * lorentz_norm(f, 2.0, q) for q in (1.0, 2.0, 4.0)]
        vals.append(lorentz_norm(f, 2.0, np.inf))
        assert all(a >= b * (1 - 1e-12) for a, b in zip(vals, vals[1:]))


class TestMajorization:
    def test_examples(self):
        assert hl_majorize(StepFunction.indicator(2.0), StepFunction.indicator(1.0, 2.0))
        assert not hl_majorize(StepFunction.indicator(1.0, 2.0), StepFunction.indicator(2.0))

    @given(steps(), steps())
    def test_pointwise_implies_majorization(self, f, g):
        h = f + g
        assert pointwise_le(f, h)
        assert hl_majorize(f, h)

    @given(steps())
    def test_reflexive(self, f):
        assert hl_majorize(f, f)


@given(steps(), steps())
def test_sum_primitive_is_additive(f, g):
    h = sum_steps([f, g])
    for t in (0.3, 1.0, 2.7, 10.0):
        assert h.primitive(t) == pytest.approx(f.primitive(t) + g.primitive(t), rel=1e-9, abs=1e-12)


@given(steps())
def test_json_round_trip(f):
    assert StepFunction.from_json(f.to_json()) == f
