import numpy as np
import pytest
from hypothesis import given

from ncmax.algebra import (
    Algebra,
    AlgebraError,
    Operator,
    apply_spectral,
    polar_and_pinv,
    positive_split,
    psd_check,
    range_join,
    range_meet,
    spectral_projection,
    trace,
)
from strategies import algebras, operators

M2 = Algebra.matrix(2, 1.0)


def op(mat, alg=M2):
    return Operator(alg, [np.asarray(mat, dtype=complex)])


class TestTrace:
    def test_identity(self):
        assert trace(Operator.identity(M2)) == pytest.approx(2.0)

    def test_weighted_blocks(self):
        alg = Algebra(((2, 0.5), (3, 2.0)))
        assert trace(Operator.identity(alg)) == pytest.approx(7.0)

    def test_traceless(self):
        assert trace(op(np.diag([1.0, -1.0]))) == pytest.approx(0.0)

    @given(operators(), operators())
    def test_linear_and_cyclic(self, x, y):
        if x.algebra != y.algebra:
            y = Operator(x.algebra, [np.eye(d) for d in x.algebra.dims])
        assert trace(x + y) == pytest.approx(trace(x) + trace(y), abs=1e-9)
        assert trace(x @ y) == pytest.approx(trace(y @ x), abs=1e-8)


class TestFunctionalCalculus:
    def test_sqrt(self):
        out = apply_spectral(op(np.diag([4.0, 1.0])), np.sqrt)
        assert np.allclose(out.blocks[0], np.diag([2.0, 1.0]))

    def test_indicator_is_projection(self):
        e = spectral_projection(op(np.diag([3.0, 1.0])), -np.inf, 2.0)
        assert np.allclose(e.blocks[0], np.diag([0.0, 1.0]))
        assert e.is_projection()

    def test_square_matches_product(self):
        x = op([[2.0, 1.0], [1.0, 2.0]])
        assert apply_spectral(x, lambda t: t**2).allclose(x @ x)


class TestPolar:
    def test_diagonal(self):
        u, m, pinv = polar_and_pinv(op(np.diag([2.0, 0.0])))
        assert np.allclose(u.blocks[0], np.diag([1.0, 0.0]))
        assert np.allclose(m.blocks[0], np.diag([2.0, 0.0]))
        assert np.allclose(pinv.blocks[0], np.diag([0.5, 0.0]))

    def test_unitary(self, rng):
        from ncmax.algebra import random_unitary

        U = op(random_unitary(2, rng))
        u, m, pinv = polar_and_pinv(U)
        assert u.allclose(U) and m.allclose(Operator.identity(M2)) and pinv.allclose(U.H)

    def test_nilpotent(self):
        x = op([[0.0, 1.0], [0.0, 0.0]])
        u, m, _ = polar_and_pinv(x)
        assert np.allclose(m.blocks[0], np.diag([0.0, 1.0]))
        assert np.allclose(u.blocks[0], [[0, 1], [0, 0]])
        assert (u @ m).allclose(x)

    @given(operators())
    def test_reconstruction(self, x):
        u, m, pinv = polar_and_pinv(x)
        assert (u @ m).allclose(x, atol=1e-8 * max(1, x.norm()))
        assert (x @ pinv @ x).allclose(x, atol=1e-7 * max(1, x.norm()))


class TestPsd:
    def test_rank_one(self):
        ok, lam = psd_check(op([[1, 1], [1, 1]]))
        assert ok and lam == pytest.approx(0.0, abs=1e-12)

    def test_indefinite(self):
        ok, lam = psd_check(op([[1, 2], [2, 1]]))
        assert not ok and lam == pytest.approx(-1.0)

    def test_two_minus_rank_one(self):
        ok, lam = psd_check(op(2 * np.eye(2) - np.ones((2, 2))))
        assert ok and lam == pytest.approx(0.0, abs=1e-12)


class TestLattice:
    def test_join_and_meet_of_coordinate_lines(self):
        e1, e2 = op(np.diag([1.0, 0.0])), op(np.diag([0.0, 1.0]))
        assert range_join([e1, e2]).allclose(Operator.identity(M2))
        assert range_meet([e1, e2]).allclose(Operator.zeros(M2))

    @given(operators(kind="selfadjoint"))
    def test_meet_below_each(self, x):
        p = spectral_projection(x, 0.0, np.inf)
        q = spectral_projection(x, -np.inf, 0.5)
        m = range_meet([p, q])
        assert (m @ p).allclose(m, atol=1e-8) and (m @ q).allclose(m, atol=1e-8)


@given(operators())
def test_positive_split(x):
    parts = positive_split(x)
    total = Operator.zeros(x.algebra)
    for c, y in parts:
        assert psd_check(y)[0]
        total = total + y * c
    assert total.allclose(x, atol=1e-8 * max(1, x.norm()))


@given(algebras())
def test_json_round_trip(alg):
    x = Operator(alg, [np.arange(d * d).reshape(d, d) * (1 + 0.5j) for d in alg.dims])
    assert Operator.from_json(x.to_json()).allclose(x)


def test_bad_json_names_field():
    bad = {"schema": "ncmax/1", "algebra": {"blocks": [[2, 1.0]]}, "blocks": [[[1, 0], [0, 0]]]}
    with pytest.raises(AlgebraError, match="blocks"):
        Operator.from_json(bad)


def test_algebra_rejects_bad_weight():
    with pytest.raises(AlgebraError):
        Algebra(((2, 0.0),))
