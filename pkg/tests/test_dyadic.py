import numpy as np
import pytest
from hypothesis import given

from ncmax.algebra import Algebra, AlgebraError, Operator
from ncmax.dyadic import binary_digit, dyadic_decompose, verify_dyadic_bounds
from strategies import operators

M2 = Algebra.matrix(2, 1.0)


def diag(*v):
    return Operator(M2 if len(v) == 2 else Algebra.matrix(len(v), 1.0), [np.diag(v)])


def test_binary_digits_of_simple_diagonal():
    d = dyadic_decompose(diag(1.5, 0.75))
    terms = {n: np.real(np.diag(r.blocks[0])) for n, r in d.terms}
    assert sorted(terms) == [0, 1, 2]
    assert np.allclose(terms[0], [1, 0]) and np.allclose(terms[1], [1, 1]) and np.allclose(terms[2], [0, 1])
    assert d.residual() == 0.0


def test_scaled_projection_is_single_term():
    e = Operator(Algebra.matrix(3, 1.0), [np.diag([1.0, 1.0, 0.0]) / 8])
    d = dyadic_decompose(e)
    assert [n for n, _ in d.terms] == [3]


def test_one_third_even_digits():
    d = dyadic_decompose(Operator(Algebra.matrix(1, 1.0), [np.array([[1 / 3]])]), eps_trunc=1e-9)
    ns = [n for n, _ in d.terms]
    assert ns[:4] == [2, 4, 6, 8] and all(n % 2 == 0 for n in ns)
    assert d.residual() <= 1e-9


def test_binary_digit():
    assert list(binary_digit(np.array([0.75, 0.5, 0.25]), 1)) == [1.0, 1.0, 0.0]


def test_rejects_negative():
    with pytest.raises(AlgebraError):
        dyadic_decompose(diag(1.0, -1.0))


def test_bounds_on_examples():
    assert verify_dyadic_bounds(dyadic_decompose(diag(1.0, 0.0)), 1.0).passed
    r1 = verify_dyadic_bounds(dyadic_decompose(diag(1.5, 0.75)), 1.0)
    assert r1.passed and r1.worst_ratio <= 1.0
    assert verify_dyadic_bounds(dyadic_decompose(diag(1.5, 0.75)), 2.0).passed


@given(operators(kind="positive"))
def test_reconstruction_and_bounds(x):
    d = dyadic_decompose(x, 1e-13)
    assert d.residual(2.0) <= 1e-11 * max(1.0, x.lp_norm(2.0)) + 1e-13
    for r in (r for _, r in d.terms):
        assert r.is_projection()
    for a in (0.5, 1.0, 2.0):
        rep = verify_dyadic_bounds(d, a)
        assert rep.passed
        assert rep.sum_ratio <= 1.0 + 1e-10
