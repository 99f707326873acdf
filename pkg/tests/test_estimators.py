import numpy as np
import pytest
from sklearn.base import clone
from sklearn.exceptions import NotFittedError

from ncmax.algebra import Algebra, Operator, lambda_min, random_positive
from ncmax.estimators import DoobMajorant, EnvelopeSolver, LambdaQuasiNorm
from ncmax.lambdas import lambda_norm
from ncmax.oracle import Filtration, conditional_expectation


def test_params_round_trip():
    est = EnvelopeSolver(kind="sa", p=3.0)
    assert est.get_params() == {"kind": "sa", "p": 3.0, "tol": 1e-6, "max_iter": 500}
    est.set_params(p=4.0)
    assert clone(est).p == 4.0


@pytest.mark.parametrize("est,attr", [(DoobMajorant(), "transform"), (EnvelopeSolver(), "score"),
                                      (LambdaQuasiNorm(), "score")])
def test_not_fitted(est, attr):
    with pytest.raises(NotFittedError):
        getattr(est, attr)()


def test_doob_majorant(rng):
    F = Filtration.tensor_tower(2)
    x = random_positive(F.algebra, rng)
    z = DoobMajorant(F, p=2.0).fit_transform(x)
    for n in range(len(F)):
        assert lambda_min(z - conditional_expectation(F, n, x)) >= -1e-9
    with pytest.raises(ValueError):
        DoobMajorant().fit(x)


def test_envelope_solver():
    M2 = Algebra.matrix(2, 1.0)
    x = Operator(M2, [np.array([[0.0, 1.0], [1.0, 0.0]])])
    est = EnvelopeSolver("sa", 2.0, tol=1e-9).fit([x])
    assert est.score() == pytest.approx(-(2**0.5), abs=1e-6)


def test_lambda_quasi_norm(rng):
    alg = Algebra(((2, 1.0), (1, 0.5)))
    X = [random_positive(alg, rng) for _ in range(2)]
    est = LambdaQuasiNorm(p=2.0, mode="column", method="exhaustive").fit(X)
    assert est.exact_
    assert est.norm_ == pytest.approx(lambda_norm(X, 2.0, mode="column", method="exhaustive"))
