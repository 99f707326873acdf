"""scikit-learn style wrappers.

The "data" here is an operator or an operator sequence rather than a
feature matrix, so these follow the estimator conventions (constructor
stores hyperparameters only, ``fit`` returns self, learned state ends in an
underscore) without claiming to be drop-in pipeline transformers.
"""

from __future__ import annotations

import numpy as np
from sklearn.base import BaseEstimator
from sklearn.exceptions import NotFittedError

from .envelope import EnvelopeProblem, solve_envelope
from .lambdas import OperatorSequence, mu_function
from .marcin import InterpolationParams, marcinkiewicz_majorant
from .oracle import Filtration, cuculescu_oracle, doob_family, uniform_oracle
from .stepfn import lorentz_norm


def _check_fitted(est, attr):
    if not hasattr(est, attr):
        raise NotFittedError(f"{type(est).__name__} is not fitted yet; call fit first")


class DoobMajorant(BaseEstimator):
    """Majorant z of all conditional expectations ``E_n(x)`` of a filtration."""

    def __init__(self, filtration: Filtration | None = None, p: float = 2.0, weights: str = "geometric",
                 eps_trunc: float = 1e-12):
        self.filtration = filtration
        self.p = p
        self.weights = weights
        self.eps_trunc = eps_trunc

    def fit(self, x, y=None):
        if self.filtration is None:
            raise ValueError("filtration must be set")
        S = doob_family(self.filtration)
        o0, o1 = cuculescu_oracle(self.filtration), uniform_oracle(S, 1.0)
        cert = marcinkiewicz_majorant(S, o0, o1, x, InterpolationParams(1.0, np.inf, self.p),
                                      self.weights, self.eps_trunc)
        self.certificate_ = cert
        self.majorant_ = cert.z
        self.ratio_ = cert.norm_report["ratio"]
        return self

    def transform(self, x=None):
        _check_fitted(self, "majorant_")
        return self.majorant_

    def fit_transform(self, x, y=None):
        return self.fit(x).transform()


class EnvelopeSolver(BaseEstimator):
    """Smallest dominating operator for a sequence (``pos``, ``sa`` or ``col``)."""

    def __init__(self, kind: str = "pos", p: float = 2.0, tol: float = 1e-6, max_iter: int = 500):
        self.kind = kind
        self.p = p
        self.tol = tol
        self.max_iter = max_iter

    def fit(self, X, y=None):
        sol = solve_envelope(EnvelopeProblem(self.kind, X, self.p), self.tol, self.max_iter)
        self.solution_ = sol
        self.optimum_ = sol.optimum
        self.value_ = sol.value
        return self

    def score(self, X=None, y=None) -> float:
        """Negative envelope value, so that larger is better."""
        _check_fitted(self, "value_")
        return -self.value_


class LambdaQuasiNorm(BaseEstimator):
    """``||mu_sharp(X)||_{p,q}`` together with the rearrangement itself."""

    def __init__(self, p: float = 2.0, q: float | None = None, mode: str = "plain", method: str = "spectral"):
        self.p = p
        self.q = q
        self.mode = mode
        self.method = method

    def fit(self, X, y=None):
        X = X if isinstance(X, OperatorSequence) else OperatorSequence(X)
        mf = mu_function(X, self.mode, self.method)
        self.rearrangement_ = mf.f
        self.exact_ = mf.exact
        self.norm_ = lorentz_norm(mf.f, self.p, self.p if self.q is None else self.q)
        return self

    def score(self, X=None, y=None) -> float:
        _check_fitted(self, "norm_")
        return -self.norm_
