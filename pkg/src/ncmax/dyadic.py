"""Binary-digit decomposition of a positive operator into spectral projections.

``x = sum_n 2^{-n} r_n`` where ``r_n`` projects onto the eigenvectors whose
eigenvalue has a 1 in the ``2^{-n}`` binary place.  Digits are read off the
floating point eigenvalues, which is exact: scaling a double by a power of two
and taking ``floor`` loses nothing, so every double has a finite expansion.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .algebra import AlgebraError, EPS_NUM, Operator, apply_spectral, eigh_blocks, xlogx_plus
from .stepfn import StepFunction, mu, pointwise_ratio, sum_steps


@dataclass(frozen=True)
class DyadicDecomposition:
    terms: tuple[tuple[int, Operator], ...]
    source: Operator
    n_min: int
    n_max: int
    traces: tuple[float, ...] = field(default=())

    def reconstruct(self) -> Operator:
        out = Operator.zeros(self.source.algebra)
        for n, r in self.terms:
            out = out + r * (2.0**-n)
        return out

    def residual(self, p: float = 2.0) -> float:
        return (self.source - self.reconstruct()).lp_norm(p)

    def __len__(self):
        return len(self.terms)


def binary_digit(values: np.ndarray, n: int) -> np.ndarray:
    """Digit of ``2^{-n}`` in the binary expansion of each (nonnegative) value."""
    scaled = np.ldexp(values, n)
    return (np.floor(scaled) % 2).astype(float)


def _last_digit(v: float) -> int:
    """Index n of the last nonzero binary digit of a positive double."""
    m, e = math.frexp(v)  # v = m 2^e, 0.5 <= m < 1
    mant = int(m * 2**53)
    tz = (mant & -mant).bit_length() - 1
    return 53 - e - tz


def dyadic_decompose(x: Operator, eps_trunc: float = 1e-12, p: float = 2.0) -> DyadicDecomposition:
    """Split a positive operator into weighted spectral projections.

    The window starts at the leading binary digit of ``||x||`` and stops once the
    dropped digits weigh less than ``eps_trunc`` in L_p (or once every
    eigenvalue's expansion has terminated).
    """
    eig = eigh_blocks(x)
    norm = max((float(np.max(np.abs(lam))) for lam, _ in eig), default=0.0)
    lam_min = min(float(lam[0]) for lam, _ in eig)
    if lam_min < -1e-10 * max(1.0, norm):
        raise AlgebraError(f"dyadic decomposition needs a positive operator (lambda_min={lam_min:.3g})")
    eig = [(np.clip(lam, 0.0, None), u) for lam, u in eig]
    if norm == 0:
        return DyadicDecomposition((), x, 0, -1, ())
    n_min = math.ceil(-math.log2(norm))
    if 2.0**-n_min > norm:
        n_min += 1
    tau1 = x.algebra.total_trace
    scale = tau1 ** (1.0 / p) if p < np.inf else 1.0
    n_trunc = math.ceil(math.log2(scale / eps_trunc)) if eps_trunc > 0 else 10**6
    n_exact = max(_last_digit(float(v)) for lam, _ in eig for v in lam if v > 0)
    n_max = max(n_min, min(n_trunc, n_exact))
    terms, traces = [], []
    for n in range(n_min, n_max + 1):
        r = apply_spectral(x, lambda t, n=n: binary_digit(t, n), eig=eig)
        tr = sum(w * float(np.sum(binary_digit(lam, n))) for (lam, _), w in zip(eig, x.algebra.weights))
        if tr > 0:
            terms.append((n, r))
            traces.append(tr)
    return DyadicDecomposition(tuple(terms), x, n_min, n_max, tuple(traces))


@dataclass
class DyadicReport:
    alpha: float
    passed: bool
    worst_ratio: float
    c_log: float
    c_abslog: float
    sum_ratio: float
    n_terms: int

    def to_json(self) -> dict:
        return {k: (v if not isinstance(v, float) or np.isfinite(v) else str(v)) for k, v in self.__dict__.items()}


def weighted_indicator_sum(d: DyadicDecomposition, coef) -> StepFunction:
    """``sum_n coef(n) 1_{[0, tau(r_n)]}``."""
    return sum_steps([StepFunction.indicator(t, coef(n)) for (n, _), t in zip(d.terms, d.traces)])


def verify_dyadic_bounds(d: DyadicDecomposition, alpha: float, rtol: float = 1e-10) -> DyadicReport:
    """Check both digit-sum bounds against the singular value functions of x.

    * ``sum 2^{-n alpha} 1_{[0,tau(r_n)]} <= (1 - 2^{-alpha})^{-1} mu(x^alpha)`` (pointwise)
    * smallest C with ``sum (|n|+1) 2^{-n} 1_{[0,tau(r_n)]} <= C mu(x (ln|x| + 1))``,
      also reported with ``|ln|`` in place of ``ln``
    * ``sum 2^{-n} mu(r_n) <= 2 mu(x)`` reported as a ratio
    """
    x = d.source
    lhs1 = weighted_indicator_sum(d, lambda n: 2.0 ** (-n * alpha))
    x_alpha = apply_spectral(x, lambda t: np.clip(t, 0, None) ** alpha)
    rhs1 = mu(x_alpha).scale(1.0 / (1.0 - 2.0**-alpha))
    ratio = pointwise_ratio(lhs1, rhs1)

    lhs2 = weighted_indicator_sum(d, lambda n: (abs(n) + 1) * 2.0**-n)
    c_log = pointwise_ratio(lhs2, mu(apply_spectral(x, lambda t: xlogx_plus(np.clip(t, 0, None)))))
    absl = lambda t: np.where(t > 0, t * (np.abs(np.log(np.where(t > 0, t, 1.0))) + 1.0), 0.0)
    c_abslog = pointwise_ratio(lhs2, mu(apply_spectral(x, lambda t: absl(np.clip(t, 0, None)))))

    lhs3 = weighted_indicator_sum(d, lambda n: 2.0**-n)
    sum_ratio = pointwise_ratio(lhs3, mu(x).scale(2.0))
    return DyadicReport(
        alpha=alpha,
        passed=ratio <= 1 + rtol,
        worst_ratio=ratio,
        c_log=c_log,
        c_abslog=c_abslog,
        sum_ratio=sum_ratio,
        n_terms=len(d),
    )
