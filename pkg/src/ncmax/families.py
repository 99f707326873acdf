"""Explicit families used as examples and counterexamples, truncated at size N.

Matrix indices in docstrings are 1-based (``e_{1,1}`` is the top-left unit);
arrays are 0-based as usual.
"""

from __future__ import annotations

import itertools
import math

import numpy as np

from .algebra import Algebra, Operator, random_unitary
from .envelope import DiagonalEnvelopeProblem, solve_diagonal, solve_diagonal_log
from .oracle import MapFamily, WeakTypeOracle
from .stepfn import StepFunction, lorentz_norm

SCALARS = Algebra.matrix(1, 1.0)


class _ScalarFamily(MapFamily):
    """Maps ``lambda -> lambda T_n`` from the scalars."""

    def __init__(self, mats, positive, name, norm_bound):
        self.mats = [np.asarray(m, dtype=float) for m in mats]
        N = self.mats[0].shape[0]
        tgt = Algebra.matrix(N, 1.0)
        maps = [lambda x, T=T, tgt=tgt: Operator(tgt, [x.blocks[0][0, 0] * T]) for T in self.mats]
        super().__init__(SCALARS, tgt, maps, positive, name, norm_bound)

    def images_of_one(self) -> list[Operator]:
        return [Operator(self.target, [T]) for T in self.mats]


def asym_matrix(N: int, n: int) -> np.ndarray:
    """``e_{11} + n^{-1/2}(e_{1n} + e_{n1}) + n^{-1} e_{nn}`` = ``v v^*`` with ``v = e_1 + n^{-1/2} e_n``."""
    v = np.zeros(N)
    v[0] = 1.0
    v[n - 1] += 1.0 / math.sqrt(n)
    return np.outer(v, v)


def gen_asym(N: int) -> _ScalarFamily:
    if N < 2:
        raise ValueError("N must be at least 2")
    return _ScalarFamily([asym_matrix(N, n) for n in range(2, N + 1)], True, f"asym[{N}]", 2.0)


def gen_nonpositive(N: int) -> _ScalarFamily:
    """``e_{n1} + e_{1n}`` for n = 2..N: self-adjoint, not positive."""
    if N < 2:
        raise ValueError("N must be at least 2")
    mats = []
    for n in range(2, N + 1):
        T = np.zeros((N, N))
        T[0, n - 1] = T[n - 1, 0] = 1.0
        mats.append(T)
    return _ScalarFamily(mats, False, f"nonpos[{N}]", 1.0)


def tail_projection(N: int, t: float) -> Operator:
    """``sum_{k > 1/t} e_{kk}`` in ``M_N``."""
    K = min(N, math.floor(1.0 / t))
    return Operator(Algebra.matrix(N, 1.0), [np.diag([0.0] * K + [1.0] * (N - K))])


def threshold_tail_oracle(S: _ScalarFamily) -> WeakTypeOracle:
    """Weak (1,1) witness ``e = sum_{k > 1/t} e_{kk}`` at ``t = lambda / (2|x|)``."""
    N = S.target.dims[0]

    def produce(x, lam):
        c = abs(x.blocks[0][0, 0])
        if c == 0:
            return Operator.identity(S.target)
        return tail_projection(N, lam / (2 * c))

    return WeakTypeOracle(1.0, 2.0, produce, name="tail-witness")


def nonpositive_envelope_value(N: int, p: float) -> float:
    """Optimal ``||A||_p`` for ``-A <= e_{n1} + e_{1n} <= A`` (n = 2..N).

    The optimum is diagonal with ``A_{11} A_{nn} = 1``; minimizing
    ``a^p + (N-1) a^{-p}`` over ``a = A_{11}`` gives ``||A||_p^p = 2 sqrt(N-1)``.
    """
    return (2.0 * math.sqrt(N - 1)) ** (1.0 / p)


# --------------------------------------------------------------------------
# blocks of sizes 2^i: the optimality family


def opti_blocks(N: int) -> list[tuple[int, int]]:
    """Index ranges ``[start, stop)`` of the blocks of sizes 1, 2, 4, ..., 2^{N-1}."""
    return [(2**i - 1, 2 ** (i + 1) - 1) for i in range(N)]


def opti_diagonal(N: int, p: float) -> DiagonalEnvelopeProblem:
    return DiagonalEnvelopeProblem(tuple(2.0**i for i in range(N)), tuple(2.0 ** (-i / 2) for i in range(N)), p)


def opti_dominating_diagonal(N: int, p: float) -> DiagonalEnvelopeProblem:
    """Reduction for ``a >= b^* b`` itself: with ``a = sum d_i q_i`` the condition reads
    ``sum alpha_i^2 / d_i <= 1``, i.e. the diagonal problem for ``sqrt(d_i)`` at exponent ``2p``."""
    return DiagonalEnvelopeProblem(tuple(2.0**i for i in range(N)), tuple(2.0 ** (-i / 2) for i in range(N)), 2 * p)


def opti_dominating_value(N: int, p: float) -> float:
    """``min ||a||_p`` over diagonal ``a >= b^* b`` for all admissible b."""
    return solve_diagonal(opti_dominating_diagonal(N, p))[1] ** 2


def gen_opti(N: int, samples: int = 8, seed: int = 0, p: float = 2.0):
    """Samples ``x = b^* b`` with ``b = sum_i 2^{-i/2} c_i q_i`` and the exact diagonal problem."""
    if N < 1:
        raise ValueError("N must be at least 1")
    D = 2**N - 1
    alg = Algebra.matrix(D, 1.0)
    rng = np.random.default_rng(seed)
    seq = []
    for _ in range(samples):
        b = np.zeros((D, D))
        for i, (s, e) in enumerate(opti_blocks(N)):
            c = random_unitary(D, rng, complex_=False)
            b[:, s:e] += 2.0 ** (-i / 2) * c[:, s:e]
        seq.append(Operator(alg, [b.T @ b]))
    from .lambdas import OperatorSequence

    return OperatorSequence(seq), opti_diagonal(N, p)


def opti_block_projection(N: int, n: int) -> Operator:
    """``Q_n = q_0 + ... + q_n``."""
    D = 2**N - 1
    stop = opti_blocks(N)[min(n, N - 1)][1]
    return Operator(Algebra.matrix(D, 1.0), [np.diag([1.0] * stop + [0.0] * (D - stop))])


# --------------------------------------------------------------------------
# blocks of sizes 2^{i-1}: the Lambda versus column separation


def ll_blocks(N: int) -> list[tuple[int, int]]:
    """``p_i`` covers indices ``2^{i-1} .. 2^i - 1`` (1-based), i = 1..N."""
    return [(2 ** (i - 1) - 1, 2**i - 1) for i in range(1, N + 1)]


def ll_alphas(N: int, p: float) -> np.ndarray:
    return np.array([2.0 ** (-i / p) for i in range(1, N + 1)])


def ll_structured(N: int, p: float, signs: bool = True) -> list[Operator]:
    """Rank-one terms ``e_1 eta^*`` with ``eta = sum_i alpha_i s_i e_{j_i}``, ``j_i`` in block i.

    They use contractions ``u_{n,i} = s_i e_1 e_{j_i}^*``; every choice of basis
    vectors and signs (first sign fixed) is included.
    """
    D = 2**N - 1
    alg = Algebra.matrix(D, 1.0)
    al = ll_alphas(N, p)
    ranges = [range(s, e) for s, e in ll_blocks(N)]
    sign_sets = list(itertools.product([1.0, -1.0], repeat=N - 1)) if signs else [(1.0,) * (N - 1)]
    out = []
    for js in itertools.product(*ranges):
        for ss in sign_sets:
            eta = np.zeros(D)
            for i, (j, s) in enumerate(zip(js, (1.0,) + tuple(ss))):
                eta[j] = al[i] * s
            x = np.zeros((D, D))
            x[0, :] = eta
            out.append(Operator(alg, [x]))
    return out


def gen_Ll(N: int, p: float, samples: int = 8, seed: int = 0, structured: bool = True):
    """``x_n = sum_i 2^{-i/p} u_{n,i} p_i`` with Haar-random orthogonal ``u_{n,i}`` plus structured witnesses."""
    if N < 1:
        raise ValueError("N must be at least 1")
    if not p > 2:
        raise ValueError("p must exceed 2")
    D = 2**N - 1
    alg = Algebra.matrix(D, 1.0)
    rng = np.random.default_rng(seed)
    al = ll_alphas(N, p)
    seq = []
    for _ in range(samples):
        x = np.zeros((D, D))
        for i, (s, e) in enumerate(ll_blocks(N)):
            u = random_unitary(D, rng, complex_=False)
            x[:, s:e] += al[i] * u[:, s:e]
        seq.append(Operator(alg, [x]))
    if structured:
        seq.extend(ll_structured(N, p))
    from .lambdas import OperatorSequence

    return OperatorSequence(seq)


def ll_diagonal(N: int, p: float) -> DiagonalEnvelopeProblem:
    """Diagonal reduction of the column envelope: ``a = sum d_i p_i`` with ``sum alpha_i^2/d_i^2 <= 1``."""
    return DiagonalEnvelopeProblem(tuple(float(2 ** (i - 1)) for i in range(1, N + 1)),
                                   tuple(ll_alphas(N, p)), p)


def ll_column_value(N: int, p: float) -> float:
    """Exact column envelope over all contraction tuples: ``2^{-1/p} N^{1/2 + 1/p}``."""
    return math.exp(solve_diagonal_log(ll_diagonal(N, p)))


def ll_mu_column_upper(N: int, p: float) -> StepFunction:
    """Upper bound for ``mu_c(X, .)`` valid for every contraction tuple.

    Removing the first m blocks (trace ``2^m - 1``) leaves
    ``||x_n e|| <= (sum_{i>m} alpha_i^2)^{1/2}``.
    """
    al2 = ll_alphas(N, p) ** 2
    tails = np.concatenate([np.cumsum(al2[::-1])[::-1], [0.0]])
    vals, lens = [], []
    for m in range(N):
        vals.append(math.sqrt(tails[m]))
        lens.append(float(2**m))  # trace of block m+1
    return StepFunction(tuple(vals), tuple(lens))


def ll_lambda_upper(N: int, p: float, q: float | None = None) -> float:
    """Upper estimate of ``||X||_{Lambda_{p,q}^c}`` from :func:`ll_mu_column_upper`."""
    return lorentz_norm(ll_mu_column_upper(N, p), p, p if q is None else q)


def ll_lambda_decomposition_bound(N: int, p: float) -> float:
    """Upper bound for ``||X||_{Lambda_p^c}`` through the dyadic decomposition ``X = sum_i alpha_i U_i p_i``.

    ``mu_c(X, 2^l) <= sum_{i>l} alpha_i`` and a weighted Hardy inequality give
    ``||X||_{Lambda_p^c}^p <= 2 H_p sum_i 2^i alpha_i^p`` (see :func:`hardy_constant`),
    which equals ``2 H_p N`` here.
    """
    from .lambdas import hardy_constant

    al = ll_alphas(N, p)
    seq = float(np.sum(2.0 ** np.arange(1, N + 1) * al**p))
    return (2.0 * hardy_constant(p) * seq) ** (1.0 / p)


FAMILIES = ("asym", "nonpos", "opti", "ll")
