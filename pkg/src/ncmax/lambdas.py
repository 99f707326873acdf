"""Rearrangements of operator sequences and the weak maximal quasi-norms built on them.

For a finite sequence ``X = (x_n)`` and ``t >= 0``::

    mu(X, t)   = inf { sup_n ||e x_n e|| : tau(1 - e) <= t }   (plain)
    mu_c(X, t) = inf { sup_n ||x_n e||   : tau(1 - e) <= t }   (column)
    mu_r(X, t) = inf { sup_n ||e x_n||   : tau(1 - e) <= t }   (row)

Two methods are offered.  ``exhaustive`` is exact (up to round-off) on
algebras whose blocks have size at most 2: blocks decouple, and for a
rank-one projection in ``M_2`` the objective is a maximum of affine functions
of the Bloch vector, minimized over the sphere by enumerating critical
points.  ``spectral`` returns feasible projections (an upper estimate) on
any algebra.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, field
from functools import cached_property
from typing import Iterable, Sequence

import numpy as np
from scipy.optimize import minimize, minimize_scalar

from .algebra import (
    EPS_NUM,
    Algebra,
    AlgebraError,
    Operator,
    corner_spectral_projection,
    projection_rank_trace,
    range_meet,
)
from .stepfn import StepFunction, lorentz_norm

MODES = ("plain", "column", "row")
METHODS = ("spectral", "exhaustive")
EXHAUSTIVE_MAX_DIM = 8
EXACT_GRID_MAX = 512


class OperatorSequence:
    """Finite sequence of operators in a common algebra."""

    def __init__(self, terms: Iterable[Operator]):
        terms = list(terms)
        if not terms:
            raise AlgebraError("an operator sequence needs at least one term")
        alg = terms[0].algebra
        for i, x in enumerate(terms):
            if x.algebra != alg:
                raise AlgebraError(f"term {i} lives in a different algebra")
        self.terms = terms

    @property
    def algebra(self) -> Algebra:
        return self.terms[0].algebra

    def __len__(self):
        return len(self.terms)

    def __iter__(self):
        return iter(self.terms)

    def __getitem__(self, i):
        return self.terms[i]

    def __add__(self, other: "OperatorSequence") -> "OperatorSequence":
        if len(self) != len(other):
            raise AlgebraError("sequences must have equal length")
        return OperatorSequence([a + b for a, b in zip(self, other)])

    def __sub__(self, other: "OperatorSequence") -> "OperatorSequence":
        return self + other.scale(-1.0)

    def scale(self, c: complex) -> "OperatorSequence":
        return OperatorSequence([x * c for x in self])

    def adjoint(self) -> "OperatorSequence":
        return OperatorSequence([x.H for x in self])

    def compress(self, left: Operator, right: Operator) -> "OperatorSequence":
        return OperatorSequence([left @ x @ right for x in self])

    def sup_norm(self) -> float:
        return max(x.norm() for x in self)

    def is_selfadjoint(self) -> bool:
        return all(x.is_selfadjoint(1e-9) for x in self)

    def to_json(self) -> dict:
        return {
            "schema": "ncmax/1",
            "algebra": self.algebra.to_json(),
            "terms": [x.to_json()["blocks"] for x in self],
        }

    @classmethod
    def from_json(cls, obj) -> "OperatorSequence":
        if "terms" not in obj:
            raise AlgebraError("sequence: missing field 'terms'")
        if "algebra" not in obj:
            raise AlgebraError("sequence: missing field 'algebra'")
        out = []
        for i, blocks in enumerate(obj["terms"]):
            try:
                out.append(Operator.from_json({"schema": "ncmax/1", "algebra": obj["algebra"], "blocks": blocks}))
            except (AlgebraError, ValueError, TypeError) as exc:
                raise AlgebraError(f"sequence: field 'terms[{i}]': {exc}") from exc
        return cls(out)


def _as_seq(X) -> OperatorSequence:
    return X if isinstance(X, OperatorSequence) else OperatorSequence(X)


def seq_norm(X: OperatorSequence, e: Operator, mode: str) -> float:
    """``sup_n`` of ``||e x_n e||``, ``||x_n e||`` or ``||e x_n||``."""
    if mode == "plain":
        return max((e @ x @ e).norm() for x in X)
    if mode == "column":
        return max((x @ e).norm() for x in X)
    if mode == "row":
        return max((e @ x).norm() for x in X)
    raise AlgebraError(f"unknown mode {mode!r}")


# --------------------------------------------------------------------------
# exhaustive method


_PAULI = (
    np.array([[0, 1], [1, 0]], dtype=complex),
    np.array([[0, -1j], [1j, 0]], dtype=complex),
    np.array([[1, 0], [0, -1]], dtype=complex),
)


def _bloch(H: np.ndarray) -> tuple[float, np.ndarray]:
    """``v^* H v = c + g . r`` for ``v v^* = (1 + r . sigma)/2``."""
    c = float(np.trace(H).real) / 2
    g = np.array([float(np.trace(H @ s).real) / 2 for s in _PAULI])
    return c, g


def _bloch_projection(r: np.ndarray) -> np.ndarray:
    r = r / np.linalg.norm(r)
    return (np.eye(2) + sum(ri * s for ri, s in zip(r, _PAULI))) / 2


def sphere_minmax(cs: np.ndarray, gs: np.ndarray) -> tuple[float, np.ndarray]:
    """``min_{|r|=1} max_i (c_i + g_i . r)`` by enumerating critical points.

    At a minimizer at most three functions are active in general position; the
    candidates are the minimizers of each function on the sphere, the critical
    points of one function on each equality circle, and the points where three
    functions agree.
    """
    cs = np.asarray(cs, float)
    gs = np.asarray(gs, float).reshape(-1, 3)
    nz = np.linalg.norm(gs, axis=1) > 1e-14
    cands = [np.array(v, float) for v in ((0, 0, 1), (0, 0, -1), (1, 0, 0), (-1, 0, 0), (0, 1, 0), (0, -1, 0))]
    idx = np.flatnonzero(nz)
    for i in idx:
        cands.append(-gs[i] / np.linalg.norm(gs[i]))
    for i, j in itertools.combinations(idx, 2):
        nu = gs[i] - gs[j]
        nn = float(nu @ nu)
        if nn <= 1e-28:
            continue
        r0 = (cs[j] - cs[i]) / nn * nu
        rad2 = 1.0 - float(r0 @ r0)
        if rad2 < 0:
            continue
        rho = math.sqrt(rad2)
        gp = gs[i] - (gs[i] @ nu) / nn * nu
        if np.linalg.norm(gp) > 1e-14:
            u = gp / np.linalg.norm(gp)
            cands.extend([r0 - rho * u, r0 + rho * u])
        else:
            u = np.cross(nu, [1.0, 0, 0])
            if np.linalg.norm(u) < 1e-8:
                u = np.cross(nu, [0, 1.0, 0])
            cands.append(r0 + rho * u / np.linalg.norm(u))
    for i, j, k in itertools.combinations(idx, 3):
        A = np.array([gs[i] - gs[j], gs[i] - gs[k]])
        b = np.array([cs[j] - cs[i], cs[k] - cs[i]])
        w = np.cross(A[0], A[1])
        if np.linalg.norm(w) <= 1e-14:
            continue
        r0 = np.linalg.lstsq(A, b, rcond=None)[0]
        # r0 is the minimum-norm solution, orthogonal to w
        ww = float(w @ w)
        disc = ww * (1.0 - float(r0 @ r0))
        if disc < 0:
            continue
        s = math.sqrt(disc) / ww
        cands.extend([r0 + s * w, r0 - s * w])
    R = np.array(cands)
    R = R / np.linalg.norm(R, axis=1, keepdims=True)
    vals = np.max(cs[None, :] + R @ gs.T, axis=1)
    best = int(np.argmin(vals))
    return float(vals[best]), R[best]


def _sphere_numeric(fun, grid: int = 24) -> tuple[float, np.ndarray]:
    """Grid search on the Bloch sphere followed by an epigraph refinement."""
    th = np.linspace(0, np.pi, grid)
    ph = np.linspace(0, 2 * np.pi, 2 * grid, endpoint=False)
    best = (np.inf, None)
    starts = []
    for a in th:
        for b in ph:
            r = np.array([np.sin(a) * np.cos(b), np.sin(a) * np.sin(b), np.cos(a)])
            v = float(np.max(fun(r)))
            starts.append((v, r))
    starts.sort(key=lambda s: s[0])
    for v0, r0 in starts[:4]:
        x0 = np.concatenate([r0, [v0]])
        res = minimize(
            lambda z: z[3],
            x0,
            method="SLSQP",
            constraints=[
                {"type": "ineq", "fun": lambda z: z[3] - fun(z[:3] / np.linalg.norm(z[:3]))},
                {"type": "eq", "fun": lambda z: z[:3] @ z[:3] - 1.0},
            ],
            options={"ftol": 1e-14, "maxiter": 200},
        )
        r = res.x[:3] / np.linalg.norm(res.x[:3])
        v = float(np.max(fun(r)))
        if v < best[0]:
            best = (v, r)
        if v0 < best[0]:
            best = (v0, r0)
    return best


def _rank_one_m2(blocks: Sequence[np.ndarray], mode: str) -> tuple[float, np.ndarray, bool]:
    """Best rank-one projection in ``M_2``: ``(value, projection, exact)``."""
    if mode in ("column", "row"):
        Hs = [b.conj().T @ b if mode == "column" else b @ b.conj().T for b in blocks]
        cg = [_bloch(H) for H in Hs]
        v, r = sphere_minmax(np.array([c for c, _ in cg]), np.array([g for _, g in cg]))
        return math.sqrt(max(v, 0.0)), _bloch_projection(r), True
    if all(np.allclose(b, b.conj().T, atol=1e-12) for b in blocks):
        cg = [_bloch((b + b.conj().T) / 2) for b in blocks]
        cs = np.array([s * c for c, _ in cg for s in (1, -1)])
        gs = np.array([s * g for _, g in cg for s in (1, -1)])
        v, r = sphere_minmax(cs, gs)
        return max(v, 0.0), _bloch_projection(r), True
    herm = [(b + b.conj().T) / 2 for b in blocks]
    skew = [(b - b.conj().T) / 2j for b in blocks]
    ch = [_bloch(h) for h in herm]
    ck = [_bloch(k) for k in skew]

    def fun(r):
        return np.array([(c1 + g1 @ r) ** 2 + (c2 + g2 @ r) ** 2 for (c1, g1), (c2, g2) in zip(ch, ck)])

    v, r = _sphere_numeric(fun)
    return math.sqrt(max(v, 0.0)), _bloch_projection(r), False


@dataclass
class _BlockTable:
    """Per block b and rank m: best value and projection."""

    values: list[list[float]]
    projections: list[list[np.ndarray]]
    exact: bool


def _block_table(X: OperatorSequence, mode: str) -> _BlockTable:
    alg = X.algebra
    if alg.total_dim > EXHAUSTIVE_MAX_DIM:
        raise AlgebraError(f"exhaustive method is limited to total dimension {EXHAUSTIVE_MAX_DIM}")
    if max(alg.dims) > 2:
        raise AlgebraError("exhaustive method needs blocks of size at most 2")
    vals, projs, exact = [], [], True
    for b, d in enumerate(alg.dims):
        blocks = [x.blocks[b] for x in X]
        full = max(float(np.linalg.norm(bl, 2)) for bl in blocks)
        row_v = [0.0]
        row_p = [np.zeros((d, d), dtype=complex)]
        if d == 2:
            v, P, ex = _rank_one_m2(blocks, mode)
            exact = exact and ex
            row_v.append(min(v, full))
            row_p.append(P if v <= full else np.eye(2, dtype=complex))
        row_v.append(full)
        row_p.append(np.eye(d, dtype=complex))
        vals.append(row_v)
        projs.append(row_p)
    return _BlockTable(vals, projs, exact)


class ExhaustiveRearrangement:
    """Exact ``mu_sharp(X, .)`` for algebras with blocks of size <= 2."""

    def __init__(self, X: OperatorSequence, mode: str = "plain"):
        if mode not in MODES:
            raise AlgebraError(f"unknown mode {mode!r}")
        self.X = _as_seq(X)
        self.mode = mode
        self.table = _block_table(self.X, mode)
        alg = self.X.algebra
        allocs = list(itertools.product(*[range(d + 1) for d in alg.dims]))
        costs = np.array([sum(w * (d - m) for w, d, m in zip(alg.weights, alg.dims, a)) for a in allocs])
        vals = np.array([max(self.table.values[b][m] for b, m in enumerate(a)) for a in allocs])
        self._allocs, self._costs, self._vals = allocs, costs, vals

    @property
    def exact(self) -> bool:
        return self.table.exact

    @cached_property
    def breakpoints(self) -> np.ndarray:
        return np.unique(np.round(self._costs, 12))

    def __call__(self, t: float) -> tuple[float, Operator]:
        if t < 0:
            raise ValueError("t must be nonnegative")
        ok = self._costs <= t + 1e-12 * max(1.0, t)
        idx = np.flatnonzero(ok)
        best = idx[np.argmin(self._vals[idx])]
        alloc = self._allocs[best]
        e = Operator(self.X.algebra, [self.table.projections[b][m] for b, m in enumerate(alloc)])
        return float(self._vals[best]), e

    def step_function(self) -> StepFunction:
        bps = self.breakpoints
        vals = [self(t)[0] for t in bps]
        lens = list(np.diff(bps))
        return StepFunction(tuple(_running_min(vals[:-1])), tuple(lens))


def _running_min(v: Sequence[float]) -> list[float]:
    out, cur = [], np.inf
    for x in v:
        cur = min(cur, x)
        out.append(cur)
    return out


# --------------------------------------------------------------------------
# spectral method


def _greedy_complement(Y: Operator, t: float) -> Operator:
    """Keep the eigenvectors of Y left after removing the largest ones within budget t."""
    alg = Y.algebra
    entries = []
    eigs = []
    for b, (blk, w) in enumerate(zip(Y.blocks, alg.weights)):
        lam, U = np.linalg.eigh((blk + blk.conj().T) / 2)
        eigs.append(U)
        for i, l in enumerate(lam):
            entries.append((-l, b, i, w))
    entries.sort()
    removed = [set() for _ in alg.dims]
    used = 0.0
    for _, b, i, w in entries:
        if used + w <= t + 1e-12 * max(1.0, t):
            removed[b].add(i)
            used += w
    out = []
    for b, d in enumerate(alg.dims):
        keep = [i for i in range(d) if i not in removed[b]]
        U = eigs[b][:, keep]
        out.append(U @ U.conj().T)
    return Operator(alg, out)


def _peel(X: OperatorSequence, s: float, mode: str) -> Operator:
    """Sequential corner projections keeping every compressed term below s."""
    q = Operator.identity(X.algebra)
    for x in X:
        if mode == "column":
            y = (q @ x.H @ x @ q).hermitian_part()
        elif mode == "row":
            y = (q @ x @ x.H @ q).hermitian_part()
        else:
            c = q @ x @ q
            y = (c.H @ c).hermitian_part()
        q = corner_spectral_projection(y, q, s * s)
    return q


def _peel_search(X: OperatorSequence, t: float, mode: str, steps: int = 40) -> Operator:
    tau1 = X.algebra.total_trace
    lo, hi = 0.0, X.sup_norm() * (1 + 1e-12)
    best = Operator.identity(X.algebra)
    for _ in range(steps):
        mid = (lo + hi) / 2
        q = _peel(X, mid, mode)
        if tau1 - projection_rank_trace(q) <= t + 1e-12 * max(1.0, t):
            hi, best = mid, q
        else:
            lo = mid
    return best


def spectral_mu(X: OperatorSequence, t: float, mode: str) -> tuple[float, Operator]:
    """Feasible projection with the smallest objective among spectral and peeling candidates."""
    alg = X.algebra
    if t >= alg.total_trace:
        return 0.0, Operator.zeros(alg)
    one = Operator.identity(alg)
    col = sum(((x.H @ x).hermitian_part() for x in X), Operator.zeros(alg))
    row = sum(((x @ x.H).hermitian_part() for x in X), Operator.zeros(alg))
    cands = [one]
    if mode in ("column", "plain"):
        cands.append(_greedy_complement(col, t))
    if mode in ("row", "plain"):
        cands.append(_greedy_complement(row, t))
    if mode == "plain":
        cands.append(_greedy_complement(col + row, t))
    cands.append(_peel_search(X, t, mode))
    best = min(cands, key=lambda e: seq_norm(X, e, mode))
    return seq_norm(X, best, mode), best


# --------------------------------------------------------------------------
# public API


def mu_seq(X, t: float, mode: str = "plain", method: str = "spectral") -> tuple[float, Operator]:
    """``mu_sharp(X, t)`` and a witness projection e with ``tau(1 - e) <= t``."""
    X = _as_seq(X)
    if mode not in MODES:
        raise AlgebraError(f"unknown mode {mode!r}")
    if t < 0:
        raise ValueError("t must be nonnegative")
    if method == "exhaustive":
        return ExhaustiveRearrangement(X, mode)(t)
    if method == "spectral":
        return spectral_mu(X, t, mode)
    raise AlgebraError(f"unknown method {method!r}")


@dataclass
class MuFunction:
    f: StepFunction
    exact: bool
    method: str
    mode: str


def mu_function(X, mode: str = "plain", method: str = "spectral") -> MuFunction:
    """``mu_sharp(X, .)`` as a step function.

    Exhaustive: exact values on every achievable trace (when there are at most
    512 of them).  Otherwise a dyadic grid ``0, 2^k, ..., tau(1)`` with the value
    at each grid point held until the next one, an upper envelope.
    """
    X = _as_seq(X)
    alg = X.algebra
    tau1 = alg.total_trace
    if method == "exhaustive":
        ex = ExhaustiveRearrangement(X, mode)
        if len(ex.breakpoints) <= EXACT_GRID_MAX:
            return MuFunction(ex.step_function(), ex.exact, method, mode)
        fn = lambda t: ex(t)[0]
        exact = False
    else:
        fn = lambda t: spectral_mu(X, t, mode)[0]
        exact = False
    wmin = min(alg.weights)
    ks = range(math.floor(math.log2(wmin)), math.ceil(math.log2(tau1)) + 1)
    grid = [0.0] + [2.0**k for k in ks if 2.0**k < tau1] + [tau1]
    vals = _running_min([fn(t) for t in grid[:-1]])
    return MuFunction(StepFunction(tuple(vals), tuple(np.diff(grid))), exact, method, mode)


def lambda_norm(X, p: float, q: float | None = None, mode: str = "plain", method: str = "spectral") -> float:
    """``||mu_sharp(X)||_{p,q}`` (an upper estimate unless the exhaustive method was exact)."""
    return lorentz_norm(mu_function(X, mode, method).f, p, p if q is None else q)


# --------------------------------------------------------------------------
# the dyadic decomposition


def lorentz_sequence_norm(a: Sequence[float], ks: Sequence[int], p: float, q: float | None = None,
                          alpha: float = 1.0, lump: float = 0.0) -> float:
    """``||(a_k)||_{p,q}`` on the integers with masses ``2^{alpha k}`` (``a`` nonincreasing in k).

    ``lump`` is extra mass carried by the first entry (all lower indices).
    """
    q = p if q is None else q
    lens = [2.0 ** (alpha * k) for k in ks]
    if lens:
        lens[0] += lump
    order = np.argsort(-np.asarray(a), kind="stable")
    return lorentz_norm(StepFunction(tuple(a[i] for i in order), tuple(lens[i] for i in order)), p, q)


def K_p(p: float) -> float:
    """``(1 - 2^{-1/(p-1)})^{-(p-1)}`` for p > 1, and 1 for p <= 1."""
    if p <= 1:
        return 1.0
    return (1.0 - 2.0 ** (-1.0 / (p - 1))) ** (-(p - 1))


def hardy_constant(p: float) -> float:
    """``H_p`` with ``sum_l 2^l (sum_{k>=l} a_k)^p <= H_p sum_k 2^k a_k^p`` for ``p >= 1``.

    Hoelder with the split ``2^{-k/p} = 2^{-k/2p} 2^{-k/2p}`` gives
    ``H_p = (1 - 2^{-1/(2(p-1))})^{-(p-1)} / (1 - 2^{-1/2})``.
    """
    if p < 1:
        raise ValueError("p must be at least 1")
    head = 1.0 if p == 1 else (1.0 - 2.0 ** (-1.0 / (2 * (p - 1)))) ** (-(p - 1))
    return head / (1.0 - 2.0**-0.5)


@dataclass
class LambdaDecomposition:
    a: list[float]
    ks: list[int]
    q: list[Operator]
    U: list[OperatorSequence]
    alpha: float
    lump: float
    X: OperatorSequence
    report: dict = field(default_factory=dict)

    def reconstruct(self) -> OperatorSequence:
        terms = [Operator.zeros(self.X.algebra) for _ in self.X]
        for ak, Uk, qk in zip(self.a, self.U, self.q):
            terms = [t + (u @ qk) * ak for t, u in zip(terms, Uk)]
        return OperatorSequence(terms)

    def residual(self) -> float:
        return max((a - b).norm() for a, b in zip(self.reconstruct(), self.X))

    def sequence_norm(self, p: float, q: float | None = None) -> float:
        return lorentz_sequence_norm(self.a, self.ks, p, q, self.alpha, self.lump)


def _decreasing_ladder(X: OperatorSequence, mode: str, method: str, alpha: float):
    """Witnesses at budgets ``2^{alpha k}(1 - 2^{-alpha})`` turned into a decreasing family."""
    alg = X.algebra
    tau1 = alg.total_trace
    wmin = min(alg.weights)
    frac = 1.0 - 2.0**-alpha
    k_lo = math.floor(math.log2(wmin / frac) / alpha)
    while 2.0 ** (alpha * k_lo) * frac >= wmin:
        k_lo -= 1
    k_hi = math.ceil(math.log2(tau1 / frac) / alpha) + 1
    ex = ExhaustiveRearrangement(X, mode) if method == "exhaustive" else None
    one = Operator.identity(alg)
    es = {k_lo: one}
    fs = []
    for k in range(k_lo + 1, k_hi + 1):
        b = 2.0 ** (alpha * k) * frac
        f = ex(b)[1] if ex is not None else spectral_mu(X, b, mode)[1]
        fs.append(f)
        es[k] = range_meet([one] + fs)
    return k_lo, k_hi, es


def lambda_decompose(X, p: float, q: float | None = None, alpha: float = 1.0, mode: str = "column",
                     method: str = "spectral") -> LambdaDecomposition:
    """``X = sum_k a_k U_k q_k`` with disjoint ``q_k``, ``tau(q_k) <= 2^{alpha k}``, contractions ``U_k``.

    Row mode decomposes the adjoint sequence.  The report compares
    ``||(a_k)||_{p,q,omega}`` with ``||X||_{Lambda_{p,q}}`` in both directions.
    """
    X = _as_seq(X)
    if mode == "row":
        dec = lambda_decompose(X.adjoint(), p, q, alpha, "column", method)
        dec.report["mode"] = "row"
        return dec
    if mode != "column":
        raise AlgebraError("lambda_decompose works in column or row mode")
    alg = X.algebra
    if X.sup_norm() == 0:
        return LambdaDecomposition([], [], [], [], alpha, 0.0, X, {"empty": True})
    k_lo, k_hi, es = _decreasing_ladder(X, "column", method, alpha)
    a, ks, qs, Us = [], [], [], []
    lump = 0.0
    for k in range(k_lo + 1, k_hi + 1):
        qk = (es[k - 1] - es[k]).hermitian_part()
        if projection_rank_trace(qk) == 0:
            continue
        ak = seq_norm(X, es[k - 1], "column")
        if ak == 0:
            continue
        if not ks:
            lump = 2.0 ** (alpha * k) / (2.0**alpha - 1.0)
        a.append(ak)
        ks.append(k)
        qs.append(qk)
        Us.append(OperatorSequence([(x @ qk) / ak for x in X]))
    dec = LambdaDecomposition(a, ks, qs, Us, alpha, lump, X)
    qq = p if q is None else q
    lam = lambda_norm(X, p, qq, "column", method)
    seqn = dec.sequence_norm(p, qq)
    c_low = (2.0 * 2.0**alpha / (1.0 - 2.0**-alpha) ** 2) ** (1.0 / p)
    dec.report = {
        "residual": dec.residual(),
        "lambda_norm": lam,
        "sequence_norm": seqn,
        "ratio_sequence_over_lambda": seqn / lam if lam > 0 else 0.0,
        "ratio_lambda_over_sequence": lam / seqn if seqn > 0 else 0.0,
        "lower_constant": c_low,
        "K_p_root": K_p(p) ** (1.0 / p),
        "hardy_upper": (2.0 * hardy_constant(p)) ** (1.0 / p) * seqn if alpha == 1.0 and qq == p else None,
        "trace_ok": all(projection_rank_trace(qk) <= 2.0 ** (alpha * k) * (1 + 1e-12) for k, qk in zip(ks, qs)),
        "contractions_ok": all(U.sup_norm() <= 1 + EPS_NUM for U in Us),
        "exact": method == "exhaustive",
    }
    return dec


def lambda_split(X, method: str = "spectral", alpha: float = 1.0) -> tuple[OperatorSequence, OperatorSequence, dict]:
    """``X = C + R`` with ``C = sum_k e_{k-1} X q_k`` (column part) and ``R = sum_k q_k X e_k`` (row part).

    ``e_k`` is the decreasing family built from plain-mode witnesses and
    ``q_k = e_{k-1} - e_k``.
    """
    X = _as_seq(X)
    alg = X.algebra
    k_lo, k_hi, es = _decreasing_ladder(X, "plain", method, alpha)
    zero = Operator.zeros(alg)
    C = [zero for _ in X]
    R = [zero for _ in X]
    for k in range(k_lo + 1, k_hi + 1):
        qk = (es[k - 1] - es[k]).hermitian_part()
        if projection_rank_trace(qk) == 0:
            continue
        C = [c + es[k - 1] @ x @ qk for c, x in zip(C, X)]
        R = [r + qk @ x @ es[k] for r, x in zip(R, X)]
    C, R = OperatorSequence(C), OperatorSequence(R)
    res = max((c + r - x).norm() for c, r, x in zip(C, R, X))
    return C, R, {"residual": res}


# --------------------------------------------------------------------------
# K-functional


def k_functional_exact(f: StepFunction, t: float, p: float) -> float:
    """``K(t, f; L_p, L_inf) = min_lambda ||(f - lambda)_+||_p + t lambda`` on a step function."""
    if not f.values:
        return 0.0
    vals = np.asarray(f.values)
    lens = np.asarray(f.lengths)

    def cost(lam):
        return float(np.sum(np.clip(vals - lam, 0, None) ** p * lens)) ** (1.0 / p) + t * lam

    cands = [cost(0.0), cost(float(vals[0]))] + [cost(float(v)) for v in vals]
    res = minimize_scalar(cost, bounds=(0.0, float(vals[0])), method="bounded",
                          options={"xatol": 1e-12 * max(1.0, float(vals[0]))})
    cands.append(float(res.fun))
    # the cost is convex in lambda and smooth between values: refine each segment
    edges = np.concatenate([[0.0], np.sort(vals)])
    for lo, hi in zip(edges[:-1], edges[1:]):
        if hi > lo:
            r = minimize_scalar(cost, bounds=(lo, hi), method="bounded", options={"xatol": 1e-13 * max(1.0, hi)})
            cands.append(float(r.fun))
    return min(cands)


def holmstedt(f: StepFunction, t: float, p: float) -> float:
    """``(int_0^{t^p} f^p)^{1/p}``."""
    return f.power(p).primitive(t**p) ** (1.0 / p)


def k_functional(X, t: float, p: float, method: str = "exhaustive") -> tuple[float, float, dict]:
    """Lower and upper bounds for ``K(t, X; Lambda_p, Lambda_inf)`` (plain mode).

    lower: the exact K-functional of ``mu(X)`` for ``(L_p, L_inf)``.
    upper: the cost of the splitting ``X = e X e + ((1 - e) X + e X (1 - e))``
    with e a witness of ``mu(X, t^p)``.
    """
    X = _as_seq(X)
    if not t > 0:
        raise ValueError("t must be positive")
    mf = mu_function(X, "plain", method)
    lower = k_functional_exact(mf.f, t, p)
    val, e = mu_seq(X, t**p, "plain", method)
    one = Operator.identity(X.algebra)
    B = OperatorSequence([e @ x @ e for x in X])
    A = OperatorSequence([(one - e) @ x + e @ x @ (one - e) for x in X])
    a_norm = lambda_norm(A, p, p, "plain", method) if A.sup_norm() > 0 else 0.0
    b_norm = B.sup_norm()
    upper = a_norm + t * b_norm
    info = {"holmstedt": holmstedt(mf.f, t, p), "a_norm": a_norm, "b_norm": b_norm, "mu_at_tp": val,
            "exact": mf.exact, "ratio": upper / lower if lower > 0 else 1.0}
    return lower, upper, info
