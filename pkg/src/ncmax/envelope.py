"""Operator domination problems behind the strong maximal norms.

Three kinds, all of the form ``minimize tau(a^r)`` subject to ``a >= M_j``:

========  =====================  ============  ==========================
kind      constraints            exponent r    reported value
========  =====================  ============  ==========================
``pos``   ``a >= x_n``           p             ``||a||_p``
``sa``    ``-a <= x_n <= a``     p             ``||a||_p``
``col``   ``c >= x_n^* x_n``     p / 2         ``||c^{1/2}||_p``
========  =====================  ============  ==========================

The solver is a log-barrier method with Newton steps on a real basis of the
(real symmetric or Hermitian) matrices of each block.  Objective and
constraints separate over the blocks of the algebra, so every block is solved
on its own and the optimal values are summed with the block weights.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from .algebra import EPS_NUM, AlgebraError, Operator, lambda_min, psd_check

KINDS = ("pos", "sa", "col")


@dataclass
class EnvelopeProblem:
    kind: str
    sequence: Sequence[Operator]
    p: float

    def __post_init__(self):
        if self.kind not in KINDS:
            raise AlgebraError(f"unknown envelope kind {self.kind!r}; expected one of {KINDS}")
        seq = list(getattr(self.sequence, "terms", self.sequence))
        if not seq:
            raise AlgebraError("empty operator sequence")
        alg = seq[0].algebra
        if any(x.algebra != alg for x in seq):
            raise AlgebraError("all operators must live in the same algebra")
        if not self.p >= 1:
            raise AlgebraError("p must be at least 1")
        if self.kind == "pos":
            for i, x in enumerate(seq):
                ok, lmin = psd_check(x.hermitian_part()) if x.is_selfadjoint(1e-9) else (False, float("nan"))
                if not ok:
                    raise AlgebraError(f"positive-domination needs PSD terms; term {i} fails (lambda_min={lmin:.3g})")
        if self.kind == "sa" and not all(x.is_selfadjoint(1e-9) for x in seq):
            raise AlgebraError("selfadjoint-envelope needs self-adjoint terms")
        if self.kind == "col" and self.p < 2:
            raise AlgebraError("column kind needs p >= 2")
        self.sequence = seq

    @property
    def algebra(self):
        return self.sequence[0].algebra

    @property
    def exponent(self) -> float:
        return self.p / 2 if self.kind == "col" else self.p

    def constraints(self) -> list[Operator]:
        if self.kind == "pos":
            return [x.hermitian_part() for x in self.sequence]
        if self.kind == "sa":
            out = []
            for x in self.sequence:
                h = x.hermitian_part()
                out.extend([h, -h])
            return out
        return [(x.H @ x).hermitian_part() for x in self.sequence]


@dataclass
class EnvelopeSolution:
    optimum: Operator
    value: float
    feasibility: float
    stationarity: float
    iterations: int
    gap: float
    gap_flag: bool = False
    kind: str = "pos"
    p: float = 2.0
    dominating: Operator | None = None

    def to_json(self) -> dict:
        return {
            "schema": "ncmax/1",
            "kind": self.kind,
            "p": "inf" if self.p == np.inf else self.p,
            "value": self.value,
            "feasibility": self.feasibility,
            "stationarity": self.stationarity,
            "iterations": self.iterations,
            "gap": self.gap,
            "gap_flag": self.gap_flag,
            "optimum": self.optimum.to_json(),
        }


# --------------------------------------------------------------------------
# bases and Kronecker helpers


def _basis(d: int, real: bool) -> np.ndarray:
    """Columns are row-major vectorizations of a Frobenius-orthonormal basis."""
    cols = []
    for i in range(d):
        e = np.zeros((d, d), dtype=complex)
        e[i, i] = 1.0
        cols.append(e.reshape(-1))
    s = 1 / math.sqrt(2)
    for i in range(d):
        for j in range(i + 1, d):
            e = np.zeros((d, d), dtype=complex)
            e[i, j] = e[j, i] = s
            cols.append(e.reshape(-1))
            if not real:
                f = np.zeros((d, d), dtype=complex)
                f[i, j], f[j, i] = -1j * s, 1j * s
                cols.append(f.reshape(-1))
    return np.array(cols).T


def _to_matrix(P: np.ndarray, v: np.ndarray, d: int) -> np.ndarray:
    m = (P @ v).reshape(d, d)
    return (m + m.conj().T) / 2


def _divided_differences(lam: np.ndarray, r: float) -> np.ndarray:
    """Matrix of divided differences of ``f'(t) = r t^{r-1}``."""
    fp = r * lam ** (r - 1)
    fpp = r * (r - 1) * lam ** (r - 2) if r != 1 else np.zeros_like(lam)
    li, lj = np.meshgrid(lam, lam, indexing="ij")
    diff = li - lj
    close = np.abs(diff) <= 1e-12 * np.maximum(1.0, np.maximum(np.abs(li), np.abs(lj)))
    with np.errstate(divide="ignore", invalid="ignore"):
        g = (fp[:, None] - fp[None, :]) / diff
    avg = (np.broadcast_to(fpp[:, None], g.shape) + np.broadcast_to(fpp[None, :], g.shape)) / 2
    return np.where(close, avg, g)


def _solve_block(Ms: list[np.ndarray], r: float, tol: float, max_iter: int) -> dict:
    """Barrier method for ``min tr(a^r)`` s.t. ``a > M_j`` on one block."""
    d = Ms[0].shape[0]
    real = all(np.allclose(M.imag, 0) for M in Ms)
    P = _basis(d, real)
    PH = P.conj().T
    top = max(float(np.linalg.eigvalsh(M)[-1]) for M in Ms)
    a = np.eye(d) * (max(top, 0.0) + 1.0 + max(abs(top), 1.0))
    nu = len(Ms) * d
    t = nu / max(float(np.sum(np.linalg.eigvalsh(a) ** r)), 1e-300)
    mu_step = 8.0
    iters = 0
    flag = False

    def parts(a):
        lam, U = np.linalg.eigh(a)
        if lam[0] <= 0:
            return None
        f = float(np.sum(lam**r))
        G = (U * (r * lam ** (r - 1))) @ U.conj().T
        Ws = []
        for M in Ms:
            S = a - M
            try:
                L = np.linalg.cholesky(S)
            except np.linalg.LinAlgError:
                return None
            Li = np.linalg.inv(L)
            Ws.append((Li.conj().T @ Li, 2 * float(np.sum(np.log(np.diag(L).real)))))
        return lam, U, f, G, Ws

    def merit(a, t):
        pr = parts(a)
        if pr is None:
            return np.inf
        _, _, f, _, Ws = pr
        return t * f - sum(ld for _, ld in Ws)

    while True:
        for _ in range(100):
            iters += 1
            pr = parts(a)
            lam, U, f, G, Ws = pr
            Wsum = sum(W for W, _ in Ws)
            grad = np.real(PH @ (t * G - Wsum).reshape(-1))
            Gam = _divided_differences(lam, r)
            UU = np.kron(U, U.conj())
            Kobj = (UU * Gam.reshape(-1)) @ UU.conj().T
            K = t * Kobj
            for W, _ in Ws:
                K = K + np.kron(W, W.T)
            H = np.real(PH @ K @ P)
            H = (H + H.T) / 2
            try:
                step = -np.linalg.solve(H, grad)
            except np.linalg.LinAlgError:
                step = -np.linalg.lstsq(H, grad, rcond=None)[0]
            dec = float(-grad @ step)
            if dec / 2 <= 1e-10:
                break
            D = _to_matrix(P, step, d)
            m0 = t * f - sum(ld for _, ld in Ws)
            s = 1.0
            while s > 1e-14:
                cand = a + s * D
                if merit(cand, t) <= m0 - 0.25 * s * dec:
                    break
                s *= 0.5
            if s <= 1e-14:
                break
            a = (a + s * D)
            a = (a + a.conj().T) / 2
            if iters >= max_iter:
                flag = True
                break
        f = float(np.sum(np.clip(np.linalg.eigvalsh(a), 0, None) ** r))
        if nu / t <= tol * max(f, 1e-300) or flag:
            break
        t *= mu_step
    pr = parts(a)
    lam, U, f, G, Ws = pr
    Z = sum(W for W, _ in Ws) / t
    stat = float(np.linalg.norm(np.real(PH @ (G - Z).reshape(-1)))) / max(1.0, float(np.linalg.norm(G)))
    return {"a": a, "f": f, "gap": nu / t, "iters": iters, "flag": flag, "stat": stat}


def solve_envelope(prob: EnvelopeProblem, tol: float = 1e-6, max_iter: int = 500) -> EnvelopeSolution:
    """Minimize the trace-power objective of ``prob`` to relative duality gap ``tol``."""
    alg = prob.algebra
    cons = prob.constraints()
    if prob.p == np.inf:
        val = max(float(np.linalg.eigvalsh(M.blocks[b])[-1]) for M in cons for b in range(len(alg.blocks)))
        val = max(val, 0.0)
        a = Operator.identity(alg) * val
        if prob.kind == "col":
            val = math.sqrt(val)
            opt = Operator.identity(alg) * val
        else:
            opt = a
        feas = min(lambda_min((a - M).hermitian_part()) for M in cons)
        return EnvelopeSolution(opt, val, feas, 0.0, 0, 0.0, False, prob.kind, prob.p, a)
    r = prob.exponent
    blocks, total, gap, iters, flag, stat = [], 0.0, 0.0, 0, False, 0.0
    for b, w in enumerate(alg.weights):
        Ms = [M.blocks[b] for M in cons]
        res = _solve_block(Ms, r, tol, max_iter)
        blocks.append(res["a"])
        total += w * res["f"]
        gap += w * res["gap"]
        iters += res["iters"]
        flag = flag or res["flag"]
        stat = max(stat, res["stat"])
    a = Operator(alg, blocks)
    feas = min(lambda_min((a - M).hermitian_part()) for M in cons) / max(1.0, a.norm())
    value = total ** (1.0 / prob.p)
    if prob.kind == "col":
        from .algebra import sqrtm_psd

        opt = sqrtm_psd(a)
    else:
        opt = a
    return EnvelopeSolution(opt, value, feas, stat, iters, gap / max(total, 1e-300), flag, prob.kind, prob.p, a)


# --------------------------------------------------------------------------
# diagonal reduction


@dataclass(frozen=True)
class DiagonalEnvelopeProblem:
    """``minimize (sum w_i d_i^p)^{1/p}`` subject to ``sum alpha_i^2 / d_i^2 <= 1``."""

    weights: tuple[float, ...]
    alphas: tuple[float, ...]
    p: float

    def __post_init__(self):
        if len(self.weights) != len(self.alphas):
            raise AlgebraError("weights and alphas must have the same length")
        if any(w <= 0 for w in self.weights):
            raise AlgebraError("weights must be positive")
        if any(a < 0 for a in self.alphas):
            raise AlgebraError("alphas must be nonnegative")
        if not self.p > 0:
            raise AlgebraError("p must be positive")


def solve_diagonal(prob: DiagonalEnvelopeProblem) -> tuple[np.ndarray, float]:
    """Closed form: ``d_i`` proportional to ``(alpha_i^2 / w_i)^{1/(p+2)}``, constraint active."""
    w = np.asarray(prob.weights, dtype=float)
    al = np.asarray(prob.alphas, dtype=float)
    if not np.any(al > 0):
        return np.zeros_like(w), 0.0
    p = prob.p
    # work in logs: the families reach 2^{+-100}
    with np.errstate(divide="ignore"):
        log_shape = (2 * np.log(al) - np.log(w)) / (p + 2)
    act = al > 0
    ls = np.where(act, log_shape, -np.inf)
    # sum alpha^2 / (kappa shape)^2 = 1  =>  2 ln kappa = ln sum alpha^2 shape^-2
    terms = 2 * np.log(al[act]) - 2 * ls[act]
    log_kappa = 0.5 * _logsumexp(terms)
    d = np.where(act, np.exp(ls + log_kappa), 0.0)
    obj_log = _logsumexp(np.log(w[act]) + p * (ls[act] + log_kappa)) / p
    return d, float(np.exp(obj_log))


def solve_diagonal_log(prob: DiagonalEnvelopeProblem) -> float:
    """Natural log of the optimal objective (no overflow for huge families)."""
    w = np.asarray(prob.weights, dtype=float)
    al = np.asarray(prob.alphas, dtype=float)
    act = al > 0
    if not act.any():
        return -np.inf
    p = prob.p
    ls = (2 * np.log(al[act]) - np.log(w[act])) / (p + 2)
    log_kappa = 0.5 * _logsumexp(2 * np.log(al[act]) - 2 * ls)
    return float(_logsumexp(np.log(w[act]) + p * (ls + log_kappa)) / p)


def _logsumexp(v: np.ndarray) -> float:
    v = np.asarray(v, dtype=float)
    m = float(np.max(v))
    return m + math.log(float(np.sum(np.exp(v - m))))


def fit_slope(xs: Sequence[float], ys: Sequence[float]) -> float:
    """Least-squares slope of ``log y`` against ``log x``."""
    return float(np.polyfit(np.log(np.asarray(xs, float)), np.log(np.asarray(ys, float)), 1)[0])


@dataclass
class GrowthReport:
    label: str
    grid: list
    values: list
    slope: float
    predicted: float | None = None
    tolerance: float = 0.1
    reliable: bool = True
    extra: dict = field(default_factory=dict)

    @property
    def passed(self) -> bool:
        if self.predicted is None:
            return self.reliable
        return self.reliable and abs(self.slope - self.predicted) <= self.tolerance

    def to_json(self) -> dict:
        return {
            "label": self.label,
            "grid": list(self.grid),
            "values": [float(v) for v in self.values],
            "slope": self.slope,
            "predicted": self.predicted,
            "tolerance": self.tolerance,
            "reliable": self.reliable,
            "passed": self.passed,
            "extra": self.extra,
        }

    def csv_rows(self) -> list[list]:
        return [[self.label, g, v, self.slope] for g, v in zip(self.grid, self.values)]


def verify_counterexample_growth(family: str, grid: Sequence, p: float = 2.0, tol: float = 1e-7,
                                 method: str = "auto", **kw) -> GrowthReport:
    """Fit log-log growth for one of the explicit families.

    ``family``:
      * ``nonpos``: self-adjoint envelope of ``e_{n1} + e_{1n}`` against N^{1/p};
      * ``ll_col`` / ``ll_lambda``: column envelope and Lambda_p^c bound of the
        block family, against N;
      * ``opti``: diagonal objective against ``1/(p-1)`` over a grid of p.
    """
    from . import families as fam

    grid = list(grid)
    extra = {}
    reliable = True
    if family == "nonpos":
        vals = []
        for N in grid:
            if method == "solver" or (method == "auto" and N <= 12):
                sol = solve_envelope(EnvelopeProblem("sa", fam.gen_nonpositive(N).images_of_one(), p), tol)
                reliable = reliable and not sol.gap_flag
                vals.append(sol.value)
            else:
                vals.append(fam.nonpositive_envelope_value(N, p))
        xs = [N ** (1.0 / p) for N in grid]
        return GrowthReport("nonpos", grid, vals, fit_slope(xs, vals), kw.get("predicted"), 0.1, reliable,
                            {"power_slope": fit_slope(xs, [v**p for v in vals])})
    if family == "ll_col":
        vals = [fam.ll_column_value(N, p) for N in grid]
        return GrowthReport("ll_col", grid, vals, fit_slope(grid, vals), 0.5 + 1.0 / p, 0.1, True, extra)
    if family == "ll_lambda":
        vals = [fam.ll_lambda_decomposition_bound(N, p) for N in grid]
        removal = [fam.ll_lambda_upper(N, p) for N in grid]
        extra = {"block_removal_values": removal, "block_removal_slope": fit_slope(grid, removal)}
        return GrowthReport("ll_lambda", grid, vals, fit_slope(grid, vals), 1.0 / p, 0.1, True, extra)
    if family == "opti":
        ps = grid
        logs = []
        for q in ps:
            N = math.ceil(2 / (q - 1))
            logs.append(solve_diagonal_log(fam.opti_diagonal(N, q)))
        xs = np.log([1.0 / (q - 1) for q in ps])
        slope = float(np.polyfit(xs, logs, 1)[0])
        return GrowthReport("opti", ps, [math.exp(v) if v < 700 else float("inf") for v in logs], slope,
                            None, 0.1, True, {"log_values": logs})
    raise AlgebraError(f"unknown family {family!r}")
