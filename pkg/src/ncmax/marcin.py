"""Constructive Marcinkiewicz interpolation for maximal inequalities.

Given a positive family ``S_n`` of weak types ``(p0, p0)`` and ``(p1, p1)``
(supplied as oracles), build an explicit ``z`` with ``0 <= S_n(x) <= z`` for
every n and control ``||z||_p`` for ``p0 < p < p1``.

Pipeline:

* :func:`projection_ladder` calls the oracles on a projection ``r`` at the
  levels ``lambda_k`` and turns the answers into disjoint ``q_k`` summing to 1.
* :func:`basic_majorant` weighs the ladder, ``z = sum_k dt_k q_k``.
* :func:`marcinkiewicz_majorant` splits ``x`` into binary digits and sums the
  per-digit majorants.
* :func:`asymmetric_factorization` and :func:`row_column_decompose` are the
  variants that factor ``S_n(x)`` rather than dominate it.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from functools import lru_cache
from typing import Sequence

import numpy as np

from .algebra import (
    EPS_NUM,
    EPS_RANK,
    AlgebraError,
    Operator,
    lambda_min,
    pinv_psd,
    positive_split,
    power,
    projection_rank_trace,
    psd_check,
    range_join,
    sqrtm_psd,
)
from .dyadic import dyadic_decompose
from .facto import row_column_factor
from .oracle import MapFamily, WeakTypeOracle
from .stepfn import StepFunction, dilate, hl_majorize, mu, sum_steps


class OracleViolation(RuntimeError):
    """An oracle returned a projection that breaks its weak-type contract."""


class ParameterError(ValueError):
    pass


# --------------------------------------------------------------------------
# parameters and weights


@dataclass(frozen=True)
class InterpolationParams:
    """Endpoints ``p0 < p < p1`` with ``1/p = (1-theta)/p0 + theta/p1``.

    ``quasi=True`` allows ``0 < p0 < 1``.
    """

    p0: float
    p1: float
    p: float
    C0: float = 1.0
    C1: float = 1.0
    quasi: bool = False

    def __post_init__(self):
        lo = 0.0 if self.quasi else 1.0
        if not (self.p0 > lo or (not self.quasi and self.p0 == 1.0)):
            raise ParameterError(f"p0 must be {'> 0' if self.quasi else '>= 1'}, got {self.p0}")
        if not self.p0 < self.p < self.p1:
            raise ParameterError(f"need p0 < p < p1, got ({self.p0}, {self.p}, {self.p1})")
        if self.C0 <= 0 or self.C1 <= 0:
            raise ParameterError("oracle constants must be positive")

    @property
    def theta(self) -> float:
        inv1 = 0.0 if self.p1 == np.inf else 1.0 / self.p1
        return (1.0 / self.p0 - 1.0 / self.p) / (1.0 / self.p0 - inv1)

    @property
    def index_set_lower(self) -> float:
        """Smallest index of the ladder: 0 when p1 is infinite, otherwise unbounded."""
        return 0 if self.p1 == np.inf else -np.inf

    @property
    def alpha(self) -> float:
        """``(1/p0 - 1/p)^-1 + (1/p - 1/p1)^-1`` (both terms positive)."""
        inv1 = 0.0 if self.p1 == np.inf else 1.0 / self.p1
        return 1.0 / (1.0 / self.p0 - 1.0 / self.p) + 1.0 / (1.0 / self.p - inv1)

    def lam(self, k: int) -> float:
        """Level passed to the oracles at rung k."""
        if k >= 1:
            return self.C0 * 2.0 ** (-(k - 2) / self.p0)
        if self.p1 == np.inf:
            return self.C1
        return self.C1 * 2.0 ** (-(k - 2) / self.p1)

    def to_json(self) -> dict:
        return {
            "p0": self.p0,
            "p1": "inf" if self.p1 == np.inf else self.p1,
            "p": self.p,
            "theta": self.theta,
            "alpha": self.alpha,
            "C0": self.C0,
            "C1": self.C1,
            "quasi": self.quasi,
        }

    @classmethod
    def from_json(cls, obj) -> "InterpolationParams":
        try:
            p1 = obj["p1"]
            p1 = np.inf if p1 in ("inf", None) else float(p1)
            out = cls(float(obj["p0"]), p1, float(obj["p"]), float(obj.get("C0", 1.0)),
                      float(obj.get("C1", 1.0)), bool(obj.get("quasi", False)))
        except KeyError as exc:
            raise ParameterError(f"params: missing field {exc}") from exc
        if "theta" in obj and abs(float(obj["theta"]) - out.theta) > EPS_NUM:
            raise ParameterError(f"params: field 'theta' = {obj['theta']} disagrees with (p0, p1, p)")
        return out


_LOGSQ_K = 10**6


@lru_cache(maxsize=None)
def _logsquare_half_sum() -> float:
    """``sum_{k>=1} 1/(k ln(k)^2 + 1)``: direct sum to 10^6 plus the integral tail ``1/ln K``."""
    k = np.arange(1, _LOGSQ_K + 1, dtype=float)
    d = k * np.log(k) ** 2 + 1.0
    return float(np.sum(1.0 / d)) + 1.0 / math.log(_LOGSQ_K)


@dataclass(frozen=True)
class WeightSequence:
    """Ladder weights ``d_k``.

    ``geometric``: ``2^{k(1/p0-1/p)/2}`` for k >= 1 and ``2^{k(1/p1-1/p)/2}`` for k <= 0
    (depends on p).  ``logsquare``: ``|k| ln(|k|)^2 + 1`` (independent of p).
    """

    kind: str
    params: InterpolationParams

    def __post_init__(self):
        if self.kind not in ("geometric", "logsquare"):
            raise ParameterError(f"unknown weight kind {self.kind!r}")

    @property
    def _betas(self) -> tuple[float, float]:
        P = self.params
        inv1 = 0.0 if P.p1 == np.inf else 1.0 / P.p1
        return (1.0 / P.p0 - 1.0 / P.p) / 2.0, (1.0 / P.p - inv1) / 2.0

    def d(self, k: int) -> float:
        if self.kind == "logsquare":
            a = abs(k)
            return a * math.log(a) ** 2 + 1.0 if a > 1 else 1.0
        b0, b1 = self._betas
        return 2.0 ** (k * b0) if k >= 1 else 2.0 ** (-k * b1)

    @property
    def C_d(self) -> float:
        """``sum_{k in I} 1/d_k`` over the full index set."""
        full = self.params.p1 != np.inf
        if self.kind == "logsquare":
            half = _logsquare_half_sum()
            return 1.0 + half * (2.0 if full else 1.0)
        b0, b1 = self._betas
        pos = 2.0**-b0 / (1.0 - 2.0**-b0)
        return pos + (1.0 / (1.0 - 2.0**-b1) if full else 1.0)

    def tilde_factor(self) -> float:
        """Prefactor of ``dt_k``: 4, or ``2^{2/p0}`` when it is larger (quasi endpoints)."""
        return max(4.0, 2.0 ** (2.0 / self.params.p0))

    def dtilde(self, k: int) -> float:
        P = self.params
        c = self.tilde_factor() * self.C_d * self.d(k)
        if k >= 1:
            return P.C0 * c * 2.0 ** (-k / P.p0)
        return P.C1 * c * (1.0 if P.p1 == np.inf else 2.0 ** (-k / P.p1))

    def _index_range(self, p: float, rate_floor: float = 80.0) -> tuple[int, int]:
        # the slowest summand decays like 2^{-|k| min(1, p) beta}
        P = self.params
        b0, b1 = self._betas
        s = min(1.0, p)
        hi = int(math.ceil(rate_floor / max(s * b0, 1e-6))) + 40
        lo = 0 if P.p1 == np.inf else -(int(math.ceil(rate_floor / max(s * b1, 1e-6))) + 40)
        return lo, hi

    def dilation_sum(self, p: float | None = None) -> float:
        """``sum_{k in I} dt_k 2^{k/p}``; finite exactly when p0 < p < p1."""
        p = self.params.p if p is None else p
        lo, hi = self._index_range(p)
        return float(sum(self.dtilde(k) * 2.0 ** (k / p) for k in range(lo, hi + 1)))

    def geometric_formula(self) -> float:
        """Explicit constant of the geometric choice (the bound with the squared bracket)."""
        P = self.params
        first = 1.0 / (1.0 - 2.0 ** ((1.0 / P.p - 1.0 / P.p0) / 2.0))
        if P.p1 == np.inf:
            second = 1.0
        else:
            second = 2.0 / (1.0 - 2.0 ** ((1.0 / P.p1 - 1.0 / P.p) / 2.0))
        return 8.0 * (first + second) ** 2 * max(P.C0, P.C1)

    def quasi_sum(self, p: float | None = None) -> float:
        """``sum_{k in I} dt_k^p 2^k`` used by the p-triangle estimate."""
        p = self.params.p if p is None else p
        lo, hi = self._index_range(p)
        return float(sum(self.dtilde(k) ** p * 2.0**k for k in range(lo, hi + 1)))


def geometric_bound(p: float, p0: float = 1.0, p1: float = np.inf) -> float:
    return WeightSequence("geometric", InterpolationParams(p0, p1, p)).geometric_formula()


# --------------------------------------------------------------------------
# the ladder for a single projection


@dataclass
class Ladder:
    ks: list[int]
    q: list[Operator]
    t: float
    smax: float
    images: list[Operator]


def projection_ladder(S: MapFamily, o0: WeakTypeOracle, o1: WeakTypeOracle, r: Operator,
                      params: InterpolationParams, eps: float = EPS_NUM) -> Ladder:
    """Disjoint projections ``q_k`` summing to 1 with ``||q_k S_n(r) q_k|| <= lambda_k``.

    Rungs below the point where ``lambda_k`` exceeds ``sup_n ||S_n(r)||`` are
    set to 1, rungs above the point where the trace budget ``2^{k-2} t`` covers
    the whole algebra are set to 0; in between the oracles are called.
    """
    if not r.is_projection(1e-8):
        raise AlgebraError("input must be a projection")
    t = projection_rank_trace(r)
    images = S.apply(r)
    smax = max(y.norm() for y in images)
    tgt = S.target
    one = Operator.identity(tgt)
    if smax == 0 or t == 0:
        return Ladder([0], [one], t, 0.0, images)

    tau1 = tgt.total_trace
    if params.p1 == np.inf:
        if smax > params.C1 * (1 + eps):
            raise OracleViolation(
                f"sup_n ||S_n(r)|| = {smax:.6g} exceeds the strong (inf, inf) constant {params.C1}")
        k_lo = 0
    else:
        k_lo = min(0, math.floor(2 - params.p1 * math.log2(smax / params.C1)))
    k_hi = max(1, math.ceil(2 + math.log2(tau1 / t)), k_lo + 1)

    es = {k_lo: one}
    for k in range(k_lo + 1, k_hi):
        lam = params.lam(k)
        o = o0 if k >= 1 else o1
        e = o(r, lam)
        budget = 2.0 ** (k - 2) * t
        miss = tau1 - projection_rank_trace(e)
        if miss > budget * (1 + 1e-12) + 1e-12:
            raise OracleViolation(f"rung {k}: tau(1-e) = {miss:.6g} > 2^(k-2) t = {budget:.6g}")
        worst = max((e @ y @ e).norm() for y in images)
        if worst > lam * (1 + eps):
            raise OracleViolation(f"rung {k}: ||e S_n(r) e|| = {worst:.6g} > lambda = {lam:.6g}")
        es[k] = e
    es[k_hi] = Operator.zeros(tgt)

    # decreasing family 1 - join_{i <= k}(1 - e_i)
    mono, comp = {}, []
    for k in range(k_lo, k_hi + 1):
        comp.append(one - es[k])
        mono[k] = one - range_join(comp)
    ks, qs = [], []
    for k in range(k_lo, k_hi):
        qk = (mono[k] - mono[k + 1]).hermitian_part()
        if projection_rank_trace(qk) > 0:
            ks.append(k)
            qs.append(qk)
    return Ladder(ks, qs, t, smax, images)


# --------------------------------------------------------------------------
# certificates


@dataclass
class MajorantCertificate:
    z: Operator
    residuals: list[float]
    norm_report: dict = field(default_factory=dict)
    q: dict = field(default_factory=dict)
    u: list | None = None
    passed: bool = True
    checks: dict = field(default_factory=dict)

    @property
    def a(self) -> Operator:
        return sqrtm_psd(self.z)

    def to_json(self, include_matrix: bool = True) -> dict:
        out = {
            "schema": "ncmax/1",
            "passed": bool(self.passed),
            "residuals": [float(v) for v in self.residuals],
            "norm_report": _jsonable(self.norm_report),
            "checks": _jsonable(self.checks),
        }
        if include_matrix:
            out["z"] = self.z.to_json()
        if self.u is not None:
            out["u_norms"] = [float(v.norm()) for v in self.u]
        return out


def _jsonable(v):
    if isinstance(v, dict):
        return {str(k): _jsonable(x) for k, x in v.items()}
    if isinstance(v, (list, tuple)):
        return [_jsonable(x) for x in v]
    if isinstance(v, (bool, np.bool_)):
        return bool(v)
    if isinstance(v, (int, np.integer)):
        return int(v)
    if isinstance(v, (float, np.floating)):
        v = float(v)
        return v if math.isfinite(v) else ("inf" if v > 0 else ("-inf" if v < 0 else "nan"))
    return v


def _domination(z: Operator, images: Sequence[Operator]) -> list[float]:
    return [lambda_min((z - y).hermitian_part()) for y in images]


def _dom_ok(z: Operator, residuals: Sequence[float], eps: float = EPS_NUM) -> bool:
    return all(v >= -eps * max(1.0, z.norm()) for v in residuals)


def _with_constants(params: InterpolationParams, o0: WeakTypeOracle, o1: WeakTypeOracle) -> InterpolationParams:
    from dataclasses import replace

    return replace(params, C0=float(o0.constant), C1=float(o1.constant))


def basic_majorant(S: MapFamily, o0: WeakTypeOracle, o1: WeakTypeOracle, r: Operator,
                   w: WeightSequence, eps: float = EPS_NUM) -> MajorantCertificate:
    """Majorant of ``S_n(r)`` for a projection r: ``z = sum_k dt_k q_k`` over the ladder."""
    params = _with_constants(w.params, o0, o1)
    w = WeightSequence(w.kind, params)
    lad = projection_ladder(S, o0, o1, r, params, eps)
    z = Operator.zeros(S.target)
    dts = {}
    for k, qk in zip(lad.ks, lad.q):
        if lad.smax == 0:
            break
        dts[k] = w.dtilde(k)
        z = z + qk * dts[k]
    z = z.hermitian_part()
    residuals = _domination(z, lad.images)
    traces = {k: projection_rank_trace(qk) for k, qk in zip(lad.ks, lad.q)}
    trace_ok = all(traces[k] <= 2.0**k * lad.t * (1 + 1e-12) + 1e-12 for k in lad.ks)
    rhs = sum_steps([dilate(StepFunction.indicator(lad.t, dts[k]), 2.0**k) for k in dts]) if dts else StepFunction()
    maj_ok = hl_majorize(mu(z), rhs)
    dom_ok = _dom_ok(z, residuals, eps)
    return MajorantCertificate(
        z=z,
        residuals=residuals,
        q=dict(zip(lad.ks, lad.q)),
        norm_report={"trace_r": lad.t, "sup_norm_image": lad.smax, "rungs": list(lad.ks)},
        passed=dom_ok and maj_ok and trace_ok,
        checks={"domination": dom_ok, "majorization": maj_ok, "rung_traces": trace_ok, "rung_trace_values": traces},
    )


def _digits(x: Operator, eps_trunc: float, p: float):
    """Binary digits ``[(coef, n, r_n)]`` of x, split into four positive parts if needed."""
    ok, _ = psd_check(x.hermitian_part()) if x.is_selfadjoint(1e-9) else (False, 0.0)
    parts = [(1.0, x.hermitian_part())] if ok else [(c, y) for c, y in positive_split(x) if y.norm() > 0]
    out = []
    for c, y in parts:
        dec = dyadic_decompose(y, eps_trunc, p)
        out.append((c, y, dec))
    return ok, out


def marcinkiewicz_majorant(S: MapFamily, o0: WeakTypeOracle, o1: WeakTypeOracle, x: Operator,
                           params: InterpolationParams, w: WeightSequence | str = "geometric",
                           eps_trunc: float = 1e-12, eps: float = EPS_NUM) -> MajorantCertificate:
    """``z = sum_m 2^{-m} z_m`` over the binary digits ``r_m`` of x.

    For positive x the certificate asserts ``S_n(x) <= z`` and the explicit
    norm bounds.  Otherwise x is split as ``sum i^k x_k`` with positive
    ``x_k``; each part gets its own majorant ``Z_k`` and the output is the
    factorization ``S_n(x) = Z^{1/2} u_n Z^{1/2}``, ``Z = sum_k Z_k``.
    """
    if not S.positive:
        raise ParameterError("the map family must be positive")
    params = _with_constants(params, o0, o1)
    w = WeightSequence(w, params) if isinstance(w, str) else WeightSequence(w.kind, params)
    positive, parts = _digits(x, eps_trunc, params.p)
    zs, sub_certs = [], []
    for c, y, dec in parts:
        zk = Operator.zeros(S.target)
        for n, r in dec.terms:
            cert = basic_majorant(S, o0, o1, r, w, eps)
            sub_certs.append(cert)
            zk = zk + cert.z * (2.0**-n)
        zs.append((c, y, zk.hermitian_part(), dec))
    z = Operator.zeros(S.target)
    for _, _, zk, _ in zs:
        z = z + zk
    z = z.hermitian_part()
    images = S.apply(x)

    report = {
        "kind": w.kind,
        "p": params.p,
        "alpha": params.alpha,
        "norm_z": z.lp_norm(params.p),
        "norm_x": x.lp_norm(params.p),
        "dilation_sum": w.dilation_sum(),
        "dyadic_residual": max(dec.residual(params.p) for _, _, _, dec in zs) if zs else 0.0,
        "n_digits": sum(len(dec) for _, _, _, dec in zs),
        "sup_norm_z": z.norm(),
        "max_digit_majorant": max((c.z.norm() for c in sub_certs), default=0.0),
    }
    ratio = report["norm_z"] / report["norm_x"] if report["norm_x"] > 0 else 0.0
    report["ratio"] = ratio
    # ||z||_p <= 2 ||x||_p sum_k dt_k 2^{k/p} holds for every weight choice
    report["sum_bound"] = 2.0 * report["dilation_sum"]
    checks = {"sub_certificates": all(c.passed for c in sub_certs)}
    checks["sum_bound"] = ratio <= report["sum_bound"] * (1 + 1e-9)
    if w.kind == "geometric":
        report["formula_bound"] = w.geometric_formula() * (1 if positive else 4)
        checks["formula_bound"] = ratio <= report["formula_bound"] * (1 + 1e-9)
    else:
        a = params.alpha
        report["alpha_log_form"] = (a * math.log(a)) ** 2 if a > 1 else float("nan")
        report["ratio_over_alpha_log_form"] = ratio / report["alpha_log_form"] if a > 1 else float("nan")
    if x.norm() > 0:
        report["bounded_case"] = report["sup_norm_z"] / (2.0 * report["max_digit_majorant"] * x.norm())
        checks["bounded_case"] = report["bounded_case"] <= 1 + 1e-9 or not positive

    if positive:
        residuals = _domination(z, images)
        checks["domination"] = _dom_ok(z, residuals, eps)
        u = None
    else:
        a_half = sqrtm_psd(z)
        ph = pinv_psd(a_half)
        u = [ph @ y @ ph for y in images]
        residuals = [(a_half @ un @ a_half - y).norm() for un, y in zip(u, images)]
        scale = max(1.0, max(y.norm() for y in images))
        checks["factorization"] = all(v <= 1e-8 * scale for v in residuals)
        checks["contractions"] = all(un.norm() <= 4 * (1 + eps) for un in u)
        report["u_norms"] = [un.norm() for un in u]
    return MajorantCertificate(
        z=z,
        residuals=residuals,
        norm_report=report,
        u=u,
        passed=all(v for v in checks.values()),
        checks=checks,
    )


def domination_factorization(z: Operator, images: Sequence[Operator]) -> list[Operator]:
    """Contractions ``u_n = z^{-1/2} S_n(x) z^{-1/2}`` (pseudo-inverse on the support of z)."""
    ph = pinv_psd(sqrtm_psd(z))
    return [ph @ y @ ph for y in images]


def quasi_check(S: MapFamily, o0: WeakTypeOracle, o1: WeakTypeOracle, x: Operator,
                params: InterpolationParams, w: WeightSequence | str = "geometric") -> dict:
    """p-triangle estimate ``||z||_p^p <= (1-2^{-p})^{-1} ||x||_p^p sum_k dt_k^p 2^k`` for p < 1."""
    params = _with_constants(params, o0, o1)
    w = WeightSequence(w, params) if isinstance(w, str) else WeightSequence(w.kind, params)
    cert = marcinkiewicz_majorant(S, o0, o1, x, params, w)
    p = params.p
    lhs = cert.z.lp_norm(p) ** p
    rhs = x.lp_norm(p) ** p * w.quasi_sum(p) / (1.0 - 2.0**-p)
    return {"lhs": lhs, "rhs": rhs, "passed": bool(lhs <= rhs * (1 + 1e-9)), "domination": cert.checks.get("domination")}


def doob_uniform_majorant(F, x: Operator, plist: Sequence[float], eps_trunc: float = 1e-12) -> tuple[Operator, dict]:
    """One p-independent majorant of every ``E_n(x)`` and its norm ratios at each q in ``plist``."""
    from .oracle import cuculescu_oracle, doob_family, uniform_oracle

    if any(q <= 1 for q in plist):
        raise ParameterError("every q must exceed 1")
    S = doob_family(F)
    o0, o1 = cuculescu_oracle(F), uniform_oracle(S, 1.0)
    params = InterpolationParams(1.0, np.inf, float(min(plist)))
    cert = marcinkiewicz_majorant(S, o0, o1, x, params, "logsquare", eps_trunc)
    z = cert.z
    qs = sorted(float(q) for q in plist)
    ratios = {}
    for q in qs:
        nx = x.lp_norm(q)
        ratios[q] = z.lp_norm(q) / nx if nx > 0 else 0.0
    env = {q: ((abs(math.log(q - 1)) + 1) / (q - 1)) ** 2 for q in qs}
    scaled = [ratios[q] / env[q] for q in qs]
    fit_q = [q for q in qs if ratios[q] > 0]
    slope = float("nan")
    if len(fit_q) >= 2:
        slope = float(np.polyfit(np.log([q - 1 for q in fit_q]), np.log([ratios[q] for q in fit_q]), 1)[0])
    tail = [q for q in qs if q >= 1.5]
    monotone = all(ratios[a] >= ratios[b] * (1 - 1e-12) for a, b in zip(tail, tail[1:]))
    report = {
        "ratios": ratios,
        "envelope_spread": max(scaled) / min(scaled) if min(scaled) > 0 else float("inf"),
        "slope_vs_log_q_minus_1": slope,
        "nonincreasing_beyond_1.5": monotone,
        "domination": cert.checks.get("domination", False),
        "residuals": cert.residuals,
        "sup_norm_ratio": z.norm() / x.norm() if x.norm() > 0 else 0.0,
        "bounded_case": cert.norm_report.get("bounded_case"),
    }
    return z, report


# --------------------------------------------------------------------------
# asymmetric factorization


def asymmetric_factorization(S: MapFamily, o0: WeakTypeOracle, o1: WeakTypeOracle, x: Operator,
                             params: InterpolationParams, gamma: float, eps_trunc: float = 1e-12,
                             eps: float = EPS_NUM) -> tuple[Operator, Operator, list[Operator], dict]:
    """``S_n(x) = a^gamma u_n b^{1-gamma}`` with contractions ``u_n``.

    ``a^gamma = (sum_m 2^{-2 gamma m} z_m)^{1/2}`` and
    ``b^{1-gamma} = (sum_m 2^{-2(1-gamma) m} z_m)^{1/2}`` where ``z_m`` are the
    log-square majorants of the binary digits of x.
    """
    if not 0 < gamma < 1:
        raise ParameterError("gamma must lie in (0, 1)")
    bound = max(2 * gamma, 2 * (1 - gamma))
    if not params.p > bound:
        raise ParameterError(
            f"p = {params.p} is outside the admissible region p > max(2 gamma, 2(1 - gamma)) = {bound}; "
            "the asymmetric factorization can fail there")
    if not S.positive:
        raise ParameterError("the map family must be positive")
    params = _with_constants(params, o0, o1)
    w = WeightSequence("logsquare", params)
    _, parts = _digits(x, eps_trunc, params.p)
    avec, uvec, bvec = [], [[] for _ in range(len(S))], []
    for c, _, dec in parts:
        for m, r in dec.terms:
            zm = basic_majorant(S, o0, o1, r, w, eps).z
            h = sqrtm_psd(zm)
            ph = pinv_psd(h)
            for n, y in enumerate(S.apply(r)):
                uvec[n].append((ph @ y @ ph) * c)
            avec.append(h * (2.0 ** (-gamma * m)))
            bvec.append(h * (2.0 ** (-(1 - gamma) * m)))
    images = S.apply(x)
    if not avec:
        zero = Operator.zeros(S.target)
        return zero, zero, [zero for _ in images], {"residuals": [0.0] * len(images), "passed": True}
    us, R, C = [], None, None
    for n in range(len(S)):
        R, un, C = row_column_factor(avec, uvec[n], bvec)
        us.append(un)
    a = power(R, 2.0 / (2 * gamma))
    b = power(C, 2.0 / (2 * (1 - gamma)))
    residuals = [(R @ un @ C - y).norm() for un, y in zip(us, images)]
    scale = max(1.0, x.norm())
    nx = x.lp_norm(params.p)
    report = {
        "gamma": gamma,
        "residuals": residuals,
        "u_norms": [un.norm() for un in us],
        "ratio_a": a.lp_norm(params.p) / nx if nx > 0 else 0.0,
        "ratio_b": b.lp_norm(params.p) / nx if nx > 0 else 0.0,
    }
    report["passed"] = all(v <= 1e-8 * scale for v in residuals) and all(v <= 1 + eps for v in report["u_norms"])
    return a, b, us, report


def noasym_probe(Ns: Sequence[int], gamma: float = 0.7) -> dict:
    """Growth of ``sum_{n<=N} ||a^gamma delta_n||^2`` for the rank-one family of the asymmetric gate.

    Any factorization ``T_n = a^gamma u_n b^{1-gamma}`` forces
    ``||a^gamma delta_n||^2 >= c / n`` with ``c = ||b^{1-gamma} delta_1||^{-2}``,
    so the column sums grow at least like ``c ln N``.
    """
    from .families import gen_asym
    from .oracle import tail_oracle, uniform_oracle

    rows = []
    for N in Ns:
        S = gen_asym(N)
        # weak (1,1) through the tail projections and bounded by 2
        o0, o1 = tail_oracle(S, 1.0), uniform_oracle(S, 2.0)
        p = max(2 * gamma, 2 * (1 - gamma)) + 0.1
        params = InterpolationParams(1.0, np.inf, p)
        x = Operator.identity(S.source)
        a, b, us, rep = asymmetric_factorization(S, o0, o1, x, params, gamma)
        ag = power(a, gamma).blocks[0]
        bg = power(b, 1 - gamma).blocks[0]
        col = np.sum(np.abs(ag) ** 2, axis=0)
        c = 1.0 / float(np.sum(np.abs(bg[:, 0]) ** 2))
        rows.append({"N": N, "sum": float(np.sum(col)), "c": c, "residual": max(rep["residuals"]),
                     "lower_bound_ok": bool(all(col[n - 1] >= c / n * (1 - 1e-9) for n in range(2, N + 1)))})
    lnN = np.log([r["N"] for r in rows])
    sums = [r["sum"] for r in rows]
    slope = float(np.polyfit(lnN, sums, 1)[0]) if len(rows) >= 2 else float("nan")
    c = min(r["c"] for r in rows)
    return {"rows": rows, "slope": slope, "c": c, "passed": bool(slope >= 0.9 * c and all(r["lower_bound_ok"] for r in rows))}


# --------------------------------------------------------------------------
# row + column decompositions (no positivity needed)


def rc_weight(k: int, params: InterpolationParams) -> float:
    """``c_k = min(2^{-k/p0}, 2^{-k/p1}) (|k| + 1)``."""
    inv1 = 0.0 if params.p1 == np.inf else 1.0 / params.p1
    return min(2.0 ** (-k / params.p0), 2.0 ** (-k * inv1)) * (abs(k) + 1)


def rc_constant() -> float:
    """``4 (sum_{k in Z} (|k|+1)^{-2})^{1/2}``: bound on ``||u_n||, ||v_n||``."""
    return 4.0 * math.sqrt(2 * math.pi**2 / 6 - 1)


def row_column_majorant(S: MapFamily, o0: WeakTypeOracle, o1: WeakTypeOracle, r: Operator,
                        params: InterpolationParams, eps: float = EPS_NUM) -> tuple[Operator, list, list, dict]:
    """``S_n(r) = z u_n + v_n z`` with ``z = sum_k c_k q_k``.

    ``u_n = sum_k c_k^{-1} q_k S_n(r) e_{k+1}`` and
    ``v_n = sum_k c_k^{-1} e_k S_n(r) q_k`` where ``e_k = sum_{j>=k} q_j``.
    """
    params = _with_constants(params, o0, o1)
    lad = projection_ladder(S, o0, o1, r, params, eps)
    tgt = S.target
    z = Operator.zeros(tgt)
    cs = [rc_weight(k, params) * max(params.C0, params.C1) for k in lad.ks]
    tails = []
    acc = Operator.zeros(tgt)
    for qk in reversed(lad.q):
        acc = acc + qk
        tails.append(acc)
    tails.reverse()  # tails[i] = e_{ks[i]}
    for ck, qk in zip(cs, lad.q):
        z = z + qk * ck
    us, vs = [], []
    for y in lad.images:
        u = Operator.zeros(tgt)
        v = Operator.zeros(tgt)
        for i, (ck, qk) in enumerate(zip(cs, lad.q)):
            nxt = tails[i + 1] if i + 1 < len(tails) else Operator.zeros(tgt)
            u = u + (qk @ y @ nxt) / ck
            v = v + (tails[i] @ y @ qk) / ck
        us.append(u)
        vs.append(v)
    residuals = [(z @ u + v @ z - y).norm() for u, v, y in zip(us, vs, lad.images)]
    scale = max(1.0, lad.smax)
    bound = rc_constant()
    report = {
        "residuals": residuals,
        "u_norms": [u.norm() for u in us],
        "v_norms": [v.norm() for v in vs],
        "bound": bound,
        "rungs": list(lad.ks),
        "rung_traces": [projection_rank_trace(q) for q in lad.q],
        "trace_r": lad.t,
    }
    report["passed"] = (all(v <= 1e-8 * scale for v in residuals)
                        and max(report["u_norms"] + report["v_norms"]) <= bound * (1 + eps)
                        and all(tq <= 2.0**k * lad.t * (1 + 1e-12) for k, tq in zip(lad.ks, report["rung_traces"])))
    return z, us, vs, report


def row_column_decompose(S: MapFamily, o0: WeakTypeOracle, o1: WeakTypeOracle, x: Operator,
                         params: InterpolationParams, eps_trunc: float = 1e-12,
                         eps: float = EPS_NUM) -> tuple[Operator, list, list, dict]:
    """``S_n(x) = z u_n + v_n z`` for general x.

    Each binary digit ``r_m`` of each positive part gets ``z_m, u_{m,n}, v_{m,n}``
    from :func:`row_column_majorant`; then
    ``z = (sum_m 2^{-2m} (|m|+1)^2 z_m^2)^{1/2}`` and ``u_n, v_n`` are read off
    with the pseudo-inverse of z.
    """
    params = _with_constants(params, o0, o1)
    _, parts = _digits(x, eps_trunc, params.p)
    tgt = S.target
    terms = []
    for c, _, dec in parts:
        for m, r in dec.terms:
            zm, um, vm, _ = row_column_majorant(S, o0, o1, r, params, eps)
            terms.append((c * 2.0**-m, abs(m) + 1, zm, um, vm))
    images = S.apply(x)
    if not terms:
        zero = Operator.zeros(tgt)
        return zero, [zero] * len(images), [zero] * len(images), {"residuals": [0.0] * len(images), "passed": True}
    zz = Operator.zeros(tgt)
    for coef, wgt, zm, _, _ in terms:
        zz = zz + zm @ zm * (abs(coef) ** 2 * wgt**2)
    z = sqrtm_psd(zz.hermitian_part())
    zp = pinv_psd(z, EPS_RANK)
    us, vs = [], []
    for n in range(len(images)):
        left = Operator.zeros(tgt)
        right = Operator.zeros(tgt)
        for coef, _, zm, um, vm in terms:
            left = left + (zm @ um[n]) * coef
            right = right + (vm[n] @ zm) * coef
        us.append(zp @ left)
        vs.append(right @ zp)
    residuals = [(z @ u + v @ z - y).norm() for u, v, y in zip(us, vs, images)]
    scale = max(1.0, max(y.norm() for y in images))
    p = params.p
    inv1 = 0.0 if params.p1 == np.inf else 1.0 / params.p1
    x0 = x.lp_norm(params.p0)
    x1 = x.norm() if params.p1 == np.inf else x.lp_norm(params.p1)
    interp = x0 ** (1 - params.theta) * x1**params.theta
    report = {
        "residuals": residuals,
        "u_norms": [u.norm() for u in us],
        "v_norms": [v.norm() for v in vs],
        "norm_z": z.lp_norm(p),
        "interpolated_norm_x": interp,
        "ratio": z.lp_norm(p) / interp if interp > 0 else 0.0,
        "n_terms": len(terms),
    }
    report["passed"] = all(v <= 1e-8 * scale for v in residuals)
    return z, us, vs, report
