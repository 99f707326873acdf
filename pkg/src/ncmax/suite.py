"""Named checks shared by ``ncmax verify`` and the acceptance tests.

Each check returns a :class:`CheckResult` with the measured quantities, so
callers can both assert and print.  Instance counts and grids default to the
acceptance values and can be shrunk for quick runs.
"""

from __future__ import annotations

import math
import time
from dataclasses import dataclass, field

import numpy as np

from .algebra import (
    Algebra,
    Operator,
    lambda_min,
    projection_rank_trace,
    random_positive,
    random_selfadjoint,
    random_operator,
    random_unitary,
)
from .dyadic import dyadic_decompose, verify_dyadic_bounds
from .envelope import EnvelopeProblem, solve_envelope, verify_counterexample_growth
from .facto import diag_majorant
from .families import gen_Ll, gen_nonpositive, ll_column_value
from .lambdas import OperatorSequence, k_functional, mu_seq
from .marcin import (
    InterpolationParams,
    ParameterError,
    asymmetric_factorization,
    doob_uniform_majorant,
    geometric_bound,
    marcinkiewicz_majorant,
    noasym_probe,
    rc_constant,
    row_column_decompose,
)
from .oracle import (
    Filtration,
    conditional_expectation,
    cuculescu,
    cuculescu_oracle,
    doob_family,
    random_filtration,
    tail_oracle,
    uniform_oracle,
)
from .stepfn import StepFunction, hl_majorize, lorentz_norm, mu


@dataclass
class CheckResult:
    name: str
    passed: bool
    measured: dict = field(default_factory=dict)
    seconds: float = 0.0

    def line(self) -> str:
        return f"{'PASS' if self.passed else 'FAIL'}  {self.name}  ({self.seconds:.1f}s)"

    def to_json(self) -> dict:
        return {"name": self.name, "passed": bool(self.passed), "measured": _plain(self.measured),
                "seconds": round(self.seconds, 3)}


def _plain(v):
    if isinstance(v, dict):
        return {str(k): _plain(x) for k, x in v.items()}
    if isinstance(v, (list, tuple)):
        return [_plain(x) for x in v]
    if isinstance(v, (np.floating, np.integer)):
        return v.item()
    if isinstance(v, np.bool_):
        return bool(v)
    if isinstance(v, float) and not math.isfinite(v):
        return str(v)
    return v


def _timed(name, fn):
    t0 = time.perf_counter()
    passed, measured = fn()
    return CheckResult(name, bool(passed), measured, time.perf_counter() - t0)


def _random_algebra(rng: np.random.Generator, max_dim: int, max_block: int | None = None) -> Algebra:
    blocks, total = [], 0
    while True:
        cap = max_dim - total
        if cap <= 0:
            break
        d = int(rng.integers(1, min(cap, max_block or cap) + 1))
        blocks.append((d, float(rng.choice([0.25, 0.5, 1.0, 2.0]))))
        total += d
        if rng.random() < 0.4:
            break
    return Algebra(tuple(blocks))


# --------------------------------------------------------------------------
# 1  diagonal majorant certificate


def diagonal_certificate(n: int = 500, seed: int = 0) -> CheckResult:
    def run():
        rng = np.random.default_rng(seed)
        worst = np.inf
        for i in range(n):
            D = 2 + i % 15
            alg = Algebra.matrix(D, 1.0)
            x = random_positive(alg, rng, rank_deficient=bool(i % 3 == 0))
            U = random_unitary(D, rng)
            K = int(rng.integers(1, D + 1))
            cuts = np.sort(rng.choice(np.arange(1, D + 1), size=K, replace=False))
            qs, start = [], 0
            for c in cuts:
                V = U[:, start:c]
                qs.append(Operator(alg, [V @ V.conj().T]))
                start = c
            d = rng.uniform(0.05, 20.0, size=K)
            _, cert = diag_majorant(x, qs, list(d))
            worst = min(worst, lambda_min(cert) / max(x.norm(), 1e-300))
        return worst >= -1e-8, {"instances": n, "worst_relative_lambda_min": worst}

    return _timed("1 diagonal majorant certificate", run)


# --------------------------------------------------------------------------
# 2  dyadic digit bounds


def dyadic_bounds(n: int = 200, seed: int = 1, alphas=(0.5, 1.0, 2.0)) -> CheckResult:
    def run():
        rng = np.random.default_rng(seed)
        worst = 0.0
        ok = True
        for i in range(n):
            alg = _random_algebra(rng, 6)
            x = random_positive(alg, rng, rank_deficient=bool(i % 4 == 0)) * float(rng.choice([0.1, 1.0, 7.0]))
            dec = dyadic_decompose(x, 1e-14)
            for a in alphas:
                rep = verify_dyadic_bounds(dec, a, 1e-10)
                worst = max(worst, rep.worst_ratio)
                ok = ok and rep.passed
        return ok, {"instances": n, "worst_ratio": worst}

    return _timed("2 dyadic digit bounds", run)


# --------------------------------------------------------------------------
# 3  Cuculescu weak (1,1)


def cuculescu_weak(n: int = 100, seed: int = 2) -> CheckResult:
    def run():
        rng = np.random.default_rng(seed)
        worst_trace, worst_norm = -np.inf, 0.0
        for _ in range(n):
            alg = _random_algebra(rng, 32)
            depth = int(rng.integers(1, 7))
            F = random_filtration(alg, depth, rng)
            x = random_positive(alg, rng)
            lam = float(rng.uniform(0.05, 1.5)) * x.norm()
            q, _ = cuculescu(F, x, lam)
            slack = (alg.total_trace - projection_rank_trace(q)) - x.lp_norm(1) / lam
            worst_trace = max(worst_trace, slack / max(1.0, x.lp_norm(1) / lam))
            for k in range(len(F)):
                worst_norm = max(worst_norm, (q @ conditional_expectation(F, k, x) @ q).norm() / lam)
        return worst_trace <= 1e-12 and worst_norm <= 1 + 1e-8, {
            "instances": n, "worst_trace_excess": worst_trace, "worst_norm_ratio": worst_norm}

    return _timed("3 Cuculescu weak (1,1)", run)


# --------------------------------------------------------------------------
# 4  explicit constant for Doob families


def doob_filtrations(seed: int = 3) -> list[Filtration]:
    rng = np.random.default_rng(seed)
    alg = Algebra(((2, 1.0), (3, 0.5), (1, 2.0)))
    return [Filtration.tensor_tower(3), Filtration.dyadic_diagonal(3), random_filtration(alg, 3, rng)]


def explicit_constant(ps=(1.5, 2.0, 3.0), per_filtration: int = 2, seed: int = 3) -> CheckResult:
    def run():
        rng = np.random.default_rng(seed)
        rows, ok = [], True
        for F in doob_filtrations(seed):
            S = doob_family(F)
            o0, o1 = cuculescu_oracle(F), uniform_oracle(S, 1.0)
            for _ in range(per_filtration):
                x = random_positive(F.algebra, rng)
                for p in ps:
                    cert = marcinkiewicz_majorant(S, o0, o1, x, InterpolationParams(1.0, np.inf, p), "geometric")
                    zn = cert.z.norm()
                    dom = min(cert.residuals) / zn
                    bound = cert.norm_report["formula_bound"]
                    ratio = cert.norm_report["ratio"]
                    ok = ok and ratio <= bound and dom >= -1e-8
                    rows.append({"p": p, "ratio": ratio, "bound": bound, "worst_domination": dom})
        return ok, {"bound_at_2": geometric_bound(2.0), "max_ratio": max(r["ratio"] for r in rows),
                    "worst_domination": min(r["worst_domination"] for r in rows), "rows": rows}

    return _timed("4 explicit constant (geometric weights, Doob)", run)


# --------------------------------------------------------------------------
# 5  p-independent majorant


def p_independent(depth: int = 24, qs=(1.25, 1.5, 2.0, 4.0)) -> tuple[CheckResult, CheckResult]:
    """One log-square majorant of the last atom of the peeling filtration.

    Returns the asserted part (domination, finite ratios, monotone beyond
    q = 1.5) and the slope sub-criterion separately.
    """
    t0 = time.perf_counter()
    F = Filtration.peeling(depth)
    x = Operator.diag(F.algebra, [0.0] * depth + [1.0])
    z, rep = doob_uniform_majorant(F, x, list(qs))
    ratios = rep["ratios"]
    finite = all(math.isfinite(v) and v > 0 for v in ratios.values())
    main_ok = rep["domination"] and finite and rep["nonincreasing_beyond_1.5"]
    sec = time.perf_counter() - t0
    measured = {"ratios": ratios, "slope": rep["slope_vs_log_q_minus_1"],
                "envelope_spread": rep["envelope_spread"], "depth": depth,
                "worst_domination": min(rep["residuals"]) / z.norm()}
    a = CheckResult("5 p-independent majorant: domination, finite ratios, monotone", main_ok, measured, sec)
    b = CheckResult("5 p-independent majorant: slope <= -1.8", rep["slope_vs_log_q_minus_1"] <= -1.8, measured, 0.0)
    return a, b


# --------------------------------------------------------------------------
# 6  asymmetric factorization and its gate


def asymmetric_gate(Ns=(8, 16, 32, 64, 128, 256), gamma: float = 0.7, seed: int = 4) -> CheckResult:
    def run():
        rng = np.random.default_rng(seed)
        F = Filtration.tensor_tower(2)
        S = doob_family(F)
        o0, o1 = cuculescu_oracle(F), uniform_oracle(S, 1.0)
        worst, gate_ok = 0.0, True
        for g in (0.3, 0.5, gamma):
            bound = max(2 * g, 2 * (1 - g))
            for p in (bound + 0.05, bound + 1.0):
                for _ in range(2):
                    x = random_positive(F.algebra, rng)
                    _, _, _, rep = asymmetric_factorization(S, o0, o1, x, InterpolationParams(1.0, np.inf, p), g)
                    worst = max(worst, max(rep["residuals"]) / x.norm())
            try:
                asymmetric_factorization(S, o0, o1, random_positive(F.algebra, rng),
                                         InterpolationParams(1.0, np.inf, max(1.01, bound - 0.05)), g)
                gate_ok = gate_ok and bound - 0.05 <= 1.0
            except ParameterError:
                pass
        probe = noasym_probe(list(Ns), gamma)
        ok = worst <= 1e-8 and gate_ok and probe["passed"]
        return ok, {"worst_relative_residual": worst, "gate_raises": gate_ok, "probe_slope": probe["slope"],
                    "probe_c": probe["c"], "probe_sums": [r["sum"] for r in probe["rows"]]}

    return _timed("6 asymmetric factorization and noasym probe", run)


# --------------------------------------------------------------------------
# 7  non-positive failure


def nonpositive_failure(grid=(2, 3, 4, 6, 8, 12, 16, 32, 64, 128, 256, 512, 1024), p: float = 2.0,
                        rc_grid=(4, 8, 16, 32)) -> tuple[CheckResult, CheckResult, CheckResult]:
    """Literal slope of the envelope value against ``N^{1/p}``, the slope of ``value^p``,
    and the bounded row + column decomposition."""
    t0 = time.perf_counter()
    rep = verify_counterexample_growth("nonpos", grid, p, predicted=1.0)
    t1 = time.perf_counter()
    measured = {"slope": rep.slope, "power_slope": rep.extra["power_slope"], "values": rep.values,
                "solver_reliable": rep.reliable}
    literal = CheckResult("7 non-positive envelope: slope of value vs N^(1/p) within 0.1 of 1",
                          rep.reliable and abs(rep.slope - 1.0) <= 0.1, measured, t1 - t0)
    power = CheckResult("7 non-positive envelope: slope of value^p vs N^(1/p) within 0.1 of 1",
                        rep.reliable and abs(rep.extra["power_slope"] - 1.0) <= 0.1, measured, 0.0)
    t2 = time.perf_counter()
    worst = 0.0
    res = 0.0
    for N in rc_grid:
        S = gen_nonpositive(N)
        o0, o1 = tail_oracle(S, 1.0), uniform_oracle(S, 1.0)
        x = Operator.identity(S.source)
        _, us, vs, r = row_column_decompose(S, o0, o1, x, InterpolationParams(1.0, np.inf, p))
        worst = max(worst, max(u.norm() for u in us), max(v.norm() for v in vs))
        res = max(res, max(r["residuals"]))
    rc = CheckResult("7 non-positive family: row + column decomposition bounded",
                     worst <= rc_constant() and res <= 1e-8,
                     {"max_uv_norm": worst, "bound": rc_constant(), "max_residual": res},
                     time.perf_counter() - t2)
    return literal, power, rc


# --------------------------------------------------------------------------
# 8  Lambda versus column separation


def lambda_separation(grid=tuple(range(4, 33)), p: float = 4.0, sample_N: int = 3,
                      samples=(2, 8, 32)) -> CheckResult:
    def run():
        col = verify_counterexample_growth("ll_col", grid, p)
        lam = verify_counterexample_growth("ll_lambda", grid, p)
        sampled = []
        for M in samples:
            X = gen_Ll(sample_N, p, samples=M, seed=0, structured=M >= 8)
            sampled.append(solve_envelope(EnvelopeProblem("col", X, p), 1e-8).value)
        exact = ll_column_value(sample_N, p)
        rel = abs(sampled[-1] - exact) / exact
        ok = col.slope >= 0.65 and lam.slope <= 0.35 and rel <= 0.10
        return ok, {"column_slope": col.slope, "lambda_slope": lam.slope,
                    "block_removal_slope": lam.extra["block_removal_slope"],
                    "sampled_values": sampled, "closed_form": exact, "relative_gap": rel}

    return _timed("8 Lambda versus column separation", run)


# --------------------------------------------------------------------------
# 9, 10  exhaustive-mode sandwiches


def _small_sequence(rng: np.random.Generator, selfadjoint: bool, length: int | None = None) -> OperatorSequence:
    alg = _random_algebra(rng, 6, max_block=2)
    L = length or int(rng.integers(1, 4))
    gen = random_selfadjoint if selfadjoint else random_operator
    return OperatorSequence([gen(alg, rng) for _ in range(L)])


def k_sandwich(n: int = 50, p: float = 2.0, seed: int = 5) -> CheckResult:
    def run():
        rng = np.random.default_rng(seed)
        worst, ok = 0.0, True
        for _ in range(n):
            X = _small_sequence(rng, True)
            t = float(rng.uniform(0.2, 2.0)) * X.algebra.total_trace ** (1 / p)
            lo, up, info = k_functional(X, t, p, "exhaustive")
            ok = ok and info["exact"] and lo <= up * (1 + 1e-10)
            worst = max(worst, up / lo if lo > 0 else 1.0)
        return ok and worst <= 8.0, {"instances": n, "worst_ratio": worst}

    return _timed("9 K-functional sandwich", run)


def quasi_triangle(n: int = 100, seed: int = 6) -> CheckResult:
    def run():
        rng = np.random.default_rng(seed)
        worst = -np.inf
        modes = ("plain", "column", "row")
        for i in range(n):
            mode = modes[i % 3]
            sa = mode == "plain"
            X = _small_sequence(rng, sa)
            gen = random_selfadjoint if sa else random_operator
            Y = OperatorSequence([gen(X.algebra, rng) for _ in X])
            t1 = float(rng.uniform(0, X.algebra.total_trace))
            t2 = float(rng.uniform(0, X.algebra.total_trace))
            lhs = mu_seq(X + Y, t1 + t2, mode, "exhaustive")[0]
            rhs = mu_seq(X, t1, mode, "exhaustive")[0] + mu_seq(Y, t2, mode, "exhaustive")[0]
            worst = max(worst, lhs - rhs)
        return worst <= 1e-10, {"instances": n, "worst_violation": worst}

    return _timed("10 quasi-triangle inequality", run)


# --------------------------------------------------------------------------
# 11  optimality probe


def optimality_probe(ps=(1.05, 1.1, 1.2, 1.4)) -> CheckResult:
    def run():
        rep = verify_counterexample_growth("opti", ps, 2.0)
        return rep.slope > 2.05, {"exponent": rep.slope, "log_values": rep.extra["log_values"]}

    return _timed("11 optimality probe exponent", run)


# --------------------------------------------------------------------------
# the core suite: quick invariants of stepfn, dyadic and facto


def stepfn_invariants(n: int = 50, seed: int = 7) -> CheckResult:
    def run():
        rng = np.random.default_rng(seed)
        ok = True
        for _ in range(n):
            alg = _random_algebra(rng, 8)
            x = random_positive(alg, rng)
            f = mu(x)
            ok = ok and abs(lorentz_norm(f, 2.0, 2.0) - x.lp_norm(2.0)) <= 1e-9 * max(1.0, x.lp_norm(2.0))
            ok = ok and abs(f.primitive(alg.total_trace) - x.lp_norm(1.0)) <= 1e-9 * max(1.0, x.lp_norm(1.0))
            ok = ok and hl_majorize(f, f.scale(1.0 + 1e-6))
        return ok, {"instances": n}

    return _timed("core stepfn invariants", run)


def core_suite(seed: int = 0) -> list[CheckResult]:
    return [
        stepfn_invariants(seed=seed + 7),
        dyadic_bounds(n=30, seed=seed + 1),
        diagonal_certificate(n=60, seed=seed),
    ]


def full_suite(seed: int = 0) -> list[CheckResult]:
    out = [
        diagonal_certificate(seed=seed),
        dyadic_bounds(seed=seed + 1),
        cuculescu_weak(seed=seed + 2),
        explicit_constant(seed=seed + 3),
    ]
    out.extend(p_independent())
    out.append(asymmetric_gate(seed=seed + 4))
    out.extend(nonpositive_failure())
    out.append(lambda_separation())
    out.append(k_sandwich(seed=seed + 5))
    out.append(quasi_triangle(seed=seed + 6))
    out.append(optimality_probe())
    return out
