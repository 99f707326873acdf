import itertools
import json

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from ncmax.algebra import Algebra, AlgebraError, Operator, projection_rank_trace, random_operator, random_selfadjoint
from ncmax.lambdas import (
    ExhaustiveRearrangement,
    OperatorSequence,
    hardy_constant,
    k_functional,
    k_functional_exact,
    lambda_decompose,
    lambda_norm,
    lambda_split,
    lorentz_sequence_norm,
    mu_function,
    mu_seq,
    seq_norm,
    sphere_minmax,
)
from ncmax.stepfn import StepFunction, lorentz_norm, mu

M2 = Algebra.matrix(2, 1.0)
MIXED = Algebra(((2, 1.0), (1, 0.5), (2, 2.0)))


def _seq(alg, rng, n=3, kind="any"):
    make = random_selfadjoint if kind == "sa" else random_operator
    return OperatorSequence([make(alg, rng) for _ in range(n)])


def _commutative_brute(weights, values, t, mode):
    """Enumerate every subset projection of a diagonal algebra."""
    best = np.inf
    n = len(weights)
    for keep in itertools.product([0, 1], repeat=n):
        if sum(w for w, k in zip(weights, keep) if not k) > t + 1e-12:
            continue
        v = max((max((abs(x[i]) for i in range(n) if keep[i]), default=0.0) for x in values))
        best = min(best, v)
    return best


def _m2_grid_min(X, t, mode, m=120):
    """Grid search over rank-one projections of M_2 (valid for 1 <= t < 2)."""
    best = np.inf
    for th in np.linspace(0, np.pi, m):
        for ph in np.linspace(0, 2 * np.pi, 2 * m, endpoint=False):
            v = np.array([np.cos(th / 2), np.exp(1j * ph) * np.sin(th / 2)])
            e = Operator(M2, [np.outer(v, v.conj())])
            best = min(best, seq_norm(X, e, mode))
    return best


class TestMu:
    def test_diag_example(self):
        x = Operator(M2, [np.diag([3.0, 1.0])])
        val, e = mu_seq([x], 1.0)
        assert val == pytest.approx(1.0)
        assert e.allclose(Operator(M2, [np.diag([0.0, 1.0])]))
        assert mu_seq([x], 1.0, method="exhaustive")[0] == pytest.approx(1.0)

    @pytest.mark.parametrize("method", ["spectral", "exhaustive"])
    def test_zero_budget_is_sup_norm(self, rng, method):
        X = _seq(MIXED, rng)
        for mode in ("plain", "column", "row"):
            assert mu_seq(X, 0.0, mode, method)[0] == pytest.approx(X.sup_norm())

    def test_constant_sequence_is_singular_values(self, rng):
        x = random_selfadjoint(MIXED, rng)
        f = mu(x)
        for t in (0.0, 0.5, 1.0, 2.5, 4.0):
            assert mu_seq([x, x], t, "column", "exhaustive")[0] == pytest.approx(f(t), abs=1e-9)

    @settings(max_examples=25)
    @given(st.lists(st.sampled_from([0.5, 1.0, 2.0]), min_size=2, max_size=5), st.integers(0, 2**31),
           st.floats(0, 4), st.sampled_from(["plain", "column", "row"]))
    def test_exhaustive_matches_subset_enumeration(self, weights, seed, t, mode):
        rng = np.random.default_rng(seed)
        alg = Algebra.diagonal(weights)
        vals = [rng.normal(size=len(weights)) + 1j * rng.normal(size=len(weights)) for _ in range(3)]
        X = OperatorSequence([Operator.diag(alg, v) for v in vals])
        got, e = mu_seq(X, t, mode, "exhaustive")
        assert got == pytest.approx(_commutative_brute(weights, vals, t, mode), abs=1e-9)
        assert alg.total_trace - projection_rank_trace(e) <= t + 1e-9
        assert seq_norm(X, e, mode) == pytest.approx(got, abs=1e-9)

    @pytest.mark.parametrize("mode", ["plain", "column", "row"])
    def test_exhaustive_matches_grid_on_m2(self, rng, mode):
        X = _seq(M2, rng, kind="sa" if mode == "plain" else "any")
        got, e = mu_seq(X, 1.0, mode, "exhaustive")
        grid = _m2_grid_min(X, 1.0, mode)
        assert got <= grid + 1e-9
        assert got >= grid - 0.05 * X.sup_norm()
        assert seq_norm(X, e, mode) == pytest.approx(got, abs=1e-8)

    @settings(max_examples=10)
    @given(st.integers(0, 2**31), st.sampled_from(["plain", "column", "row"]))
    def test_spectral_is_upper_estimate(self, seed, mode):
        rng = np.random.default_rng(seed)
        X = _seq(MIXED, rng, kind="sa" if mode == "plain" else "any")
        for t in (0.5, 1.0, 2.0, 3.0):
            s, e = mu_seq(X, t, mode, "spectral")
            x, _ = mu_seq(X, t, mode, "exhaustive")
            assert x <= s + 1e-9
            assert MIXED.total_trace - projection_rank_trace(e) <= t + 1e-9
            assert seq_norm(X, e, mode) <= s + 1e-9

    def test_exhaustive_size_limit(self, rng):
        big = Algebra(((3, 1.0),))
        with pytest.raises(AlgebraError):
            ExhaustiveRearrangement(_seq(big, rng), "plain")

    def test_sphere_minmax_single(self):
        # max(c + g.r) over the sphere is minimized at r = -g/|g|
        val, r = sphere_minmax(np.array([1.0]), np.array([[0.0, 0.0, 2.0]]))
        assert val == pytest.approx(-1.0) and np.allclose(r, [0, 0, -1])

    def test_mu_function_nonincreasing(self, rng):
        X = _seq(MIXED, rng)
        for method in ("spectral", "exhaustive"):
            f = mu_function(X, "column", method).f
            assert all(a >= b - 1e-12 for a, b in zip(f.values, f.values[1:]))
            assert sum(f.lengths) == pytest.approx(MIXED.total_trace)


class TestNorms:
    def test_exhaustive_below_spectral(self, rng):
        X = _seq(MIXED, rng)
        for p in (1.0, 2.0, 4.0):
            assert lambda_norm(X, p, mode="column", method="exhaustive") <= \
                lambda_norm(X, p, mode="column", method="spectral") * (1 + 1e-9)

    def test_single_operator_is_schatten(self, rng):
        x = random_operator(MIXED, rng)
        assert lambda_norm([x], 3.0, mode="column", method="exhaustive") == pytest.approx(x.lp_norm(3.0))

    @settings(max_examples=10)
    @given(st.integers(0, 2**31), st.floats(0.2, 0.8))
    def test_lyapunov(self, seed, theta):
        rng = np.random.default_rng(seed)
        f = mu_function(_seq(MIXED, rng), "plain", "exhaustive").f
        p0, p1 = 1.5, 6.0
        pt = 1 / ((1 - theta) / p0 + theta / p1)
        lhs = lorentz_norm(f, pt, pt)
        rhs = lorentz_norm(f, p0, p0) ** (1 - theta) * lorentz_norm(f, p1, p1) ** theta
        assert lhs <= rhs * (1 + 1e-9)

    def test_sequence_norm_constant_entries(self):
        # a = (1, 1) on masses 2, 4 plus lump 2 => total mass 8
        assert lorentz_sequence_norm([1.0, 1.0], [1, 2], 2.0, lump=2.0) == pytest.approx(8**0.5)

    def test_hardy_constant_bound(self, rng):
        for p in (1.0, 1.5, 2.0, 4.0):
            H = hardy_constant(p)
            for _ in range(50):
                a = np.abs(rng.standard_cauchy(12))
                k = np.arange(12)
                tails = np.cumsum(a[::-1])[::-1]
                assert np.sum(2.0**k * tails**p) <= H * np.sum(2.0**k * a**p) * (1 + 1e-12)


class TestDecomposition:
    @pytest.mark.parametrize("method", ["spectral", "exhaustive"])
    def test_reconstruction(self, rng, method):
        alg = Algebra(((2, 1.0), (2, 0.5), (2, 2.0), (2, 1.0)))
        X = _seq(alg, rng)
        dec = lambda_decompose(X, 2.0, method=method)
        r = dec.report
        assert r["residual"] <= 1e-10 * X.sup_norm()
        assert r["trace_ok"] and r["contractions_ok"]
        assert r["ratio_lambda_over_sequence"] <= r["lower_constant"] * (1 + 1e-9)
        if method == "exhaustive":
            assert r["lambda_norm"] <= r["hardy_upper"] * (1 + 1e-9)

    def test_row_mode(self, rng):
        X = _seq(MIXED, rng)
        dec = lambda_decompose(X, 2.0, mode="row")
        assert dec.report["mode"] == "row"
        assert dec.residual() <= 1e-10 * X.sup_norm()

    def test_single_projection(self):
        alg = Algebra(((2, 1.0), (2, 1.0)))
        e = Operator.diag(alg, [1, 1, 0, 0])
        dec = lambda_decompose([e], 2.0, method="exhaustive")
        assert np.allclose(dec.a, 1.0)
        assert dec.residual() <= 1e-12

    def test_zero_sequence(self):
        dec = lambda_decompose([Operator.zeros(M2)], 2.0)
        assert dec.report == {"empty": True}

    def test_plain_mode_rejected(self, rng):
        with pytest.raises(AlgebraError):
            lambda_decompose(_seq(M2, rng), 2.0, mode="plain")

    @pytest.mark.parametrize("method", ["spectral", "exhaustive"])
    def test_split(self, rng, method):
        X = _seq(MIXED, rng)
        C, R, info = lambda_split(X, method)
        assert info["residual"] <= 1e-10 * X.sup_norm()
        assert len(C) == len(R) == len(X)


class TestKFunctional:
    def test_commutative_singleton(self):
        alg = Algebra.diagonal([1.0, 1.0, 1.0])
        x = Operator.diag(alg, [3.0, 2.0, 1.0])
        f = StepFunction((3.0, 2.0, 1.0), (1.0, 1.0, 1.0))
        for t in (0.3, 1.0, 2.0):
            lower, upper, info = k_functional([x], t, 2.0)
            assert lower == pytest.approx(k_functional_exact(f, t, 2.0))
            assert lower <= upper * (1 + 1e-9)

    def test_exact_k_brute(self):
        f = StepFunction((4.0, 2.0, 0.5), (0.5, 1.0, 2.0))
        lams = np.linspace(0, 4, 40001)
        for t in (0.1, 0.7, 1.5):
            brute = min(np.sum(np.clip(np.array(f.values) - l, 0, None) ** 3 * f.lengths) ** (1 / 3) + t * l for l in lams)
            assert k_functional_exact(f, t, 3.0) == pytest.approx(brute, rel=1e-6)

    def test_sandwich(self, rng):
        X = _seq(MIXED, rng, kind="sa")
        for t in (0.3, 1.0):
            lower, upper, info = k_functional(X, t, 2.0)
            assert lower <= upper * (1 + 1e-9)
            assert info["ratio"] < 10

    def test_rejects_nonpositive_t(self, rng):
        with pytest.raises(ValueError):
            k_functional(_seq(M2, rng), 0.0, 2.0)


class TestSequence:
    def test_json_round_trip(self, rng):
        X = _seq(MIXED, rng)
        Y = OperatorSequence.from_json(json.loads(json.dumps(X.to_json())))
        assert all(a.allclose(b, atol=0) for a, b in zip(X, Y))

    def test_bad_term_named(self, rng):
        obj = _seq(M2, rng).to_json()
        obj["terms"][1] = {"blocks": "garbage"}
        with pytest.raises(AlgebraError, match=r"terms\[1\]"):
            OperatorSequence.from_json(obj)

    def test_arithmetic(self, rng):
        X = _seq(M2, rng)
        assert (X - X).sup_norm() == 0
        assert (X + X).sup_norm() == pytest.approx(2 * X.sup_norm())
        assert X.adjoint().adjoint()[0].allclose(X[0])
