import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy.optimize import minimize

from ncmax.algebra import Algebra, AlgebraError, Operator, lambda_min, random_operator, random_positive
from ncmax.envelope import (
    DiagonalEnvelopeProblem,
    EnvelopeProblem,
    fit_slope,
    solve_diagonal,
    solve_diagonal_log,
    solve_envelope,
    verify_counterexample_growth,
)
from ncmax.families import gen_nonpositive, ll_column_value, nonpositive_envelope_value

M2 = Algebra.matrix(2, 1.0)


def test_offdiagonal_unit():
    x = Operator(M2, [np.array([[0.0, 1.0], [1.0, 0.0]])])
    sol = solve_envelope(EnvelopeProblem("sa", [x], 2.0), tol=1e-9)
    assert sol.value == pytest.approx(math.sqrt(2), abs=1e-6)
    assert sol.optimum.allclose(Operator.identity(M2), atol=1e-4)


@pytest.mark.parametrize("N", [3, 4, 6])
@pytest.mark.parametrize("p", [1.5, 2.0, 3.0])
def test_nonpositive_closed_form(N, p):
    sol = solve_envelope(EnvelopeProblem("sa", gen_nonpositive(N).images_of_one(), p), tol=1e-9)
    assert not sol.gap_flag
    assert sol.value == pytest.approx(nonpositive_envelope_value(N, p), rel=1e-5)


@pytest.mark.parametrize("kind", ["pos", "col"])
def test_single_term_is_its_own_norm(rng, kind):
    alg = Algebra(((3, 1.0), (2, 0.5)))
    x = random_positive(alg, rng) if kind == "pos" else random_operator(alg, rng)
    sol = solve_envelope(EnvelopeProblem(kind, [x], 3.0), tol=1e-9)
    assert sol.value == pytest.approx(x.lp_norm(3.0), rel=1e-5)


def test_infinite_exponent(rng):
    alg = Algebra(((3, 1.0),))
    xs = [random_positive(alg, rng) for _ in range(3)]
    sol = solve_envelope(EnvelopeProblem("pos", xs, np.inf))
    assert sol.value == pytest.approx(max(x.norm() for x in xs))
    assert sol.feasibility >= -1e-12


@settings(max_examples=10)
@given(st.integers(0, 2**31), st.sampled_from([1.0, 2.0, 4.0]))
def test_feasible_and_monotone(seed, p):
    rng = np.random.default_rng(seed)
    alg = Algebra(((2, 1.0), (3, 2.0)))
    xs = [random_positive(alg, rng) for _ in range(3)]
    full = solve_envelope(EnvelopeProblem("pos", xs, p), tol=1e-8)
    fewer = solve_envelope(EnvelopeProblem("pos", xs[:2], p), tol=1e-8)
    for x in xs:
        assert lambda_min(full.optimum - x) >= -1e-6 * max(1.0, full.optimum.norm())
    assert fewer.value <= full.value * (1 + 1e-5)
    assert full.value >= max(x.lp_norm(p) for x in xs) * (1 - 1e-6)


def test_problem_validation(rng):
    alg = Algebra(((2, 1.0),))
    h = Operator(alg, [np.diag([1.0, -1.0])])
    with pytest.raises(AlgebraError, match="PSD"):
        EnvelopeProblem("pos", [h], 2.0)
    with pytest.raises(AlgebraError, match="p >= 2"):
        EnvelopeProblem("col", [h], 1.5)
    with pytest.raises(AlgebraError):
        EnvelopeProblem("sa", [random_operator(alg, rng)], 2.0)
    with pytest.raises(AlgebraError):
        EnvelopeProblem("nope", [h], 2.0)


def _diagonal_numeric(prob):
    w, al, p = map(np.asarray, (prob.weights, prob.alphas, prob.p))
    # search over log d on the constraint surface
    def obj(v):
        d = np.exp(v)
        scale = math.sqrt(float(np.sum(al**2 / d**2)))
        return float(np.sum(w * (d * scale) ** p)) ** (1 / p)
    res = minimize(obj, np.zeros(len(w)), method="Nelder-Mead", options={"xatol": 1e-10, "fatol": 1e-12, "maxiter": 20000})
    return res.fun


@settings(max_examples=15)
@given(st.lists(st.tuples(st.floats(0.1, 10), st.floats(0.1, 10)), min_size=1, max_size=4),
       st.floats(0.5, 5))
def test_diagonal_closed_form(pairs, p):
    prob = DiagonalEnvelopeProblem(tuple(a for a, _ in pairs), tuple(b for _, b in pairs), p)
    d, val = solve_diagonal(prob)
    assert np.sum(np.asarray(prob.alphas) ** 2 / d**2) == pytest.approx(1.0)
    assert val == pytest.approx(_diagonal_numeric(prob), rel=1e-5)
    assert solve_diagonal_log(prob) == pytest.approx(math.log(val))


def test_column_block_family_closed_form():
    for N in (3, 10, 40):
        assert ll_column_value(N, 4.0) == pytest.approx(2 ** -0.25 * N**0.75, rel=1e-10)


def test_growth_reports():
    r = verify_counterexample_growth("ll_col", [8, 16, 32, 64], p=4.0)
    assert r.passed and r.slope == pytest.approx(0.75, abs=1e-9)
    r = verify_counterexample_growth("nonpos", [3, 4, 5], p=2.0)
    assert r.reliable and r.extra["power_slope"] > 0
    assert fit_slope([1, 2, 4], [3, 6, 12]) == pytest.approx(1.0)
    with pytest.raises(AlgebraError):
        verify_counterexample_growth("nope", [1, 2])
