import math

import numpy as np
import pytest

from ncmax.algebra import Operator
from ncmax.families import (
    asym_matrix,
    gen_asym,
    gen_Ll,
    gen_nonpositive,
    gen_opti,
    ll_alphas,
    ll_blocks,
    ll_lambda_decomposition_bound,
    ll_lambda_upper,
    ll_mu_column_upper,
    ll_structured,
    opti_blocks,
    opti_dominating_value,
    threshold_tail_oracle,
)
from ncmax.lambdas import hardy_constant
from ncmax.oracle import verify_oracle


def test_asym_is_rank_one():
    T = asym_matrix(5, 4)
    assert np.linalg.matrix_rank(T) == 1
    assert T[0, 3] == pytest.approx(0.5) and T[3, 3] == pytest.approx(0.25)


def test_asym_family_shape():
    S = gen_asym(6)
    assert len(S) == 5 and S.positive
    assert max(y.norm() for y in S.images_of_one()) <= 2.0


def test_tail_witness_contract():
    S = gen_asym(12)
    xs = [Operator(S.source, [np.array([[c]])]) for c in (0.5, 1.0, 3.0)]
    rep = verify_oracle(threshold_tail_oracle(S), S, xs, [0.1, 0.5, 1.0, 2.0])
    assert rep.passed


def test_nonpositive_family():
    S = gen_nonpositive(4)
    assert not S.positive
    for y in S.images_of_one():
        assert y.is_selfadjoint() and np.linalg.eigvalsh(y.blocks[0]).min() == pytest.approx(-1.0)
    with pytest.raises(ValueError):
        gen_nonpositive(1)


def test_block_partitions():
    assert opti_blocks(3) == [(0, 1), (1, 3), (3, 7)]
    assert ll_blocks(3) == [(0, 1), (1, 3), (3, 7)]


def test_opti_samples_are_positive():
    X, diag = gen_opti(3, samples=3, seed=1)
    for x in X:
        assert np.linalg.eigvalsh(x.blocks[0]).min() >= -1e-12
    assert len(diag.weights) == 3
    assert opti_dominating_value(3, 2.0) > 0


def test_ll_terms_are_row_vectors():
    p = 4.0
    al = ll_alphas(3, p)
    for x in ll_structured(3, p, signs=False):
        row = x.blocks[0][0]
        assert np.allclose(np.linalg.norm(row), np.linalg.norm(al))
        assert np.allclose(x.blocks[0][1:], 0)
    X = gen_Ll(3, p, samples=2, seed=0)
    assert len(X) == 2 + len(ll_structured(3, p))
    with pytest.raises(ValueError):
        gen_Ll(3, 2.0)


def test_ll_bounds():
    p = 4.0
    f = ll_mu_column_upper(5, p)
    assert f.values[0] == pytest.approx(math.sqrt(np.sum(ll_alphas(5, p) ** 2)))
    assert ll_lambda_upper(5, p) > 0
    # sum 2^i alpha_i^p = N
    assert ll_lambda_decomposition_bound(5, p) == pytest.approx((2 * hardy_constant(p) * 5) ** 0.25)
