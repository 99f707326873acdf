import json

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from ncmax.algebra import Algebra, AlgebraError, Operator, projection_rank_trace, random_positive, trace
from ncmax.oracle import (
    Filtration,
    Level,
    conditional_expectation,
    cuculescu,
    cuculescu_oracle,
    doob_family,
    identity_family,
    random_filtration,
    spectral_oracle,
    verify_oracle,
)
from strategies import algebras

M2 = Algebra.matrix(2, 1.0)


class TestExpectation:
    def test_full_level_is_identity(self, rng):
        F = Filtration.tensor_tower(2)
        x = random_positive(F.algebra, rng)
        assert conditional_expectation(F, len(F) - 1, x).allclose(x)

    def test_scalar_level(self):
        F = Filtration(M2, (Level((1,), (((0, 2),),)),))
        out = conditional_expectation(F, 0, Operator(M2, [np.diag([4.0, 0.0])]))
        assert np.allclose(out.blocks[0], 2 * np.eye(2))

    def test_tensor_level_is_partial_average(self, rng):
        F = Filtration.tensor_tower(2)
        x = random_positive(F.algebra, rng)
        y = conditional_expectation(F, 1, x)
        X = x.blocks[0].reshape(2, 2, 2, 2)
        expected = np.kron(np.einsum("ikjk->ij", X) / 2, np.eye(2))
        assert np.allclose(y.blocks[0], expected)
        assert conditional_expectation(F, 1, y).allclose(y)

    def test_out_of_range(self, rng):
        F = Filtration.tensor_tower(1)
        with pytest.raises(IndexError):
            conditional_expectation(F, 5, Operator.identity(F.algebra))

    @given(algebras(max_blocks=3, max_dim=4), st.integers(1, 4), st.integers(0, 2**31))
    def test_random_tower_properties(self, alg, depth, seed):
        rng = np.random.default_rng(seed)
        F = random_filtration(alg, depth, rng)
        x = random_positive(alg, rng)
        assert F.check_tower(x) <= 1e-9 * max(1.0, x.norm())
        for n in range(len(F)):
            y = conditional_expectation(F, n, x)
            # trace preserving, positive and contractive
            assert trace(y).real == pytest.approx(trace(x).real, rel=1e-9)
            assert min(np.linalg.eigvalsh(b).min() for b in y.blocks) >= -1e-9 * x.norm()
            assert y.norm() <= x.norm() * (1 + 1e-9)

    def test_json_round_trip(self, rng):
        F = random_filtration(Algebra(((2, 1.0), (3, 0.5))), 3, rng)
        G = Filtration.from_json(json.loads(json.dumps(F.to_json())))
        assert G == F

    def test_bad_layout_rejected(self):
        with pytest.raises(AlgebraError):
            Filtration(M2, (Level((1,), (((0, 3),),)),))

    def test_peeling_shape(self):
        F = Filtration.peeling(4)
        x = Operator.diag(F.algebra, [0, 0, 0, 0, 1.0])
        top = [conditional_expectation(F, n, x).blocks[-1][0, 0].real for n in range(len(F))]
        assert np.allclose(top, [2.0**n / 16 for n in range(5)])


class TestCuculescu:
    def test_below_level_gives_identity(self):
        F = Filtration.tensor_tower(2)
        x = Operator.identity(F.algebra) * 0.5
        q, _ = cuculescu(F, x, 1.0)
        assert q.allclose(Operator.identity(F.algebra))

    def test_diag_example(self):
        F = Filtration.dyadic_diagonal(1)
        x = Operator.diag(F.algebra, [4.0, 0.0])
        q, _ = cuculescu(F, x, 2.0)
        assert np.allclose([b[0, 0].real for b in q.blocks], [0.0, 1.0])

    def test_oracle_contract(self, rng):
        F = Filtration.tensor_tower(3)
        S = doob_family(F)
        xs = [random_positive(F.algebra, rng) for _ in range(20)]
        lams = [0.1, 0.5, 1.0, 2.0, 5.0]
        rep = verify_oracle(cuculescu_oracle(F), S, xs, lams)
        assert rep.passed and rep.n_checks == 100

    def test_rejects_non_positive(self):
        F = Filtration.tensor_tower(1)
        with pytest.raises(AlgebraError):
            cuculescu(F, Operator(F.algebra, [np.diag([1.0, -1.0])]), 1.0)

    @given(st.integers(0, 2**31), st.floats(0.05, 3.0))
    def test_weak_type_property(self, seed, scale):
        rng = np.random.default_rng(seed)
        alg = Algebra(((2, 1.0), (1, 0.5), (3, 2.0)))
        F = random_filtration(alg, 3, rng)
        x = random_positive(alg, rng)
        lam = scale * x.norm()
        q, qs = cuculescu(F, x, lam)
        assert alg.total_trace - projection_rank_trace(q) <= x.lp_norm(1) / lam + 1e-12
        for n in range(len(F)):
            assert (q @ conditional_expectation(F, n, x) @ q).norm() <= lam * (1 + 1e-8)
        # the projections decrease
        for a, b in zip(qs, qs[1:]):
            assert (b @ a).allclose(b, atol=1e-8)


def test_spectral_oracle_is_chebyshev(rng):
    alg = Algebra(((3, 1.0), (2, 0.5)))
    xs = [random_positive(alg, rng) for _ in range(10)]
    for p in (1.0, 2.0):
        assert verify_oracle(spectral_oracle(p), identity_family(alg), xs, [0.3, 1.0, 3.0]).passed


def test_map_family_positivity(rng):
    S = doob_family(Filtration.tensor_tower(2))
    assert S.certify_positive(rng, samples=5) >= -1e-10
