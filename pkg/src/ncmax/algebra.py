"""Finite-dimensional tracial algebras and the operator calculus built on them.

An :class:`Algebra` is a direct sum of full matrix blocks ``M_{d_1} + ... + M_{d_k}``
with trace ``tau(x) = sum_b w_b tr(x_b)``.  Operators are stored blockwise, so
every spectral computation respects the block structure (and therefore the
trace weights).
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable, Sequence

import numpy as np

EPS_PROJ = 1e-10
EPS_SYM = 1e-10
EPS_NUM = 1e-8
EPS_RANK = 1e-12


class AlgebraError(ValueError):
    """Raised on malformed algebras or operators that do not match them."""


@dataclass(frozen=True)
class Algebra:
    """Direct sum of matrix blocks, each with a positive trace weight."""

    blocks: tuple[tuple[int, float], ...]

    def __post_init__(self):
        blocks = tuple((int(d), float(w)) for d, w in self.blocks)
        if not blocks:
            raise AlgebraError("algebra needs at least one block")
        for d, w in blocks:
            if d < 1:
                raise AlgebraError(f"block dimension must be >= 1, got {d}")
            if not (w > 0 and np.isfinite(w)):
                raise AlgebraError(f"block weight must be positive and finite, got {w}")
        object.__setattr__(self, "blocks", blocks)

    @classmethod
    def matrix(cls, d: int, weight: float = 1.0) -> "Algebra":
        return cls(((d, weight),))

    @classmethod
    def diagonal(cls, weights: Sequence[float]) -> "Algebra":
        return cls(tuple((1, w) for w in weights))

    @property
    def dims(self) -> tuple[int, ...]:
        return tuple(d for d, _ in self.blocks)

    @property
    def weights(self) -> tuple[float, ...]:
        return tuple(w for _, w in self.blocks)

    @property
    def total_dim(self) -> int:
        return sum(self.dims)

    @property
    def total_trace(self) -> float:
        return sum(d * w for d, w in self.blocks)

    def rescaled(self, s: float) -> "Algebra":
        """Same blocks, trace multiplied by ``s``."""
        return Algebra(tuple((d, w * s) for d, w in self.blocks))

    def to_json(self) -> dict:
        return {"blocks": [[d, w] for d, w in self.blocks]}

    @classmethod
    def from_json(cls, obj) -> "Algebra":
        try:
            return cls(tuple((int(d), float(w)) for d, w in obj["blocks"]))
        except (KeyError, TypeError, ValueError) as exc:
            raise AlgebraError(f"algebra.blocks: {exc}") from exc


class Operator:
    """Immutable block-diagonal operator living in an :class:`Algebra`."""

    __slots__ = ("algebra", "blocks")

    def __init__(self, algebra: Algebra, blocks: Sequence[np.ndarray]):
        if len(blocks) != len(algebra.blocks):
            raise AlgebraError(
                f"operator has {len(blocks)} blocks, algebra has {len(algebra.blocks)}"
            )
        arrs = []
        for i, (b, (d, _)) in enumerate(zip(blocks, algebra.blocks)):
            a = np.array(b, dtype=complex)
            if a.shape != (d, d):
                raise AlgebraError(f"block {i} has shape {a.shape}, expected {(d, d)}")
            if not np.all(np.isfinite(a)):
                raise AlgebraError(f"block {i} has non-finite entries")
            a.setflags(write=False)
            arrs.append(a)
        object.__setattr__(self, "algebra", algebra)
        object.__setattr__(self, "blocks", tuple(arrs))

    def __setattr__(self, name, value):
        raise AttributeError("Operator is immutable")

    # constructors

    @classmethod
    def identity(cls, algebra: Algebra) -> "Operator":
        return cls(algebra, [np.eye(d) for d in algebra.dims])

    @classmethod
    def zeros(cls, algebra: Algebra) -> "Operator":
        return cls(algebra, [np.zeros((d, d)) for d in algebra.dims])

    @classmethod
    def from_dense(cls, algebra: Algebra, mat: np.ndarray) -> "Operator":
        """Cut the diagonal blocks out of a dense ``total_dim`` square matrix."""
        mat = np.asarray(mat)
        n = algebra.total_dim
        if mat.shape != (n, n):
            raise AlgebraError(f"dense matrix has shape {mat.shape}, expected {(n, n)}")
        out, i = [], 0
        for d in algebra.dims:
            out.append(mat[i : i + d, i : i + d])
            i += d
        return cls(algebra, out)

    @classmethod
    def diag(cls, algebra: Algebra, values: Sequence[complex]) -> "Operator":
        values = np.asarray(values, dtype=complex)
        if values.shape != (algebra.total_dim,):
            raise AlgebraError("diagonal has the wrong length")
        return cls.from_dense(algebra, np.diag(values))

    def to_dense(self) -> np.ndarray:
        n = self.algebra.total_dim
        out = np.zeros((n, n), dtype=complex)
        i = 0
        for b in self.blocks:
            d = b.shape[0]
            out[i : i + d, i : i + d] = b
            i += d
        return out

    # arithmetic

    def _check(self, other: "Operator"):
        if other.algebra != self.algebra:
            raise AlgebraError("operators live in different algebras")

    def __add__(self, other):
        if isinstance(other, Operator):
            self._check(other)
            return Operator(self.algebra, [a + b for a, b in zip(self.blocks, other.blocks)])
        return NotImplemented

    def __sub__(self, other):
        if isinstance(other, Operator):
            self._check(other)
            return Operator(self.algebra, [a - b for a, b in zip(self.blocks, other.blocks)])
        return NotImplemented

    def __neg__(self):
        return Operator(self.algebra, [-a for a in self.blocks])

    def __mul__(self, c):
        if np.isscalar(c):
            return Operator(self.algebra, [c * a for a in self.blocks])
        return NotImplemented

    __rmul__ = __mul__

    def __truediv__(self, c):
        return self * (1.0 / c)

    def __matmul__(self, other):
        if isinstance(other, Operator):
            self._check(other)
            return Operator(self.algebra, [a @ b for a, b in zip(self.blocks, other.blocks)])
        return NotImplemented

    @property
    def H(self) -> "Operator":
        return Operator(self.algebra, [a.conj().T for a in self.blocks])

    def __repr__(self):
        return f"Operator(dims={self.algebra.dims}, norm={self.norm():.4g})"

    # scalar summaries

    def norm(self) -> float:
        """Operator norm (largest singular value over all blocks)."""
        return max(float(np.linalg.norm(b, 2)) if b.size else 0.0 for b in self.blocks)

    def singular_values(self) -> list[np.ndarray]:
        return [np.linalg.svd(b, compute_uv=False) for b in self.blocks]

    def lp_norm(self, p: float) -> float:
        """Noncommutative L_p (quasi-)norm ``tau(|x|^p)^(1/p)``; ``p=inf`` is the operator norm."""
        if p == np.inf:
            return self.norm()
        total = 0.0
        for s, w in zip(self.singular_values(), self.algebra.weights):
            s = s[s > 0]
            total += w * float(np.sum(s**p))
        return total ** (1.0 / p)

    def is_selfadjoint(self, eps: float = EPS_SYM) -> bool:
        scale = max(1.0, self.norm())
        return all(np.max(np.abs(b - b.conj().T), initial=0.0) <= eps * scale for b in self.blocks)

    def hermitian_part(self) -> "Operator":
        return Operator(self.algebra, [(b + b.conj().T) / 2 for b in self.blocks])

    def is_projection(self, eps: float = EPS_PROJ) -> bool:
        return all(
            np.max(np.abs(b @ b - b), initial=0.0) <= eps
            and np.max(np.abs(b - b.conj().T), initial=0.0) <= eps
            for b in self.blocks
        )

    def allclose(self, other: "Operator", atol: float = 1e-10) -> bool:
        self._check(other)
        return all(np.allclose(a, b, atol=atol, rtol=0) for a, b in zip(self.blocks, other.blocks))

    # serialization

    def to_json(self) -> dict:
        return {
            "schema": "ncmax/1",
            "algebra": self.algebra.to_json(),
            "blocks": [
                [[float(z.real), float(z.imag)] for z in b.reshape(-1)] for b in self.blocks
            ],
        }

    @classmethod
    def from_json(cls, obj) -> "Operator":
        if not isinstance(obj, dict):
            raise AlgebraError("operator: expected a JSON object")
        if "algebra" not in obj:
            raise AlgebraError("operator: missing field 'algebra'")
        if "blocks" not in obj:
            raise AlgebraError("operator: missing field 'blocks'")
        alg = Algebra.from_json(obj["algebra"])
        blocks = []
        for i, (flat, d) in enumerate(zip(obj["blocks"], alg.dims)):
            try:
                arr = np.array([complex(re, im) for re, im in flat], dtype=complex)
                blocks.append(arr.reshape(d, d))
            except (TypeError, ValueError) as exc:
                raise AlgebraError(f"operator.blocks[{i}]: {exc}") from exc
        return cls(alg, blocks)


def _require_selfadjoint(x: Operator, what: str = "operator"):
    if not x.is_selfadjoint():
        raise AlgebraError(f"{what} must be self-adjoint")


def trace(x: Operator) -> complex | float:
    """Weighted trace; returned as a float when ``x`` is self-adjoint."""
    val = sum(w * complex(np.trace(b)) for b, w in zip(x.blocks, x.algebra.weights))
    if x.is_selfadjoint():
        return float(val.real)
    return val


def eigh_blocks(x: Operator) -> list[tuple[np.ndarray, np.ndarray]]:
    """Blockwise eigendecomposition of a self-adjoint operator (ascending eigenvalues)."""
    _require_selfadjoint(x)
    out = []
    for b in x.blocks:
        h = (b + b.conj().T) / 2
        lam, u = np.linalg.eigh(h)
        out.append((lam, u))
    return out


def apply_spectral(x: Operator, f: Callable[[np.ndarray], np.ndarray], eig=None) -> Operator:
    """``U f(Lambda) U*`` blockwise; ``f`` acts on arrays of eigenvalues."""
    eig = eig if eig is not None else eigh_blocks(x)
    out = []
    for lam, u in eig:
        vals = np.asarray(f(lam))
        if vals.shape != lam.shape:
            vals = np.broadcast_to(vals, lam.shape)
        if not np.all(np.isfinite(vals)):
            raise AlgebraError("function undefined on an eigenvalue")
        out.append((u * vals) @ u.conj().T)
    return Operator(x.algebra, out)


def functional_calculus(x: Operator, f: Callable[[np.ndarray], np.ndarray]) -> Operator:
    """Apply the scalar function ``f`` to a self-adjoint operator."""
    with np.errstate(all="ignore"):
        return apply_spectral(x, f)


def spectral_projection(x: Operator, lo: float = -np.inf, hi: float = np.inf) -> Operator:
    """``1_{[lo, hi]}(x)``; both endpoints included."""
    return apply_spectral(x, lambda t: ((t >= lo) & (t <= hi)).astype(float))


def xlogx_plus(t: np.ndarray) -> np.ndarray:
    """``t (ln|t| + 1)`` with the value 0 at t = 0."""
    t = np.asarray(t, dtype=float)
    out = np.zeros_like(t)
    nz = t != 0
    out[nz] = t[nz] * (np.log(np.abs(t[nz])) + 1.0)
    return out


def power(x: Operator, a: float) -> Operator:
    """``x^a`` for positive x (negative eigenvalues from round-off clipped to 0)."""
    def f(t):
        t = np.clip(t, 0.0, None)
        if a > 0:
            return t**a
        out = np.zeros_like(t)
        nz = t > 0
        out[nz] = t[nz] ** a
        return out

    return apply_spectral(x, f)


def sqrtm_psd(x: Operator) -> Operator:
    return power(x, 0.5)


def absolute(x: Operator) -> Operator:
    return sqrtm_psd((x.H @ x).hermitian_part())


def polar_and_pinv(x: Operator, eps_rank: float = EPS_RANK):
    """Return ``(u, |x|, pinv(x))`` with ``x = u |x|`` and u a partial isometry.

    Singular values below ``eps_rank`` times the largest one are treated as zero.
    """
    smax = x.norm()
    us, mods, pinvs = [], [], []
    for b in x.blocks:
        d = b.shape[0]
        w, s, vh = np.linalg.svd(b)
        keep = s > eps_rank * smax if smax > 0 else np.zeros_like(s, dtype=bool)
        wk, sk, vk = w[:, keep], s[keep], vh[keep, :]
        us.append(wk @ vk if keep.any() else np.zeros((d, d)))
        mods.append((vk.conj().T * sk) @ vk if keep.any() else np.zeros((d, d)))
        pinvs.append((vk.conj().T / sk) @ wk.conj().T if keep.any() else np.zeros((d, d)))
    alg = x.algebra
    return Operator(alg, us), Operator(alg, mods), Operator(alg, pinvs)


def pinv_psd(x: Operator, eps_rank: float = EPS_RANK) -> Operator:
    """Pseudo-inverse of a positive operator with relative rank cutoff."""
    m = max(x.norm(), 0.0)
    cut = eps_rank * m

    def f(t):
        out = np.zeros_like(t)
        nz = t > cut
        out[nz] = 1.0 / t[nz]
        return out

    return apply_spectral(x.hermitian_part(), f)


def support_projection(x: Operator, eps_rank: float = EPS_RANK) -> Operator:
    """Projection onto the range of a positive operator."""
    cut = eps_rank * x.norm()
    return apply_spectral(x.hermitian_part(), lambda t: (t > cut).astype(float))


def psd_check(x: Operator, eps: float = EPS_NUM) -> tuple[bool, float]:
    """``(lambda_min >= -eps * max(1, ||x||), lambda_min)``."""
    _require_selfadjoint(x)
    lam_min = min(float(np.linalg.eigvalsh((b + b.conj().T) / 2)[0]) for b in x.blocks)
    return lam_min >= -eps * max(1.0, x.norm()), lam_min


def lambda_min(x: Operator) -> float:
    return min(float(np.linalg.eigvalsh((b + b.conj().T) / 2)[0]) for b in x.blocks)


def range_join(projections: Sequence[Operator], eps_rank: float = 1e-9) -> Operator:
    """Lattice join (projection onto the span of the ranges)."""
    alg = projections[0].algebra
    out = []
    for bi, d in enumerate(alg.dims):
        stack = np.hstack([p.blocks[bi] for p in projections])
        if not stack.size:
            out.append(np.zeros((d, d)))
            continue
        u, s, _ = np.linalg.svd(stack)
        r = int(np.sum(s > eps_rank * max(1.0, s[0] if s.size else 0.0)))
        ur = u[:, :r]
        out.append(ur @ ur.conj().T)
    return Operator(alg, out)


def range_meet(projections: Sequence[Operator], eps_rank: float = 1e-9) -> Operator:
    """Lattice meet, via ``1 - join(1 - p_i)``."""
    one = Operator.identity(projections[0].algebra)
    return one - range_join([one - p for p in projections], eps_rank)


def projection_rank_trace(p: Operator) -> float:
    """Trace of a projection computed from rounded block ranks."""
    return sum(w * round(float(np.trace(b).real)) for b, w in zip(p.blocks, p.algebra.weights))


def corner_spectral_projection(y: Operator, q: Operator, lam: float) -> Operator:
    """Spectral projection ``1_{[0, lam]}`` of ``q y q`` computed inside the corner ``q``.

    Eigen-decomposition happens on the range of ``q`` only and the result is
    lifted back, so the answer is always a subprojection of ``q``.
    """
    out = []
    for yb, qb in zip(y.blocks, q.blocks):
        d = yb.shape[0]
        qh = (qb + qb.conj().T) / 2
        lam_q, u_q = np.linalg.eigh(qh)
        v = u_q[:, lam_q > 0.5]
        if v.shape[1] == 0:
            out.append(np.zeros((d, d)))
            continue
        c = v.conj().T @ yb @ v
        c = (c + c.conj().T) / 2
        mu, w = np.linalg.eigh(c)
        keep = mu <= lam
        vw = v @ w[:, keep]
        out.append(vw @ vw.conj().T)
    return Operator(y.algebra, out)


# random generators used across tests and the CLI

def random_operator(algebra: Algebra, rng: np.random.Generator, complex_: bool = True) -> Operator:
    blocks = []
    for d in algebra.dims:
        a = rng.standard_normal((d, d))
        if complex_:
            a = a + 1j * rng.standard_normal((d, d))
        blocks.append(a)
    return Operator(algebra, blocks)


def random_positive(algebra: Algebra, rng: np.random.Generator, rank_deficient: bool = False,
                    complex_: bool = True) -> Operator:
    g = random_operator(algebra, rng, complex_)
    x = g.H @ g
    if rank_deficient:
        x = apply_spectral(x, lambda t: np.where(t < np.median(t), 0.0, t))
    return x.hermitian_part()


def random_selfadjoint(algebra: Algebra, rng: np.random.Generator, complex_: bool = True) -> Operator:
    return random_operator(algebra, rng, complex_).hermitian_part()


def random_unitary(d: int, rng: np.random.Generator, complex_: bool = True) -> np.ndarray:
    z = rng.standard_normal((d, d))
    if complex_:
        z = z + 1j * rng.standard_normal((d, d))
    q, r = np.linalg.qr(z)
    ph = np.diag(r) / np.abs(np.diag(r))
    return q * ph


def positive_split(x: Operator) -> list[tuple[complex, Operator]]:
    """Write ``x = sum_k i^k x_k`` with four positive ``x_k``."""
    h = x.hermitian_part()
    g = Operator(x.algebra, [(b - b.conj().T) / 2j for b in x.blocks])
    pos = lambda y: apply_spectral(y, lambda t: np.clip(t, 0, None))
    neg = lambda y: apply_spectral(y, lambda t: np.clip(-t, 0, None))
    return [(1.0, pos(h)), (1j, pos(g)), (-1.0, neg(h)), (-1j, neg(g))]
