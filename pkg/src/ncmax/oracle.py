"""Weak-type oracles: given x and a level lambda, produce a projection e with

    tau(1 - e) <= C^p ||x||_p^p / lambda^p   and   ||e S_n(x) e|| <= lambda for all n.

The flagship oracle is Cuculescu's construction for the conditional
expectations of a filtration of block subalgebras.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np

from .algebra import (
    EPS_NUM,
    Algebra,
    AlgebraError,
    Operator,
    corner_spectral_projection,
    projection_rank_trace,
    psd_check,
    random_positive,
    spectral_projection,
    absolute,
)

# --------------------------------------------------------------------------
# filtrations


@dataclass(frozen=True)
class Level:
    """A unital block subalgebra ``sum_s M_{m_s}`` of an algebra.

    ``layout[b]`` lists the segments ``(s, k)`` making up top block ``b``: the
    segment is ``C^{m_s} (x) C^k`` (Kronecker order) and the subalgebra acts
    as ``y_s (x) 1_k`` on it.
    """

    sizes: tuple[int, ...]
    layout: tuple[tuple[tuple[int, int], ...], ...]

    def validate(self, algebra: Algebra) -> None:
        if len(self.layout) != len(algebra.blocks):
            raise AlgebraError("level layout does not match the number of blocks")
        seen = set()
        for b, (segs, d) in enumerate(zip(self.layout, algebra.dims)):
            tot = 0
            for s, k in segs:
                if not 0 <= s < len(self.sizes) or k < 1:
                    raise AlgebraError(f"bad segment {(s, k)} in block {b}")
                tot += self.sizes[s] * k
                seen.add(s)
            if tot != d:
                raise AlgebraError(f"level segments of block {b} cover {tot} of {d} dimensions")
        if seen != set(range(len(self.sizes))):
            raise AlgebraError("every sub-block must appear in the layout")

    def sub_weights(self, algebra: Algebra) -> np.ndarray:
        om = np.zeros(len(self.sizes))
        for segs, w in zip(self.layout, algebra.weights):
            for s, k in segs:
                om[s] += w * k
        return om

    def to_json(self) -> dict:
        return {"sizes": list(self.sizes), "layout": [[list(seg) for seg in segs] for segs in self.layout]}

    @classmethod
    def from_json(cls, obj) -> "Level":
        return cls(
            tuple(int(m) for m in obj["sizes"]),
            tuple(tuple((int(s), int(k)) for s, k in segs) for segs in obj["layout"]),
        )


@dataclass(frozen=True)
class Filtration:
    """Increasing list of block subalgebras (coarsest first)."""

    algebra: Algebra
    levels: tuple[Level, ...]

    def __post_init__(self):
        for lev in self.levels:
            lev.validate(self.algebra)

    def __len__(self):
        return len(self.levels)

    def expectation(self, n: int, x: Operator) -> Operator:
        return conditional_expectation(self, n, x)

    def check_tower(self, x: Operator, eps: float = EPS_NUM) -> float:
        """Largest ``||E_n E_m x - E_min x||`` over all pairs (should be ~0)."""
        worst = 0.0
        ex = [self.expectation(n, x) for n in range(len(self))]
        for n in range(len(self)):
            for m in range(len(self)):
                lhs = self.expectation(n, ex[m])
                worst = max(worst, (lhs - ex[min(n, m)]).norm())
        return worst

    def to_json(self) -> dict:
        return {
            "schema": "ncmax/1",
            "algebra": self.algebra.to_json(),
            "levels": [lev.to_json() for lev in self.levels],
        }

    @classmethod
    def from_json(cls, obj) -> "Filtration":
        try:
            alg = Algebra.from_json(obj["algebra"])
            levels = tuple(Level.from_json(l) for l in obj["levels"])
        except KeyError as exc:
            raise AlgebraError(f"filtration: missing field {exc}") from exc
        return cls(alg, levels)

    @classmethod
    def tensor_tower(cls, depth: int, weight: float = 1.0) -> "Filtration":
        """``M_{2^n} (x) 1`` inside ``M_{2^depth}`` for n = 0..depth."""
        d = 2**depth
        alg = Algebra.matrix(d, weight)
        levels = tuple(Level((2**n,), (((0, 2 ** (depth - n)),),)) for n in range(depth + 1))
        return cls(alg, levels)

    @classmethod
    def dyadic_diagonal(cls, depth: int) -> "Filtration":
        """Commutative dyadic martingale on ``2^depth`` atoms of mass ``2^-depth``."""
        n_atoms = 2**depth
        alg = Algebra.diagonal([2.0**-depth] * n_atoms)
        levels = []
        for n in range(depth + 1):
            group = 2 ** (depth - n)
            levels.append(Level((1,) * 2**n, tuple(((b // group, 1),) for b in range(n_atoms))))
        return cls(alg, tuple(levels))

    @classmethod
    def peeling(cls, depth: int) -> "Filtration":
        """Commutative filtration splitting off one atom per step.

        Atoms have masses ``2^-1, ..., 2^-depth, 2^-depth``; level n separates
        the first n atoms and lumps the rest.  The maximal function of the last
        atom then doubles at every step, the extremal shape for Doob bounds.
        """
        ws = [2.0 ** -(j + 1) for j in range(depth)] + [2.0**-depth]
        alg = Algebra.diagonal(ws)
        levels = tuple(
            Level((1,) * (n + 1), tuple(((min(b, n), 1),) for b in range(depth + 1)))
            for n in range(depth + 1)
        )
        return cls(alg, levels)


def conditional_expectation(F: Filtration, n: int, x: Operator) -> Operator:
    """Trace-preserving conditional expectation onto level ``n``: pinch and partially average."""
    if not 0 <= n < len(F.levels):
        raise IndexError(f"level {n} out of range for a filtration of depth {len(F.levels)}")
    if x.algebra != F.algebra:
        raise AlgebraError("operator does not live in the filtration's algebra")
    lev = F.levels[n]
    omega = lev.sub_weights(F.algebra)
    acc = [np.zeros((m, m), dtype=complex) for m in lev.sizes]
    for xb, segs, w in zip(x.blocks, lev.layout, F.algebra.weights):
        i = 0
        for s, k in segs:
            m = lev.sizes[s]
            seg = xb[i : i + m * k, i : i + m * k].reshape(m, k, m, k)
            acc[s] += w * np.einsum("ikjk->ij", seg)
            i += m * k
    ys = [a / om for a, om in zip(acc, omega)]
    out = []
    for segs, d in zip(lev.layout, F.algebra.dims):
        blk = np.zeros((d, d), dtype=complex)
        i = 0
        for s, k in segs:
            m = lev.sizes[s]
            blk[i : i + m * k, i : i + m * k] = np.kron(ys[s], np.eye(k))
            i += m * k
        out.append(blk)
    return Operator(F.algebra, out)


def _coarsen(level: Level, rng: np.random.Generator) -> Level | None:
    sizes = list(level.sizes)
    layout = [list(segs) for segs in level.layout]
    ops = []
    for s, m in enumerate(sizes):
        divs = [a for a in range(1, m) if m % a == 0]
        if divs:
            ops.append(("split", s, divs))
        if m >= 2:
            ops.append(("pinch", s, None))
    by_size = {}
    for s, m in enumerate(sizes):
        by_size.setdefault(m, []).append(s)
    for m, ss in by_size.items():
        if len(ss) >= 2:
            ops.append(("merge", ss, None))
    if not ops:
        return None
    kind, s, extra = ops[rng.integers(len(ops))]
    if kind == "split":
        a = int(rng.choice(extra))
        c = sizes[s] // a
        sizes[s] = a
        layout = [[(t, k * c) if t == s else (t, k) for t, k in segs] for segs in layout]
    elif kind == "pinch":
        m1 = int(rng.integers(1, sizes[s]))
        m2 = sizes[s] - m1
        sizes[s] = m1
        sizes.append(m2)
        new = len(sizes) - 1
        layout = [
            [seg for t, k in segs for seg in (((s, k), (new, k)) if t == s else ((t, k),))]
            for segs in layout
        ]
    else:
        ss = list(s)
        keep, drop = (int(v) for v in rng.choice(ss, size=2, replace=False))
        layout = [[(keep if t == drop else t, k) for t, k in segs] for segs in layout]
        sizes.pop(drop)
        layout = [[(t - 1 if t > drop else t, k) for t, k in segs] for segs in layout]
    # merge adjacent segments of the same sub-block inside a block only if contiguous in Kronecker order
    return Level(tuple(sizes), tuple(tuple(segs) for segs in layout))


def random_filtration(algebra: Algebra, depth: int, rng: np.random.Generator,
                      include_top: bool = True) -> Filtration:
    """Random tower of ``depth`` levels obtained by coarsening the full algebra.

    Coarsening moves (tensor split, pinch, merge of equal sub-blocks) always
    produce a subalgebra of the previous level, so nesting holds by construction.
    """
    top = Level(algebra.dims, tuple(((b, 1),) for b in range(len(algebra.dims))))
    levels = [top]
    while len(levels) < depth:
        nxt = _coarsen(levels[-1], rng)
        if nxt is None:
            nxt = levels[-1]
        levels.append(nxt)
    levels.reverse()
    if not include_top:
        levels = levels[:-1] or levels
    return Filtration(algebra, tuple(levels))


def cuculescu(F: Filtration, x: Operator, lam: float) -> tuple[Operator, list[Operator]]:
    """Cuculescu projections ``q_n = 1_{[0,lam]}(q_{n-1} E_n(x) q_{n-1})`` inside the corner ``q_{n-1}``."""
    if not lam > 0:
        raise ValueError("lambda must be positive")
    ok, lmin = psd_check(x)
    if not ok:
        raise AlgebraError(f"Cuculescu's construction needs a positive operator (lambda_min={lmin:.3g})")
    q = Operator.identity(F.algebra)
    qs = []
    for n in range(len(F)):
        q = corner_spectral_projection(F.expectation(n, x), q, lam)
        qs.append(q)
    return q, qs


# --------------------------------------------------------------------------
# map families and oracles


@dataclass
class MapFamily:
    """Finite list of linear maps ``S_n`` from ``source`` to ``target``."""

    source: Algebra
    target: Algebra
    maps: Sequence[Callable[[Operator], Operator]]
    positive: bool = False
    name: str = "family"
    norm_bound: float | None = None

    def __len__(self):
        return len(self.maps)

    def apply(self, x: Operator) -> list[Operator]:
        return [S(x) for S in self.maps]

    def certify_positive(self, rng: np.random.Generator, samples: int = 20) -> float:
        """Smallest eigenvalue of ``S_n(x)`` over random positive x (scaled by ||x||)."""
        worst = np.inf
        for _ in range(samples):
            x = random_positive(self.source, rng)
            for y in self.apply(x):
                worst = min(worst, psd_check(y.hermitian_part())[1] / x.norm())
        return worst

    def matrix(self, n: int) -> np.ndarray:
        """Matrix of ``S_n`` acting on the concatenated vectorized blocks."""
        cols = []
        for bi, d in enumerate(self.source.dims):
            for i in range(d):
                for j in range(d):
                    blocks = [np.zeros((dd, dd)) for dd in self.source.dims]
                    blocks[bi] = blocks[bi].copy()
                    blocks[bi][i, j] = 1.0
                    y = self.maps[n](Operator(self.source, blocks))
                    cols.append(np.concatenate([b.reshape(-1) for b in y.blocks]))
        return np.array(cols).T


def doob_family(F: Filtration) -> MapFamily:
    maps = [lambda x, n=n: conditional_expectation(F, n, x) for n in range(len(F))]
    return MapFamily(F.algebra, F.algebra, maps, positive=True, name="doob", norm_bound=1.0)


def identity_family(algebra: Algebra) -> MapFamily:
    return MapFamily(algebra, algebra, [lambda x: x], positive=True, name="identity", norm_bound=1.0)


@dataclass
class WeakTypeOracle:
    """``produce(x, lam)`` returns a projection meeting the weak (p, p) contract with ``constant``."""

    p: float
    constant: float
    produce: Callable[[Operator, float], Operator]
    name: str = "oracle"

    def __call__(self, x: Operator, lam: float) -> Operator:
        return self.produce(x, lam)


def cuculescu_oracle(F: Filtration) -> WeakTypeOracle:
    return WeakTypeOracle(1.0, 1.0, lambda x, lam: cuculescu(F, x, lam)[0], name="cuculescu")


def spectral_oracle(p: float = 1.0) -> WeakTypeOracle:
    """``e = 1_{[0,lam]}(|x|)``; meets the contract for the identity family at every p (Chebyshev)."""
    return WeakTypeOracle(p, 1.0, lambda x, lam: spectral_projection(absolute(x), -np.inf, lam), name="spectral")


def uniform_oracle(family: MapFamily, constant: float | None = None) -> WeakTypeOracle:
    """Weak (inf, inf) oracle: ``e = 1`` when every ``||S_n(x)|| <= lam``, else ``e = 0``."""
    c = constant if constant is not None else (family.norm_bound or 1.0)

    def produce(x: Operator, lam: float) -> Operator:
        if max(y.norm() for y in family.apply(x)) <= lam * (1 + EPS_NUM):
            return Operator.identity(family.target)
        return Operator.zeros(family.target)

    return WeakTypeOracle(np.inf, c, produce, name="uniform")


def tail_oracle(family: MapFamily, constant: float = 1.0) -> WeakTypeOracle:
    """Remove the first K basis vectors of a single-block target, K as small as possible.

    This is the ``sum_{k>K} e_{kk}`` witness used for the explicit
    ``e_{1,1} + ...`` families on truncations of B(l_2).
    """
    (d, _), = family.target.blocks

    def produce(x: Operator, lam: float) -> Operator:
        ys = [y.blocks[0] for y in family.apply(x)]
        for k in range(d + 1):
            if all(np.linalg.norm(y[k:, k:], 2) <= lam * (1 + EPS_NUM) if k < d else True for y in ys):
                return Operator(family.target, [np.diag([0.0] * k + [1.0] * (d - k))])
        return Operator.zeros(family.target)

    return WeakTypeOracle(1.0, constant, produce, name="tail")


@dataclass
class OracleReport:
    passed: bool
    n_checks: int
    worst_trace_slack: float
    worst_norm_ratio: float
    failures: list = field(default_factory=list)

    def to_json(self) -> dict:
        return {
            "passed": self.passed,
            "n_checks": self.n_checks,
            "worst_trace_slack": self.worst_trace_slack,
            "worst_norm_ratio": self.worst_norm_ratio,
            "failures": self.failures[:20],
        }


def weak_bound(o: WeakTypeOracle, x: Operator, lam: float) -> float:
    """Right-hand side ``C^p ||x||_p^p / lam^p`` of the trace half of the contract."""
    if o.p == np.inf:
        return 0.0 if o.constant * x.norm() <= lam else np.inf
    return (o.constant * x.lp_norm(o.p) / lam) ** o.p


def verify_oracle(o: WeakTypeOracle, S: MapFamily, xs: Sequence[Operator], lams: Sequence[float],
                  eps: float = EPS_NUM) -> OracleReport:
    """Run the oracle on every ``(x, lam)`` pair and check both halves of the contract."""
    worst_slack, worst_ratio, fails, n = np.inf, 0.0, [], 0
    for xi, x in enumerate(xs):
        sx = S.apply(x)
        for lam in lams:
            n += 1
            e = o(x, lam)
            t = projection_rank_trace(Operator.identity(S.target) - e)
            bound = weak_bound(o, x, lam)
            slack = bound - t if np.isfinite(bound) else np.inf
            ratio = max((e @ y @ e).norm() for y in sx) / lam
            worst_slack = min(worst_slack, slack / max(1.0, bound) if np.isfinite(slack) else slack)
            worst_ratio = max(worst_ratio, ratio)
            if t > bound * (1 + 1e-12) + 1e-12 or ratio > 1 + eps:
                fails.append({"x": xi, "lambda": lam, "trace": t, "bound": bound, "ratio": ratio})
    return OracleReport(not fails, n, float(worst_slack), float(worst_ratio), fails)
