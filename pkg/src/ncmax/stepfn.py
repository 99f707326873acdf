"""Nonincreasing step functions on (0, inf): singular value functions and their calculus.

A :class:`StepFunction` is a finite list of ``(value, length)`` pieces laid out
from 0, strictly decreasing in value, optionally followed by a constant tail of
infinite length.  Everything here is exact piecewise arithmetic; there is no
quadrature anywhere.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Iterable, Sequence

import numpy as np

from .algebra import EPS_NUM, Operator


@dataclass(frozen=True)
class StepFunction:
    """Right-continuous nonincreasing step function in normal form."""

    values: tuple[float, ...] = ()
    lengths: tuple[float, ...] = ()
    tail: float = 0.0

    def __post_init__(self):
        vals, lens = _normalize(self.values, self.lengths, self.tail)
        object.__setattr__(self, "values", vals)
        object.__setattr__(self, "lengths", lens)
        object.__setattr__(self, "tail", float(self.tail))

    @classmethod
    def from_pairs(cls, pairs: Iterable[tuple[float, float]]) -> "StepFunction":
        """Build from ``(value, length)`` pairs; an infinite length marks the tail."""
        vals, lens, tail = [], [], 0.0
        pairs = list(pairs)
        for i, (v, l) in enumerate(pairs):
            if l == np.inf or l == "inf":
                if i != len(pairs) - 1:
                    raise ValueError("only the last piece may have infinite length")
                tail = float(v)
            else:
                vals.append(float(v))
                lens.append(float(l))
        return cls(tuple(vals), tuple(lens), tail)

    @classmethod
    def indicator(cls, length: float, value: float = 1.0) -> "StepFunction":
        return cls((value,), (length,))

    @classmethod
    def zero(cls) -> "StepFunction":
        return cls()

    def pairs(self) -> list[tuple[float, float]]:
        out = list(zip(self.values, self.lengths))
        if self.tail > 0:
            out.append((self.tail, np.inf))
        return out

    def to_json(self) -> list:
        return [[v, "inf" if l == np.inf else l] for v, l in self.pairs()]

    @classmethod
    def from_json(cls, obj) -> "StepFunction":
        return cls.from_pairs((float(v), np.inf if l == "inf" else float(l)) for v, l in obj)

    @property
    def breakpoints(self) -> np.ndarray:
        """Right end of every finite piece."""
        return np.cumsum(np.asarray(self.lengths, dtype=float))

    @property
    def support(self) -> float:
        if self.tail > 0:
            return np.inf
        return float(np.sum(self.lengths))

    def __call__(self, t: float) -> float:
        if t < 0:
            raise ValueError("step functions live on (0, inf)")
        ends = self.breakpoints
        idx = int(np.searchsorted(ends, t, side="right"))
        if idx < len(self.values):
            return self.values[idx]
        return self.tail

    def primitive(self, t: float) -> float:
        """``int_0^t f``."""
        total, start = 0.0, 0.0
        for v, l in zip(self.values, self.lengths):
            if t <= start + l:
                return total + v * (t - start)
            total += v * l
            start += l
        return total + self.tail * (t - start)

    def scale(self, c: float) -> "StepFunction":
        if c < 0:
            raise ValueError("scale factor must be nonnegative")
        return StepFunction(tuple(c * v for v in self.values), self.lengths, c * self.tail)

    def power(self, a: float) -> "StepFunction":
        return StepFunction(tuple(v**a for v in self.values), self.lengths, self.tail**a if self.tail > 0 else 0.0)

    def __add__(self, other: "StepFunction") -> "StepFunction":
        return sum_steps([self, other])

    def __mul__(self, c: float) -> "StepFunction":
        return self.scale(c)

    __rmul__ = __mul__

    def lp_norm(self, p: float) -> float:
        return lorentz_norm(self, p, p)


def _normalize(values, lengths, tail):
    vals, lens = [], []
    for v, l in zip(values, lengths):
        v, l = float(v), float(l)
        if l < 0 or not np.isfinite(l):
            raise ValueError(f"piece length must be finite and >= 0, got {l}")
        if v < 0:
            raise ValueError(f"step function values must be nonnegative, got {v}")
        if l == 0:
            continue
        if vals and v > vals[-1] * (1 + 1e-15) + 1e-300:
            raise ValueError("step function values must be nonincreasing")
        if vals and v >= vals[-1]:
            lens[-1] += l
            continue
        vals.append(v)
        lens.append(l)
    if tail < 0:
        raise ValueError("tail must be nonnegative")
    if vals and tail > vals[-1]:
        raise ValueError("tail exceeds the last finite value")
    # drop pieces equal to the tail (they merge into it) and trailing zeros
    while vals and (vals[-1] <= tail):
        vals.pop()
        lens.pop()
    return tuple(vals), tuple(lens)


def mu(x: Operator) -> StepFunction:
    """Singular value function: each singular value carries the weight of its block."""
    vals, lens = [], []
    for s, w in zip(x.singular_values(), x.algebra.weights):
        vals.extend(s.tolist())
        lens.extend([w] * len(s))
    order = np.argsort(-np.asarray(vals), kind="stable")
    return StepFunction(tuple(vals[i] for i in order), tuple(lens[i] for i in order))


def lorentz_norm(f: StepFunction, p: float, q: float) -> float:
    """``||f||_{p,q} = (int_0^inf (t^{1/p} f(t))^q dt/t)^{1/q}`` in closed form.

    ``q = inf`` gives ``sup_t t^{1/p} f(t)``.  Divergent integrals return ``inf``.
    """
    if not (p > 0 and q > 0):
        raise ValueError("p and q must be positive")
    if f.tail > 0:
        return np.inf if p < np.inf else (f.values[0] if f.values else f.tail)
    if not f.values:
        return 0.0
    ends = f.breakpoints
    starts = np.concatenate([[0.0], ends[:-1]])
    v = np.asarray(f.values)
    if p == np.inf:
        if q == np.inf:
            return float(v[0])
        return np.inf
    if q == np.inf:
        return float(np.max(v * ends ** (1.0 / p)))
    r = q / p
    total = float(np.sum(v**q * (ends**r - starts**r))) / r
    return total ** (1.0 / q)


def _union_grid(fs: Sequence[StepFunction]) -> np.ndarray:
    pts = np.unique(np.concatenate([[0.0]] + [f.breakpoints for f in fs]))
    return pts


def sum_steps(fs: Sequence[StepFunction]) -> StepFunction:
    """Pointwise sum of nonincreasing step functions (still nonincreasing)."""
    fs = list(fs)
    if not fs:
        return StepFunction()
    grid = _union_grid(fs)
    vals, lens = [], []
    for a, b in zip(grid[:-1], grid[1:]):
        vals.append(sum(f(a) for f in fs))
        lens.append(b - a)
    tail = sum(f.tail for f in fs)
    return StepFunction(tuple(vals), tuple(lens), tail)


def dilate(f: StepFunction, s: float) -> StepFunction:
    """``(D_s f)(t) = f(t / s)``: every length multiplied by ``s``."""
    if not s > 0:
        raise ValueError("dilation factor must be positive")
    return StepFunction(f.values, tuple(l * s for l in f.lengths), f.tail)


def hl_majorize(f: StepFunction, g: StepFunction, eps: float = EPS_NUM) -> bool:
    """``int_0^t f <= int_0^t g`` for all t, checked at every kink of both primitives."""
    return majorization_slack(f, g, eps) >= 0


def majorization_slack(f: StepFunction, g: StepFunction, eps: float = EPS_NUM) -> float:
    """Smallest ``(1+eps) G(t) - F(t)`` over the kinks (negative means failure)."""
    if f.tail > g.tail:
        return -np.inf
    grid = _union_grid([f, g])[1:]
    if grid.size == 0:
        return 0.0
    worst = np.inf
    for t in grid:
        worst = min(worst, (1 + eps) * g.primitive(t) - f.primitive(t))
    return float(worst)


def pointwise_ratio(f: StepFunction, g: StepFunction) -> float:
    """``sup_t f(t) / g(t)`` over the common pieces (``inf`` if f > 0 = g somewhere)."""
    grid = _union_grid([f, g])
    worst = 0.0
    for a in grid[:-1]:
        fv, gv = f(a), g(a)
        if fv == 0:
            continue
        if gv == 0:
            return np.inf
        worst = max(worst, fv / gv)
    if f.tail > 0:
        worst = max(worst, f.tail / g.tail if g.tail > 0 else np.inf)
    return float(worst)


def pointwise_le(f: StepFunction, g: StepFunction, rtol: float = 1e-10) -> bool:
    return pointwise_ratio(f, g) <= 1 + rtol
