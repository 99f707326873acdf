"""Diagonal majorization with a PSD certificate, and row/column factorization."""

from __future__ import annotations

from typing import Sequence

import numpy as np

from .algebra import (
    EPS_NUM,
    EPS_PROJ,
    EPS_RANK,
    AlgebraError,
    Operator,
    lambda_min,
    pinv_psd,
    psd_check,
    sqrtm_psd,
)


def check_disjoint(q: Sequence[Operator], eps: float = EPS_PROJ) -> None:
    for i, qi in enumerate(q):
        if not qi.is_projection(max(eps, 1e-9)):
            raise AlgebraError(f"q[{i}] is not a projection")
        for j in range(i):
            if (qi @ q[j]).norm() > max(eps, 1e-9):
                raise AlgebraError(f"projections q[{j}] and q[{i}] overlap")


def diag_majorant(x: Operator, q: Sequence[Operator], d: Sequence[float]) -> tuple[Operator, Operator]:
    """``M = (sum 1/d_k) sum d_k q_k x q_k`` and the certificate ``M - e x e``.

    ``e = sum q_k``.  The certificate is positive for every positive x; it is
    returned whole so callers can read off its smallest eigenvalue.
    """
    if len(q) != len(d):
        raise AlgebraError("q and d must have the same length")
    if not q:
        raise AlgebraError("need at least one projection")
    if any(not dk > 0 for dk in d):
        raise AlgebraError("weights d_k must be strictly positive")
    ok, lam = psd_check(x)
    if not ok:
        raise AlgebraError(f"x must be positive (lambda_min={lam:.3g})")
    check_disjoint(q)
    c = float(sum(1.0 / dk for dk in d))
    m = Operator.zeros(x.algebra)
    e = Operator.zeros(x.algebra)
    for qk, dk in zip(q, d):
        m = m + (qk @ x @ qk) * dk
        e = e + qk
    m = (m * c).hermitian_part()
    cert = (m - e @ x @ e).hermitian_part()
    return m, cert


def row_column_factor(
    a: Sequence[Operator],
    u: Sequence[Operator],
    b: Sequence[Operator],
    eps_rank: float = EPS_RANK,
) -> tuple[Operator, Operator, Operator]:
    """Rewrite ``sum a_i u_i b_i`` as ``R w C``.

    ``R = (sum a_i a_i*)^{1/2}``, ``C = (sum b_i* b_i)^{1/2}`` and
    ``w = pinv(R) (sum a_i u_i b_i) pinv(C)``, which is a contraction whenever the
    ``u_i`` are.
    """
    if not (len(a) == len(u) == len(b)) or not a:
        raise AlgebraError("a, u, b must be non-empty and of equal length")
    alg = a[0].algebra
    rr = Operator.zeros(alg)
    cc = Operator.zeros(alg)
    s = Operator.zeros(alg)
    for ai, ui, bi in zip(a, u, b):
        rr = rr + ai @ ai.H
        cc = cc + bi.H @ bi
        s = s + ai @ ui @ bi
    r = sqrtm_psd(rr.hermitian_part())
    c = sqrtm_psd(cc.hermitian_part())
    w = pinv_psd(r, eps_rank) @ s @ pinv_psd(c, eps_rank)
    return r, w, c


def factor_residual(r: Operator, w: Operator, c: Operator, target: Operator) -> float:
    return (r @ w @ c - target).norm()


def majorant_sharpness(x: Operator, q: Sequence[Operator], d: Sequence[float], grid: int = 60) -> float:
    """Smallest factor ``c`` on a grid in (0, sum 1/d_k] with ``c sum d_k q_k x q_k >= e x e``.

    Returned relative to ``sum 1/d_k``; a value near 1 means the constant of
    :func:`diag_majorant` cannot be lowered for this instance.
    """
    cd = float(sum(1.0 / dk for dk in d))
    base = Operator.zeros(x.algebra)
    e = Operator.zeros(x.algebra)
    for qk, dk in zip(q, d):
        base = base + (qk @ x @ qk) * dk
        e = e + qk
    exe = e @ x @ e
    lo, hi = 0.0, 1.0
    for _ in range(grid):
        mid = (lo + hi) / 2
        if lambda_min((base * (mid * cd) - exe).hermitian_part()) >= -EPS_NUM * max(1.0, exe.norm()):
            hi = mid
        else:
            lo = mid
    return hi
