"""Exact convex-hull membership: is ``target`` a convex combination of columns?

The deciding engine is a Phase-I simplex on an integer-preserving (Bareiss)
tableau, so every quantity is an exact integer and no rounding ever enters a
verdict.  Entering columns follow Dantzig's rule; after ``stall_limit``
consecutive degenerate pivots the rule switches to Bland's (lowest index
entering, lowest basic index on ratio ties) until the objective moves again,
which rules out cycling.

For large instances a floating-point LP may *propose* a separating functional
or a support set.  A proposal only counts after exact verification: the
functional is rounded to a dyadic vector and checked against every column in
integer arithmetic, and a support set is handed to the exact simplex.  If a
proposal fails verification the full exact simplex runs.
"""
from __future__ import annotations

import functools
import logging
import math
from dataclasses import dataclass
from fractions import Fraction
from typing import Sequence

import numpy as np

log = logging.getLogger(__name__)

EXACT_BUDGET = 20_000


@dataclass(frozen=True)
class MembershipResult:
    """Outcome of a membership test.

    Feasible: ``weights`` maps column index to a positive exact weight, the
    weights sum to 1 and reproduce the target.  Infeasible: ``functional`` y
    satisfies ``y . column <= bound`` for every column and ``y . target = value``
    with ``value > bound``.
    """

    feasible: bool
    weights: dict[int, Fraction] | None = None
    functional: tuple[Fraction, ...] | None = None
    bound: Fraction | None = None
    value: Fraction | None = None
    method: str = "exact-simplex"
    pivots: int = 0


def _int_matrix(points) -> np.ndarray:
    arr = np.asarray(points)
    if arr.dtype == object:
        return arr
    return arr.astype(np.int64)


def _max_dot(points: np.ndarray, y: Sequence[Fraction]) -> Fraction:
    den = functools.reduce(math.lcm, (v.denominator for v in y), 1)
    yi = np.array([int(v * den) for v in y], dtype=object)
    big = max((abs(int(v)) for v in yi), default=0) * points.shape[0] < 2**62
    if big and points.dtype != object:
        dots = points.T @ yi.astype(np.int64)
    else:
        dots = points.T.astype(object) @ yi
    return Fraction(int(dots.max()), den)


def exact_membership(points, target: Sequence[Fraction], *, stall_limit: int = 50,
                     max_pivots: int | None = None) -> MembershipResult:
    """Decide membership of ``target`` in the convex hull of the columns of ``points``.

    ``points`` is an integer matrix (m x N); ``target`` has m exact rationals.
    """
    A = _int_matrix(points)
    m, N = A.shape
    target = [Fraction(v) for v in target]
    if len(target) != m:
        raise ValueError(f"target has {len(target)} coordinates, points have {m}")
    # Row m enforces sum(w) = 1.
    rows = m + 1
    scale = functools.reduce(math.lcm, (v.denominator for v in target), 1)
    rhs = [int(v * scale) for v in target] + [scale]
    sign = np.array([-1 if v < 0 else 1 for v in rhs], dtype=object)

    T = np.zeros((rows + 1, N + rows + 1), dtype=object)
    T[:m, :N] = A.astype(object)
    T[m, :N] = 1
    T[:rows, :N] *= sign[:, None]
    T[:rows, N:N + rows] = np.eye(rows, dtype=np.int64).astype(object)
    T[:rows, -1] = np.array(rhs, dtype=object) * sign
    T[rows, :N] = -T[:rows, :N].sum(axis=0)
    T[rows, -1] = -T[:rows, -1].sum()
    basis = list(range(N, N + rows))
    d = 1
    pivots = 0
    stall = 0

    while True:
        if T[rows, -1] == 0:
            weights = {}
            for i, var in enumerate(basis):
                if var < N and T[i, -1] != 0:
                    weights[var] = Fraction(int(T[i, -1]), d * scale)
            return MembershipResult(True, weights=weights, method="exact-simplex", pivots=pivots)
        z = T[rows, :-1]
        neg = np.nonzero(z < 0)[0]
        if len(neg) == 0:
            break
        if stall >= stall_limit:
            q = int(neg[0])
        else:
            zn = z[neg]
            q = int(neg[int(np.argmin(zn))])
        col = T[:rows, q]
        best = -1
        for i in np.nonzero(col > 0)[0]:
            if best < 0:
                best = i
                continue
            lhs = T[i, -1] * T[best, q]
            rhs_ = T[best, -1] * T[i, q]
            if lhs < rhs_ or (lhs == rhs_ and basis[i] < basis[best]):
                best = i
        if best < 0:
            raise ArithmeticError("phase-one objective unbounded; tableau corrupted")
        r = int(best)
        p = T[r, q]
        pivot_row = T[r].copy()
        colfull = T[:, q].copy()
        T = (T * p - np.outer(colfull, pivot_row)) // d
        T[r] = pivot_row
        d = p
        basis[r] = q
        pivots += 1
        stall = stall + 1 if pivot_row[-1] == 0 else 0
        if max_pivots is not None and pivots > max_pivots:
            raise RuntimeError(f"exact simplex exceeded {max_pivots} pivots")

    # Phase-one optimum is positive: read the dual from the artificial columns.
    y = [(1 - Fraction(int(T[rows, N + i]), d)) * int(sign[i]) for i in range(rows)]
    functional = tuple(y[:m])
    bound = -y[m]
    value = sum((yi * ti for yi, ti in zip(functional, target)), Fraction(0))
    max_col = _max_dot(A, functional) if N else bound
    if not (max_col <= bound < value):
        raise ArithmeticError("Farkas certificate failed its own exact check")
    return MembershipResult(False, functional=functional, bound=max_col, value=value,
                            method="exact-simplex", pivots=pivots)


def _float_separation(A: np.ndarray, target: np.ndarray):
    """Float LP: max y.target - t  s.t.  y.A_j <= t,  -1 <= y <= 1."""
    from scipy.optimize import linprog

    m, N = A.shape
    c = np.r_[-target, 1.0]
    A_ub = np.c_[A.T.astype(float), -np.ones(N)]
    res = linprog(c, A_ub=A_ub, b_ub=np.zeros(N),
                  bounds=[(-1, 1)] * m + [(None, None)], method="highs-ipm")
    if res.status != 0:
        return None
    gap = -res.fun
    weights = -np.asarray(res.ineqlin.marginals)
    return gap, res.x[:m], weights


def _certify_functional(A: np.ndarray, target: Sequence[Fraction], y: np.ndarray):
    for bits in (12, 20, 28, 36, 44):
        yi = np.round(y * 2**bits).astype(np.int64)
        if not yi.any():
            continue
        functional = tuple(Fraction(int(v), 2**bits) for v in yi)
        value = sum((f * t for f, t in zip(functional, target)), Fraction(0))
        bound = _max_dot(A, functional)
        if value > bound:
            return functional, bound, value
    return None


def membership(points, target: Sequence[Fraction], *, method: str = "auto",
               exact_budget: int = EXACT_BUDGET) -> MembershipResult:
    """Convex-hull membership with an exact verdict.

    ``method``: ``"exact"`` runs the exact simplex on everything; ``"seeded"``
    lets a float LP propose a certificate or support first; ``"auto"`` picks
    exact for tableaus below ``exact_budget`` entries.
    """
    A = _int_matrix(points)
    m, N = A.shape
    target = [Fraction(v) for v in target]
    if method not in ("auto", "exact", "seeded"):
        raise ValueError(f"unknown method {method!r}")
    if method == "exact" or (method == "auto" and (m + 2) * (N + m + 2) <= exact_budget):
        return exact_membership(A, target)

    proposal = _float_separation(A, np.array([float(v) for v in target]))
    if proposal is not None:
        gap, y, w = proposal
        if gap > 1e-7:
            cert = _certify_functional(A, target, y)
            if cert is not None:
                functional, bound, value = cert
                return MembershipResult(False, functional=functional, bound=bound, value=value,
                                        method="float-proposed, exact-verified")
            log.info("rounded float functional failed exact verification; falling back")
        else:
            support = np.nonzero(w > 1e-9)[0]
            if len(support):
                sub = exact_membership(A[:, support], target)
                if sub.feasible:
                    weights = {int(support[j]): v for j, v in sub.weights.items()}
                    return MembershipResult(True, weights=weights, method="float-support, exact-simplex",
                                            pivots=sub.pivots)
            log.info("float support not exactly feasible; falling back")
    return exact_membership(A, target)
