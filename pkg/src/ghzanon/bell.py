"""Mermin and Sigma Bell expressions in Q[sqrt 2], and local-polytope membership."""
from __future__ import annotations

import functools
from dataclasses import dataclass
from fractions import Fraction

import numpy as np

from .behavior import (
    Behavior,
    Mixture,
    MixtureTerm,
    _marginal_numerators,
    coordinates_to_functional,
    correlator_coordinates,
    correlator_numerators,
    deterministic_behavior,
    is_non_signaling,
    popcount,
)
from .errors import CapacityExceeded
from .lp import membership
from .root2 import Root2Scalar, sqrt2_power

MAX_LOCAL_LP_PARTIES = 7

# cos(r * pi / 4) for r mod 8
_COS_EIGHTH_TURN = (
    Root2Scalar(1, 0),
    Root2Scalar(0, Fraction(1, 2)),
    Root2Scalar(0, 0),
    Root2Scalar(0, Fraction(-1, 2)),
    Root2Scalar(-1, 0),
    Root2Scalar(0, Fraction(-1, 2)),
    Root2Scalar(0, 0),
    Root2Scalar(0, Fraction(1, 2)),
)


def _parse_sign(sign) -> int:
    if sign in ("+", 1, "plus"):
        return 1
    if sign in ("-", -1, "minus"):
        return -1
    raise ValueError(f"sign must be '+' or '-', got {sign!r}")


def cos_quarter_pi(r: int) -> Root2Scalar:
    """cos(r * pi / 4), exactly."""
    return _COS_EIGHTH_TURN[r % 8]


def mermin_coefficient(n: int, sign, x) -> Root2Scalar:
    """cos(pi/4 * (1 +- (n - 2w))) where w is the weight of input word ``x``.

    ``x`` may also be given directly as the integer weight.
    """
    s = _parse_sign(sign)
    w = x if isinstance(x, (int, np.integer)) else sum(int(v) & 1 for v in x)
    return cos_quarter_pi(1 + s * (n - 2 * int(w)))


def _weight_sums(b: Behavior) -> list[Fraction]:
    """Sum of the full correlator over all inputs of each weight."""
    n = b.n
    corr = correlator_numerators(b, range(1, n + 1))
    weights = popcount(np.arange(2**n))
    return [Fraction(int(corr[weights == w].sum()), b.denominator) for w in range(n + 1)]


def mermin_value(b: Behavior, sign) -> Root2Scalar:
    """Signed value 2**((1-n)/2) * sum_x coeff(x) E(x)."""
    n = b.n
    sums = _weight_sums(b)
    total = Root2Scalar()
    for w, e in enumerate(sums):
        if e:
            total = total + mermin_coefficient(n, sign, w) * e
    return total * sqrt2_power(1 - n)


def mermin_max(b: Behavior) -> Root2Scalar:
    """max over both signs of |B_+-|."""
    return max(abs(mermin_value(b, "+")), abs(mermin_value(b, "-")))


def sigma_value(b: Behavior) -> Root2Scalar:
    """|sum_x cos(pi/4 (n - 2w)) E(x)|.

    This is |B_+ + B_-| / sqrt 2 taken on the Mermin sums *without* the
    2**((1-n)/2) prefactor, the scale on which the 3-separable bound
    2**(n-2) is stated.
    """
    n = b.n
    total = Root2Scalar()
    for w, e in enumerate(_weight_sums(b)):
        if e:
            total = total + cos_quarter_pi(n - 2 * w) * e
    return abs(total)


def biseparable_quantum_bound(n: int) -> Root2Scalar:
    """2**(n/2 - 1)."""
    return sqrt2_power(n - 2)


def quantum_maximum(n: int) -> Root2Scalar:
    """2**((n-1)/2)."""
    return sqrt2_power(n - 1)


def three_separable_sigma_bound(n: int) -> Root2Scalar:
    """2**(n-2); the Sigma-expression limit for partitions into three groups."""
    return Root2Scalar(Fraction(2) ** (n - 2), 0)


@dataclass(frozen=True)
class BellReport:
    n: int
    b_plus: Root2Scalar
    b_minus: Root2Scalar
    max_abs: Root2Scalar
    sigma: Root2Scalar
    local_bound: Root2Scalar
    biseparable_quantum_bound: Root2Scalar
    quantum_maximum: Root2Scalar
    three_separable_sigma_bound: Root2Scalar
    nonlocal_: bool
    exceeds_biseparable_quantum: bool
    maximal_violation: bool
    three_separability: str
    three_separability_reason: str

    def to_json(self) -> dict:
        out = {}
        for key, val in self.__dict__.items():
            key = key.rstrip("_")
            out[key] = val.to_json() if isinstance(val, Root2Scalar) else val
        return out


def classify(b: Behavior) -> BellReport:
    """Compare the exact Bell values of ``b`` against the reference bounds.

    ``three_separability`` is "excluded" when the data rule out every
    partition into three groups, "unknown" when these expressions cannot
    decide, and "n/a" below three parties.  For odd n the verdict rests on
    attaining the maximal Mermin value (an external theorem); for even n on
    the Sigma expression exceeding 2**(n-2).
    """
    n = b.n
    bp, bm = mermin_value(b, "+"), mermin_value(b, "-")
    top = max(abs(bp), abs(bm))
    sig = sigma_value(b)
    qmax = quantum_maximum(n)
    bisep = biseparable_quantum_bound(n)
    tri = three_separable_sigma_bound(n)
    maximal = top == qmax
    if n < 3:
        verdict, reason = "n/a", "fewer than three parties"
    elif n % 2:
        if maximal:
            verdict, reason = "excluded", "maximal Mermin violation (odd n)"
        else:
            verdict, reason = "unknown", "Mermin value below the quantum maximum"
    elif sig > tri:
        verdict, reason = "excluded", "Sigma value exceeds 2**(n-2)"
    else:
        verdict, reason = "unknown", "Sigma value within 2**(n-2)"
    return BellReport(
        n=n, b_plus=bp, b_minus=bm, max_abs=top, sigma=sig,
        local_bound=Root2Scalar(1), biseparable_quantum_bound=bisep,
        quantum_maximum=qmax, three_separable_sigma_bound=tri,
        nonlocal_=top > 1, exceeds_biseparable_quantum=top > bisep,
        maximal_violation=maximal, three_separability=verdict,
        three_separability_reason=reason,
    )


# --------------------------------------------------------------------------
# local polytope


@functools.lru_cache(maxsize=None)
def deterministic_points(n: int) -> np.ndarray:
    """Correlator coordinates of all 4**n local deterministic strategies.

    Column j encodes per-party strategies s_i = (j >> 2(i-1)) & 3 with
    a'_i(x=0) = s_i >> 1 and a'_i(x=1) = s_i & 1.
    """
    per_party = np.array([[1, 1, 1, 1], [1, 1, -1, -1], [1, -1, 1, -1]], dtype=np.int64)
    A = np.ones((1, 1), dtype=np.int64)
    for _ in range(n):
        A = np.kron(per_party, A)
    return A[1:]


def strategy_responses(j: int, n: int) -> tuple[tuple[int, int], ...]:
    return tuple((((j >> 2 * i) & 3) >> 1, (j >> 2 * i) & 1) for i in range(n))


@functools.lru_cache(maxsize=None)
def _strategy_outputs(n: int) -> np.ndarray:
    """a_idx chosen by every deterministic strategy at every input: shape (4**n, 2**n)."""
    j = np.arange(4**n)[:, None]
    x = np.arange(2**n)[None, :]
    a = np.zeros((4**n, 2**n), dtype=np.int64)
    for i in range(n):
        s = (j >> 2 * i) & 3
        xi = (x >> i) & 1
        a |= ((s >> (1 - xi)) & 1) << i
    return a


@dataclass(frozen=True)
class BellCertificate:
    """Linear functional on probability tables, sum over (x, a) of c[x, a] P(a|x).

    ``bound`` is its exact maximum over local deterministic strategies and
    ``value`` its exact value on the tested behavior; ``value > bound``.
    """

    n: int
    coefficients: np.ndarray
    denominator: int
    bound: Fraction
    value: Fraction

    def evaluate(self, b: Behavior) -> Fraction:
        total = int((self.coefficients.astype(object) * b.numerators.astype(object)).sum())
        return Fraction(total, self.denominator * b.denominator)

    def local_maximum(self) -> Fraction:
        outputs = _strategy_outputs(self.n)
        gathered = self.coefficients[np.arange(2**self.n)[None, :], outputs]
        return Fraction(int(gathered.sum(axis=1).max()), self.denominator)

    @property
    def ratio(self) -> Fraction | None:
        return self.value / self.bound if self.bound > 0 else None

    def to_json(self) -> dict:
        return {
            "n": self.n,
            "denominator": self.denominator,
            "coefficients": [[int(v) for v in row] for row in self.coefficients],
            "local_bound": str(self.bound),
            "value": str(self.value),
        }


def _certificate(b: Behavior, coeffs: np.ndarray, den: int) -> BellCertificate:
    cert = BellCertificate(b.n, coeffs, den, Fraction(0), Fraction(0))
    bound, value = cert.local_maximum(), cert.evaluate(b)
    if not value > bound:
        raise ArithmeticError("Bell certificate failed exact verification")
    return BellCertificate(b.n, coeffs, den, bound, value)


def signaling_certificate(b: Behavior) -> BellCertificate:
    """Functional that vanishes on every non-signaling table but not on ``b``."""
    report = is_non_signaling(b)
    if report:
        raise ValueError("behavior is non-signaling")
    n = b.n
    parties = report.subset
    x1 = sum(v << i for i, v in enumerate(report.inputs))
    x2 = sum(v << i for i, v in enumerate(report.other_inputs))
    marg = _marginal_numerators(b, parties)
    diff = marg[x1] - marg[x2]
    k = int(np.nonzero(diff)[0][0])
    sgn = 1 if diff[k] > 0 else -1
    idx = np.arange(2**n)
    local = np.zeros_like(idx)
    for j, p in enumerate(parties):
        local |= ((idx >> (p - 1)) & 1) << j
    hit = (local == k).astype(np.int64)
    coeffs = np.zeros((2**n, 2**n), dtype=np.int64)
    coeffs[x1] += sgn * hit
    coeffs[x2] -= sgn * hit
    return _certificate(b, coeffs, 1)


@dataclass(frozen=True)
class LocalModel:
    """Exact convex weights over local deterministic strategies."""

    n: int
    weights: dict[tuple[tuple[int, int], ...], Fraction]

    def mixture(self) -> Mixture:
        terms = []
        for responses, w in sorted(self.weights.items()):
            parts = tuple(((i + 1,), deterministic_behavior([r])) for i, r in enumerate(responses))
            terms.append(MixtureTerm(w, parts))
        return Mixture(tuple(terms))


@dataclass(frozen=True)
class LocalLPResult:
    feasible: bool
    model: LocalModel | None = None
    certificate: BellCertificate | None = None
    method: str = ""
    pivots: int = 0

    def to_json(self) -> dict:
        out = {"feasible": self.feasible, "method": self.method, "pivots": self.pivots}
        if self.model is not None:
            out["weights"] = [
                {"strategy": [list(r) for r in resp], "weight": str(w)}
                for resp, w in sorted(self.model.weights.items())
            ]
        if self.certificate is not None:
            out["certificate"] = self.certificate.to_json()
            ratio = self.certificate.ratio
            out["ratio"] = str(ratio) if ratio is not None else None
        return out


def local_lp(b: Behavior, *, method: str = "auto") -> LocalLPResult:
    """Exact membership of ``b`` in the local polytope.

    Feasible results carry exact weights that reproduce ``b``; infeasible
    ones carry a Bell inequality whose value on ``b`` exceeds its maximum over
    every deterministic strategy, both computed exactly.
    """
    n = b.n
    if n > MAX_LOCAL_LP_PARTIES:
        raise CapacityExceeded(f"local LP limited to n <= {MAX_LOCAL_LP_PARTIES}")
    if not is_non_signaling(b):
        return LocalLPResult(False, certificate=signaling_certificate(b), method="signaling")
    target = correlator_coordinates(b)
    res = membership(deterministic_points(n), target, method=method)
    if res.feasible:
        weights = {strategy_responses(j, n): w for j, w in res.weights.items()}
        return LocalLPResult(True, model=LocalModel(n, weights), method=res.method, pivots=res.pivots)
    coeffs, den = coordinates_to_functional(n, res.functional)
    return LocalLPResult(False, certificate=_certificate(b, coeffs, den), method=res.method,
                         pivots=res.pivots)
