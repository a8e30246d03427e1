"""Bipartitions, the four-term NS decomposition of the GHZ correlation, and a
small exact biseparability LP."""
from __future__ import annotations

import functools
import itertools
from dataclasses import dataclass
from fractions import Fraction

import numpy as np

from .behavior import (
    Behavior,
    Mixture,
    MixtureTerm,
    coordinates_to_functional,
    correlator_coordinates_numerators,
    deterministic_behavior,
    is_non_signaling,
    mask_of,
    mix,
    parties_of,
    tensor,
)
from .bell import signaling_certificate
from .boxes import BoxFamily, ghz_behavior, ns_box
from .errors import GroupTooLarge, InvalidBipartition
from .lp import membership


@dataclass(frozen=True, order=True)
class Bipartition:
    """Split of parties 1..n into G (always holding party 1) and its complement."""

    n: int
    group: tuple[int, ...]

    def __post_init__(self):
        g = tuple(sorted(set(self.group)))
        if self.n < 2:
            raise InvalidBipartition("a bipartition needs at least two parties")
        if not g or any(not 1 <= p <= self.n for p in g) or len(g) != len(self.group):
            raise InvalidBipartition(f"group {self.group} is not a proper subset of 1..{self.n}")
        if len(g) == self.n:
            raise InvalidBipartition("complement group is empty")
        if 1 not in g:
            g = tuple(p for p in range(1, self.n + 1) if p not in g)
        object.__setattr__(self, "group", g)

    @classmethod
    def from_mask(cls, n: int, mask: int) -> "Bipartition":
        return cls(n, parties_of(mask))

    @property
    def complement(self) -> tuple[int, ...]:
        return tuple(p for p in range(1, self.n + 1) if p not in self.group)

    @property
    def mask(self) -> int:
        return mask_of(self.group)

    @property
    def k(self) -> int:
        return len(self.group)

    def __str__(self):
        return ",".join(map(str, self.group)) + "|" + ",".join(map(str, self.complement))


def enumerate_bipartitions(n: int) -> list[Bipartition]:
    """All 2**(n-1) - 1 bipartitions, ascending by the bitmask of G."""
    if n < 2:
        raise InvalidBipartition("a bipartition needs at least two parties")
    full = 2**n - 1
    return [Bipartition.from_mask(n, m) for m in range(1, full, 2)]


# Families placed on (G, G') in the four equal-weight terms.
GHZ_BISEP_PAIRS = (
    (BoxFamily.MU1, BoxFamily.MU2),
    (BoxFamily.MU3, BoxFamily.MU4),
    (BoxFamily.MU2, BoxFamily.MU1),
    (BoxFamily.MU4, BoxFamily.MU3),
)


def _check_bipartition(n: int, bp: Bipartition) -> None:
    if not isinstance(bp, Bipartition) or bp.n != n:
        raise InvalidBipartition(f"{bp!r} is not a bipartition of {n} parties")


def ghz_bisep_mixture(n: int, bp: Bipartition) -> Mixture:
    """Equal-weight mixture of four products of mu-boxes that equals the GHZ correlation."""
    _check_bipartition(n, bp)
    g, gc = bp.group, bp.complement
    terms = []
    for fam_g, fam_c in GHZ_BISEP_PAIRS:
        parts = ((g, ns_box(len(g), fam_g)), (gc, ns_box(len(gc), fam_c)))
        terms.append(MixtureTerm(Fraction(1, 4), parts, (fam_g.value, fam_c.value)))
    return Mixture(tuple(terms))


def verify_ghz_bisep(n: int, bp: Bipartition) -> bool:
    """Exact check that the four-term mixture reproduces ghz_behavior(n)."""
    return mix(ghz_bisep_mixture(n, bp)) == ghz_behavior(n)


# --------------------------------------------------------------------------
# generic LP for groups of at most two parties


def pr_box(alpha: int, beta: int, gamma: int) -> Behavior:
    """Two-party box with a'1 xor a'2 = x1 x2 xor alpha x1 xor beta x2 xor gamma."""
    numer = np.zeros((4, 4), dtype=np.int64)
    for x in range(4):
        x1, x2 = x & 1, x >> 1
        parity = (x1 & x2) ^ (alpha & x1) ^ (beta & x2) ^ gamma
        for a in range(4):
            numer[x, a] = int(((a & 1) ^ (a >> 1)) == parity)
    return Behavior(2, numer, 2, check=False)


@functools.lru_cache(maxsize=None)
def ns_vertices(k: int) -> tuple[tuple[str, Behavior], ...]:
    """Labelled vertices of the k-party NS polytope for k = 1 or 2."""
    responses = list(itertools.product((0, 1), repeat=2))
    if k == 1:
        return tuple((f"det{r}", deterministic_behavior([r])) for r in responses)
    if k == 2:
        det = [(f"det{r1}{r2}", deterministic_behavior([r1, r2]))
               for r1, r2 in itertools.product(responses, repeat=2)]
        pr = [(f"pr({a},{b},{c})", pr_box(a, b, c))
              for a, b, c in itertools.product((0, 1), repeat=3)]
        return tuple(det + pr)
    raise GroupTooLarge(f"no vertex list for groups of {k} parties")


@dataclass(frozen=True)
class BisepCertificate:
    """Either a Mixture reproducing the behavior or a separating functional.

    The functional is c[x_idx, a_idx] / denominator on probability tables;
    ``bound`` is its exact maximum over every product vertex and ``value``
    its exact value on the behavior.
    """

    bipartition: Bipartition
    mixture: Mixture | None = None
    coefficients: np.ndarray | None = None
    denominator: int = 1
    bound: Fraction | None = None
    value: Fraction | None = None
    method: str = ""

    @property
    def feasible(self) -> bool:
        return self.mixture is not None

    def to_json(self) -> dict:
        out = {"bipartition": str(self.bipartition), "feasible": self.feasible, "method": self.method}
        if self.mixture is not None:
            out["mixture"] = self.mixture.to_json()
        else:
            out["certificate"] = {
                "denominator": self.denominator,
                "coefficients": [[int(v) for v in row] for row in self.coefficients],
                "vertex_bound": str(self.bound),
                "value": str(self.value),
            }
        return out


def _product_columns(bp: Bipartition):
    g, gc = bp.group, bp.complement
    pairs = list(itertools.product(ns_vertices(len(g)), ns_vertices(len(gc))))
    products = [tensor(((g, vg), (gc, vc))) for (_, vg), (_, vc) in pairs]
    return pairs, products


def _pairing(coeffs: np.ndarray, b: Behavior) -> Fraction:
    total = int((coeffs.astype(object) * b.numerators.astype(object)).sum())
    return Fraction(total, b.denominator)


def bisep_lp(b: Behavior, bp: Bipartition, *, method: str = "auto") -> BisepCertificate:
    """Exact membership of ``b`` in the hull of products of NS vertices across ``bp``."""
    _check_bipartition(b.n, bp)
    if max(bp.k, b.n - bp.k) > 2:
        raise GroupTooLarge("bisep_lp supports groups of at most 2 parties; "
                            "use verify_ghz_bisep for the GHZ construction")
    pairs, products = _product_columns(bp)
    if not is_non_signaling(b):
        cert = signaling_certificate(b)
        coeffs, den, label = cert.coefficients, cert.denominator, "signaling"
    else:
        # Vertex correlators are all in {-1, 0, 1}, so the columns are integers.
        points = np.array([correlator_coordinates_numerators(p) // p.denominator
                           for p in products]).T
        target = [Fraction(int(v), b.denominator) for v in correlator_coordinates_numerators(b)]
        res = membership(points, target, method=method)
        if res.feasible:
            terms = []
            g, gc = bp.group, bp.complement
            for j, w in sorted(res.weights.items()):
                (lg, vg), (lc, vc) = pairs[j]
                terms.append(MixtureTerm(w, ((g, vg), (gc, vc)), (lg, lc)))
            mixture = Mixture(tuple(terms))
            if mix(mixture) != b:
                raise ArithmeticError("LP weights failed to reproduce the behavior")
            return BisepCertificate(bp, mixture=mixture, method=res.method)
        coeffs, den = coordinates_to_functional(b.n, res.functional)
        label = res.method
    bound = max(_pairing(coeffs, p) for p in products) / den
    value = _pairing(coeffs, b) / den
    if not value > bound:
        raise ArithmeticError("separating functional failed exact verification")
    return BisepCertificate(bp, coefficients=coeffs, denominator=den, bound=bound,
                            value=value, method=label)
