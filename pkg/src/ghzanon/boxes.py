"""Generators for the GHZ correlation and the four parity-type NS box families."""
from __future__ import annotations

import enum
import functools
import itertools
from typing import Sequence

import numpy as np

from .behavior import Behavior, _check_capacity, index_to_bits, popcount
from .errors import KOutOfRange

# cos(w * pi / 2) by w mod 4
COS_QUARTER_TURN = (1, 0, -1, 0)


class BoxFamily(enum.Enum):
    MU1 = "mu1"
    MU2 = "mu2"
    MU3 = "mu3"
    MU4 = "mu4"

    @property
    def h_pair(self) -> tuple[int, int]:
        """Residues l whose H indicators set the required output parity."""
        return _H_PAIRS[self]

    @classmethod
    def parse(cls, name) -> "BoxFamily":
        if isinstance(name, cls):
            return name
        try:
            return cls(str(name).lower().replace("μ", "mu"))
        except ValueError:
            raise ValueError(f"unknown box family {name!r}; expected one of mu1..mu4") from None


_H_PAIRS = {
    BoxFamily.MU1: (0, 3),
    BoxFamily.MU2: (0, 1),
    BoxFamily.MU3: (1, 2),
    BoxFamily.MU4: (2, 3),
}


def input_weight(x: Sequence[int]) -> int:
    return sum(int(v) & 1 for v in x)


def ghz_behavior(n: int) -> Behavior:
    """GHZ correlation under sigma_x (x=0) / sigma_y (x=1) measurements.

    P(a|x) = 2**-n * (1 + cos(w pi/2) * prod(a_i)) with w the input weight; the
    cosine comes from the residue table, never from floating trig.
    """
    _check_capacity(n)
    idx = np.arange(2**n)
    cos_w = np.array(COS_QUARTER_TURN)[popcount(idx) % 4]
    prod_a = 1 - 2 * (popcount(idx) & 1)
    numer = 1 + np.outer(cos_w, prod_a)
    return Behavior(n, numer, 2**n, check=False)


def f_indicator(k: int, x: Sequence[int]) -> int:
    """1 if exactly ``k`` of the inputs are 1, else 0."""
    n = len(x)
    if not 0 <= k <= n:
        raise KOutOfRange(f"k={k} outside 0..{n}")
    return int(input_weight(x) == k)


def f_indicator_by_subsets(k: int, x: Sequence[int]) -> int:
    """Literal subset sum: sum over |G| = k of prod_{G} x_i * prod_{G'} (x_j xor 1)."""
    n = len(x)
    if not 0 <= k <= n:
        raise KOutOfRange(f"k={k} outside 0..{n}")
    total = 0
    for group in itertools.combinations(range(n), k):
        term = 1
        for i in range(n):
            term *= x[i] if i in group else x[i] ^ 1
        total += term
    return total


def h_indicator(n: int, ell: int, x: Sequence[int], *, f=f_indicator) -> int:
    """Sum of F(4j + ell, x) for j = 0 .. floor((n - ell) / 4)."""
    if not 0 <= ell <= 3:
        raise ValueError(f"residue {ell} outside 0..3")
    if len(x) != n:
        raise ValueError(f"input word has {len(x)} bits, expected {n}")
    return sum(f(4 * j + ell, x) for j in range((n - ell) // 4 + 1))


@functools.lru_cache(maxsize=None)
def _h_pair_parities(n: int, fam: BoxFamily) -> np.ndarray:
    l1, l2 = fam.h_pair
    out = np.empty(2**n, dtype=np.int64)
    for xi in range(2**n):
        x = index_to_bits(xi, n)
        out[xi] = (h_indicator(n, l1, x) + h_indicator(n, l2, x)) % 2
    return out


def ns_box(n: int, fam) -> Behavior:
    """P(a'|x) = 2**(1-n) when sum(a') matches the family's H pair mod 2, else 0."""
    _check_capacity(n)
    fam = BoxFamily.parse(fam)
    parity_x = _h_pair_parities(n, fam)
    parity_a = popcount(np.arange(2**n)) & 1
    numer = (parity_x[:, None] == parity_a[None, :]).astype(np.int64)
    return Behavior(n, numer, 2 ** (n - 1), check=False)


def ns_box_correlator_table(n: int, fam) -> dict[tuple[int, ...], int]:
    """Closed-form full correlators of a family, keyed by input word.

    E_mu1 = (-1)**(H0 xor H3) = -E_mu3 and E_mu2 = (-1)**(H0 xor H1) = -E_mu4.
    """
    fam = BoxFamily.parse(fam)
    table = {}
    for xi in range(2**n):
        x = index_to_bits(xi, n)
        h = [h_indicator(n, ell, x) for ell in range(4)]
        if fam in (BoxFamily.MU1, BoxFamily.MU3):
            e = (-1) ** (h[0] ^ h[3])
        else:
            e = (-1) ** (h[0] ^ h[1])
        if fam in (BoxFamily.MU3, BoxFamily.MU4):
            e = -e
        table[x] = e
    return table
