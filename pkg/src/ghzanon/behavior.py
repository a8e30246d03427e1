"""Exact n-party conditional distributions with two settings and two outcomes.

A behavior is stored densely as integer numerators over one common
denominator.  The flat table index of P(a|x) is ``x_idx * 2**n + a_idx`` with
``x_idx = sum(x_i << (i - 1))`` and ``a_idx = sum(a'_i << (i - 1))``, so party 1
sits in the least significant bit.  An output bit a' = 0 stands for the
outcome +1 and a' = 1 for -1, i.e. a = (-1)**a'.  With this encoding the
correlator of a subset S is ``sum((-1)**(sum of a'_i over S) * P)``.
"""
from __future__ import annotations

import functools
import itertools
import json
import math
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Iterable, Sequence

import numpy as np

from .errors import (
    CapacityExceeded,
    EmptySubset,
    IncompleteCover,
    LengthMismatch,
    NegativeEntry,
    NotNormalized,
    OverlappingSubsets,
    SignalingBehavior,
    SizeMismatch,
    WeightSumNotOne,
)

MAX_PARTIES = 12
ENCODING = "x-lsb-party1;a0=plus"
# Same index layout, but output bit 1 meaning +1; accepted on load only.
FLIPPED_ENCODING = "x-lsb-party1;a1=plus"

_INT64_SAFE = 2**62


def _check_capacity(n: int) -> None:
    if n < 1:
        raise ValueError(f"party count must be >= 1, got {n}")
    if n > MAX_PARTIES:
        raise CapacityExceeded(f"n={n} exceeds the dense-table limit of {MAX_PARTIES} parties")


def _fit(arr: np.ndarray, bound: int) -> np.ndarray:
    """Cast integer data to int64 when every value stays below ``bound``."""
    if bound < _INT64_SAFE:
        return np.asarray(arr).astype(np.int64)
    return np.asarray(arr).astype(object)


def _gcd_all(arr: np.ndarray) -> int:
    if arr.dtype == object:
        return functools.reduce(math.gcd, (int(v) for v in arr.ravel()), 0)
    return int(np.gcd.reduce(arr.ravel())) if arr.size else 0


def popcount(arr):
    arr = np.asarray(arr)
    if arr.dtype == object:
        return np.array([int(v).bit_count() for v in arr.ravel()]).reshape(arr.shape)
    return np.bitwise_count(arr.astype(np.int64)).astype(np.int64)


def bits_to_index(bits: Sequence[int]) -> int:
    return sum((int(b) & 1) << i for i, b in enumerate(bits))


def index_to_bits(idx: int, n: int) -> tuple[int, ...]:
    return tuple((idx >> i) & 1 for i in range(n))


def mask_of(parties: Iterable[int]) -> int:
    return sum(1 << (p - 1) for p in parties)


def parties_of(mask: int) -> tuple[int, ...]:
    return tuple(i + 1 for i in range(mask.bit_length()) if (mask >> i) & 1)


def normalize_subset(subset, n: int) -> tuple[int, ...]:
    """Sorted tuple of 1-based parties; accepts an iterable or an int bitmask."""
    parties = parties_of(subset) if isinstance(subset, (int, np.integer)) else tuple(subset)
    out = tuple(sorted(set(int(p) for p in parties)))
    if len(out) != len(parties):
        raise OverlappingSubsets(f"party listed twice in {parties}")
    for p in out:
        if not 1 <= p <= n:
            raise ValueError(f"party {p} outside 1..{n}")
    return out


def _as_index(x, n: int) -> int:
    if isinstance(x, (int, np.integer)):
        if not 0 <= x < 2**n:
            raise ValueError(f"input index {x} outside 0..{2**n - 1}")
        return int(x)
    if len(x) != n:
        raise LengthMismatch(f"input word {tuple(x)} has length {len(x)}, expected {n}")
    return bits_to_index(x)


def local_index(indices: np.ndarray, parties: Sequence[int]) -> np.ndarray:
    """Gather the bits of ``parties`` (in order) out of global indices."""
    out = np.zeros_like(indices)
    for j, p in enumerate(parties):
        out |= ((indices >> (p - 1)) & 1) << j
    return out


def _as_fraction(v) -> Fraction:
    if isinstance(v, Fraction):
        return v
    if isinstance(v, float):
        raise TypeError("floats are not accepted as exact probabilities; use Fraction or 'p/q' strings")
    return Fraction(v)


class Behavior:
    """Immutable exact table P(a|x); see the module docstring for the layout."""

    def __init__(self, n: int, numer: np.ndarray, denom: int, *, check: bool = True):
        _check_capacity(n)
        size = 2**n
        numer = np.asarray(numer)
        if numer.shape != (size, size):
            numer = numer.reshape(size, size)
        denom = int(denom)
        if denom <= 0:
            raise ValueError("denominator must be positive")
        g = math.gcd(_gcd_all(numer), denom)
        if g > 1:
            numer = numer // g
            denom //= g
        if numer.dtype == object:
            bound = max(max((abs(int(v)) for v in numer.ravel()), default=0), denom) + 1
        else:
            bound = denom + 1
        numer = _fit(numer, bound)
        if check:
            neg = np.nonzero(numer < 0)
            if len(neg[0]):
                x, a = int(neg[0][0]), int(neg[1][0])
                raise NegativeEntry(x * size + a, Fraction(int(numer[x, a]), denom))
            sums = numer.sum(axis=1)
            bad = np.nonzero(sums != denom)[0]
            if len(bad):
                x = int(bad[0])
                raise NotNormalized(index_to_bits(x, n), Fraction(int(sums[x]), denom))
        numer.flags.writeable = False
        self.n = n
        self._numer = numer
        self._denom = denom

    @property
    def denominator(self) -> int:
        return self._denom

    @property
    def numerators(self) -> np.ndarray:
        """Read-only integer array of shape (2**n, 2**n), indexed [x_idx, a_idx]."""
        return self._numer

    @functools.cached_property
    def table(self) -> tuple[Fraction, ...]:
        d = self._denom
        return tuple(Fraction(int(v), d) for v in self._numer.ravel())

    def prob(self, a, x) -> Fraction:
        """P(a|x) with ``a`` and ``x`` given as bit words (party 1 first) or indices."""
        ai, xi = _as_index(a, self.n), _as_index(x, self.n)
        return Fraction(int(self._numer[xi, ai]), self._denom)

    def row(self, x) -> tuple[Fraction, ...]:
        xi = _as_index(x, self.n)
        return tuple(Fraction(int(v), self._denom) for v in self._numer[xi])

    def as_float(self) -> np.ndarray:
        return self._numer.astype(float) / float(self._denom)

    @functools.cached_property
    def _cumulative(self) -> np.ndarray:
        return np.cumsum(self._numer, axis=1)

    @functools.cached_property
    def ns_report(self) -> "NSReport":
        return _ns_check(self)

    def __eq__(self, other):
        if not isinstance(other, Behavior):
            return NotImplemented
        return (self.n == other.n and self._denom == other._denom
                and bool(np.array_equal(self._numer, other._numer)))

    def __hash__(self):
        if self._numer.dtype == object:
            return hash((self.n, self._denom, tuple(int(v) for v in self._numer.ravel())))
        return hash((self.n, self._denom, self._numer.tobytes()))

    def __repr__(self):
        return f"Behavior(n={self.n}, denominator={self._denom})"

    def to_json(self) -> dict:
        d = self._denom
        table = []
        for v in self._numer.ravel():
            f = Fraction(int(v), d)
            table.append(f"{f.numerator}/{f.denominator}")
        return {"n": self.n, "encoding": ENCODING, "table": table}

    @classmethod
    def from_json(cls, data: dict) -> "Behavior":
        n = int(data["n"])
        encoding = data.get("encoding", ENCODING)
        if encoding not in (ENCODING, FLIPPED_ENCODING):
            raise ValueError(f"unknown behavior encoding {encoding!r}")
        b = make_behavior(n, data["table"])
        if encoding == FLIPPED_ENCODING:
            b = relabel_outputs(b, 2**n - 1)
        return b


def make_behavior(n: int, table: Sequence) -> Behavior:
    """Validate a flat table of exact rationals and wrap it as a :class:`Behavior`."""
    _check_capacity(n)
    size = 4**n
    if len(table) != size:
        raise LengthMismatch(f"table has {len(table)} entries, expected 4**{n} = {size}")
    fracs = [_as_fraction(v) for v in table]
    for i, f in enumerate(fracs):
        if f < 0:
            raise NegativeEntry(i, f)
    denom = functools.reduce(math.lcm, (f.denominator for f in fracs), 1)
    numer = np.array([f.numerator * (denom // f.denominator) for f in fracs], dtype=object)
    return Behavior(n, numer.reshape(2**n, 2**n), denom)


def relabel_outputs(b: Behavior, flip_mask: int) -> Behavior:
    """Flip the output bits of the parties in ``flip_mask``."""
    idx = np.arange(2**b.n)
    return Behavior(b.n, b.numerators[:, idx ^ flip_mask], b.denominator, check=False)


def dumps_behavior(b: Behavior) -> str:
    return json.dumps(b.to_json())


def loads_behavior(text: str) -> Behavior:
    return Behavior.from_json(json.loads(text))


# --------------------------------------------------------------------------
# non-signaling, marginals, correlators


@dataclass(frozen=True)
class NSReport:
    ok: bool
    subset: tuple[int, ...] | None = None
    inputs: tuple[int, ...] | None = None
    other_inputs: tuple[int, ...] | None = None

    def __bool__(self):
        return self.ok


def _marginal_numerators(b: Behavior, parties: Sequence[int]) -> np.ndarray:
    """Integer array [x_idx, a_S_idx] summing out every output outside ``parties``."""
    n = b.n
    view = b.numerators.reshape((2**n,) + (2,) * n)
    drop = tuple(1 + n - i for i in range(1, n + 1) if i not in parties)
    out = view.sum(axis=drop) if drop else view
    return out.reshape(2**n, 2 ** len(parties))


def _ns_check(b: Behavior) -> NSReport:
    n = b.n
    view = b.numerators.reshape((2,) * (2 * n))
    clean = True
    for i in range(1, n + 1):
        s = view.sum(axis=2 * n - i)
        if not np.array_equal(s.take(0, axis=n - i), s.take(1, axis=n - i)):
            clean = False
            break
    if clean:
        return NSReport(True)
    # Locate the smallest subset whose marginal depends on outside inputs.
    all_x = np.arange(2**n)
    for k in range(1, n):
        for parties in itertools.combinations(range(1, n + 1), k):
            marg = _marginal_numerators(b, parties)
            ref = all_x & mask_of(parties)
            diff = np.nonzero((marg != marg[ref]).any(axis=1))[0]
            if len(diff):
                x = int(diff[0])
                return NSReport(False, parties, index_to_bits(x, n), index_to_bits(x & mask_of(parties), n))
    raise AssertionError("single-party NS test failed but no violating subset found")


def is_non_signaling(b: Behavior) -> NSReport:
    """Exact non-signaling test; the report is falsy and names a violation if any."""
    return b.ns_report


def marginal(b: Behavior, subset, x_s: Sequence[int]) -> tuple[Fraction, ...]:
    """Distribution of the outputs of ``subset`` given its inputs ``x_s``.

    ``x_s`` lists the inputs of the subset's parties in increasing party order;
    the result is indexed by the local output word with the smallest party as
    the least significant bit.
    """
    parties = normalize_subset(subset, b.n)
    if not parties:
        raise EmptySubset("marginal of the empty subset")
    if len(x_s) != len(parties):
        raise LengthMismatch(f"{len(x_s)} inputs given for {len(parties)} parties")
    report = is_non_signaling(b)
    if not report:
        raise SignalingBehavior(f"behavior signals at subset {report.subset}; marginals are ill-defined")
    x_idx = sum((int(v) & 1) << (p - 1) for p, v in zip(parties, x_s))
    row = _marginal_numerators(b, parties)[x_idx]
    return tuple(Fraction(int(v), b.denominator) for v in row)


def _sign_vector(mask: int, n: int) -> np.ndarray:
    return 1 - 2 * (popcount(np.arange(2**n) & mask) & 1)


def correlator_numerators(b: Behavior, subset) -> np.ndarray:
    """Correlator of ``subset`` for every input index, times the denominator."""
    mask = mask_of(normalize_subset(subset, b.n))
    return b.numerators @ _sign_vector(mask, b.n)


def correlator(b: Behavior, subset, x) -> Fraction:
    """Expectation of the product of the +-1 outcomes of ``subset`` at input ``x``."""
    parties = normalize_subset(subset, b.n)
    xi = _as_index(x, b.n)
    if not parties:
        return Fraction(1)
    s = _sign_vector(mask_of(parties), b.n)
    return Fraction(int(b.numerators[xi] @ s), b.denominator)


def full_correlators(b: Behavior) -> tuple[Fraction, ...]:
    """E(x) over all n parties, indexed by x_idx."""
    vals = correlator_numerators(b, range(1, b.n + 1))
    return tuple(Fraction(int(v), b.denominator) for v in vals)


# --------------------------------------------------------------------------
# products and mixtures


def _validate_parts(parts) -> tuple[int, list[tuple[tuple[int, ...], Behavior]]]:
    norm = []
    seen: set[int] = set()
    for subset, factor in parts:
        parties = tuple(sorted(subset)) if not isinstance(subset, (int, np.integer)) else parties_of(subset)
        if not parties:
            raise EmptySubset("empty party group in product")
        if len(parties) != factor.n:
            raise SizeMismatch(f"group {parties} has {len(parties)} parties but its behavior has n={factor.n}")
        if seen & set(parties) or len(set(parties)) != len(parties):
            raise OverlappingSubsets(f"group {parties} overlaps an earlier group")
        seen |= set(parties)
        norm.append((parties, factor))
    n = len(seen)
    if seen != set(range(1, n + 1)):
        raise IncompleteCover(f"groups cover {sorted(seen)}, not 1..{n}")
    return n, norm


def tensor(parts) -> Behavior:
    """Product behavior of independent groups given as ``(parties, behavior)`` pairs."""
    n, norm = _validate_parts(parts)
    _check_capacity(n)
    if len(norm) == 1:
        return norm[0][1]
    denom = math.prod(f.denominator for _, f in norm)
    idx = np.arange(2**n)
    dtype = np.int64 if denom < _INT64_SAFE else object
    numer = np.ones((2**n, 2**n), dtype=dtype)
    for parties, factor in norm:
        loc = local_index(idx, parties)
        numer = numer * factor.numerators.astype(dtype)[np.ix_(loc, loc)]
    return Behavior(n, numer, denom, check=False)


@dataclass(frozen=True)
class MixtureTerm:
    weight: Fraction
    parts: tuple[tuple[tuple[int, ...], Behavior], ...]
    labels: tuple[str, ...] | None = None


@dataclass(frozen=True)
class Mixture:
    """Convex combination of products of group behaviors."""

    terms: tuple[MixtureTerm, ...]
    n: int = field(init=False)

    def __post_init__(self):
        if not self.terms:
            raise ValueError("mixture needs at least one term")
        total = Fraction(0)
        n = None
        for i, term in enumerate(self.terms):
            w = _as_fraction(term.weight)
            if w < 0:
                raise NegativeEntry(i, w)
            total += w
            tn, _ = _validate_parts(term.parts)
            if n is None:
                n = tn
            elif tn != n:
                raise SizeMismatch(f"term {i} covers {tn} parties, expected {n}")
        if total != 1:
            raise WeightSumNotOne(f"weights sum to {total}")
        object.__setattr__(self, "n", n)

    def to_json(self) -> dict:
        out = []
        for term in self.terms:
            w = Fraction(term.weight)
            parts = []
            for j, (parties, factor) in enumerate(term.parts):
                entry = {"parties": list(parties), "behavior": factor.to_json()}
                if term.labels:
                    entry["label"] = term.labels[j]
                parts.append(entry)
            out.append({"weight": f"{w.numerator}/{w.denominator}", "parts": parts})
        return {"n": self.n, "terms": out}

    @classmethod
    def from_json(cls, data: dict) -> "Mixture":
        terms = []
        for t in data["terms"]:
            parts = tuple((tuple(p["parties"]), Behavior.from_json(p["behavior"])) for p in t["parts"])
            labels = tuple(p["label"] for p in t["parts"]) if all("label" in p for p in t["parts"]) else None
            terms.append(MixtureTerm(Fraction(t["weight"]), parts, labels))
        return cls(tuple(terms))


def mix(m: Mixture) -> Behavior:
    """Exact weighted sum of the products in ``m``."""
    products = [(Fraction(t.weight), tensor(t.parts)) for t in m.terms if t.weight != 0]
    lcm = functools.reduce(math.lcm, (w.denominator * b.denominator for w, b in products), 1)
    dtype = np.int64 if lcm < _INT64_SAFE else object
    numer = np.zeros((2**m.n, 2**m.n), dtype=dtype)
    for w, b in products:
        scale = w.numerator * (lcm // (w.denominator * b.denominator))
        numer = numer + b.numerators.astype(dtype) * scale
    return Behavior(m.n, numer, lcm)


# --------------------------------------------------------------------------
# sampling


def _draw_below(rng: np.random.Generator, bound: int, size: int) -> np.ndarray:
    """Uniform integers in [0, bound), exact for arbitrarily large bounds."""
    if bound < _INT64_SAFE:
        return rng.integers(0, bound, size=size, dtype=np.int64)
    nbits = bound.bit_length()
    out = []
    while len(out) < size:
        v = 0
        for _ in range(0, nbits, 62):
            v = (v << 62) | int(rng.integers(0, 2**62))
        v >>= (-nbits) % 62
        if v < bound:
            out.append(v)
    return np.array(out, dtype=object)


def sample_indices(b: Behavior, x_idx: np.ndarray, rng: np.random.Generator) -> np.ndarray:
    """Output indices drawn from P(.|x) for each input index in ``x_idx``.

    Inverse CDF over ascending a_idx on the integer numerators, so outcomes of
    probability zero are never returned.
    """
    x_idx = np.asarray(x_idx, dtype=np.int64)
    r = _draw_below(rng, b.denominator, len(x_idx))
    cum = b._cumulative[x_idx]
    return (cum > r[:, None]).argmax(axis=1).astype(np.int64)


def sample(b: Behavior, x, rng: np.random.Generator) -> tuple[int, ...]:
    """One draw of the output bits (party 1 first) for input ``x``."""
    xi = _as_index(x, b.n)
    a = int(sample_indices(b, np.array([xi]), rng)[0])
    return index_to_bits(a, b.n)


def deterministic_behavior(responses: Sequence[tuple[int, int]]) -> Behavior:
    """Product of single-party deterministic responses ``(a'(x=0), a'(x=1))``."""
    n = len(responses)
    _check_capacity(n)
    numer = np.zeros((2**n, 2**n), dtype=np.int64)
    for x in range(2**n):
        a = sum(responses[i][(x >> i) & 1] << i for i in range(n))
        numer[x, a] = 1
    return Behavior(n, numer, 1, check=False)


def uniform_behavior(n: int) -> Behavior:
    _check_capacity(n)
    return Behavior(n, np.ones((2**n, 2**n), dtype=np.int64), 2**n, check=False)


# --------------------------------------------------------------------------
# correlator coordinates
#
# A non-signaling behavior is fixed by the correlators E_S(x_S) of all
# nonempty subsets.  Coordinates are indexed by t in {0,1,2}**n minus the zero
# word, flat index sum(t_i * 3**(i-1)): t_i = 0 leaves party i out, t_i = 1 or
# 2 puts it in S with input t_i - 1.


@functools.lru_cache(maxsize=None)
def coordinate_layout(n: int) -> tuple[np.ndarray, np.ndarray]:
    """(subset mask, input index) for every coordinate t = 1 .. 3**n - 1."""
    masks = np.zeros(3**n, dtype=np.int64)
    inputs = np.zeros(3**n, dtype=np.int64)
    t = np.arange(3**n)
    for i in range(n):
        digit = (t // 3**i) % 3
        masks |= (digit > 0).astype(np.int64) << i
        inputs |= (digit == 2).astype(np.int64) << i
    return masks[1:], inputs[1:]


@functools.lru_cache(maxsize=None)
def _sign_matrix(n: int) -> np.ndarray:
    idx = np.arange(2**n)
    return 1 - 2 * (popcount(idx[:, None] & idx[None, :]) & 1)


def correlator_coordinates_numerators(b: Behavior) -> np.ndarray:
    """Integer correlator coordinates of ``b`` times its denominator."""
    report = is_non_signaling(b)
    if not report:
        raise SignalingBehavior(f"behavior signals at subset {report.subset}")
    masks, inputs = coordinate_layout(b.n)
    corr = b.numerators @ _sign_matrix(b.n)  # [x_idx, mask]
    return corr[inputs, masks]


def correlator_coordinates(b: Behavior) -> list[Fraction]:
    d = b.denominator
    return [Fraction(int(v), d) for v in correlator_coordinates_numerators(b)]


def coordinates_to_functional(n: int, functional: Sequence[Fraction]) -> tuple[np.ndarray, int]:
    """Probability-space functional c[x_idx, a_idx] (integers over a denominator).

    On every non-signaling behavior ``sum(c * P)`` equals the coordinate
    functional applied to the behavior's correlator coordinates.
    """
    den = functools.reduce(math.lcm, (Fraction(v).denominator for v in functional), 1)
    ints = [int(Fraction(v) * den) for v in functional]
    big = max((abs(v) for v in ints), default=0) * 3**n >= _INT64_SAFE
    c = np.zeros((2**n, 2**n), dtype=object if big else np.int64)
    masks, inputs = coordinate_layout(n)
    signs = _sign_matrix(n)
    for coef, mask, x in zip(ints, masks, inputs):
        if coef:
            c[x] += coef * signs[:, mask]
    return c, den
