"""Monte-Carlo simulation of the two key-establishment protocols.

Both protocols run on the same per-round pipeline: uniform inputs, outputs
from a source, a split of the parties into two sides, announcements of each
side's input sum mod 4, sifting on an even total input weight, and key bits
from output parities.  On a sifted round the GHZ correlation fixes

    parity(side 1) xor parity(side 2) = [total weight = 2 mod 4],

so side 2 corrects its parity by that bit and both hold the same key.

Eve's guesses are Bayes-optimal: for every view she can have, the posterior
of the key bit is computed exactly from the source tables and she picks the
likelier value (0 on ties).  The same tables give her exact optimal success
probability, used as an oracle for the Monte-Carlo rates.

Randomness: rounds are processed in batches of ``BATCH`` and batch ``j``
draws from ``Generator(PCG64(SeedSequence(seed, spawn_key=(j,))))``, so the
output for a seed is fixed regardless of how batches are scheduled.
"""
from __future__ import annotations

import csv
import functools
import io
import json
import math
from dataclasses import dataclass
from fractions import Fraction
from typing import Iterator

import numpy as np

from .behavior import Behavior, Mixture, _draw_below, local_index, popcount, sample_indices, tensor
from .bisep import Bipartition, enumerate_bipartitions, ghz_bisep_mixture
from .boxes import ghz_behavior
from .errors import InvalidBipartition, InvalidMask, TooFewParties

BATCH = 4096
LEAK_POLICIES = ("none", "all", "all-a", "all-b", "all-but-one")


def batch_rng(seed: int, batch: int) -> np.random.Generator:
    return np.random.Generator(np.random.PCG64(np.random.SeedSequence(seed, spawn_key=(batch,))))


def _batches(rounds: int):
    for j, start in enumerate(range(0, rounds, BATCH)):
        yield j, min(BATCH, rounds - start)


def within_sigma(hits: int, trials: int, p: float, k: float = 5.0) -> bool:
    """Binomial band |hits - trials p| <= k sqrt(trials p (1 - p))."""
    sd = math.sqrt(trials * p * (1 - p))
    return abs(hits - trials * p) <= k * sd


# --------------------------------------------------------------------------
# adversaries


@dataclass(frozen=True)
class AdversaryModel:
    """``kind`` is "none", "bisep" (Eve prepares the four-term box mixture for
    ``guess`` and learns the component index each round) or "leakage" (Eve
    sees the outputs of the leaked parties; ``leak`` is a policy name or a
    fixed party bitmask)."""

    kind: str = "none"
    guess: Bipartition | None = None
    leak: str | int | None = None

    def __post_init__(self):
        if self.kind not in ("none", "bisep", "leakage"):
            raise ValueError(f"unknown adversary kind {self.kind!r}")
        if self.kind == "bisep" and not isinstance(self.guess, Bipartition):
            raise InvalidBipartition("bisep adversary needs a Bipartition guess")
        if self.kind == "leakage":
            if isinstance(self.leak, str) and self.leak not in LEAK_POLICIES:
                raise InvalidMask(f"unknown leak policy {self.leak!r}")
            if not isinstance(self.leak, (str, int)):
                raise InvalidMask("leakage adversary needs a policy or a party mask")

    @classmethod
    def none(cls) -> "AdversaryModel":
        return cls()

    @classmethod
    def bisep(cls, guess: Bipartition) -> "AdversaryModel":
        return cls("bisep", guess=guess)

    @classmethod
    def leakage(cls, leak) -> "AdversaryModel":
        return cls("leakage", leak=leak)

    def describe(self) -> str:
        if self.kind == "bisep":
            return f"bisep:{self.guess}"
        if self.kind == "leakage":
            return f"leakage:{self.leak}"
        return "none"


def leak_mask_for(policy, n: int, side_a: int) -> int:
    """Leaked-party bitmask for a round whose first side is ``side_a``."""
    full = 2**n - 1
    side_b = full ^ side_a
    if isinstance(policy, (int, np.integer)) and not isinstance(policy, bool):
        if not 0 <= policy <= full:
            raise InvalidMask(f"leak mask {policy} outside 0..{full}")
        return int(policy)
    if policy == "none":
        return 0
    if policy == "all":
        return full
    if policy == "all-a":
        return side_a
    if policy == "all-b":
        return side_b
    if policy == "all-but-one":
        # Hide the lowest-numbered party of each side.
        return (side_a & (side_a - 1)) | (side_b & (side_b - 1))
    raise InvalidMask(f"unknown leak policy {policy!r}")


def _sign_bits(ann_g: np.ndarray, ann_c: np.ndarray) -> np.ndarray:
    return ((ann_g + ann_c) % 4 == 2).astype(np.int64)


def _posterior_table(views: np.ndarray, weights: np.ndarray, keys: np.ndarray,
                     n_views: int) -> tuple[np.ndarray, Fraction]:
    """Optimal guess per view and its exact success probability.

    ``weights`` are integer probabilities (common denominator) of each
    (view, key) outcome; only sifted outcomes should be passed in.
    """
    counts = np.zeros((n_views, 2), dtype=object)
    np.add.at(counts, (views, keys), weights.astype(object))
    decision = (counts[:, 1] > counts[:, 0]).astype(np.int64)
    best = int(np.maximum(counts[:, 0], counts[:, 1]).sum())
    total = int(counts.sum())
    return decision, Fraction(best, total)


def _outcome_grid(n: int):
    x = np.repeat(np.arange(2**n), 2**n)
    a = np.tile(np.arange(2**n), 2**n)
    return x, a


@functools.lru_cache(maxsize=None)
def eve_bisep_table(n: int, guess_mask: int, actual_mask: int) -> tuple[np.ndarray, Fraction]:
    """Eve's optimal guess of side-1's key from (component, announcements).

    The view index is ``lam * 16 + ann_g * 4 + ann_c``.  The source is the
    four-term mixture for ``guess_mask``; the protocol split is
    ``actual_mask``.  Returns (decision per view, exact success on sifted rounds).
    """
    mixture = ghz_bisep_mixture(n, Bipartition.from_mask(n, guess_mask))
    x, a = _outcome_grid(n)
    full = 2**n - 1
    ann_g = popcount(x & actual_mask) % 4
    ann_c = popcount(x & (full ^ actual_mask)) % 4
    sifted = popcount(x) % 2 == 0
    keys = popcount(a & actual_mask) & 1
    products = [tensor(term.parts) for term in mixture.terms]
    den = math.lcm(*(b.denominator for b in products))
    views, weights, key_list = [], [], []
    for lam, b in enumerate(products):
        p = b.numerators.ravel() * (den // b.denominator)
        keep = sifted & (p > 0)
        views.append(lam * 16 + ann_g[keep] * 4 + ann_c[keep])
        weights.append(p[keep])
        key_list.append(keys[keep])
    return _posterior_table(np.concatenate(views), np.concatenate(weights),
                            np.concatenate(key_list), 64)


@functools.lru_cache(maxsize=None)
def eve_leak_table(n: int, side_mask: int, leak_mask: int) -> tuple[np.ndarray, Fraction]:
    """Eve's optimal guess of side-1's key from announcements and leaked outputs.

    The view index is ``(ann_g * 4 + ann_c) * 2**|L| + leaked``, with the
    leaked outputs packed lowest party first.  Source: the GHZ table.
    """
    b = ghz_behavior(n)
    x, a = _outcome_grid(n)
    full = 2**n - 1
    leaked_parties = [i + 1 for i in range(n) if (leak_mask >> i) & 1]
    p = b.numerators.ravel()
    keep = (popcount(x) % 2 == 0) & (p > 0)
    x, a, p = x[keep], a[keep], p[keep]
    ann = (popcount(x & side_mask) % 4) * 4 + popcount(x & (full ^ side_mask)) % 4
    leaked = local_index(a, leaked_parties)
    views = ann * 2 ** len(leaked_parties) + leaked
    keys = popcount(a & side_mask) & 1
    return _posterior_table(views, p, keys, 16 * 2 ** len(leaked_parties))


# --------------------------------------------------------------------------
# sources


def _sample_mixture_components(mixture: Mixture, x: np.ndarray, lam: np.ndarray,
                               rng: np.random.Generator) -> np.ndarray:
    """Global output indices when round r uses mixture component lam[r]."""
    a = np.zeros_like(x)
    for k, term in enumerate(mixture.terms):
        rows = np.nonzero(lam == k)[0]
        if not len(rows):
            continue
        for parties, factor in term.parts:
            local_a = sample_indices(factor, local_index(x[rows], parties), rng)
            for j, p in enumerate(parties):
                a[rows] |= ((local_a >> j) & 1) << (p - 1)
    return a


def _draw_components(mixture: Mixture, size: int, rng: np.random.Generator) -> np.ndarray:
    weights = [Fraction(t.weight) for t in mixture.terms]
    den = math.lcm(*(w.denominator for w in weights))
    cum = np.cumsum([w.numerator * (den // w.denominator) for w in weights])
    return np.searchsorted(cum, _draw_below(rng, den, size), side="right")


def sample_mixture(mixture: Mixture, rounds: int, seed: int) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """(inputs, outputs, component) for ``rounds`` draws with uniform inputs."""
    n = mixture.n
    xs, as_, lams = [], [], []
    for j, size in _batches(rounds):
        rng = batch_rng(seed, j)
        x = rng.integers(0, 2**n, size=size)
        lam = _draw_components(mixture, size, rng)
        xs.append(x)
        lams.append(lam)
        as_.append(_sample_mixture_components(mixture, x, lam, rng))
    return np.concatenate(xs), np.concatenate(as_), np.concatenate(lams)


def empirical_counts(n: int, x: np.ndarray, a: np.ndarray) -> np.ndarray:
    counts = np.zeros((2**n, 2**n), dtype=np.int64)
    np.add.at(counts, (x, a), 1)
    return counts


def max_sigma_deviation(counts: np.ndarray, exact: Behavior) -> float:
    """Largest per-entry binomial z-score of ``counts`` against ``exact``.

    Entries with exact probability 0 or 1 must match exactly; a mismatch there
    returns infinity.
    """
    p = exact.as_float()
    totals = counts.sum(axis=1, keepdims=True)
    expected = totals * p
    var = totals * p * (1 - p)
    degenerate = var == 0
    if np.any(counts[degenerate] != expected[degenerate]):
        return math.inf
    z = np.abs(counts - expected)[~degenerate] / np.sqrt(var[~degenerate])
    return float(z.max()) if z.size else 0.0


# --------------------------------------------------------------------------
# transcripts


@dataclass(frozen=True)
class RoundRecord:
    index: int
    inputs: tuple[int, ...]
    outputs: tuple[int, ...]
    grouping: str
    announcements: tuple[int, int]
    sifted: bool
    keys: tuple[int, int] | None
    component: int | None
    eve_guess: int | None


COLUMNS = ("x", "a", "side", "ann_g", "ann_c", "sifted", "key_g", "key_c", "lam", "guess", "leak", "eve")


@dataclass
class Transcript:
    """Columnar round data plus metadata.

    ``side`` is the bitmask of the first side (the group holding party 1 in
    MSS, side A in QKD).  ``key_c`` is the second side's corrected key.
    ``lam`` is the mixture component (-1 without a box adversary), ``guess``
    Eve's guessed split, ``leak`` the leaked-party mask and ``eve`` her key
    guess (-1 when not applicable).
    """

    protocol: str
    n: int
    rounds: int
    seed: int
    adversary: str
    columns: dict[str, np.ndarray]

    def records(self) -> Iterator[RoundRecord]:
        c = self.columns
        n = self.n
        for r in range(self.rounds):
            grouping = _side_str(n, int(c["side"][r]))
            sifted = bool(c["sifted"][r])
            yield RoundRecord(
                r,
                tuple((int(c["x"][r]) >> i) & 1 for i in range(n)),
                tuple((int(c["a"][r]) >> i) & 1 for i in range(n)),
                grouping,
                (int(c["ann_g"][r]), int(c["ann_c"][r])),
                sifted,
                (int(c["key_g"][r]), int(c["key_c"][r])) if sifted else None,
                int(c["lam"][r]) + 1 if c["lam"][r] >= 0 else None,
                int(c["eve"][r]) if c["eve"][r] >= 0 else None,
            )

    def summary(self) -> dict:
        c = self.columns
        sifted = c["sifted"].astype(bool)
        n_sift = int(sifted.sum())
        out = {
            "rounds": self.rounds,
            "sifted": n_sift,
            "sift_rate": n_sift / self.rounds,
            "agreements": int((c["key_g"][sifted] == c["key_c"][sifted]).sum()),
        }
        out["agreement_rate"] = out["agreements"] / n_sift if n_sift else None
        if self.adversary != "none":
            eve_hits = int((c["eve"][sifted] == c["key_g"][sifted]).sum())
            out["eve_hits"] = eve_hits
            out["eve_success_rate"] = eve_hits / n_sift if n_sift else None
        if self.adversary.startswith("bisep") or self.adversary == "random-bisep":
            full = 2**self.n - 1
            side = c["side"][sifted]
            canon = np.where(side & 1, side, full ^ side)
            match = canon == c["guess"][sifted]
            hits = c["eve"][sifted] == c["key_g"][sifted]
            out["match_rounds"] = int(match.sum())
            out["match_rate"] = float(match.mean()) if n_sift else None
            out["matched_hits"] = int(hits[match].sum())
            out["mismatched_rounds"] = int((~match).sum())
            out["mismatched_hits"] = int(hits[~match].sum())
        return out

    def to_json(self, include_rounds: bool = False) -> str:
        data = {
            "protocol": self.protocol,
            "n": self.n,
            "rounds": self.rounds,
            "seed": self.seed,
            "adversary": self.adversary,
            "summary": self.summary(),
        }
        if include_rounds:
            data["records"] = [r.__dict__ for r in self.records()]
        return json.dumps(data, sort_keys=True)

    def to_csv(self) -> str:
        buf = io.StringIO()
        writer = csv.writer(buf, lineterminator="\n")
        writer.writerow(("round",) + COLUMNS)
        for r in range(self.rounds):
            writer.writerow([r] + [int(self.columns[k][r]) for k in COLUMNS])
        return buf.getvalue()


def _side_str(n: int, mask: int) -> str:
    a = [str(i + 1) for i in range(n) if (mask >> i) & 1]
    b = [str(i + 1) for i in range(n) if not (mask >> i) & 1]
    return ",".join(a) + "|" + ",".join(b)


def _derive(n: int, x: np.ndarray, a: np.ndarray, side: np.ndarray) -> dict[str, np.ndarray]:
    full = 2**n - 1
    ann_g = popcount(x & side) % 4
    ann_c = popcount(x & (full ^ side)) % 4
    sifted = (popcount(x) % 2 == 0).astype(np.int64)
    par_g = popcount(a & side) & 1
    par_c = popcount(a & (full ^ side)) & 1
    key_c = par_c ^ _sign_bits(ann_g, ann_c)
    return {
        "ann_g": ann_g, "ann_c": ann_c, "sifted": sifted,
        "key_g": np.where(sifted == 1, par_g, -1),
        "key_c": np.where(sifted == 1, key_c, -1),
    }


def _leak_guesses(n, x, a, side, leak_masks, cols) -> np.ndarray:
    eve = np.full(len(x), -1, dtype=np.int64)
    sifted = cols["sifted"] == 1
    for s, lm in set(zip(side[sifted].tolist(), leak_masks[sifted].tolist())):
        rows = np.nonzero(sifted & (side == s) & (leak_masks == lm))[0]
        decision, _ = eve_leak_table(n, s, lm)
        parties = [i + 1 for i in range(n) if (lm >> i) & 1]
        view = (cols["ann_g"][rows] * 4 + cols["ann_c"][rows]) * 2 ** len(parties) \
            + local_index(a[rows], parties)
        eve[rows] = decision[view]
    return eve


def _bisep_guesses(n, guess, lam, side, cols) -> np.ndarray:
    eve = np.full(len(lam), -1, dtype=np.int64)
    sifted = cols["sifted"] == 1
    for g, s in set(zip(guess[sifted].tolist(), side[sifted].tolist())):
        rows = np.nonzero(sifted & (guess == g) & (side == s))[0]
        decision, _ = eve_bisep_table(n, g, s)
        eve[rows] = decision[lam[rows] * 16 + cols["ann_g"][rows] * 4 + cols["ann_c"][rows]]
    return eve


def _simulate(protocol: str, n: int, rounds: int, seed: int, *, grouping, guess, leak,
              adversary_label: str) -> Transcript:
    """Shared round loop.

    ``grouping``: a Bipartition, "random" (uniform canonical bipartition) or
    "random-subset" (uniform nonempty proper subset as side A).  ``guess``:
    None (GHZ source), a Bipartition, or "random".  ``leak``: None or a leak
    policy.
    """
    bps = [bp.mask for bp in enumerate_bipartitions(n)]
    ghz = ghz_behavior(n)
    mixtures = {m: ghz_bisep_mixture(n, Bipartition.from_mask(n, m)) for m in bps} if guess is not None else {}
    parts = {k: [] for k in COLUMNS}
    for j, size in _batches(rounds):
        rng = batch_rng(seed, j)
        x = rng.integers(0, 2**n, size=size)
        if guess is None:
            g = np.zeros(size, dtype=np.int64)
            lam = np.full(size, -1, dtype=np.int64)
            a = sample_indices(ghz, x, rng)
        else:
            if guess == "random":
                g = np.array(bps)[rng.integers(0, len(bps), size=size)]
            else:
                g = np.full(size, guess.mask, dtype=np.int64)
            lam = rng.integers(0, 4, size=size)
            a = np.zeros_like(x)
            for m in np.unique(g):
                rows = np.nonzero(g == m)[0]
                a[rows] = _sample_mixture_components(mixtures[int(m)], x[rows], lam[rows], rng)
        # The split is fixed only after the outputs exist.
        if grouping == "random":
            side = np.array(bps)[rng.integers(0, len(bps), size=size)]
        elif grouping == "random-subset":
            side = rng.integers(1, 2**n - 1, size=size)
        else:
            side = np.full(size, grouping.mask, dtype=np.int64)
        cols = _derive(n, x, a, side)
        leak_masks = np.zeros(size, dtype=np.int64)
        if leak is not None:
            leak_masks = np.array([leak_mask_for(leak, n, int(s)) for s in side], dtype=np.int64)
            eve = _leak_guesses(n, x, a, side, leak_masks, cols)
        elif guess is not None:
            eve = _bisep_guesses(n, g, lam, side, cols)
        else:
            eve = np.full(size, -1, dtype=np.int64)
        cols.update(x=x, a=a, side=side, lam=lam, guess=g, leak=leak_masks, eve=eve)
        for k in COLUMNS:
            parts[k].append(np.asarray(cols[k], dtype=np.int64))
    columns = {k: np.concatenate(v) for k, v in parts.items()}
    return Transcript(protocol, n, rounds, seed, adversary_label, columns)


def _check_rounds(rounds: int) -> None:
    if rounds < 1:
        raise ValueError("rounds must be >= 1")


def run_mss(n: int, rounds: int, seed: int, grouping="random",
            adversary: AdversaryModel | None = None) -> Transcript:
    """Secret sharing between two groups chosen after measurement.

    ``grouping`` is a fixed Bipartition or "random".  The first side is the
    group holding party 1.
    """
    if n < 3:
        raise TooFewParties("secret sharing needs n >= 3")
    _check_rounds(rounds)
    adversary = adversary or AdversaryModel.none()
    if grouping != "random":
        if not isinstance(grouping, Bipartition) or grouping.n != n:
            raise InvalidBipartition(f"grouping {grouping!r} is not a bipartition of {n} parties")
    if adversary.kind == "bisep" and adversary.guess.n != n:
        raise InvalidBipartition("adversary guess has the wrong party count")
    return _simulate("MSS", n, rounds, seed, grouping=grouping,
                     guess=adversary.guess if adversary.kind == "bisep" else None,
                     leak=adversary.leak if adversary.kind == "leakage" else None,
                     adversary_label=adversary.describe())


def eve_partition_success(n: int, rounds: int, seed: int) -> dict:
    """Box attack with Eve's split and the parties' split both uniform and independent."""
    if n < 3:
        raise TooFewParties("secret sharing needs n >= 3")
    _check_rounds(rounds)
    t = _simulate("MSS", n, rounds, seed, grouping="random", guess="random", leak=None,
                  adversary_label="random-bisep")
    s = t.summary()
    p_match = 1 / (2 ** (n - 1) - 1)
    return {
        "n": n,
        "rounds": rounds,
        "seed": seed,
        "sifted": s["sifted"],
        "match_rate": s["match_rate"],
        "expected_match_rate": p_match,
        "matched_success": s["matched_hits"] / s["match_rounds"] if s["match_rounds"] else None,
        "mismatched_success": (s["mismatched_hits"] / s["mismatched_rounds"]
                               if s["mismatched_rounds"] else None),
        "overall_success": s["eve_success_rate"],
        "expected_overall_success": p_match + (1 - p_match) / 2,
        "match_rounds": s["match_rounds"],
        "matched_hits": s["matched_hits"],
        "mismatched_rounds": s["mismatched_rounds"],
        "mismatched_hits": s["mismatched_hits"],
    }


def run_qkd(n: int, rounds: int, seed: int, adversary: AdversaryModel | None = None) -> Transcript:
    """Two-party key distribution with a fresh random split of subsystems each round."""
    if n < 2:
        raise TooFewParties("QKD needs n >= 2")
    _check_rounds(rounds)
    adversary = adversary or AdversaryModel.none()
    if adversary.kind == "bisep":
        raise ValueError("the box attack is modelled for secret sharing only")
    leak = adversary.leak if adversary.kind == "leakage" else None
    if leak is not None:
        leak_mask_for(leak, n, 1)  # validate before simulating
    return _simulate("QKD", n, rounds, seed, grouping="random-subset", guess=None, leak=leak,
                     adversary_label=adversary.describe())


def run_qkd_leakage(n: int, rounds: int, seed: int, leak_policy="all-but-one") -> dict:
    """Eve's per-bit success on side A's key under a leakage policy."""
    t = run_qkd(n, rounds, seed, AdversaryModel.leakage(leak_policy))
    s = t.summary()
    return {
        "n": n,
        "rounds": rounds,
        "seed": seed,
        "policy": leak_policy,
        "sifted": s["sifted"],
        "eve_hits": s["eve_hits"],
        "eve_success_rate": s["eve_success_rate"],
        "agreement_rate": s["agreement_rate"],
    }
