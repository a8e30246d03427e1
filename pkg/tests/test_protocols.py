from fractions import Fraction

import numpy as np
import pytest

from ghzanon.behavior import popcount
from ghzanon.bisep import Bipartition, enumerate_bipartitions, ghz_bisep_mixture
from ghzanon.boxes import ghz_behavior
from ghzanon.errors import InvalidBipartition, InvalidMask, TooFewParties
from ghzanon.protocols import (
    AdversaryModel,
    empirical_counts,
    eve_bisep_table,
    eve_leak_table,
    eve_partition_success,
    leak_mask_for,
    max_sigma_deviation,
    run_mss,
    run_qkd,
    run_qkd_leakage,
    sample_mixture,
    within_sigma,
)


def sifted_rows(t):
    return t.columns["sifted"] == 1


class TestExactEveOracles:
    @pytest.mark.parametrize("n", [3, 4, 5])
    def test_box_attack(self, n):
        masks = [bp.mask for bp in enumerate_bipartitions(n)]
        for g in masks:
            for s in masks:
                _, success = eve_bisep_table(n, g, s)
                assert success == (1 if g == s else Fraction(1, 2))

    @pytest.mark.parametrize("n", [4, 5, 6])
    def test_leakage(self, n):
        full = 2**n - 1
        for side in range(1, full):
            assert eve_leak_table(n, side, 0)[1] == Fraction(1, 2)
            assert eve_leak_table(n, side, side)[1] == 1
            assert eve_leak_table(n, side, full ^ side)[1] == 1
            assert eve_leak_table(n, side, leak_mask_for("all-but-one", n, side))[1] == Fraction(1, 2)

    def test_leak_policies(self):
        assert leak_mask_for("all-but-one", 4, 0b0101) == 0b0100 | 0b1000
        assert leak_mask_for("all-a", 4, 0b0101) == 0b0101
        assert leak_mask_for(3, 4, 0b0101) == 3
        with pytest.raises(InvalidMask):
            leak_mask_for(16, 4, 1)
        with pytest.raises(InvalidMask):
            leak_mask_for("most", 4, 1)


class TestMss:
    @pytest.mark.parametrize("n", [3, 4, 5, 6])
    def test_honest_rounds(self, n):
        t = run_mss(n, 20_000, seed=n)
        c = t.columns
        s = sifted_rows(t)
        assert np.array_equal(s, popcount(c["x"]) % 2 == 0)
        assert np.all(c["key_g"][s] == c["key_c"][s])
        assert np.all(c["key_g"][~s] == -1)
        # parity relation from the GHZ sign, round by round
        full = 2**n - 1
        par = (popcount(c["a"][s] & c["side"][s]) ^ popcount(c["a"][s] & (full ^ c["side"][s]))) & 1
        assert np.array_equal(par, (popcount(c["x"][s]) % 4 == 2).astype(int))
        assert within_sigma(int(s.sum()), t.rounds, 0.5)
        assert within_sigma(int(c["key_g"][s].sum()), int(s.sum()), 0.5)

    def test_matched_box_attack_is_exact_each_round(self):
        bp = Bipartition(3, (1,))
        t = run_mss(3, 10_000, 1, bp, AdversaryModel.bisep(bp))
        s = sifted_rows(t)
        assert np.all(t.columns["eve"][s] == t.columns["key_g"][s])
        assert t.summary()["agreement_rate"] == 1

    def test_mismatched_box_attack(self):
        t = run_mss(3, 20_000, 2, Bipartition(3, (1, 2)), AdversaryModel.bisep(Bipartition(3, (1,))))
        s = t.summary()
        assert s["agreement_rate"] == 1
        assert within_sigma(s["eve_hits"], s["sifted"], 0.5)

    def test_box_source_outputs_look_like_ghz(self):
        t = run_mss(4, 60_000, 3, "random", AdversaryModel.bisep(Bipartition(4, (1, 3))))
        counts = empirical_counts(4, t.columns["x"], t.columns["a"])
        assert max_sigma_deviation(counts, ghz_behavior(4)) < 5

    def test_partition_guessing(self):
        for n, p in ((3, 1 / 3), (4, 1 / 7)):
            r = eve_partition_success(n, 30_000, seed=10 + n)
            assert within_sigma(r["match_rounds"], r["sifted"], p)
            assert r["matched_success"] == 1
            assert within_sigma(r["mismatched_hits"], r["mismatched_rounds"], 0.5)

    def test_errors(self):
        with pytest.raises(TooFewParties):
            run_mss(2, 10, 0)
        with pytest.raises(InvalidBipartition):
            run_mss(4, 10, 0, Bipartition(3, (1,)))
        with pytest.raises(ValueError):
            run_mss(3, 0, 0)

    def test_reproducible(self):
        a = run_mss(4, 9000, 42, "random", AdversaryModel.bisep(Bipartition(4, (1, 2))))
        b = run_mss(4, 9000, 42, "random", AdversaryModel.bisep(Bipartition(4, (1, 2))))
        assert a.to_json(include_rounds=True) == b.to_json(include_rounds=True)
        assert a.to_csv() == b.to_csv()
        assert run_mss(4, 9000, 43).to_csv() != run_mss(4, 9000, 42).to_csv()

    def test_summary_recomputable_from_records(self):
        t = run_mss(3, 500, 5, "random", AdversaryModel.bisep(Bipartition(3, (1,))))
        recs = list(t.records())
        sifted = [r for r in recs if r.sifted]
        s = t.summary()
        assert s["sifted"] == len(sifted)
        assert s["agreements"] == sum(r.keys[0] == r.keys[1] for r in sifted)
        assert s["eve_hits"] == sum(r.eve_guess == r.keys[0] for r in sifted)
        assert all(r.keys is None for r in recs if not r.sifted)
        assert all(1 <= r.component <= 4 for r in recs)


class TestQkd:
    def test_honest(self):
        t = run_qkd(4, 20_000, 7)
        s = t.summary()
        assert s["agreement_rate"] == 1
        assert within_sigma(s["sifted"], s["rounds"], 0.5)
        sides = t.columns["side"]
        assert sides.min() >= 1 and sides.max() <= 14

    def test_two_parties(self):
        t = run_qkd(2, 2000, 7)
        assert set(np.unique(t.columns["side"])) <= {1, 2}
        assert t.summary()["agreement_rate"] == 1

    def test_leakage_rates(self):
        assert run_qkd_leakage(4, 20_000, 1, "all-a")["eve_success_rate"] == 1
        assert run_qkd_leakage(4, 20_000, 1, "all-b")["eve_success_rate"] == 1
        for policy in ("none", "all-but-one"):
            r = run_qkd_leakage(5, 20_000, 2, policy)
            assert within_sigma(r["eve_hits"], r["sifted"], 0.5)

    def test_errors(self):
        with pytest.raises(TooFewParties):
            run_qkd(1, 10, 0)
        with pytest.raises(InvalidMask):
            run_qkd(3, 10, 0, AdversaryModel.leakage(8))
        with pytest.raises(InvalidMask):
            AdversaryModel.leakage("half")


def test_mixture_sampler_components():
    m = ghz_bisep_mixture(3, Bipartition(3, (1,)))
    x, a, lam = sample_mixture(m, 40_000, 9)
    for k in range(4):
        assert within_sigma(int((lam == k).sum()), len(lam), 0.25)
