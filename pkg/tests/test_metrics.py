import functools
import itertools

import numpy as np
import pytest

from ctxfuse import EditCounts, cer, edit_alignment, entity_prf
from ctxfuse.exceptions import EvaluationSetupError, InputError
from ctxfuse.metrics import count_occurrences, entity_counts


def all_pairs(max_len=4, alphabet="ab"):
    seqs = [s for n in range(max_len + 1) for s in itertools.product(alphabet, repeat=n)]
    return itertools.product(seqs, seqs)


def dp_oracle(ref, hyp):
    """Top-down over every alignment path, same tie preference as the decoder-side metric."""

    @functools.lru_cache(maxsize=None)
    def best(i, j):
        if i == 0 and j == 0:
            return 0, (0, 0, 0, 0)
        options = []  # (cost, preference rank, counts)
        if i and j:
            prev_cost, (m, s, ins, d) = best(i - 1, j - 1)
            if ref[i - 1] == hyp[j - 1]:
                options.append((prev_cost, 0, (m + 1, s, ins, d)))
            else:
                options.append((prev_cost + 1, 1, (m, s + 1, ins, d)))
        if i:
            prev_cost, (m, s, ins, d) = best(i - 1, j)
            options.append((prev_cost + 1, 2, (m, s, ins, d + 1)))
        if j:
            prev_cost, (m, s, ins, d) = best(i, j - 1)
            options.append((prev_cost + 1, 3, (m, s, ins + 1, d)))
        cost, _, counts = min(options, key=lambda o: (o[0], o[1]))
        return cost, counts

    return best(len(ref), len(hyp))


class TestEditAlignment:
    def test_examples(self):
        assert edit_alignment("abc", "abc") == EditCounts(3, 0, 0, 0)
        assert edit_alignment("abc", "axc") == EditCounts(2, 1, 0, 0)
        assert edit_alignment("abc", "ac") == EditCounts(2, 0, 0, 1)
        assert edit_alignment("ac", "abc") == EditCounts(2, 0, 1, 0)
        assert edit_alignment("", "ab") == EditCounts(0, 0, 2, 0)

    def test_against_dp_oracle(self):
        n = 0
        for ref, hyp in all_pairs():
            got = edit_alignment(ref, hyp)
            cost, counts = dp_oracle(ref, hyp)
            assert got.errors == cost
            assert (got.matches, got.substitutions, got.insertions, got.deletions) == counts
            assert got.ref_len == len(ref) and got.hyp_len == len(hyp)
            n += 1
        assert n == 31 * 31

    def test_symmetry(self):
        for ref, hyp in all_pairs(3):
            a, b = edit_alignment(ref, hyp), edit_alignment(hyp, ref)
            assert a.errors == b.errors
            assert a.insertions - a.deletions == b.deletions - b.insertions


class TestCER:
    def test_perfect(self):
        r = cer([("abc", "abc"), ("xy", "xy")])
        assert r.as_percent() == {"cer": 0.0, "sub": 0.0, "ins": 0.0, "del": 0.0}

    def test_single_substitution(self):
        assert cer([("abc", "axc")]).as_percent() == {"cer": 33.33, "sub": 33.33, "ins": 0.0, "del": 0.0}

    def test_mixed_corpus(self):
        r = cer([("abc", "axc"), ("abc", "ac"), ("abc", "abxc")])
        assert r.ref_len == 9
        assert r.as_percent() == {"cer": 33.33, "sub": 11.11, "ins": 11.11, "del": 11.11}
        assert abs(r.cer - (r.sub_rate + r.ins_rate + r.del_rate)) < 1e-12

    def test_errors(self):
        with pytest.raises(InputError):
            cer([])
        with pytest.raises(InputError):
            cer([((), (1,))])


class TestEntities:
    def test_perfect(self):
        corpus = [((1, 2, 3), (1, 2, 3)), ((2, 3, 2, 3), (2, 3, 2, 3))]
        s = entity_prf(corpus, [(2, 3)])
        assert (s.precision, s.recall, s.f1) == (1.0, 1.0, 1.0)

    def test_min_count(self):
        s = entity_prf([((5, 6, 0, 5, 6), (5, 6, 0, 0))], [(5, 6)])
        assert (s.tp, s.n_hyp, s.n_ref) == (1, 1, 2)
        assert s.recall == 0.5 and s.precision == 1.0

    def test_false_alarm(self):
        s = entity_prf([((5, 6), (5, 6)), ((0, 0), (5, 6))], [(5, 6)])
        assert s.precision == 0.5 and s.recall == 1.0
        assert s.f1 == pytest.approx(2 / 3)

    def test_no_hypotheses(self):
        s = entity_prf([((5, 6), (0, 0))], [(5, 6)])
        assert (s.precision, s.recall, s.f1) == (1.0, 0.0, 0.0)

    def test_undefined_recall(self):
        with pytest.raises(EvaluationSetupError):
            entity_prf([((0, 1), (5, 6))], [(5, 6)])

    def test_empty_phrase(self):
        with pytest.raises(InputError):
            entity_counts([((0,), (0,))], [()])


def test_overlap_rule():
    assert count_occurrences("aaa", "aa") == 1
    assert count_occurrences("aaaa", "aa") == 2
    assert count_occurrences("abab", "aba") == 1
    assert count_occurrences("xyz", "q") == 0


def test_kmp_restart_after_partial():
    # "aab" inside "aaab" needs the failure link to survive the mismatch
    assert count_occurrences("aaab", "aab") == 1
    rng = np.random.default_rng(0)
    for _ in range(200):
        seq = rng.integers(0, 2, 12).tolist()
        ph = rng.integers(0, 2, rng.integers(1, 4)).tolist()
        naive = 0
        i = 0
        while i <= len(seq) - len(ph):
            if seq[i:i + len(ph)] == ph:
                naive += 1
                i += len(ph)
            else:
                i += 1
        assert count_occurrences(seq, ph) == naive
