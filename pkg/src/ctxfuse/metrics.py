"""Error-rate and entity-level metrics over token sequences."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Iterable, Sequence

from .exceptions import EvaluationSetupError, InputError

__all__ = [
    "EditCounts",
    "CERReport",
    "EntityScore",
    "edit_alignment",
    "cer",
    "count_occurrences",
    "entity_counts",
    "entity_prf",
]


@dataclass(frozen=True)
class EditCounts:
    matches: int = 0
    substitutions: int = 0
    insertions: int = 0
    deletions: int = 0

    @property
    def errors(self) -> int:
        return self.substitutions + self.insertions + self.deletions

    @property
    def ref_len(self) -> int:
        return self.matches + self.substitutions + self.deletions

    @property
    def hyp_len(self) -> int:
        return self.matches + self.substitutions + self.insertions

    def __add__(self, other: "EditCounts") -> "EditCounts":
        return EditCounts(
            self.matches + other.matches,
            self.substitutions + other.substitutions,
            self.insertions + other.insertions,
            self.deletions + other.deletions,
        )


def edit_alignment(reference: Sequence, hypothesis: Sequence) -> EditCounts:
    """Unit-cost Levenshtein alignment counts.

    Among equal-cost alignments the backtrace prefers, at each cell,
    match > substitution > deletion > insertion.
    """
    ref, hyp = list(reference), list(hypothesis)
    n, m = len(ref), len(hyp)
    d = [[0] * (m + 1) for _ in range(n + 1)]
    for i in range(n + 1):
        d[i][0] = i
    for j in range(m + 1):
        d[0][j] = j
    for i in range(1, n + 1):
        ri = ref[i - 1]
        row, prev = d[i], d[i - 1]
        for j in range(1, m + 1):
            diag = prev[j - 1] + (ri != hyp[j - 1])
            row[j] = min(diag, prev[j] + 1, row[j - 1] + 1)

    mat = sub = ins = dele = 0
    i, j = n, m
    while i or j:
        here = d[i][j]
        if i and j and ref[i - 1] == hyp[j - 1] and here == d[i - 1][j - 1]:
            mat += 1
            i, j = i - 1, j - 1
        elif i and j and here == d[i - 1][j - 1] + 1:
            sub += 1
            i, j = i - 1, j - 1
        elif i and here == d[i - 1][j] + 1:
            dele += 1
            i -= 1
        else:
            ins += 1
            j -= 1
    return EditCounts(mat, sub, ins, dele)


@dataclass(frozen=True)
class CERReport:
    """Corpus-level error rates as fractions of the total reference length."""

    counts: EditCounts
    ref_len: int

    @property
    def sub_rate(self) -> float:
        return self.counts.substitutions / self.ref_len

    @property
    def ins_rate(self) -> float:
        return self.counts.insertions / self.ref_len

    @property
    def del_rate(self) -> float:
        return self.counts.deletions / self.ref_len

    @property
    def cer(self) -> float:
        return self.sub_rate + self.ins_rate + self.del_rate

    def as_percent(self) -> dict[str, float]:
        return {
            "cer": round(100 * self.cer, 2),
            "sub": round(100 * self.sub_rate, 2),
            "ins": round(100 * self.ins_rate, 2),
            "del": round(100 * self.del_rate, 2),
        }


def cer(corpus: Iterable[tuple[Sequence, Sequence]]) -> CERReport:
    total = EditCounts()
    n_pairs = 0
    for ref, hyp in corpus:
        total = total + edit_alignment(ref, hyp)
        n_pairs += 1
    if n_pairs == 0:
        raise InputError("cannot compute CER of an empty corpus")
    if total.ref_len == 0:
        raise InputError("total reference length is zero")
    return CERReport(total, total.ref_len)


def _failure(phrase: Sequence) -> list[int]:
    fail = [0] * len(phrase)
    k = 0
    for i in range(1, len(phrase)):
        while k and phrase[i] != phrase[k]:
            k = fail[k - 1]
        if phrase[i] == phrase[k]:
            k += 1
        fail[i] = k
    return fail


def count_occurrences(sequence: Sequence, phrase: Sequence) -> int:
    """Non-overlapping occurrences of ``phrase``, matched greedily from the left.

    KMP scan whose state resets after each full match.
    """
    phrase = list(phrase)
    if not phrase:
        raise InputError("phrase must be non-empty")
    fail = _failure(phrase)
    count = k = 0
    for tok in sequence:
        while k and tok != phrase[k]:
            k = fail[k - 1]
        if tok == phrase[k]:
            k += 1
            if k == len(phrase):
                count += 1
                k = 0
    return count


@dataclass(frozen=True)
class EntityScore:
    precision: float
    recall: float
    f1: float
    tp: int = 0
    n_hyp: int = 0
    n_ref: int = 0

    @classmethod
    def from_counts(cls, tp: int, n_hyp: int, n_ref: int) -> "EntityScore":
        if n_ref == 0:
            raise EvaluationSetupError("no listed entity occurs in any reference; recall is undefined")
        p = tp / n_hyp if n_hyp else 1.0
        r = tp / n_ref
        f1 = 2 * p * r / (p + r) if p + r > 0 else 0.0
        return cls(p, r, f1, tp, n_hyp, n_ref)


def entity_counts(
    corpus: Iterable[tuple[Sequence, Sequence]], entities: Sequence[Sequence]
) -> tuple[int, int, int]:
    """Micro-summed ``(tp, hyp_occurrences, ref_occurrences)``."""
    phrases = [tuple(e) for e in entities]
    for e in phrases:
        if not e:
            raise InputError("entity phrases must be non-empty")
    tp = n_hyp = n_ref = 0
    for ref, hyp in corpus:
        for e in phrases:
            r = count_occurrences(ref, e)
            h = count_occurrences(hyp, e)
            tp += min(r, h)
            n_hyp += h
            n_ref += r
    return tp, n_hyp, n_ref


def entity_prf(corpus: Iterable[tuple[Sequence, Sequence]], entities: Sequence[Sequence]) -> EntityScore:
    """Occurrence-level precision / recall / F1 of ``entities``.

    Per utterance and entity, true positives are ``min(ref count, hyp count)``.
    Precision is 1.0 when nothing is hypothesized; raises
    :class:`EvaluationSetupError` when no entity occurs in any reference.
    """
    return EntityScore.from_counts(*entity_counts(corpus, entities))
