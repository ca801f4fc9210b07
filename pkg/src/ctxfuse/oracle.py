"""Brute-force references for the decoders and the entity counter.

Kept deliberately naive and independent of :mod:`ctxfuse.decoding` and
:mod:`ctxfuse.metrics`; slow by design.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Sequence

from .context import ContextSpec
from .exceptions import BudgetExceededError, InputError
from .models import ConditionalLM

MAX_ENUMERATION = 10**6


@dataclass(frozen=True)
class OracleBudget:
    max_vocab: int = 4
    max_len: int = 4

    def __post_init__(self):
        if self.max_vocab < 1 or self.max_len < 1:
            raise InputError("budget sizes must be positive")
        if self.max_vocab**self.max_len > MAX_ENUMERATION:
            raise BudgetExceededError(
                f"{self.max_vocab}^{self.max_len} sequences exceeds the {MAX_ENUMERATION} limit"
            )


def exhaustive_joint_decode(
    model: ConditionalLM,
    obs: Sequence[int],
    ctx: ContextSpec | None,
    alpha: float,
    max_len: int,
    budget: OracleBudget = OracleBudget(),
) -> tuple[tuple[int, ...], float] | None:
    """Best EOS-terminated sequence of length <= ``max_len`` under the summed log fused score.

    Returns ``(tokens, score)`` or ``None`` when no sequence terminates in time.
    Ties go to the lexicographically smallest token sequence.
    """
    if alpha < 0:
        raise InputError("the exhaustive oracle covers alpha >= 0 only")
    n = len(model.vocab)
    if n > budget.max_vocab or max_len > budget.max_len:
        raise BudgetExceededError(
            f"|V|={n}, max_len={max_len} exceeds budget ({budget.max_vocab}, {budget.max_len})"
        )
    eos = model.vocab.eos_id
    obs = tuple(obs)
    empty = ContextSpec()
    ctx = ctx if ctx is not None else empty
    w_ctx = alpha / (1.0 + alpha)
    w_noctx = 1.0 / (1.0 + alpha)

    best: list = [None, -math.inf]

    def visit(prefix: tuple[int, ...], score: float) -> None:
        if len(prefix) == max_len:
            return
        pc = model.next_dist(prefix, obs, ctx)
        pn = model.next_dist(prefix, obs, None)
        for v in range(n):
            f = w_ctx * pc[v] + w_noctx * pn[v]
            if f <= 0:
                continue
            s = score + math.log(f)
            seq = prefix + (v,)
            if v == eos:
                if s > best[1] or (s == best[1] and seq < best[0]):
                    best[0], best[1] = seq, s
            else:
                visit(seq, s)

    visit((), 0.0)
    if best[0] is None:
        return None
    return best[0], best[1]


def exhaustive_stream_decode(
    model: ConditionalLM, obs: Sequence[int], ctx: ContextSpec | None, max_len: int
) -> tuple[tuple[int, ...], float] | None:
    """Best EOS-terminated sequence under a single stream's log-probability."""
    n = len(model.vocab)
    if n**max_len > MAX_ENUMERATION:
        raise BudgetExceededError(f"{n}^{max_len} sequences exceeds the {MAX_ENUMERATION} limit")
    eos = model.vocab.eos_id
    obs = tuple(obs)
    best: list = [None, -math.inf]

    def visit(prefix, score):
        if len(prefix) == max_len:
            return
        p = model.next_dist(prefix, obs, ctx)
        for v in range(n):
            if p[v] <= 0:
                continue
            s = score + math.log(p[v])
            seq = prefix + (v,)
            if v == eos:
                if s > best[1] or (s == best[1] and seq < best[0]):
                    best[0], best[1] = seq, s
            else:
                visit(seq, s)

    visit((), 0.0)
    return None if best[0] is None else (best[0], best[1])


def scan_entity_occurrences(sequence: Sequence, phrase: Sequence) -> int:
    """Count non-overlapping occurrences by testing every start position in turn."""
    seq, ph = list(sequence), list(phrase)
    if not ph:
        raise InputError("phrase must be non-empty")
    count = 0
    blocked_until = 0
    for pos in range(len(seq) - len(ph) + 1):
        if pos < blocked_until:
            continue
        if all(seq[pos + k] == ph[k] for k in range(len(ph))):
            count += 1
            blocked_until = pos + len(ph)
    return count
