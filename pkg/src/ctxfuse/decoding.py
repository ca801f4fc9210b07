"""Joint decoding: one shared prefix feeds a with-context and a without-context stream.

Every step queries the model twice on the same prefix, fuses the two
next-token distributions and appends the single winning token to the shared
prefix, so both streams always agree on the history.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .context import ContextSpec
from .exceptions import DecodeError, UnsupportedModeError
from .fusion import fuse_normalized, fuse_score
from .models import ConditionalLM
from .validation import check_alpha, check_positive_int, check_prob_dist, check_token_seq

__all__ = [
    "DecodeStep",
    "DecodeResult",
    "BeamHypothesis",
    "select_token",
    "greedy_decode",
    "joint_greedy_decode",
    "joint_beam_decode",
]


@dataclass(frozen=True)
class DecodeStep:
    prefix: tuple[int, ...]
    p_ctx: np.ndarray
    p_noctx: np.ndarray
    fused: np.ndarray
    chosen: int


@dataclass(frozen=True)
class DecodeResult:
    tokens: tuple[int, ...]
    steps: tuple[DecodeStep, ...]
    logprob_ctx: float
    logprob_noctx: float
    eos_id: int
    truncated: bool = False

    @property
    def content(self) -> tuple[int, ...]:
        """Emitted tokens with EOS stripped."""
        return tuple(t for t in self.tokens if t != self.eos_id)


@dataclass(frozen=True, order=False)
class BeamHypothesis:
    tokens: tuple[int, ...]
    cum_log_fused: float = 0.0
    finished: bool = False

    def rank_key(self):
        return (-self.cum_log_fused, self.tokens)


def _log(p: float) -> float:
    return math.log(p) if p > 0 else -math.inf


TIE_TOL = 1e-12


def select_token(fused: np.ndarray, p_noctx: np.ndarray, support: np.ndarray) -> int:
    """Pick the best fused score among tokens either stream can produce.

    Scores within ``TIE_TOL`` of the best are ties; ties go to the higher
    context-free probability, then to the lowest id. With alpha = -1 and an
    uninformative context every fused score is zero, and this falls back to
    the context-free choice instead of an arbitrary token.
    """
    masked = np.where(support, fused, -np.inf)
    tied = masked >= masked.max() - TIE_TOL
    return int(np.argmax(np.where(tied, p_noctx, -np.inf)))


def _query(model: ConditionalLM, prefix, obs, ctx, step: int) -> np.ndarray:
    try:
        return check_prob_dist(model.next_dist(prefix, obs, ctx), len(model.vocab), name="model output")
    except DecodeError:
        raise
    except Exception as exc:
        raise DecodeError(f"model query failed: {exc}", step=step) from exc


def _check_inputs(model: ConditionalLM, obs, ctx: ContextSpec | None, max_len) -> tuple[tuple[int, ...], int]:
    v = model.vocab
    obs = check_token_seq(obs, len(v), eos_id=v.eos_id, name="observation", allow_empty=False)
    if ctx is not None:
        ctx.validate(len(v), v.eos_id)
    return obs, check_positive_int(max_len, "max_len")


def greedy_decode(
    model: ConditionalLM, obs: Sequence[int], ctx: ContextSpec | None, max_len: int
) -> tuple[int, ...]:
    """Plain single-stream greedy decoding (baseline for either condition)."""
    obs, max_len = _check_inputs(model, obs, ctx, max_len)
    eos = model.vocab.eos_id
    prefix: list[int] = []
    for t in range(max_len):
        p = _query(model, tuple(prefix), obs, ctx, t)
        tok = int(np.argmax(p))
        prefix.append(tok)
        if tok == eos:
            break
    return tuple(prefix)


def joint_greedy_decode(
    model: ConditionalLM,
    obs: Sequence[int],
    ctx: ContextSpec | None,
    alpha: float,
    max_len: int,
) -> DecodeResult:
    """Greedy joint decoding ranked by ``p_noctx + alpha * p_ctx``.

    Works for any finite alpha; negative values suppress the context.
    """
    alpha = check_alpha(alpha)
    obs, max_len = _check_inputs(model, obs, ctx, max_len)
    if ctx is None:
        ctx = ContextSpec()
    eos = model.vocab.eos_id

    prefix: list[int] = []
    steps: list[DecodeStep] = []
    lp_ctx = lp_noctx = 0.0
    for t in range(max_len):
        shared = tuple(prefix)
        p_ctx = _query(model, shared, obs, ctx, t)
        p_noctx = _query(model, shared, obs, None, t)
        fused = fuse_score(p_ctx, p_noctx, alpha)
        tok = select_token(fused, p_noctx, (p_ctx > 0) | (p_noctx > 0))
        steps.append(DecodeStep(shared, p_ctx, p_noctx, fused, tok))
        lp_ctx += _log(p_ctx[tok])
        lp_noctx += _log(p_noctx[tok])
        prefix.append(tok)
        if tok == eos:
            break
    return DecodeResult(
        tokens=tuple(prefix),
        steps=tuple(steps),
        logprob_ctx=lp_ctx,
        logprob_noctx=lp_noctx,
        eos_id=eos,
        truncated=prefix[-1] != eos,
    )


def joint_beam_decode(
    model: ConditionalLM,
    obs: Sequence[int],
    ctx: ContextSpec | None,
    alpha: float,
    beam_width: int,
    max_len: int,
) -> list[BeamHypothesis]:
    """Beam search over shared prefixes scored by the sum of log fused probabilities.

    Finished hypotheses stay in the pool and compete for beam slots. The
    returned list holds finished hypotheses first, best score first with
    lexicographic token order breaking ties, followed by any hypotheses that
    hit ``max_len`` without EOS, ranked the same way.
    """
    alpha = check_alpha(alpha)
    if alpha < 0:
        raise UnsupportedModeError("beam decoding requires alpha >= 0; suppression is greedy-only")
    beam_width = check_positive_int(beam_width, "beam_width")
    obs, max_len = _check_inputs(model, obs, ctx, max_len)
    if ctx is None:
        ctx = ContextSpec()
    eos = model.vocab.eos_id

    live = [BeamHypothesis(())]
    finished: list[BeamHypothesis] = []
    for t in range(max_len):
        candidates = list(finished)
        for hyp in live:
            p_ctx = _query(model, hyp.tokens, obs, ctx, t)
            p_noctx = _query(model, hyp.tokens, obs, None, t)
            fused = fuse_normalized(p_ctx, p_noctx, alpha)
            for v in np.flatnonzero(fused > 0):
                v = int(v)
                candidates.append(
                    BeamHypothesis(hyp.tokens + (v,), hyp.cum_log_fused + math.log(fused[v]), v == eos)
                )
        candidates.sort(key=BeamHypothesis.rank_key)
        kept = candidates[:beam_width]
        finished = [h for h in kept if h.finished]
        live = [h for h in kept if not h.finished]
        if not live:
            break
    return sorted(finished, key=BeamHypothesis.rank_key) + sorted(live, key=BeamHypothesis.rank_key)
