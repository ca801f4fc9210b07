"""Vocabulary, the conditional next-token model interface and two desk-scale models.

Both models answer ``next_dist(prefix, obs, ctx)``: the distribution of the next
token given the tokens decoded so far, the observation and (optionally) the
context. Calling without a context gives the context-free conditional; calling
with one gives the context-conditioned one.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from os import PathLike
from typing import Mapping, Protocol, Sequence, runtime_checkable

import numpy as np

from .context import ContextSpec
from .exceptions import InputError, ModelConfigError
from .validation import check_prob_dist, check_token_seq

__all__ = [
    "Vocab",
    "ConditionalLM",
    "TableLM",
    "NoisyChannelLM",
    "next_dist",
    "load_model",
    "save_model",
]


@dataclass(frozen=True)
class Vocab:
    tokens: tuple[str, ...]
    eos_id: int

    def __post_init__(self):
        toks = tuple(self.tokens)
        object.__setattr__(self, "tokens", toks)
        if len(toks) < 2:
            raise ModelConfigError("vocabulary needs at least one content token plus EOS")
        if any(not isinstance(t, str) or not t for t in toks):
            raise ModelConfigError("vocabulary tokens must be non-empty strings")
        if len(set(toks)) != len(toks):
            raise ModelConfigError("vocabulary tokens must be distinct")
        if not 0 <= self.eos_id < len(toks):
            raise ModelConfigError(f"eos_id {self.eos_id} out of range")

    def __len__(self) -> int:
        return len(self.tokens)

    @property
    def eos(self) -> str:
        return self.tokens[self.eos_id]

    def index(self, token: str) -> int:
        try:
            return self._lookup[token]
        except KeyError:
            raise InputError(f"unknown token {token!r}") from None

    @property
    def _lookup(self) -> dict[str, int]:
        cache = self.__dict__.get("_lookup_cache")
        if cache is None:
            cache = {t: i for i, t in enumerate(self.tokens)}
            object.__setattr__(self, "_lookup_cache", cache)
        return cache

    def encode(self, tokens: Sequence[str]) -> tuple[int, ...]:
        return tuple(self.index(t) for t in tokens)

    def decode(self, ids: Sequence[int]) -> list[str]:
        return [self.tokens[i] for i in ids]


@runtime_checkable
class ConditionalLM(Protocol):
    vocab: Vocab

    def next_dist(
        self, prefix: Sequence[int], obs: Sequence[int], ctx: ContextSpec | None = None
    ) -> np.ndarray: ...


def next_dist(
    model: ConditionalLM,
    prefix: Sequence[int],
    obs: Sequence[int],
    ctx: ContextSpec | None = None,
) -> np.ndarray:
    """Validated front door to ``model.next_dist``.

    Raises :class:`InputError` for out-of-vocabulary ids or EOS inside the
    prefix / observation, and checks the returned vector is a distribution.
    """
    v = model.vocab
    prefix = check_token_seq(prefix, len(v), eos_id=v.eos_id, name="prefix")
    obs = check_token_seq(obs, len(v), eos_id=v.eos_id, name="observation", allow_empty=False)
    if ctx is not None:
        ctx.validate(len(v), v.eos_id)
    return check_prob_dist(model.next_dist(prefix, obs, ctx), len(v), name="model output")


def _ctx_key(ctx: ContextSpec | None) -> tuple[tuple[int, ...], ...] | None:
    if ctx is None or not ctx.entities:
        return None
    return ctx.entities


class TableLM:
    """Lookup-table model: exact stored rows, uniform for unseen keys.

    Keys are ``(prefix, obs, ctx_key)`` where ``ctx_key`` is the tuple of entity
    phrases, or ``None`` for the context-free stream (an empty context maps to
    ``None`` as well).
    """

    def __init__(self, vocab: Vocab, table: Mapping | None = None):
        self.vocab = vocab
        rows = {}
        for key, row in (table or {}).items():
            prefix, obs, ctx_key = key
            norm_key = (
                tuple(prefix),
                tuple(obs),
                None if not ctx_key else tuple(tuple(e) for e in ctx_key),
            )
            try:
                p = check_prob_dist(row, len(vocab), name=f"table row {key!r}")
            except InputError as exc:
                raise ModelConfigError(str(exc)) from None
            p.setflags(write=False)
            rows[norm_key] = p
        self._rows = rows
        self._uniform = np.full(len(vocab), 1.0 / len(vocab))
        self._uniform.setflags(write=False)

    def next_dist(self, prefix, obs, ctx=None) -> np.ndarray:
        key = (tuple(prefix), tuple(obs), _ctx_key(ctx))
        return self._rows.get(key, self._uniform).copy()


class NoisyChannelLM:
    """Bigram prior times a token-confusion emission, with optional entity boost.

    At step ``t = len(prefix)`` the unnormalized score of token ``v`` is::

        prior[v | last(prefix)] * emission[v, obs[t]] * boost(v)

    where ``boost(v) = beta`` when ``v`` continues or starts a live match of any
    context entity and 1 otherwise. Once ``t >= len(obs)`` all mass goes to EOS.

    Parameters
    ----------
    vocab : Vocab
    emission : array, shape (V, V)
        ``emission[v, o]`` = P(observe ``o`` | true token ``v``). Row-stochastic.
    start : array, shape (V,)
        Prior of the first token.
    transition : array, shape (V, V)
        ``transition[u, v]`` = P(``v`` | previous ``u``). Row-stochastic.
    beta : float
        Context boost, ``>= 1``.
    """

    def __init__(self, vocab: Vocab, emission, start, transition, beta: float = 4.0):
        n = len(vocab)
        self.vocab = vocab
        try:
            self.emission = _stochastic(emission, (n, n), "emission")
            self.start = check_prob_dist(start, n, name="prior start row")
            self.transition = _stochastic(transition, (n, n), "prior transition")
        except InputError as exc:
            raise ModelConfigError(str(exc)) from None
        for arr in (self.emission, self.start, self.transition):
            arr.setflags(write=False)
        beta = float(beta)
        if not np.isfinite(beta) or beta < 1.0:
            raise ModelConfigError(f"beta must be finite and >= 1, got {beta!r}")
        self.beta = beta
        eos = np.zeros(n)
        eos[vocab.eos_id] = 1.0
        eos.setflags(write=False)
        self._eos = eos

    def scores(self, prefix, obs, ctx=None) -> np.ndarray:
        """Unnormalized per-token scores at step ``len(prefix)``."""
        t = len(prefix)
        if t > len(obs):
            raise InputError(f"prefix length {t} exceeds observation length {len(obs)}")
        if t == len(obs):
            return self._eos.copy()
        prior = self.transition[prefix[-1]] if prefix else self.start
        s = prior * self.emission[:, obs[t]]
        if ctx is not None and ctx.entities and self.beta != 1.0:
            boosted = ctx.trie.continuations(prefix)
            if boosted:
                idx = np.fromiter(boosted, dtype=np.intp, count=len(boosted))
                s[idx] *= self.beta
        return s

    def next_dist(self, prefix, obs, ctx=None) -> np.ndarray:
        s = self.scores(prefix, obs, ctx)
        total = s.sum()
        if total <= 0:
            raise InputError(f"observation token {obs[len(prefix)]} has zero mass at step {len(prefix)}")
        return s / total

    def to_dict(self) -> dict:
        return {
            "vocab": list(self.vocab.tokens),
            "eos_id": self.vocab.eos_id,
            "emission": self.emission.tolist(),
            "prior": {"start": self.start.tolist(), "transition": self.transition.tolist()},
            "beta": self.beta,
        }

    @classmethod
    def from_dict(cls, data: Mapping) -> "NoisyChannelLM":
        try:
            vocab = Vocab(tuple(data["vocab"]), int(data["eos_id"]))
            prior = data["prior"]
            return cls(
                vocab,
                emission=data["emission"],
                start=prior["start"],
                transition=prior["transition"],
                beta=data.get("beta", 1.0),
            )
        except (KeyError, TypeError) as exc:
            raise ModelConfigError(f"malformed model document: {exc!r}") from None


def _stochastic(mat, shape, name) -> np.ndarray:
    m = np.array(mat, dtype=np.float64)
    if m.shape != shape:
        raise ModelConfigError(f"{name} has shape {m.shape}, expected {shape}")
    for i, row in enumerate(m):
        check_prob_dist(row, name=f"{name} row {i}")
    return m


def save_model(model: NoisyChannelLM, path: str | PathLike) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(model.to_dict(), fh, ensure_ascii=False)
        fh.write("\n")


def load_model(path: str | PathLike) -> NoisyChannelLM:
    with open(path, encoding="utf-8") as fh:
        try:
            data = json.load(fh)
        except json.JSONDecodeError as exc:
            raise ModelConfigError(f"{path}: not valid JSON ({exc})") from None
    return NoisyChannelLM.from_dict(data)
