"""Evaluation records, JSONL dataset I/O and the synthetic corpus generator."""

from __future__ import annotations

import json
import string
import warnings
from dataclasses import dataclass
from os import PathLike
from typing import Iterable

import numpy as np

from .exceptions import DatasetError, InputError
from .models import NoisyChannelLM, Vocab

TAGS = frozenset({"common", "rare", "sensitive"})
EOS_TOKEN = "</s>"


@dataclass(frozen=True)
class EvalRecord:
    id: str
    observation: tuple[int, ...]
    reference: tuple[int, ...]
    context_entities: tuple[tuple[int, ...], ...] = ()
    tags: tuple[frozenset[str], ...] | None = None

    def validate(self, vocab: Vocab) -> None:
        for name in ("observation", "reference"):
            seq = getattr(self, name)
            if not seq:
                raise DatasetError("must be non-empty", field=name)
            for t in seq:
                if not 0 <= t < len(vocab):
                    raise DatasetError(f"out-of-vocabulary id {t}", field=name)
                if t == vocab.eos_id:
                    raise DatasetError("contains the EOS token", field=name)
        for e in self.context_entities:
            if not e:
                raise DatasetError("empty phrase", field="context_entities")
            if any(t == vocab.eos_id or not 0 <= t < len(vocab) for t in e):
                raise DatasetError("phrase has EOS or out-of-vocabulary token", field="context_entities")
        if self.tags is not None:
            if len(self.tags) != len(self.context_entities):
                raise DatasetError("one tag set per context entity is required", field="tags")
            for tg in self.tags:
                if not tg <= TAGS:
                    raise DatasetError(f"unknown tags {sorted(tg - TAGS)}", field="tags")

    def to_json(self, vocab: Vocab) -> dict:
        return {
            "id": self.id,
            "observation": vocab.decode(self.observation),
            "reference": vocab.decode(self.reference),
            "context_entities": [vocab.decode(e) for e in self.context_entities],
            "tags": None if self.tags is None else [sorted(t) for t in self.tags],
        }


def _record_from_json(obj, vocab: Vocab) -> EvalRecord:
    if not isinstance(obj, dict):
        raise DatasetError("record must be a JSON object")
    for key in ("id", "observation", "reference"):
        if key not in obj:
            raise DatasetError("missing", field=key)

    def encode(seq, name):
        if not isinstance(seq, list) or not all(isinstance(t, str) for t in seq):
            raise DatasetError("must be a list of token strings", field=name)
        try:
            return vocab.encode(seq)
        except InputError as exc:
            raise DatasetError(str(exc), field=name) from None

    ents = obj.get("context_entities") or []
    if not isinstance(ents, list):
        raise DatasetError("must be a list of phrases", field="context_entities")
    tags = obj.get("tags")
    if tags is not None:
        if not isinstance(tags, list) or not all(isinstance(t, list) for t in tags):
            raise DatasetError("must be a list of tag lists", field="tags")
        tags = tuple(frozenset(t) for t in tags)
    return EvalRecord(
        id=str(obj["id"]),
        observation=encode(obj["observation"], "observation"),
        reference=encode(obj["reference"], "reference"),
        context_entities=tuple(encode(e, "context_entities") for e in ents),
        tags=tags,
    )


def load_dataset(path: str | PathLike, vocab: Vocab) -> list[EvalRecord]:
    """Read and validate a JSONL dataset; errors name the 1-based line and field."""
    records = []
    with open(path, encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, 1):
            if not line.strip():
                continue
            try:
                obj = json.loads(line)
            except json.JSONDecodeError as exc:
                raise DatasetError(f"invalid JSON ({exc.msg})", line=lineno) from None
            try:
                rec = _record_from_json(obj, vocab)
                rec.validate(vocab)
            except DatasetError as exc:
                raise DatasetError(str(exc).split(": ", 1)[-1], line=lineno, field=exc.field) from None
            records.append(rec)
    if not records:
        warnings.warn(f"dataset {path} contains no records", stacklevel=2)
    return records


def write_dataset(records: Iterable[EvalRecord], vocab: Vocab, path: str | PathLike) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        for rec in records:
            fh.write(json.dumps(rec.to_json(vocab), ensure_ascii=False))
            fh.write("\n")


@dataclass(frozen=True)
class EntityLists:
    common: tuple[tuple[int, ...], ...]
    rare: tuple[tuple[int, ...], ...]
    sensitive: tuple[tuple[int, ...], ...]

    def get(self, name: str) -> tuple[tuple[int, ...], ...]:
        if name not in ("common", "rare", "sensitive"):
            raise InputError(f"unknown entity list {name!r}")
        return getattr(self, name)

    def to_json(self, vocab: Vocab) -> dict:
        return {k: [vocab.decode(e) for e in getattr(self, k)] for k in ("common", "rare", "sensitive")}

    @classmethod
    def from_json(cls, obj: dict, vocab: Vocab) -> "EntityLists":
        try:
            return cls(**{k: tuple(vocab.encode(e) for e in obj[k]) for k in ("common", "rare", "sensitive")})
        except KeyError as exc:
            raise DatasetError(f"entity list file lacks {exc}") from None


def save_entity_lists(lists: EntityLists, vocab: Vocab, path: str | PathLike) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(lists.to_json(vocab), fh, ensure_ascii=False)
        fh.write("\n")


def load_entity_lists(path: str | PathLike, vocab: Vocab) -> EntityLists:
    with open(path, encoding="utf-8") as fh:
        return EntityLists.from_json(json.load(fh), vocab)


@dataclass(frozen=True)
class CorpusGenConfig:
    """Knobs for :func:`gen_synthetic_corpus`.

    The ``n_rare`` inventory is a subset of the ``n_common`` one. Rare phrases
    are spelled uniformly from the last ``n_rare_tokens`` content tokens, whose
    prior mass the bigram source scales by ``rare_token_weight`` (name-like
    words a language model seldom predicts); the remaining common phrases
    follow the source's own transitions. ``near_miss_rate`` is the share of
    utterances that carry a rare phrase with one token swapped for a
    confusable one, i.e. something that sounds like a hotword but is not.
    """

    vocab_size: int = 30
    n_utterances: int = 500
    utterance_len: int = 12
    n_common: int = 40
    n_rare: int = 15
    entity_len: tuple[int, int] = (3, 4)
    injection_rate: float = 0.6
    near_miss_rate: float = 0.35
    n_distractors: int = 0
    p_sub: float = 0.05
    n_confusable: int = 3
    prior_concentration: float = 0.3
    prior_smoothing: float = 0.05
    n_rare_tokens: int = 8
    rare_token_weight: float = 0.1
    beta: float = 100.0
    seed: int = 0

    def __post_init__(self):
        if self.vocab_size < 2:
            raise InputError("vocab_size must be at least 2")
        if not 0.0 <= self.p_sub <= 0.5:
            raise InputError("p_sub must lie in [0, 0.5]")
        if not 0.0 <= self.injection_rate <= 1.0:
            raise InputError("injection_rate must lie in [0, 1]")
        if not 0.0 <= self.near_miss_rate <= 1.0 - self.injection_rate:
            raise InputError("near_miss_rate must lie in [0, 1 - injection_rate]")
        if not 0 <= self.n_rare <= self.n_common:
            raise InputError("the rare inventory must be a subset of the common inventory")
        lo, hi = self.entity_len
        if not 1 <= lo <= hi:
            raise InputError("entity_len must be an increasing pair of positive ints")
        if self.n_common and hi > self.utterance_len:
            raise InputError("entities cannot be longer than utterances")
        if not 0 <= self.n_rare_tokens < self.vocab_size - 1:
            raise InputError("n_rare_tokens must leave at least one ordinary content token")
        if not self.rare_token_weight > 0:
            raise InputError("rare_token_weight must be positive")
        if self.n_utterances < 0 or self.utterance_len < 1:
            raise InputError("corpus size must be positive")
        if not 1 <= self.n_confusable <= max(1, self.vocab_size - 2):
            raise InputError("n_confusable must be between 1 and vocab_size - 2")
        if self.n_common:
            c = self.vocab_size - 1
            space = sum(c**length for length in range(lo, hi + 1))
            if self.n_common > space // 2:
                raise InputError(
                    f"{self.n_common} entities requested but only {space} distinct phrases exist"
                )
            if self.n_rare_tokens:
                rare_space = sum(self.n_rare_tokens**length for length in range(lo, hi + 1))
                if self.n_rare > rare_space // 2:
                    raise InputError(
                        f"{self.n_rare} rare entities requested but only {rare_space} rare phrases exist"
                    )


def _content_tokens(n: int) -> list[str]:
    pool = list(string.ascii_lowercase + string.digits)
    if n <= len(pool):
        return pool[:n]
    return pool + [f"t{i}" for i in range(n - len(pool))]


def _build_model(
    cfg: CorpusGenConfig, rng: np.random.Generator
) -> tuple[NoisyChannelLM, np.ndarray, np.ndarray, list[np.ndarray]]:
    n_content = cfg.vocab_size - 1
    vocab = Vocab(tuple(_content_tokens(n_content)) + (EOS_TOKEN,), eos_id=n_content)
    V = cfg.vocab_size
    conc = np.full(n_content, cfg.prior_concentration)
    source_start = rng.dirichlet(conc)
    source_trans = rng.dirichlet(conc, size=n_content)
    if cfg.n_rare_tokens:
        # rare entities are spelled with tokens the source seldom produces
        rare_tokens = np.arange(n_content - cfg.n_rare_tokens, n_content)
        for row in (source_start, *source_trans):
            row[rare_tokens] *= cfg.rare_token_weight
            row /= row.sum()

    def smooth(row):
        out = np.zeros(V)
        out[:n_content] = (1 - cfg.prior_smoothing) * row + cfg.prior_smoothing / n_content
        return out

    start = smooth(source_start)
    trans = np.zeros((V, V))
    for u in range(n_content):
        trans[u] = smooth(source_trans[u])
    trans[vocab.eos_id] = smooth(np.full(n_content, 1.0 / n_content))

    k = min(cfg.n_confusable, n_content - 1)
    confusable = []
    emission = np.zeros((V, V))
    for v in range(n_content):
        others = np.array([u for u in range(n_content) if u != v])
        conf = np.sort(rng.choice(others, size=k, replace=False)) if k else np.array([], dtype=int)
        confusable.append(conf)
        emission[v, v] = 1.0 - cfg.p_sub
        if len(conf):
            emission[v, conf] += cfg.p_sub / len(conf)
        else:
            emission[v, v] = 1.0
    emission[vocab.eos_id, vocab.eos_id] = 1.0
    model = NoisyChannelLM(vocab, emission, start, trans, beta=cfg.beta)
    return model, source_start, source_trans, confusable


def _sample_chain(rng, first_probs, trans, n: int, prev: int | None = None) -> list[int]:
    out = []
    for _ in range(n):
        p = first_probs if prev is None else trans[prev]
        prev = int(rng.choice(len(p), p=p))
        out.append(prev)
    return out


def gen_synthetic_corpus(cfg: CorpusGenConfig) -> tuple[list[EvalRecord], EntityLists, NoisyChannelLM]:
    """Generate ``(records, entity lists, model)`` deterministically from ``cfg.seed``.

    References are bigram-source samples; with probability ``injection_rate``
    an utterance carries one entity from the common inventory. Observations
    substitute each reference token with probability ``p_sub``, uniformly
    among that token's confusable set, i.e. exactly the model's channel.
    """
    rng = np.random.default_rng(cfg.seed)
    model, src_start, src_trans, confusable = _build_model(cfg, rng)
    n_content = cfg.vocab_size - 1
    lo, hi = cfg.entity_len

    seen: set[tuple[int, ...]] = set()
    attempts = 0

    def fresh(sampler):
        nonlocal attempts
        while True:
            attempts += 1
            if attempts > 10_000 + 100 * cfg.n_common:
                raise InputError("could not build enough distinct entities; enlarge vocab or entity length")
            phrase = tuple(sampler(int(rng.integers(lo, hi + 1))))
            if phrase not in seen:
                seen.add(phrase)
                return phrase

    rare_lo = n_content - cfg.n_rare_tokens if cfg.n_rare_tokens else 0
    rare = [fresh(lambda n: rng.integers(rare_lo, n_content, size=n).tolist()) for _ in range(cfg.n_rare)]
    likely = [
        fresh(lambda n: _sample_chain(rng, src_start, src_trans, n))
        for _ in range(cfg.n_common - cfg.n_rare)
    ]
    common = rare + likely
    rare_set = set(rare)

    def near_miss(ent):
        # one token swapped for something the channel confuses it with
        j = int(rng.integers(len(ent)))
        conf = confusable[ent[j]]
        out = list(ent)
        out[j] = int(conf[int(rng.integers(len(conf)))])
        return tuple(out)

    records = []
    width = len(str(max(cfg.n_utterances - 1, 0)))
    for i in range(cfg.n_utterances):
        L = cfg.utterance_len
        gt: list[tuple[int, ...]] = []
        draw = rng.random()
        inject = None
        if common and draw < cfg.injection_rate:
            inject = common[int(rng.integers(len(common)))]
            gt.append(inject)
        elif rare and draw < cfg.injection_rate + cfg.near_miss_rate:
            inject = near_miss(rare[int(rng.integers(len(rare)))])
        if inject is not None:
            pos = int(rng.integers(0, L - len(inject) + 1))
            before = _sample_chain(rng, src_start, src_trans, pos)
            after = _sample_chain(rng, src_start, src_trans, L - pos - len(inject), prev=inject[-1])
            ref = before + list(inject) + after
        else:
            ref = _sample_chain(rng, src_start, src_trans, L)
        if cfg.n_distractors and common:
            pool = [e for e in common if e not in gt]
            take = min(cfg.n_distractors, len(pool))
            for j in rng.choice(len(pool), size=take, replace=False):
                gt.append(pool[int(j)])

        obs = []
        for tok in ref:
            conf = confusable[tok]
            if cfg.p_sub > 0 and len(conf) and rng.random() < cfg.p_sub:
                obs.append(int(conf[int(rng.integers(len(conf)))]))
            else:
                obs.append(tok)

        tags = tuple(
            frozenset({"common", "rare", "sensitive"}) if e in rare_set else frozenset({"common"}) for e in gt
        )
        records.append(
            EvalRecord(
                id=f"utt{i:0{width}d}",
                observation=tuple(obs),
                reference=tuple(ref),
                context_entities=tuple(gt),
                tags=tags,
            )
        )
    lists = EntityLists(common=tuple(common), rare=tuple(rare), sensitive=tuple(rare))
    return records, lists, model
