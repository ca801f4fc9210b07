"""Context (entity / hotword list) representation, phrase matching and prompt rendering."""

from __future__ import annotations

from collections import deque
from dataclasses import dataclass, field
from functools import cached_property
from typing import Iterable, Sequence

from .exceptions import InputError

SPEECH_SLOT = "<|speech|>"
ASR_TEMPLATE = "请识别语音并转写为文字: {speech}"
CONTEXT_TEMPLATE = "请识别语音并转写为文字,下面的热词可能会提供帮助，{entities} : {speech}"
ENTITY_DELIMITER = ", "


class PhraseTrie:
    """Aho-Corasick automaton over token-id phrases.

    Only the part needed for biasing is kept: for every automaton state we
    precompute the set of tokens that would extend *some* live partial match,
    walking the failure chain so that restarted and overlapping matches count.
    The root's children (phrase-initial tokens) are always in that set.
    """

    def __init__(self, phrases: Iterable[Sequence[int]]):
        self._goto: list[dict[int, int]] = [{}]
        fail = [0]
        for phrase in phrases:
            state = 0
            for tok in phrase:
                nxt = self._goto[state].get(tok)
                if nxt is None:
                    nxt = len(self._goto)
                    self._goto[state][tok] = nxt
                    self._goto.append({})
                    fail.append(0)
                state = nxt

        # BFS order guarantees fail[s] is resolved before s's children.
        order = []
        queue = deque(self._goto[0].values())
        while queue:
            s = queue.popleft()
            order.append(s)
            for tok, child in self._goto[s].items():
                f = fail[s]
                while f and tok not in self._goto[f]:
                    f = fail[f]
                cand = self._goto[f].get(tok, 0)
                fail[child] = cand if cand != child else 0
                queue.append(child)
        self._fail = fail

        boost: list[frozenset[int]] = [frozenset()] * len(self._goto)
        boost[0] = frozenset(self._goto[0])
        for s in order:
            boost[s] = frozenset(self._goto[s]) | boost[fail[s]]
        self._boost = boost

    def step(self, state: int, tok: int) -> int:
        while state and tok not in self._goto[state]:
            state = self._fail[state]
        return self._goto[state].get(tok, 0)

    def state_after(self, prefix: Sequence[int]) -> int:
        state = 0
        for tok in prefix:
            state = self.step(state, tok)
        return state

    def continuations(self, prefix: Sequence[int]) -> frozenset[int]:
        """Tokens that extend (or start) a live match after ``prefix``."""
        return self._boost[self.state_after(prefix)]


@dataclass(frozen=True)
class ContextSpec:
    """Context ``c``: an ordered entity list plus the prompt template it renders into.

    An empty entity list is the degenerate, no-context case.
    """

    entities: tuple[tuple[int, ...], ...] = ()
    prompt_template: str = CONTEXT_TEMPLATE
    plain_template: str = field(default=ASR_TEMPLATE, compare=False)

    def __post_init__(self):
        ents = tuple(tuple(int(t) for t in e) for e in self.entities)
        for i, e in enumerate(ents):
            if not e:
                raise InputError(f"entity {i} is empty")
        object.__setattr__(self, "entities", ents)

    @classmethod
    def from_phrases(cls, phrases: Iterable[Sequence[int]], **kwargs) -> "ContextSpec":
        return cls(entities=tuple(tuple(p) for p in phrases), **kwargs)

    def __bool__(self) -> bool:
        return bool(self.entities)

    def __len__(self) -> int:
        return len(self.entities)

    @cached_property
    def trie(self) -> PhraseTrie:
        return PhraseTrie(self.entities)

    def validate(self, vocab_size: int, eos_id: int) -> None:
        for i, e in enumerate(self.entities):
            for t in e:
                if not 0 <= t < vocab_size:
                    raise InputError(f"entity {i} contains out-of-vocabulary id {t}")
                if t == eos_id:
                    raise InputError(f"entity {i} contains the EOS token")


def _check_template(template: str, needs_entities: bool) -> None:
    if "{speech}" not in template:
        raise InputError(f"template {template!r} lacks the {{speech}} placeholder")
    if needs_entities and "{entities}" not in template:
        raise InputError(f"template {template!r} lacks the {{entities}} placeholder")


def phrase_text(phrase: Sequence[int], tokens: Sequence[str]) -> str:
    return "".join(tokens[t] for t in phrase)


def render_prompt(ctx: ContextSpec, tokens: Sequence[str]) -> str:
    """Render the instruction prompt for ``ctx``.

    Phrases are spelled by concatenating token strings and joined with
    ``ENTITY_DELIMITER``. With no entities the plain ASR template is returned
    with only the speech slot filled.
    """
    if not ctx.entities:
        _check_template(ctx.plain_template, needs_entities=False)
        return ctx.plain_template.replace("{speech}", SPEECH_SLOT)
    _check_template(ctx.prompt_template, needs_entities=True)
    listing = ENTITY_DELIMITER.join(phrase_text(e, tokens) for e in ctx.entities)
    return ctx.prompt_template.replace("{speech}", SPEECH_SLOT).replace("{entities}", listing)


def _tokenize(text: str, tokens: Sequence[str]) -> tuple[int, ...]:
    # greedy longest-match against the vocabulary strings
    by_len = sorted(range(len(tokens)), key=lambda i: -len(tokens[i]))
    out = []
    pos = 0
    while pos < len(text):
        for i in by_len:
            tok = tokens[i]
            if tok and text.startswith(tok, pos):
                out.append(i)
                pos += len(tok)
                break
        else:
            raise InputError(f"cannot tokenize {text[pos:]!r} with the vocabulary")
    return tuple(out)


def parse_prompt_entities(text: str, ctx_template: str, tokens: Sequence[str]) -> list[tuple[int, ...]]:
    """Inverse of :func:`render_prompt` for the contextual template."""
    _check_template(ctx_template, needs_entities=True)
    filled = ctx_template.replace("{speech}", SPEECH_SLOT)
    head, _, tail = filled.partition("{entities}")
    if not (text.startswith(head) and text.endswith(tail)):
        return []
    listing = text[len(head): len(text) - len(tail)]
    if not listing:
        return []
    return [_tokenize(part, tokens) for part in listing.split(ENTITY_DELIMITER)]
