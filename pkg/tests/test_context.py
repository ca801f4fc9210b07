import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from ctxfuse import ContextSpec, PhraseTrie, parse_prompt_entities, render_prompt
from ctxfuse.context import ASR_TEMPLATE, SPEECH_SLOT
from ctxfuse.exceptions import InputError

TOKENS = ("X", "Y", "z", "</s>")


def brute_continuations(prefix, phrases):
    """Tokens v such that some suffix of prefix (possibly empty) + v is a phrase prefix."""
    out = set()
    for e in phrases:
        for k in range(0, min(len(prefix), len(e) - 1) + 1):
            if tuple(prefix[len(prefix) - k:]) == tuple(e[:k]):
                out.add(e[k])
    return out


class TestPhraseTrie:
    def test_initial_tokens_always_live(self):
        trie = PhraseTrie([(0, 1), (2, 0, 1)])
        assert trie.continuations(()) == {0, 2}
        assert {0, 2} <= trie.continuations((1, 1, 1))

    def test_overlapping_restart(self):
        trie = PhraseTrie([(0, 0, 1)])
        # "0 0" is live (wants 1) and its suffix "0" is live too (wants 0)
        assert trie.continuations((0, 0)) == {0, 1}

    def test_after_complete_match(self):
        trie = PhraseTrie([(0, 1), (1, 2)])
        assert trie.continuations((0, 1)) == {0, 1, 2}

    @settings(max_examples=300, deadline=None)
    @given(
        st.lists(st.lists(st.integers(0, 2), min_size=1, max_size=4).map(tuple), min_size=1, max_size=4),
        st.lists(st.integers(0, 2), max_size=8),
    )
    def test_matches_brute_force(self, phrases, prefix):
        assert PhraseTrie(phrases).continuations(prefix) == brute_continuations(prefix, phrases)


class TestContextSpec:
    def test_empty_phrase_rejected(self):
        with pytest.raises(InputError):
            ContextSpec(entities=((0,), ()))

    def test_eos_phrase_rejected(self):
        with pytest.raises(InputError):
            ContextSpec(entities=((0, 3),)).validate(4, 3)

    def test_empty_is_falsy(self):
        assert not ContextSpec()
        assert ContextSpec(entities=((1,),))

    def test_hashable(self):
        assert ContextSpec(entities=[[0, 1]]) == ContextSpec(entities=((0, 1),))
        assert len({ContextSpec(entities=((0, 1),)), ContextSpec(entities=[[0, 1]])}) == 1


class TestPrompt:
    def test_empty_entities_plain_template(self):
        assert render_prompt(ContextSpec(), TOKENS) == ASR_TEMPLATE.replace("{speech}", SPEECH_SLOT)

    def test_contextual_template(self):
        text = render_prompt(ContextSpec(entities=((0,), (1,))), TOKENS)
        assert "下面的热词可能会提供帮助" in text
        assert "X, Y" in text
        assert text.endswith(SPEECH_SLOT)

    def test_missing_placeholder(self):
        with pytest.raises(InputError):
            render_prompt(ContextSpec(entities=((0,),), prompt_template="hotwords: {speech}"), TOKENS)
        with pytest.raises(InputError):
            render_prompt(ContextSpec(plain_template="transcribe"), TOKENS)

    @settings(max_examples=200, deadline=None)
    @given(st.lists(st.lists(st.integers(0, 2), min_size=1, max_size=4).map(tuple), min_size=1, max_size=5))
    def test_round_trip(self, phrases):
        ctx = ContextSpec.from_phrases(phrases)
        text = render_prompt(ctx, TOKENS)
        assert parse_prompt_entities(text, ctx.prompt_template, TOKENS) == [tuple(p) for p in phrases]
