import itertools

import numpy as np
import pytest

from ctxfuse import ContextSpec, CorpusGenConfig, NoisyChannelLM, TableLM, Vocab, gen_synthetic_corpus

ACCEPTANCE_LINES: list[str] = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)


@pytest.fixture
def report_criterion():
    def record(number: int, name: str, passed: bool, detail: str = ""):
        status = "PASS" if passed else "FAIL"
        ACCEPTANCE_LINES.append(f"[{status}] criterion {number}: {name}" + (f" ({detail})" if detail else ""))

    return record


@pytest.fixture
def abv():
    """Two content tokens plus EOS."""
    return Vocab(("a", "b", "</s>"), eos_id=2)


def make_abv_model(vocab, beta=4.0, e_aa=0.8, e_ab=0.2):
    # emission[v, o]: true a is observed as a w.p. e_aa; true b is observed as a w.p. e_ab
    emission = np.array(
        [
            [e_aa, 1 - e_aa, 0.0],
            [e_ab, 1 - e_ab, 0.0],
            [0.0, 0.0, 1.0],
        ]
    )
    start = np.array([0.5, 0.5, 0.0])
    trans = np.array([[0.5, 0.5, 0.0]] * 3)
    return NoisyChannelLM(vocab, emission, start, trans, beta=beta)


@pytest.fixture
def abv_model(abv):
    return make_abv_model(abv)


def random_table_model(rng: np.random.Generator, n_vocab=4, max_len=4, obs=(0, 1), ctx=None, zero_prob=0.15):
    """Table model with a random row for every reachable prefix, both streams."""
    vocab = Vocab(tuple(f"t{i}" for i in range(n_vocab - 1)) + ("</s>",), eos_id=n_vocab - 1)
    ctx = ctx if ctx is not None else ContextSpec(entities=((0, 1),))
    content = range(n_vocab - 1)
    table = {}
    for length in range(max_len):
        for prefix in itertools.product(content, repeat=length):
            for key in (None, ctx.entities):
                row = rng.dirichlet(np.full(n_vocab, 0.7))
                row[rng.random(n_vocab) < zero_prob] = 0.0
                if row.sum() == 0:
                    row[vocab.eos_id] = 1.0
                table[(prefix, tuple(obs), key)] = row / row.sum()
    return TableLM(vocab, table), tuple(obs), ctx


@pytest.fixture(scope="session")
def default_corpus():
    return gen_synthetic_corpus(CorpusGenConfig())
