import pytest
from sklearn.base import clone
from sklearn.exceptions import NotFittedError
from sklearn.model_selection import ParameterGrid

from ctxfuse import ContextSpec, JointDecoder, greedy_decode, joint_greedy_decode
from ctxfuse.exceptions import DecodeError, InputError, UnsupportedModeError

from conftest import make_abv_model


def test_params_round_trip(abv_model):
    est = JointDecoder(model=abv_model, alpha=0.7, mode="beam", beam_width=3)
    params = est.get_params()
    assert params["alpha"] == 0.7 and params["beam_width"] == 3
    twin = clone(est)
    assert twin.get_params()["alpha"] == 0.7 and twin.model.vocab == abv_model.vocab
    est.set_params(alpha=0.3)
    assert est.alpha == 0.3


def test_parameter_grid(abv):
    # beta=8 moves the choice from a to b once alpha > 1.8
    model = make_abv_model(abv, beta=8.0)
    outs = [
        JointDecoder(model=model, context=[(1,)], **p).fit().predict([(0,)])[0]
        for p in ParameterGrid({"alpha": [0.0, 1.5, 2.0]})
    ]
    assert outs == [(0,), (0,), (1,)]


def test_predict_matches_functions(default_corpus):
    records, lists, model = default_corpus
    ctx = ContextSpec(entities=lists.rare)
    est = JointDecoder(model=model, alpha=0.7, context=ctx).fit()
    X = [r.observation for r in records[:20]]
    expected = [joint_greedy_decode(model, x, ctx, 0.7, len(x) + 1).content for x in X]
    assert est.predict(X) == expected
    base = JointDecoder(model=model).fit()
    assert base.predict(X) == [tuple(greedy_decode(model, x, None, len(x) + 1)[:-1]) for x in X]


def test_per_sample_contexts(abv):
    est = JointDecoder(model=make_abv_model(abv, beta=8.0), alpha=10.0).fit()
    assert est.predict([(0,), (0,)], contexts=[None, [(1,)]]) == [(0,), (1,)]
    with pytest.raises(InputError):
        est.predict([(0,)], contexts=[None, None])


def test_score(abv_model):
    est = JointDecoder(model=abv_model).fit()
    assert est.score([(0,), (1,)], [(0,), (1,)]) == 1.0
    assert est.score([(0,)], [(1,)]) == 0.0


def test_not_fitted(abv_model):
    with pytest.raises(NotFittedError):
        JointDecoder(model=abv_model).predict([(0,)])


@pytest.mark.parametrize(
    "kw, exc",
    [
        (dict(model=object()), InputError),
        (dict(alpha=float("inf")), InputError),
        (dict(mode="sample"), InputError),
        (dict(mode="beam", alpha=-0.2), UnsupportedModeError),
        (dict(beam_width=0, mode="beam"), InputError),
        (dict(max_len=0), InputError),
        (dict(context=[(2,)]), InputError),
    ],
)
def test_fit_errors(abv_model, kw, exc):
    kw.setdefault("model", abv_model)
    with pytest.raises(exc):
        JointDecoder(**kw).fit()


def test_fit_validates_X(abv_model):
    with pytest.raises(InputError):
        JointDecoder(model=abv_model).fit([(0,), (2,)])


class _Refuse:
    """Fails on two-token observations."""

    def __init__(self, model):
        self.model, self.vocab = model, model.vocab

    def next_dist(self, prefix, obs, ctx=None):
        if len(obs) == 2:
            raise RuntimeError("nope")
        return self.model.next_dist(prefix, obs, ctx)


def test_decode_error_names_record(abv_model):
    est = JointDecoder(model=_Refuse(abv_model)).fit()
    with pytest.raises(DecodeError) as info:
        est.predict([(0,), (0, 1)])
    assert info.value.record_id == "1"
    assert info.value.step == 0
