"""scikit-learn style front end for joint decoding.

``JointDecoder`` is a stateless predictor in the sklearn sense: ``fit`` only
validates hyper-parameters against the model and records derived attributes,
``predict`` maps observations to decoded token sequences, and ``get_params`` /
``set_params`` come from :class:`sklearn.base.BaseEstimator`, so alpha sweeps
compose with ``clone``, ``ParameterGrid`` and friends.
"""

from __future__ import annotations

from typing import Iterable, Sequence

from sklearn.base import BaseEstimator
from sklearn.utils.validation import check_is_fitted

from .context import ContextSpec
from .decoding import DecodeResult, joint_beam_decode, joint_greedy_decode
from .exceptions import DecodeError, InputError, UnsupportedModeError
from .metrics import cer
from .models import ConditionalLM
from .validation import check_alpha, check_positive_int, check_token_seq

MODES = ("greedy", "beam")


def _as_context(context) -> ContextSpec:
    if context is None:
        return ContextSpec()
    if isinstance(context, ContextSpec):
        return context
    return ContextSpec.from_phrases(context)


class JointDecoder(BaseEstimator):
    """Decode observations with a context-fused pair of model streams.

    Parameters
    ----------
    model : ConditionalLM
        Queried once with and once without the context at every step.
    alpha : float, default=0.0
        Context weight. 0 disables the context, negative values suppress it.
    context : ContextSpec or sequence of phrases, optional
        Default context used when ``predict`` gets no per-sample contexts.
    mode : {"greedy", "beam"}, default="greedy"
        Beam mode needs ``alpha >= 0``.
    beam_width : int, default=4
    max_len : int, optional
        Step limit; defaults to ``len(observation) + 1``.
    """

    def __init__(self, model=None, alpha=0.0, context=None, mode="greedy", beam_width=4, max_len=None):
        self.model = model
        self.alpha = alpha
        self.context = context
        self.mode = mode
        self.beam_width = beam_width
        self.max_len = max_len

    def fit(self, X=None, y=None):
        if not isinstance(self.model, ConditionalLM):
            raise InputError("model must provide a vocab and next_dist(prefix, obs, ctx)")
        alpha = check_alpha(self.alpha)
        if self.mode not in MODES:
            raise InputError(f"mode must be one of {MODES}, got {self.mode!r}")
        if self.mode == "beam":
            if alpha < 0:
                raise UnsupportedModeError("beam mode requires alpha >= 0")
            check_positive_int(self.beam_width, "beam_width")
        if self.max_len is not None:
            check_positive_int(self.max_len, "max_len")
        vocab = self.model.vocab
        ctx = _as_context(self.context)
        ctx.validate(len(vocab), vocab.eos_id)
        if X is not None:
            for i, obs in enumerate(X):
                check_token_seq(obs, len(vocab), eos_id=vocab.eos_id, name=f"X[{i}]", allow_empty=False)
        self.alpha_ = alpha
        self.context_ = ctx
        self.vocab_ = vocab
        return self

    def _max_len(self, obs: Sequence[int]) -> int:
        return self.max_len if self.max_len is not None else len(obs) + 1

    def decode(self, obs: Sequence[int], context=None) -> DecodeResult:
        """Greedy joint decode of one observation, with per-step diagnostics."""
        check_is_fitted(self)
        ctx = self.context_ if context is None else _as_context(context)
        return joint_greedy_decode(self.model, obs, ctx, self.alpha_, self._max_len(obs))

    def decode_one(self, obs: Sequence[int], context=None) -> tuple[int, ...]:
        """Content tokens (EOS stripped) of the best decode for ``obs``."""
        check_is_fitted(self)
        ctx = self.context_ if context is None else _as_context(context)
        if self.mode == "greedy":
            return self.decode(obs, ctx).content
        hyps = joint_beam_decode(self.model, obs, ctx, self.alpha_, self.beam_width, self._max_len(obs))
        eos = self.vocab_.eos_id
        return tuple(t for t in hyps[0].tokens if t != eos)

    def predict(self, X: Iterable[Sequence[int]], contexts: Sequence | None = None) -> list[tuple[int, ...]]:
        X = list(X)
        if contexts is not None and len(contexts) != len(X):
            raise InputError("contexts must align with X")
        out = []
        for i, obs in enumerate(X):
            ctx = None if contexts is None else _as_context(contexts[i])
            try:
                out.append(self.decode_one(obs, ctx))
            except DecodeError as exc:
                raise DecodeError(exc.message, step=exc.step, record_id=str(i)) from exc
        return out

    def score(self, X, y, contexts=None) -> float:
        """``1 - CER`` of the predictions against references ``y``."""
        hyps = self.predict(X, contexts)
        return 1.0 - cer(zip(y, hyps)).cer
