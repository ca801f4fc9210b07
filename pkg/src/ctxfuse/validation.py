"""Input validation helpers used by the estimator and the functional API."""

from __future__ import annotations

import math
from typing import Iterable, Sequence

import numpy as np

from .exceptions import InputError

PROB_ATOL = 1e-9


def check_token_seq(
    seq: Iterable[int],
    vocab_size: int,
    *,
    eos_id: int | None = None,
    name: str = "sequence",
    allow_empty: bool = True,
) -> tuple[int, ...]:
    """Return ``seq`` as a tuple of ints after range and EOS checks.

    When ``eos_id`` is given the sequence must not contain it.
    """
    try:
        out = tuple(int(t) for t in seq)
    except (TypeError, ValueError) as exc:
        raise InputError(f"{name} must be a sequence of integer token ids") from exc
    if not allow_empty and not out:
        raise InputError(f"{name} must be non-empty")
    for t in out:
        if not 0 <= t < vocab_size:
            raise InputError(f"{name} contains out-of-vocabulary id {t}")
        if eos_id is not None and t == eos_id:
            raise InputError(f"{name} must not contain the EOS token")
    return out


def check_prob_dist(probs, size: int | None = None, *, name: str = "distribution") -> np.ndarray:
    """Validate a probability vector and return it as a float64 array."""
    p = np.asarray(probs, dtype=np.float64)
    if p.ndim != 1:
        raise InputError(f"{name} must be one-dimensional, got shape {p.shape}")
    if size is not None and p.shape[0] != size:
        raise InputError(f"{name} has {p.shape[0]} entries, expected {size}")
    if not np.all(np.isfinite(p)):
        raise InputError(f"{name} has non-finite entries")
    if np.any(p < 0):
        raise InputError(f"{name} has negative entries")
    if abs(float(p.sum()) - 1.0) > PROB_ATOL:
        raise InputError(f"{name} sums to {float(p.sum())!r}, not 1")
    return p


def check_alpha(alpha) -> float:
    try:
        a = float(alpha)
    except (TypeError, ValueError) as exc:
        raise InputError(f"alpha must be a real number, got {alpha!r}") from exc
    if not math.isfinite(a):
        raise InputError(f"alpha must be finite, got {a!r}")
    return a


def check_positive_int(value, name: str) -> int:
    if isinstance(value, bool) or int(value) != value or int(value) < 1:
        raise InputError(f"{name} must be a positive integer, got {value!r}")
    return int(value)


def check_same_length(a: Sequence, b: Sequence, names: tuple[str, str]) -> None:
    if len(a) != len(b):
        raise InputError(f"{names[0]} and {names[1]} differ in length ({len(a)} vs {len(b)})")
