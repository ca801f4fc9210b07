"""Per-step fusion of the context-conditioned and context-free next-token distributions."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .exceptions import InputError, UndefinedFusionError
from .validation import check_alpha

__all__ = ["FusionCoefficient", "fuse_normalized", "fuse_score", "fusion_weights"]


@dataclass(frozen=True)
class FusionCoefficient:
    """Signed context weight. ``form`` is ``"normalized"`` unless alpha == -1."""

    alpha: float

    def __post_init__(self):
        object.__setattr__(self, "alpha", check_alpha(self.alpha))

    @property
    def form(self) -> str:
        return "unnormalized" if self.alpha == -1.0 else "normalized"

    @property
    def weights(self) -> tuple[float, float]:
        return fusion_weights(self.alpha)


def fusion_weights(alpha: float) -> tuple[float, float]:
    """``(alpha / (1 + alpha), 1 / (1 + alpha))``: weights of (ctx, no-ctx)."""
    alpha = check_alpha(alpha)
    if alpha == -1.0:
        raise UndefinedFusionError(
            "normalized fusion weights are undefined at alpha = -1; use fuse_score instead"
        )
    denom = 1.0 + alpha
    return alpha / denom, 1.0 / denom


def _pair(p_ctx, p_noctx) -> tuple[np.ndarray, np.ndarray]:
    a = np.asarray(p_ctx, dtype=np.float64)
    b = np.asarray(p_noctx, dtype=np.float64)
    if a.shape != b.shape or a.ndim != 1:
        raise InputError(f"distribution shapes differ: {a.shape} vs {b.shape}")
    return a, b


def fuse_normalized(p_ctx, p_noctx, alpha: float) -> np.ndarray:
    """Blend the two streams with weights that sum to one.

    ``out = alpha/(1+alpha) * p_ctx + 1/(1+alpha) * p_noctx``. For ``alpha >= 0``
    this is a convex combination; for ``-1 < alpha < 0`` entries can leave
    ``[0, 1]`` but still sum to one.
    """
    a, b = _pair(p_ctx, p_noctx)
    w_ctx, w_noctx = fusion_weights(alpha)
    return w_ctx * a + w_noctx * b


def fuse_score(p_ctx, p_noctx, alpha: float) -> np.ndarray:
    """Unnormalized fused score ``p_noctx + alpha * p_ctx``.

    A positive rescaling of :func:`fuse_normalized` for ``alpha > -1``, so it
    ranks tokens identically there, and it stays defined for every alpha.
    """
    a, b = _pair(p_ctx, p_noctx)
    return b + check_alpha(alpha) * a
