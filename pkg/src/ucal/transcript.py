"""Forecast transcripts: paired predictions and realized outcomes.

Binary transcripts store each prediction as the scalar probability of
outcome 1 and outcomes as 0/1. Multiclass transcripts store predictions as
rows of the simplex and outcomes as 0-based class indices.
"""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

SIMPLEX_TOL = 1e-12


class TranscriptError(ValueError):
    pass


@dataclass(frozen=True, eq=False)
class Transcript:
    predictions: np.ndarray
    outcomes: np.ndarray
    K: int = 2
    meta: dict = field(default_factory=dict)

    def __post_init__(self):
        K = int(self.K)
        if K < 2:
            raise TranscriptError(f"outcome arity must be >= 2, got {K}")
        x = np.asarray(self.outcomes)
        if x.ndim != 1:
            raise TranscriptError("outcomes must be one-dimensional")
        if x.size and not np.all(np.equal(np.mod(x, 1), 0)):
            raise TranscriptError("outcomes must be integers")
        x = x.astype(np.int64)
        p = np.asarray(self.predictions, dtype=float)
        if K == 2 and p.ndim == 2:
            if p.shape[1] != 2:
                raise TranscriptError(f"binary predictions must have 2 columns, got {p.shape[1]}")
            p = p[:, 1].copy()
        if K == 2:
            if p.ndim != 1:
                raise TranscriptError("binary predictions must be scalars")
            if np.any((p < 0) | (p > 1)) or np.any(np.isnan(p)):
                raise TranscriptError("binary predictions must lie in [0, 1]")
        else:
            if p.ndim != 2 or p.shape[1] != K:
                raise TranscriptError(f"multiclass predictions must have shape (T, {K})")
            if np.any(p < 0) or np.any(np.abs(p.sum(axis=1) - 1.0) > SIMPLEX_TOL * K):
                raise TranscriptError("each prediction must be a point of the simplex")
        if p.shape[0] != x.shape[0]:
            raise TranscriptError(
                f"length mismatch: {p.shape[0]} predictions vs {x.shape[0]} outcomes"
            )
        if np.any((x < 0) | (x >= K)):
            raise TranscriptError(f"outcomes must lie in 0..{K - 1}")
        p.setflags(write=False)
        x.setflags(write=False)
        object.__setattr__(self, "K", K)
        object.__setattr__(self, "predictions", p)
        object.__setattr__(self, "outcomes", x)

    @property
    def T(self) -> int:
        return int(self.outcomes.shape[0])

    @property
    def is_binary(self) -> bool:
        return self.K == 2

    @property
    def base_rate(self):
        """Empirical outcome frequency: a scalar for binary transcripts, a simplex point otherwise."""
        if self.T == 0:
            raise TranscriptError("base rate of an empty transcript is undefined")
        counts = np.bincount(self.outcomes, minlength=self.K)
        if self.is_binary:
            return counts[1] / self.T
        return counts / self.T

    def simplex(self) -> np.ndarray:
        """Predictions as a (T, K) array of simplex points."""
        if self.is_binary:
            return np.column_stack([1.0 - self.predictions, self.predictions])
        return self.predictions

    def one_hot(self) -> np.ndarray:
        return np.eye(self.K)[self.outcomes]

    def binary_view(self, i: int) -> "Transcript":
        """One-vs-rest reduction for class ``i``: predict p_t[i], outcome 1(x_t == i)."""
        return Transcript(self.simplex()[:, i], (self.outcomes == i).astype(np.int64), K=2)

    def permuted(self, order) -> "Transcript":
        order = np.asarray(order)
        return Transcript(self.predictions[order], self.outcomes[order], K=self.K, meta=dict(self.meta))

    def __len__(self) -> int:
        return self.T

    def __eq__(self, other) -> bool:
        if not isinstance(other, Transcript):
            return NotImplemented
        return (
            self.K == other.K
            and np.array_equal(self.predictions, other.predictions)
            and np.array_equal(self.outcomes, other.outcomes)
        )

    __hash__ = None


def require_binary(t: Transcript) -> None:
    if not t.is_binary:
        raise TranscriptError(f"operation needs a binary transcript, got K={t.K}")
