"""Scaled dot-product attention and the cross-frame K/V substitution.

Single-head only. Cross-frame attention keeps each frame's queries but
sources keys and values from the first frame of the batch, which is the
whole mechanism: style statistics propagate from frame 1 to every frame.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np


@dataclass
class AttentionBatch:
    """Per-frame (tokens x d) query/key/value matrices in frame order."""

    qs: list[np.ndarray]
    ks: list[np.ndarray]
    vs: list[np.ndarray]
    frame_indices: list[int] = field(default_factory=list)

    def __post_init__(self):
        if not (len(self.qs) == len(self.ks) == len(self.vs)):
            raise ValueError("q/k/v lists must have equal length")
        if not self.frame_indices:
            self.frame_indices = list(range(len(self.qs)))


def softmax_rows(logits: np.ndarray) -> np.ndarray:
    """Row-wise softmax with max subtraction for stability."""
    shifted = logits - logits.max(axis=1, keepdims=True)
    e = np.exp(shifted)
    return e / e.sum(axis=1, keepdims=True)


def attention(q: np.ndarray, k: np.ndarray, v: np.ndarray) -> np.ndarray:
    """softmax(q k^T / sqrt(d)) v for q:(n,d), k:(m,d), v:(m,d)."""
    q = np.asarray(q, dtype=np.float64)
    k = np.asarray(k, dtype=np.float64)
    v = np.asarray(v, dtype=np.float64)
    if q.ndim != 2 or k.ndim != 2 or v.ndim != 2:
        raise ValueError("q, k, v must be 2-D matrices")
    if q.shape[1] != k.shape[1]:
        raise ValueError(f"q/k width mismatch: {q.shape[1]} vs {k.shape[1]}")
    if k.shape[0] != v.shape[0]:
        raise ValueError(f"k/v token count mismatch: {k.shape[0]} vs {v.shape[0]}")
    d = q.shape[1]
    weights = softmax_rows(q @ k.T / np.sqrt(d))
    return weights @ v


def cross_frame_attention(batch: AttentionBatch) -> list[np.ndarray]:
    """attention(q_i, k_1, v_1) for every frame i; frame 1 is batch[0]."""
    if not batch.qs:
        raise ValueError("empty attention batch")
    k1, v1 = batch.ks[0], batch.vs[0]
    return [attention(q, k1, v1) for q in batch.qs]
