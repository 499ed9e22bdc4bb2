"""Forward-pass building blocks of the scoring model, at toy scale.

Scaled dot-product attention, multi-head attention, and the two
pre-training losses (masked-token cross-entropy and next-sentence
cross-entropy) as directly evaluable functions. No training, no
parameters to learn; matrices are plain 2-D numpy arrays.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np


def as_matrix(x, name: str = "matrix") -> np.ndarray:
    """Coerce to a finite 2-D float array, raising on anything else."""
    m = np.asarray(x, dtype=float)
    if m.ndim != 2:
        raise ValueError(f"{name} must be 2-D, got shape {m.shape}")
    if not np.all(np.isfinite(m)):
        raise ValueError(f"{name} contains non-finite entries")
    return m


def softmax(v) -> np.ndarray:
    """Numerically stable softmax of a vector (max-subtraction trick)."""
    a = np.asarray(v, dtype=float)
    if a.ndim != 1:
        raise ValueError("softmax expects a 1-D vector")
    if not np.all(np.isfinite(a)):
        raise ValueError("softmax input must be finite")
    shifted = a - a.max()
    e = np.exp(shifted)
    return e / e.sum()


def attention(q, k, v) -> np.ndarray:
    """Scaled dot-product attention: row-wise softmax(Q K^T / sqrt(d_k)) V.

    Q is (n_q, d_k), K is (n_kv, d_k), V is (n_kv, d_v); the result is
    (n_q, d_v) and every output row is a convex combination of V's rows.
    """
    q = as_matrix(q, "Q")
    k = as_matrix(k, "K")
    v = as_matrix(v, "V")
    if q.shape[1] != k.shape[1]:
        raise ValueError(f"Q and K must share key width: {q.shape[1]} != {k.shape[1]}")
    if k.shape[0] != v.shape[0]:
        raise ValueError(f"K and V must have the same row count: {k.shape[0]} != {v.shape[0]}")
    d_k = q.shape[1]
    scores = q @ k.T / math.sqrt(d_k)
    weights = np.apply_along_axis(softmax, 1, scores)
    return weights @ v


def multi_head(x, heads, w_o) -> np.ndarray:
    """Multi-head attention: Concat(head_1..head_h) W_O.

    ``heads`` is a sequence of (W_Q, W_K, W_V) projection triples; each head
    computes attention(X W_Q, X W_K, X W_V) on the shared input X.
    """
    x = as_matrix(x, "X")
    w_o = as_matrix(w_o, "W_O")
    if not heads:
        raise ValueError("at least one head is required")
    outputs = []
    for i, (w_q, w_k, w_v) in enumerate(heads):
        w_q = as_matrix(w_q, f"W_Q[{i}]")
        w_k = as_matrix(w_k, f"W_K[{i}]")
        w_v = as_matrix(w_v, f"W_V[{i}]")
        for name, w in (("W_Q", w_q), ("W_K", w_k), ("W_V", w_v)):
            if w.shape[0] != x.shape[1]:
                raise ValueError(
                    f"{name}[{i}] has {w.shape[0]} rows, input width is {x.shape[1]}"
                )
        if w_q.shape[1] != w_k.shape[1]:
            raise ValueError(f"head {i}: W_Q and W_K must project to the same width")
        outputs.append(attention(x @ w_q, x @ w_k, x @ w_v))
    concat = np.hstack(outputs)
    if concat.shape[1] != w_o.shape[0]:
        raise ValueError(
            f"concatenated head width {concat.shape[1]} does not match W_O rows {w_o.shape[0]}"
        )
    return concat @ w_o


@dataclass
class MaskedBatch:
    """Predicted distributions for one masked-prediction batch.

    ``predicted_probs`` holds one probability vector over the vocabulary per
    masked position. ``nsp_prob_isnext`` / ``nsp_label`` carry the
    sentence-pair prediction and its ground truth.
    """

    predicted_probs: np.ndarray
    nsp_prob_isnext: float = 0.5
    nsp_label: int = 1
    _SUM_TOL: float = field(default=1e-9, repr=False)

    def __post_init__(self):
        probs = np.asarray(self.predicted_probs, dtype=float)
        if probs.ndim != 2:
            raise ValueError("predicted_probs must be (n_masks, vocab) shaped")
        if np.any(probs < 0):
            raise ValueError("probabilities must be non-negative")
        sums = probs.sum(axis=1)
        if np.any(np.abs(sums - 1.0) > self._SUM_TOL):
            raise ValueError("each probability vector must sum to 1")
        if not 0.0 <= self.nsp_prob_isnext <= 1.0:
            raise ValueError("nsp_prob_isnext must lie in [0, 1]")
        if self.nsp_label not in (0, 1):
            raise ValueError("nsp_label must be 0 or 1")
        self.predicted_probs = probs


def mlm_loss(batch: MaskedBatch, true_tokens) -> float:
    """Cross-entropy over masked positions: -sum_i log p_i(true token i)."""
    tokens = np.asarray(true_tokens, dtype=int)
    probs = batch.predicted_probs
    if tokens.ndim != 1 or tokens.shape[0] != probs.shape[0]:
        raise ValueError("one true token index is required per masked position")
    if np.any(tokens < 0) or np.any(tokens >= probs.shape[1]):
        raise ValueError("true token index outside vocabulary")
    picked = probs[np.arange(len(tokens)), tokens]
    if np.any(picked == 0.0):
        raise ValueError("zero probability assigned to a true token (infinite loss)")
    return float(-np.sum(np.log(picked)))


def nsp_loss(p_isnext: float, y: int) -> float:
    """Binary cross-entropy for the is-next-sentence prediction."""
    if y not in (0, 1):
        raise ValueError("label must be 0 or 1")
    if not 0.0 < p_isnext < 1.0:
        raise ValueError("probability must lie strictly inside (0, 1)")
    return float(-(y * math.log(p_isnext) + (1 - y) * math.log(1.0 - p_isnext)))


def total_loss(l_mlm: float, l_nsp: float, w_mlm: float = 1.0, w_nsp: float = 1.0) -> float:
    """Weighted sum of the two losses; default weights give the plain sum."""
    if w_mlm < 0 or w_nsp < 0:
        raise ValueError("loss weights must be non-negative")
    if l_mlm < 0 or l_nsp < 0:
        raise ValueError("losses must be non-negative")
    return w_mlm * l_mlm + w_nsp * l_nsp
