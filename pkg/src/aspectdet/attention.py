"""Attention pooling over word vectors, with hand-derived backward passes.

Three pooling kinds:
  smooth -- alignment scores squashed to [-s, s] by s*tanh(.) before the
            softmax, which bounds max(alpha)/min(alpha) by exp(2s) and
            spreads attention over several words;
  plain  -- raw bilinear alignment scores (no squashing);
  mean   -- uniform weights 1/T (no trainable path).
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import NumericError

ATTENTION_KINDS = ("smooth", "plain", "mean")


def softmax(x: np.ndarray) -> np.ndarray:
    shifted = x - np.max(x)
    e = np.exp(shifted)
    return e / e.sum()


def softmax_vjp(probs: np.ndarray, grad_out: np.ndarray) -> np.ndarray:
    """Pull grad_out back through a softmax with output `probs`."""
    return probs * (grad_out - float(probs @ grad_out))


@dataclass
class PoolTrace:
    """Intermediates of one attention-pooled segment, kept for backward."""

    tokens: np.ndarray  # (T,) int token indices
    word_vecs: np.ndarray  # (T, M) embedding rows
    query: np.ndarray  # (M,) mean word vector
    lin: np.ndarray  # (T, M) W @ e_t + b rows
    raw_scores: np.ndarray  # (T,) bilinear alignment scores q . lin_t
    squashed: np.ndarray  # (T,) tanh(raw) when smooth, else raw
    alpha: np.ndarray  # (T,) attention weights
    pooled: np.ndarray  # (M,) sum_t alpha_t e_t


def attention_pool(
    embeddings: np.ndarray,
    tokens,
    weight: np.ndarray,
    bias: np.ndarray,
    smooth_factor: float,
    kind: str = "smooth",
) -> PoolTrace:
    """Pool a nonempty token sequence into one vector; returns the full trace."""
    idx = np.asarray(tokens, dtype=np.intp)
    if idx.size == 0:
        raise NumericError("cannot pool an empty segment")
    word_vecs = embeddings[idx]
    query = word_vecs.mean(axis=0)
    lin = word_vecs @ weight.T + bias
    raw = lin @ query
    if kind == "smooth":
        squashed = np.tanh(raw)
        alpha = softmax(smooth_factor * squashed)
    elif kind == "plain":
        squashed = raw
        alpha = softmax(raw)
    elif kind == "mean":
        squashed = raw
        alpha = np.full(idx.size, 1.0 / idx.size)
    else:
        raise ValueError(f"unknown attention kind {kind!r}")
    pooled = alpha @ word_vecs
    return PoolTrace(idx, word_vecs, query, lin, raw, squashed, alpha, pooled)


def attention_pool_backward(
    trace: PoolTrace,
    grad_pooled: np.ndarray,
    weight: np.ndarray,
    smooth_factor: float,
    kind: str,
    want_embedding_grad: bool = False,
):
    """Backpropagate d(loss)/d(pooled) through one pooled segment.

    Returns (d_weight, d_bias, d_word_vecs). d_word_vecs is None unless
    requested (the teacher freezes its embedding table; the student trains
    it). The query vector is the mean of the segment's word vectors, so its
    gradient is folded into d_word_vecs only when embeddings are trainable.
    """
    d_weight = np.zeros_like(weight)
    d_bias = np.zeros(weight.shape[0])
    d_alpha = trace.word_vecs @ grad_pooled

    if kind == "mean":
        d_scores = None
    else:
        d_sq = softmax_vjp(trace.alpha, smooth_factor * d_alpha if kind == "smooth" else d_alpha)
        if kind == "smooth":
            d_scores = (1.0 - trace.squashed**2) * d_sq
        else:
            d_scores = d_sq
        # raw_t = query . (W e_t + b)
        d_weight += np.outer(trace.query, d_scores @ trace.word_vecs)
        d_bias += d_scores.sum() * trace.query

    if not want_embedding_grad:
        return d_weight, d_bias, None

    t_count = trace.tokens.size
    d_vecs = np.outer(trace.alpha, grad_pooled)
    if d_scores is not None:
        # via e_t inside the linear map, holding query fixed
        d_vecs += np.outer(d_scores, weight.T @ trace.query)
        # via query = mean of word vectors, which enters every score
        d_query = trace.lin.T @ d_scores
        d_vecs += d_query / t_count
    return d_weight, d_bias, d_vecs
