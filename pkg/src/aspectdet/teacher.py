"""Contrastive aspect model (the teacher).

Each segment gets two pooled representations: one over its own word vectors
(smooth attention) and one over the global aspect table (attention driven by
the first representation). An in-batch contrastive loss pulls the pair for
the same segment together and pushes apart pairs from different segments;
a penalty on the aspect table keeps its normalized rows near-orthogonal.
All gradients are derived by hand; the word embedding table stays frozen.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .attention import PoolTrace, attention_pool, attention_pool_backward, softmax, softmax_vjp
from .checkpoint import load_checkpoint, save_checkpoint
from .errors import ConfigError, NumericError
from .optim import AdamState, clip_by_global_norm, warmup_lr

TRAINABLE = ("aspects", "attn_weight", "attn_bias", "aspect_weight", "aspect_bias")


@dataclass
class TeacherModel:
    """All parameters. `embeddings` is frozen; the rest train."""

    embeddings: np.ndarray  # (V, M) frozen word vectors
    aspects: np.ndarray  # (N, M) aspect table
    attn_weight: np.ndarray  # (M, M) word-attention map
    attn_bias: np.ndarray  # (M,)
    aspect_weight: np.ndarray  # (N, M) rows score the pooled word vector per aspect
    aspect_bias: np.ndarray  # (N,)
    smooth_factor: float = 0.5
    temperature: float = 1.0
    attention: str = "smooth"
    include_positive: bool = False  # True -> standard InfoNCE denominator

    @property
    def num_aspects(self) -> int:
        return self.aspects.shape[0]

    @property
    def dim(self) -> int:
        return self.embeddings.shape[1]

    def trainable(self) -> dict[str, np.ndarray]:
        return {name: getattr(self, name) for name in TRAINABLE}


def init_teacher(
    embeddings: np.ndarray,
    aspect_init: np.ndarray,
    smooth_factor: float = 0.5,
    temperature: float = 1.0,
    attention: str = "smooth",
    include_positive: bool = False,
    seed: int = 0,
) -> TeacherModel:
    """Build a model around frozen embeddings and k-means aspect centroids.

    The aspect-attention rows start as a copy of the centroids so the initial
    aspect distribution already reflects word/aspect affinity.
    """
    dim = embeddings.shape[1]
    rng = np.random.default_rng(seed)
    return TeacherModel(
        embeddings=np.asarray(embeddings, dtype=np.float64),
        aspects=np.asarray(aspect_init, dtype=np.float64).copy(),
        attn_weight=rng.normal(0.0, 1.0 / np.sqrt(dim), size=(dim, dim)),
        attn_bias=np.zeros(dim),
        aspect_weight=np.asarray(aspect_init, dtype=np.float64).copy(),
        aspect_bias=np.zeros(aspect_init.shape[0]),
        smooth_factor=smooth_factor,
        temperature=temperature,
        attention=attention,
        include_positive=include_positive,
    )


@dataclass
class SegmentTrace:
    """Forward intermediates for one segment (both representations)."""

    pool: PoolTrace
    aspect_scores: np.ndarray  # (N,)
    beta: np.ndarray  # (N,) distribution over aspects
    aspect_vec: np.ndarray  # (M,) beta-weighted sum of aspect rows

    @property
    def alpha(self) -> np.ndarray:
        return self.pool.alpha

    @property
    def word_vec(self) -> np.ndarray:
        return self.pool.pooled


def forward_segment(model: TeacherModel, tokens) -> SegmentTrace:
    pool = attention_pool(
        model.embeddings, tokens, model.attn_weight, model.attn_bias,
        model.smooth_factor, model.attention,
    )
    scores = model.aspect_weight @ pool.pooled + model.aspect_bias
    beta = softmax(scores)
    aspect_vec = beta @ model.aspects
    return SegmentTrace(pool, scores, beta, aspect_vec)


def cosine_sim(a: np.ndarray, b: np.ndarray) -> float:
    """Cosine similarity in [-1, 1]; zero-norm inputs signal a degenerate upstream."""
    na, nb = float(np.linalg.norm(a)), float(np.linalg.norm(b))
    if na == 0.0 or nb == 0.0:
        raise NumericError("cosine similarity of a zero-norm vector")
    return float(a @ b) / (na * nb)


def similarity_matrix(word_vecs: np.ndarray, aspect_vecs: np.ndarray) -> np.ndarray:
    """All pairwise cosines; entry [j, i] compares segment j's word-side vector
    with segment i's aspect-side vector."""
    wn = np.linalg.norm(word_vecs, axis=1)
    an = np.linalg.norm(aspect_vecs, axis=1)
    if np.any(wn == 0.0) or np.any(an == 0.0):
        raise NumericError("zero-norm segment representation in batch")
    return (word_vecs / wn[:, None]) @ (aspect_vecs / an[:, None]).T


def contrastive_loss(
    sim: np.ndarray, temperature: float, include_positive: bool = False
) -> tuple[float, np.ndarray]:
    """In-batch contrastive loss from the pairwise cosine matrix.

    For anchor i the positive is sim[i, i] and the denominator sums the other
    segments' word-side vectors against aspect vector i. By default the
    positive pair is excluded from the denominator (so per-sample losses may
    be negative); include_positive switches to the standard form that keeps
    it. Returns (batch mean, per-sample losses).
    """
    x = sim.shape[0]
    if x < 2:
        raise ConfigError("contrastive loss needs a batch of at least 2 segments")
    scaled = sim / temperature
    shift = scaled.max(axis=0)
    exps = np.exp(scaled - shift)
    if not include_positive:
        exps = exps * (1.0 - np.eye(x))
    log_denom = np.log(exps.sum(axis=0)) + shift
    per_sample = -np.diag(scaled) + log_denom
    return float(per_sample.mean()), per_sample


def contrastive_loss_grad(
    sim: np.ndarray, temperature: float, include_positive: bool = False
) -> np.ndarray:
    """d(mean loss)/d(sim), same [j, i] layout as the similarity matrix."""
    x = sim.shape[0]
    scaled = sim / temperature
    shift = scaled.max(axis=0)
    exps = np.exp(scaled - shift)
    if not include_positive:
        exps = exps * (1.0 - np.eye(x))
    probs = exps / exps.sum(axis=0, keepdims=True)
    grad = probs.copy()
    np.fill_diagonal(grad, np.diag(grad) - 1.0)
    return grad / (x * temperature)


def orthogonality_penalty(aspects: np.ndarray) -> float:
    """Frobenius norm of (normalized A)(normalized A)^T - I; zero rows are an error."""
    norms = np.linalg.norm(aspects, axis=1)
    if np.any(norms == 0.0):
        raise NumericError("aspect table has a zero row")
    unit = aspects / norms[:, None]
    gram = unit @ unit.T
    return float(np.linalg.norm(gram - np.eye(aspects.shape[0])))


def orthogonality_penalty_grad(aspects: np.ndarray) -> tuple[float, np.ndarray]:
    """Penalty value and its gradient w.r.t. the raw (unnormalized) rows."""
    norms = np.linalg.norm(aspects, axis=1)
    if np.any(norms == 0.0):
        raise NumericError("aspect table has a zero row")
    unit = aspects / norms[:, None]
    residual = unit @ unit.T - np.eye(aspects.shape[0])
    value = float(np.linalg.norm(residual))
    if value == 0.0:
        return 0.0, np.zeros_like(aspects)
    d_unit = 2.0 * (residual @ unit) / value
    # rows were normalized independently: project out the radial component
    radial = np.sum(d_unit * unit, axis=1, keepdims=True)
    d_aspects = (d_unit - radial * unit) / norms[:, None]
    return value, d_aspects


def batch_forward(model: TeacherModel, token_lists) -> tuple[list[SegmentTrace], np.ndarray]:
    traces = [forward_segment(model, toks) for toks in token_lists]
    word_vecs = np.stack([t.word_vec for t in traces])
    aspect_vecs = np.stack([t.aspect_vec for t in traces])
    return traces, similarity_matrix(word_vecs, aspect_vecs)


def batch_loss(model: TeacherModel, token_lists) -> float:
    """Pure forward evaluation of mean contrastive loss + penalty (oracle path)."""
    _, sim = batch_forward(model, token_lists)
    loss, _ = contrastive_loss(sim, model.temperature, model.include_positive)
    return loss + orthogonality_penalty(model.aspects)


def batch_loss_and_grads(
    model: TeacherModel, token_lists
) -> tuple[float, float, dict[str, np.ndarray]]:
    """Forward + hand-derived backward for one batch.

    Returns (contrastive mean, penalty, gradients for every trainable tensor).
    The frozen embedding table receives no gradient by construction.
    """
    traces, sim = batch_forward(model, token_lists)
    loss, _ = contrastive_loss(sim, model.temperature, model.include_positive)
    d_sim = contrastive_loss_grad(sim, model.temperature, model.include_positive)

    word_vecs = np.stack([t.word_vec for t in traces])
    aspect_vecs = np.stack([t.aspect_vec for t in traces])
    wn = np.linalg.norm(word_vecs, axis=1)
    an = np.linalg.norm(aspect_vecs, axis=1)
    w_unit = word_vecs / wn[:, None]
    a_unit = aspect_vecs / an[:, None]

    # cosine backward: sim = w_unit @ a_unit.T
    d_w_unit = d_sim @ a_unit
    d_a_unit = d_sim.T @ w_unit
    d_word = (d_w_unit - np.sum(d_w_unit * w_unit, axis=1, keepdims=True) * w_unit) / wn[:, None]
    d_aspectvec = (d_a_unit - np.sum(d_a_unit * a_unit, axis=1, keepdims=True) * a_unit) / an[:, None]

    penalty, d_aspects = orthogonality_penalty_grad(model.aspects)
    grads = {
        "aspects": d_aspects,
        "attn_weight": np.zeros_like(model.attn_weight),
        "attn_bias": np.zeros_like(model.attn_bias),
        "aspect_weight": np.zeros_like(model.aspect_weight),
        "aspect_bias": np.zeros_like(model.aspect_bias),
    }
    for i, trace in enumerate(traces):
        da = d_aspectvec[i]
        grads["aspects"] += np.outer(trace.beta, da)
        d_beta = model.aspects @ da
        d_scores = softmax_vjp(trace.beta, d_beta)
        grads["aspect_weight"] += np.outer(d_scores, trace.word_vec)
        grads["aspect_bias"] += d_scores
        # word-side vector feeds both the cosine row and the aspect scores
        d_pooled = d_word[i] + model.aspect_weight.T @ d_scores
        dw, db, _ = attention_pool_backward(
            trace.pool, d_pooled, model.attn_weight, model.smooth_factor, model.attention
        )
        grads["attn_weight"] += dw
        grads["attn_bias"] += db
    return loss, penalty, grads


@dataclass
class TrainHistory:
    epoch_losses: list[float] = field(default_factory=list)
    epoch_penalties: list[float] = field(default_factory=list)
    steps: int = 0


def train_teacher(
    model: TeacherModel,
    segments,
    epochs: int = 10,
    batch_size: int = 50,
    seed: int = 0,
    clip_norm: float = 2.0,
    warmup_steps: int = 2000,
    d_model: float = 1e5,
    log_path: str | Path | None = None,
    epoch_hook=None,
) -> TrainHistory:
    """Run the mini-batch contrastive training loop, mutating the model in place.

    Per batch: pool both representations for each segment, form the pairwise
    cosine matrix, take mean per-sample loss plus the orthogonality penalty,
    backpropagate, clip the joint gradient norm, and apply a warmup-scheduled
    Adam step. Batches shrink at the epoch tail; a remainder of one segment
    is dropped (the loss needs a negative). Deterministic for a fixed seed.
    """
    if batch_size < 2:
        raise ConfigError("batch_size must be at least 2")
    token_lists = [s.tokens if hasattr(s, "tokens") else s for s in segments]
    token_lists = [t for t in token_lists if len(t) > 0]
    if not token_lists:
        raise ConfigError("no nonempty segments to train on")

    params = model.trainable()
    adam = AdamState(params)
    rng = np.random.default_rng(seed)
    embed_digest = _array_digest(model.embeddings)
    history = TrainHistory()
    log_file = open(log_path, "w", encoding="utf-8") if log_path else None

    try:
        order = np.arange(len(token_lists))
        step = 0
        for epoch in range(epochs):
            rng.shuffle(order)
            losses, penalties = [], []
            for start in range(0, len(order), batch_size):
                batch_idx = order[start : start + batch_size]
                if batch_idx.size < 2:
                    continue
                batch = [token_lists[i] for i in batch_idx]
                loss, penalty, grads = batch_loss_and_grads(model, batch)
                clip_by_global_norm(grads, clip_norm)
                step += 1
                lr = warmup_lr(step, warmup_steps, d_model)
                adam.step(params, grads, lr)
                losses.append(loss)
                penalties.append(penalty)
                if log_file:
                    log_file.write(
                        json.dumps(
                            {"step": step, "lr": lr, "loss": loss, "omega": penalty},
                            sort_keys=True,
                        )
                        + "\n"
                    )
            history.epoch_losses.append(float(np.mean(losses)))
            history.epoch_penalties.append(float(np.mean(penalties)))
            if epoch_hook is not None:
                epoch_hook(epoch, model)
        history.steps = step
    finally:
        if log_file:
            log_file.close()

    if _array_digest(model.embeddings) != embed_digest:
        raise NumericError("frozen embedding table was modified during training")
    return history


def _array_digest(arr: np.ndarray) -> bytes:
    import hashlib

    return hashlib.sha256(np.ascontiguousarray(arr).tobytes()).digest()


def save_teacher(path: str | Path, model: TeacherModel, meta: dict | None = None) -> None:
    arrays = {"embeddings": model.embeddings, **model.trainable()}
    full_meta = {
        "smooth_factor": model.smooth_factor,
        "temperature": model.temperature,
        "attention": model.attention,
        "include_positive": model.include_positive,
        **(meta or {}),
    }
    save_checkpoint(path, "teacher", arrays, full_meta)


def load_teacher(path: str | Path) -> tuple[TeacherModel, dict]:
    _, arrays, meta = load_checkpoint(path, expect_kind="teacher")
    model = TeacherModel(
        embeddings=arrays["embeddings"],
        aspects=arrays["aspects"],
        attn_weight=arrays["attn_weight"],
        attn_bias=arrays["attn_bias"],
        aspect_weight=arrays["aspect_weight"],
        aspect_bias=arrays["aspect_bias"],
        smooth_factor=float(meta["smooth_factor"]),
        temperature=float(meta["temperature"]),
        attention=str(meta["attention"]),
        include_positive=bool(meta["include_positive"]),
    )
    return model, meta
