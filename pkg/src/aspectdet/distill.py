"""Knowledge distillation into a lightweight student classifier.

The student is an embedding encoder + smooth attention + linear softmax
head, trained with cross-entropy on the teacher's hard labels restricted to
confident samples (label entropy below a per-class threshold; the General
class gets a tighter threshold to fight label imbalance). The student reads
raw text -- stopwords kept, no suffix normalization -- so it sidesteps the
teacher's aggressive preprocessing.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .attention import attention_pool, attention_pool_backward, softmax
from .aspects import GoldLabel
from .checkpoint import load_checkpoint, save_checkpoint
from .corpus import PreprocessOptions, Vocabulary, build_vocabulary, preprocess
from .errors import ConfigError, NumericError
from .metrics import micro_f1
from .optim import AdamState, clip_by_global_norm, warmup_lr

STUDENT_TRAINABLE = ("embeddings", "attn_weight", "attn_bias", "cls_weight", "cls_bias")

# raw-text path: keep stopwords, keep suffixes
STUDENT_PREPROCESS = PreprocessOptions(stopwords=frozenset(), normalize_suffixes=False)


@dataclass(frozen=True)
class FilterConfig:
    """Entropy thresholds: chi_general for the General class, chi_other else."""

    chi_general: float = 0.8
    chi_other: float = 1.4

    def __post_init__(self):
        if self.chi_general > self.chi_other:
            raise ConfigError("chi_general must not exceed chi_other (label imbalance)")


def entropy_filter(label: GoldLabel, config: FilterConfig, general_index: int | None) -> bool:
    """Keep a training sample iff its label entropy clears the class threshold."""
    threshold = (
        config.chi_general
        if general_index is not None and label.y_hat == general_index
        else config.chi_other
    )
    return label.entropy < threshold


@dataclass
class StudentModel:
    embeddings: np.ndarray  # (Vs, M) trainable word vectors
    attn_weight: np.ndarray  # (M, M)
    attn_bias: np.ndarray  # (M,)
    cls_weight: np.ndarray  # (K, M)
    cls_bias: np.ndarray  # (K,)
    smooth_factor: float = 0.5

    @property
    def num_classes(self) -> int:
        return self.cls_weight.shape[0]

    def trainable(self) -> dict[str, np.ndarray]:
        return {name: getattr(self, name) for name in STUDENT_TRAINABLE}


def init_student(
    embeddings: np.ndarray, num_classes: int, smooth_factor: float = 0.5, seed: int = 0
) -> StudentModel:
    dim = embeddings.shape[1]
    rng = np.random.default_rng(seed)
    return StudentModel(
        embeddings=np.asarray(embeddings, dtype=np.float64).copy(),
        attn_weight=rng.normal(0.0, 1.0 / np.sqrt(dim), size=(dim, dim)),
        attn_bias=np.zeros(dim),
        cls_weight=rng.normal(0.0, 1.0 / np.sqrt(dim), size=(num_classes, dim)),
        cls_bias=np.zeros(num_classes),
        smooth_factor=smooth_factor,
    )


def student_forward(model: StudentModel, tokens) -> tuple[np.ndarray, object]:
    """Class probabilities for one nonempty token sequence, plus the pool trace."""
    trace = attention_pool(
        model.embeddings, tokens, model.attn_weight, model.attn_bias,
        model.smooth_factor, "smooth",
    )
    logits = model.cls_weight @ trace.pooled + model.cls_bias
    return softmax(logits), trace


def student_predict_tokens(model: StudentModel, tokens) -> np.ndarray:
    """Probabilities for encoded tokens; empty input falls back to uniform."""
    if len(tokens) == 0:
        return np.full(model.num_classes, 1.0 / model.num_classes)
    probs, _ = student_forward(model, tokens)
    return probs


def student_predict_text(
    model: StudentModel, vocabulary: Vocabulary, raw_text: str
) -> tuple[np.ndarray, bool]:
    """Predict from raw text. Returns (probabilities, had_tokens); an empty
    tokenization yields the uniform distribution with had_tokens False."""
    tokens = vocabulary.encode(preprocess(raw_text, STUDENT_PREPROCESS))
    return student_predict_tokens(model, tokens), bool(tokens)


def batch_loss(model: StudentModel, samples: list[tuple[list[int], int]]) -> float:
    """Pure forward mean loss over (tokens, class) samples (oracle path).

    Per sample the loss is -(1/K) * log p(class), the hard-label reduction of
    the distillation objective; the 1/K constant is kept as stated.
    """
    k = model.num_classes
    total = 0.0
    for tokens, target in samples:
        probs, _ = student_forward(model, tokens)
        total += -np.log(max(probs[target], 1e-300)) / k
    return total / len(samples)


def batch_loss_and_grads(
    model: StudentModel, samples: list[tuple[list[int], int]]
) -> tuple[float, dict[str, np.ndarray]]:
    """Forward + manual backward over a batch; every tensor trains here,
    including the embedding table (duplicate tokens accumulate)."""
    k = model.num_classes
    grads = {name: np.zeros_like(arr) for name, arr in model.trainable().items()}
    total = 0.0
    scale = 1.0 / (k * len(samples))
    for tokens, target in samples:
        probs, trace = student_forward(model, tokens)
        total += -np.log(max(probs[target], 1e-300)) / k
        d_logits = probs.copy()
        d_logits[target] -= 1.0
        d_logits *= scale
        grads["cls_weight"] += np.outer(d_logits, trace.pooled)
        grads["cls_bias"] += d_logits
        d_pooled = model.cls_weight.T @ d_logits
        dw, db, dvecs = attention_pool_backward(
            trace, d_pooled, model.attn_weight, model.smooth_factor, "smooth",
            want_embedding_grad=True,
        )
        grads["attn_weight"] += dw
        grads["attn_bias"] += db
        np.add.at(grads["embeddings"], trace.tokens, dvecs)
    return total / len(samples), grads


@dataclass
class DistillResult:
    model: StudentModel
    vocabulary: Vocabulary
    epoch_losses: list[float] = field(default_factory=list)
    dev_scores: list[float] = field(default_factory=list)
    kept: int = 0
    dropped: int = 0


def build_student_corpus(
    raw_texts: list[str], min_count: int = 2
) -> tuple[Vocabulary, list[list[int]]]:
    """Tokenize raw segments on the student path and build its vocabulary."""
    token_lists = [preprocess(t, STUDENT_PREPROCESS) for t in raw_texts]
    vocabulary = build_vocabulary(token_lists, min_count=min_count)
    return vocabulary, [vocabulary.encode(t) for t in token_lists]


def train_student(
    model: StudentModel,
    samples: list[tuple[list[int], int]],
    epochs: int = 20,
    batch_size: int = 50,
    seed: int = 0,
    clip_norm: float = 2.0,
    warmup_steps: int = 2000,
    d_model: float = 1e5,
    dev_samples: list[tuple[list[int], int]] | None = None,
) -> tuple[list[float], list[float]]:
    """Mini-batch training with the same clipped-Adam/warmup recipe as the
    teacher. With dev_samples given, keeps the parameters from the best dev
    micro-F1 epoch. Returns (epoch losses, dev scores)."""
    samples = [(t, y) for t, y in samples if len(t) > 0]
    if not samples:
        raise ConfigError("no trainable samples after filtering")
    params = model.trainable()
    adam = AdamState(params)
    rng = np.random.default_rng(seed)
    order = np.arange(len(samples))
    epoch_losses: list[float] = []
    dev_scores: list[float] = []
    best_score, best_params = -1.0, None
    step = 0
    for _ in range(epochs):
        rng.shuffle(order)
        losses = []
        for start in range(0, len(order), batch_size):
            batch = [samples[i] for i in order[start : start + batch_size]]
            loss, grads = batch_loss_and_grads(model, batch)
            clip_by_global_norm(grads, clip_norm)
            step += 1
            adam.step(params, grads, warmup_lr(step, warmup_steps, d_model))
            losses.append(loss)
        epoch_losses.append(float(np.mean(losses)))
        if dev_samples:
            preds = [int(np.argmax(student_predict_tokens(model, t))) for t, _ in dev_samples]
            score = micro_f1([y for _, y in dev_samples], preds)
            dev_scores.append(score)
            if score > best_score:
                best_score = score
                best_params = {k: v.copy() for k, v in params.items()}
    if best_params is not None:
        for name, arr in best_params.items():
            params[name][...] = arr
    return epoch_losses, dev_scores


def distill(
    raw_train_texts: list[str],
    teacher_labels: list[GoldLabel],
    num_classes: int,
    general_index: int | None,
    filter_config: FilterConfig,
    embed_trainer,
    smooth_factor: float = 0.5,
    min_count: int = 2,
    epochs: int = 20,
    batch_size: int = 50,
    seed: int = 0,
    clip_norm: float = 2.0,
    warmup_steps: int = 2000,
    d_model: float = 1e5,
    dev: list[tuple[str, int]] | None = None,
) -> DistillResult:
    """End-to-end distillation from teacher labels over the train split.

    embed_trainer(token_lists, counts) -> (Vs, M) matrix supplies the initial
    student embeddings (skip-gram over the raw-path corpus). Raises when the
    entropy filter leaves nothing to train on.
    """
    if len(raw_train_texts) != len(teacher_labels):
        raise ConfigError("one teacher label per training segment is required")
    vocabulary, encoded = build_student_corpus(raw_train_texts, min_count=min_count)

    samples = []
    dropped = 0
    for tokens, label in zip(encoded, teacher_labels):
        if not tokens or label.unmappable:
            dropped += 1
            continue
        if entropy_filter(label, filter_config, general_index):
            samples.append((tokens, label.y_hat))
        else:
            dropped += 1
    if not samples:
        raise ConfigError(
            "entropy filter removed every training sample; raise chi_general/chi_other"
        )

    init_matrix = embed_trainer(encoded, np.asarray(vocabulary.counts, dtype=np.float64))
    if init_matrix.shape[0] != vocabulary.size:
        raise NumericError("student embedding rows do not match the student vocabulary")
    model = init_student(init_matrix, num_classes, smooth_factor=smooth_factor, seed=seed)

    dev_samples = None
    if dev:
        dev_samples = [
            (vocabulary.encode(preprocess(text, STUDENT_PREPROCESS)), gold) for text, gold in dev
        ]
        dev_samples = [(t, y) for t, y in dev_samples if t]
    losses, dev_scores = train_student(
        model,
        samples,
        epochs=epochs,
        batch_size=batch_size,
        seed=seed,
        clip_norm=clip_norm,
        warmup_steps=warmup_steps,
        d_model=d_model,
        dev_samples=dev_samples,
    )
    return DistillResult(model, vocabulary, losses, dev_scores, len(samples), dropped)


def save_student(path, model: StudentModel, vocabulary: Vocabulary, meta: dict | None = None):
    arrays = dict(model.trainable())
    full_meta = {
        "smooth_factor": model.smooth_factor,
        "vocab_words": vocabulary.index_to_word,
        "vocab_counts": vocabulary.counts,
        **(meta or {}),
    }
    save_checkpoint(path, "student", arrays, full_meta)


def load_student(path) -> tuple[StudentModel, Vocabulary, dict]:
    _, arrays, meta = load_checkpoint(path, expect_kind="student")
    model = StudentModel(
        embeddings=arrays["embeddings"],
        attn_weight=arrays["attn_weight"],
        attn_bias=arrays["attn_bias"],
        cls_weight=arrays["cls_weight"],
        cls_bias=arrays["cls_bias"],
        smooth_factor=float(meta["smooth_factor"]),
    )
    words = list(meta["vocab_words"])
    vocabulary = Vocabulary(
        word_to_index={w: i for i, w in enumerate(words)},
        index_to_word=words,
        counts=[int(c) for c in meta["vocab_counts"]],
    )
    return model, vocabulary, meta
