"""Skip-gram word embeddings with negative sampling, plus k-means aspect seeding.

Pure-numpy trainer, single worker, deterministic for a fixed seed. The text
file format round-trips exactly: values are written with 9 significant
digits and re-serializing the parsed floats reproduces the same bytes.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .corpus import Vocabulary
from .errors import ConfigError, MissingArtifactError, NumericError, SchemaError

log = logging.getLogger(__name__)


@dataclass(frozen=True)
class SkipGramConfig:
    dim: int = 128
    window: int = 5
    negatives: int = 5
    epochs: int = 5
    initial_lr: float = 0.025
    min_lr_ratio: float = 1e-4  # linear decay floor, as a fraction of initial_lr
    subsample: float = 1e-4  # frequent-word subsampling threshold; 0 disables
    seed: int = 1

    def __post_init__(self):
        if self.dim <= 0 or self.window < 1 or self.negatives < 1:
            raise ConfigError("skip-gram needs dim > 0, window >= 1, negatives >= 1")


def _sigmoid(x):
    return 1.0 / (1.0 + np.exp(-x))


def train_skipgram(
    sentences: list[list[int]],
    counts: np.ndarray,
    config: SkipGramConfig,
    epoch_hook=None,
) -> tuple[np.ndarray, list[float]]:
    """Train skip-gram/negative-sampling embeddings on encoded sentences.

    counts are per-token corpus frequencies aligned with the vocabulary;
    negatives are drawn from the unigram^(3/4) distribution, skipping draws
    that equal the positive target. Returns the input-vector matrix
    (V x dim) and mean loss per half-epoch; epoch_hook, if given, is called
    as epoch_hook(epoch_index, w_in, w_out) after each epoch.
    """
    sentences = [s for s in sentences if s]
    if not sentences:
        raise MissingArtifactError("cannot train embeddings on an empty corpus")
    counts = np.asarray(counts, dtype=np.float64)
    vocab_size = counts.shape[0]
    rng = np.random.default_rng(config.seed)

    w_in = (rng.random((vocab_size, config.dim)) - 0.5) / config.dim
    w_out = np.zeros((vocab_size, config.dim))

    noise_cdf = np.cumsum(counts**0.75)
    noise_cdf /= noise_cdf[-1]

    keep_prob = np.ones(vocab_size)
    if config.subsample > 0:
        freq = counts / counts.sum()
        with np.errstate(divide="ignore", invalid="ignore"):
            keep = np.sqrt(config.subsample / freq)
        keep_prob = np.clip(keep, 0.0, 1.0)

    total_positions = sum(len(s) for s in sentences) * config.epochs
    half_epoch = max(1, sum(len(s) for s in sentences) // 2)
    lr_floor = config.initial_lr * config.min_lr_ratio

    losses: list[float] = []
    loss_sum, loss_n, seen = 0.0, 0, 0
    order = np.arange(len(sentences))

    for epoch in range(config.epochs):
        rng.shuffle(order)
        for si in order:
            sent = sentences[si]
            if config.subsample > 0:
                kept = [w for w in sent if rng.random() < keep_prob[w]]
            else:
                kept = list(sent)
            seen += len(sent)
            if len(kept) >= 2:
                lr = max(lr_floor, config.initial_lr * (1.0 - seen / (total_positions + 1)))
                for pos, center in enumerate(kept):
                    radius = int(rng.integers(1, config.window + 1))
                    lo, hi = max(0, pos - radius), min(len(kept), pos + radius + 1)
                    contexts = [kept[j] for j in range(lo, hi) if j != pos]
                    if not contexts:
                        continue
                    loss_sum += _train_center(
                        w_in, w_out, center, contexts, config.negatives, noise_cdf, rng, lr
                    )
                    loss_n += len(contexts)
            while loss_n and seen >= half_epoch * (len(losses) + 1):
                losses.append(loss_sum / loss_n)
                loss_sum, loss_n = 0.0, 0
        if epoch_hook is not None:
            epoch_hook(epoch, w_in, w_out)

    if not np.all(np.isfinite(w_in)):
        raise NumericError("skip-gram training produced non-finite embeddings")
    return w_in, losses


def _train_center(w_in, w_out, center, contexts, negatives, noise_cdf, rng, lr):
    """One center word against all its context words, each with fresh negatives."""
    n_ctx = len(contexts)
    ctx_arr = np.asarray(contexts, dtype=np.int64)
    draws = np.searchsorted(noise_cdf, rng.random(n_ctx * negatives))
    # classic rule: a negative draw that hits the positive target is skipped
    keep = draws != np.repeat(ctx_arr, negatives)
    draws = draws[keep]
    targets = np.concatenate([ctx_arr, draws])
    labels = np.zeros(targets.shape[0])
    labels[:n_ctx] = 1.0

    u = w_in[center]
    out_vecs = w_out[targets]
    scores = _sigmoid(out_vecs @ u)
    # loss: -log sigma(score) for positives, -log sigma(-score) for negatives
    eps = 1e-10
    loss = -(
        np.log(scores[:n_ctx] + eps).sum()
        + np.log(1.0 - scores[n_ctx:] + eps).sum()
    )
    g = (scores - labels) * lr
    grad_u = g @ out_vecs
    # duplicate target rows must accumulate, hence add.at
    np.add.at(w_out, targets, -np.outer(g, u))
    w_in[center] = u - grad_u
    return loss


def save_embeddings_text(path: str | Path, vocabulary: Vocabulary, matrix: np.ndarray) -> None:
    """Write the documented text format: first line ``V M``, then one word per line."""
    if matrix.shape[0] != vocabulary.size:
        raise SchemaError("embedding rows do not match the vocabulary")
    with open(path, "w", encoding="utf-8") as f:
        f.write(f"{matrix.shape[0]} {matrix.shape[1]}\n")
        for word, row in zip(vocabulary.index_to_word, matrix):
            f.write(word + " " + " ".join("%.9g" % v for v in row) + "\n")


def load_embeddings_text(
    path: str | Path,
    vocabulary: Vocabulary,
    expect_dim: int | None = None,
    seed: int = 0,
) -> np.ndarray:
    """Load embeddings aligned to the vocabulary.

    Words absent from the file are initialized from N(0, 0.01) and counted in
    a log line; a dimension mismatch against expect_dim is a hard error.
    """
    p = Path(path)
    if not p.exists():
        raise MissingArtifactError(f"embedding file not found: {p}")
    with open(p, encoding="utf-8") as f:
        header = f.readline().split()
        if len(header) != 2:
            raise SchemaError(f"{p}: first line must be 'V M'")
        _, dim = int(header[0]), int(header[1])
        if expect_dim is not None and dim != expect_dim:
            raise ConfigError(f"{p}: file has dim {dim}, config expects {expect_dim}")
        vectors: dict[str, np.ndarray] = {}
        for ln, line in enumerate(f):
            parts = line.rstrip("\n").split(" ")
            if len(parts) != dim + 1:
                raise SchemaError(f"{p}:{ln + 2}: expected {dim + 1} fields")
            vectors[parts[0]] = np.array([float(x) for x in parts[1:]])

    rng = np.random.default_rng(seed)
    matrix = np.empty((vocabulary.size, dim))
    missing = 0
    for i, word in enumerate(vocabulary.index_to_word):
        if word in vectors:
            matrix[i] = vectors[word]
        else:
            matrix[i] = rng.normal(0.0, 0.01, size=dim)
            missing += 1
    if missing:
        log.info("initialized %d/%d missing words from N(0, 0.01)", missing, vocabulary.size)
    return matrix


def kmeans_init(
    embeddings: np.ndarray,
    n_clusters: int,
    seed: int = 0,
    max_iter: int = 100,
    tol: float = 1e-6,
    reseed_cap: int = 10,
) -> np.ndarray:
    """Cluster word vectors and return the centroid matrix (n_clusters x dim).

    k-means++ seeding, Euclidean distance, Lloyd iterations capped at
    max_iter with tolerance tol on total centroid movement. An empty cluster
    is reseeded from the point farthest from its centroid; repeated failure
    beyond reseed_cap raises.
    """
    points = np.asarray(embeddings, dtype=np.float64)
    if n_clusters > points.shape[0]:
        raise ConfigError(
            f"cannot form {n_clusters} clusters from {points.shape[0]} points"
        )
    rng = np.random.default_rng(seed)
    centroids = _kmeans_pp(points, n_clusters, rng)

    reseeds = 0
    for _ in range(max_iter):
        dists = _sq_distances(points, centroids)
        assign = np.argmin(dists, axis=1)
        new_centroids = np.empty_like(centroids)
        for k in range(n_clusters):
            mask = assign == k
            if not np.any(mask):
                if reseeds >= reseed_cap:
                    raise NumericError("k-means could not resolve empty clusters")
                reseeds += 1
                farthest = int(np.argmax(dists[np.arange(len(points)), assign]))
                new_centroids[k] = points[farthest]
                assign[farthest] = k
            else:
                new_centroids[k] = points[mask].mean(axis=0)
        movement = float(np.linalg.norm(new_centroids - centroids))
        centroids = new_centroids
        if movement < tol:
            break
    if not np.all(np.isfinite(centroids)):
        raise NumericError("k-means produced non-finite centroids")
    return centroids


def kmeans_objective(points: np.ndarray, centroids: np.ndarray) -> float:
    """Sum of squared distances from each point to its nearest centroid."""
    return float(_sq_distances(points, centroids).min(axis=1).sum())


def _kmeans_pp(points: np.ndarray, k: int, rng: np.random.Generator) -> np.ndarray:
    n = points.shape[0]
    centroids = np.empty((k, points.shape[1]))
    centroids[0] = points[rng.integers(n)]
    closest = np.sum((points - centroids[0]) ** 2, axis=1)
    for i in range(1, k):
        total = closest.sum()
        if total <= 0:
            centroids[i] = points[rng.integers(n)]
            continue
        idx = int(np.searchsorted(np.cumsum(closest / total), rng.random()))
        idx = min(idx, n - 1)
        centroids[i] = points[idx]
        closest = np.minimum(closest, np.sum((points - centroids[i]) ** 2, axis=1))
    return centroids


def _sq_distances(points: np.ndarray, centroids: np.ndarray) -> np.ndarray:
    # |p - c|^2 expanded; clip guards tiny negatives from cancellation
    sq = (
        np.sum(points**2, axis=1)[:, None]
        - 2.0 * points @ centroids.T
        + np.sum(centroids**2, axis=1)[None, :]
    )
    return np.maximum(sq, 0.0)
