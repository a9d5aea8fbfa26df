"""Sweep harness: attention kind, smoothing factor, and batch size.

Each variant retrains the teacher from the same embeddings with paired
seeds, maps aspects through the provided strategy, and scores the dev
split. Results land in a stable-column TSV.
"""

from __future__ import annotations

from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .aspects import infer_batch, top_keywords
from .corpus import CorpusBundle
from .embeddings import kmeans_init
from .errors import ConfigError
from .metrics import micro_f1, weighted_macro_prf
from .teacher import init_teacher, train_teacher

RESULT_COLUMNS = (
    "attention",
    "smooth_factor",
    "batch_size",
    "seed",
    "micro_f1",
    "weighted_p",
    "weighted_r",
    "weighted_f",
)


@dataclass(frozen=True)
class Variant:
    attention: str = "smooth"
    smooth_factor: float = 0.5
    batch_size: int = 50


def sweep_variants(
    attentions=("smooth", "plain", "mean"),
    smooth_factors=(0.5, 1.0, 2.0, 3.0, 4.0, 5.0),
    batch_sizes=(10, 20, 50, 100, 200),
    base: Variant = Variant(),
) -> list[Variant]:
    """Per-axis sweeps around a base variant (not a cross product)."""
    variants: list[Variant] = []
    for attention in attentions:
        variants.append(Variant(attention, base.smooth_factor, base.batch_size))
    for sf in smooth_factors:
        variants.append(Variant(base.attention, sf, base.batch_size))
    for bs in batch_sizes:
        variants.append(Variant(base.attention, base.smooth_factor, bs))
    # drop duplicates while keeping order
    seen, unique = set(), []
    for v in variants:
        if v not in seen:
            seen.add(v)
            unique.append(v)
    return unique


def run_ablation(
    bundle: CorpusBundle,
    embeddings: np.ndarray,
    variants: list[Variant],
    seeds: list[int],
    mapper,
    num_aspects: int,
    epochs: int = 10,
    temperature: float = 1.0,
    top_k: int = 10,
    warmup_steps: int = 2000,
    d_model: float = 1e5,
    clip_norm: float = 2.0,
) -> list[dict]:
    """Train/score every (variant, seed) pair.

    mapper(keyword_lists) must return an AspectMapping; the dev split needs
    gold labels. Seeds are paired: every variant sees the same seed list.
    """
    dev = [s for s in bundle.split_segments("dev") if s.gold_aspect is not None]
    if not dev:
        raise ConfigError("ablation needs a labeled dev split")
    train = bundle.split_segments("train")
    rows = []
    for seed in seeds:
        centroids = kmeans_init(embeddings, num_aspects, seed=seed)
        for variant in variants:
            model = init_teacher(
                embeddings,
                centroids,
                smooth_factor=variant.smooth_factor,
                temperature=temperature,
                attention=variant.attention,
                seed=seed,
            )
            train_teacher(
                model,
                train,
                epochs=epochs,
                batch_size=variant.batch_size,
                seed=seed,
                clip_norm=clip_norm,
                warmup_steps=warmup_steps,
                d_model=d_model,
            )
            if variant.attention == "mean":
                _assert_uniform_attention(model, train[0].tokens)
            kws = top_keywords(model.aspects, model.embeddings, bundle.vocabulary, top_k=top_k)
            mapping = mapper(kws)
            gold = [s.gold_aspect for s in dev]
            if mapping.mapped_count == 0:
                score, wp, wr, wf = 0.0, 0.0, 0.0, 0.0
            else:
                pred = [lab.y_hat for lab in infer_batch(model, dev, mapping)]
                score = micro_f1(gold, pred)
                wp, wr, wf = weighted_macro_prf(gold, pred)
            rows.append(
                {
                    "attention": variant.attention,
                    "smooth_factor": variant.smooth_factor,
                    "batch_size": variant.batch_size,
                    "seed": seed,
                    "micro_f1": score,
                    "weighted_p": wp,
                    "weighted_r": wr,
                    "weighted_f": wf,
                }
            )
    return rows


def _assert_uniform_attention(model, tokens):
    from .teacher import forward_segment

    alpha = forward_segment(model, tokens).alpha
    assert np.allclose(alpha, 1.0 / len(tokens)), "mean pooling must give uniform weights"


def write_results_tsv(rows: list[dict], path: str | Path, config_hash: str = "") -> None:
    lines = [f"# config_hash={config_hash}", "\t".join(RESULT_COLUMNS)]
    for row in rows:
        lines.append(
            "\t".join(
                ("%.6g" % row[c]) if isinstance(row[c], float) else str(row[c])
                for c in RESULT_COLUMNS
            )
        )
    Path(path).write_text("\n".join(lines) + "\n", encoding="utf-8")
