"""Segment-level classification metrics.

Micro-averaged F1 for single-label multi-class data (equal to accuracy),
one-vs-rest per-aspect precision/recall/F1 with explicit 0/0 conventions,
and support-weighted macro averages.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import ConfigError


def _as_labels(gold, pred, num_classes: int | None = None):
    g = np.asarray(gold, dtype=np.int64)
    p = np.asarray(pred, dtype=np.int64)
    if g.shape != p.shape:
        raise ConfigError(f"gold and prediction lengths differ: {g.shape} vs {p.shape}")
    if g.size == 0:
        raise ConfigError("cannot score an empty label set")
    k = num_classes if num_classes is not None else int(max(g.max(), p.max())) + 1
    if g.min() < 0 or p.min() < -1 or g.max() >= k or p.max() >= k:
        raise ConfigError("label index out of range")
    return g, p, k


@dataclass
class ConfusionMatrix:
    matrix: np.ndarray  # (K, K) counts, [gold][pred]
    labels: list[str]

    @property
    def total(self) -> int:
        return int(self.matrix.sum())


def confusion_matrix(gold, pred, labels: list[str]) -> ConfusionMatrix:
    g, p, k = _as_labels(gold, pred, len(labels))
    mat = np.zeros((k, k), dtype=np.int64)
    # predictions of -1 (Unknown) count as misses but have no column
    for gi, pi in zip(g, p):
        if pi >= 0:
            mat[gi, pi] += 1
    return ConfusionMatrix(mat, list(labels))


def micro_f1(gold, pred) -> float:
    """Micro-averaged F1; for single-label data this equals plain accuracy."""
    g, p, _ = _as_labels(gold, pred)
    return float(np.mean(g == p))


def per_aspect_prf(
    gold, pred, aspect: int, num_classes: int | None = None
) -> tuple[float, float, float]:
    """One-vs-rest precision/recall/F1 for one aspect.

    Conventions: P = 0 when the aspect is never predicted, R = 0 when it
    never occurs in gold, F = 0 when P + R = 0. num_classes widens the label
    space beyond what the data mentions (an absent aspect is legal there).
    """
    if num_classes is None:
        num_classes = max(int(np.max(gold, initial=0)), int(np.max(pred, initial=0)), aspect) + 1
    g, p, k = _as_labels(gold, pred, num_classes)
    if not (0 <= aspect < k):
        raise ConfigError(f"unknown aspect index {aspect}")
    tp = int(np.sum((g == aspect) & (p == aspect)))
    pred_n = int(np.sum(p == aspect))
    gold_n = int(np.sum(g == aspect))
    precision = tp / pred_n if pred_n else 0.0
    recall = tp / gold_n if gold_n else 0.0
    f1 = 2 * precision * recall / (precision + recall) if precision + recall else 0.0
    return precision, recall, f1


def weighted_macro_prf(gold, pred) -> tuple[float, float, float]:
    """Support-weighted macro precision/recall/F1 (weights = gold counts / total)."""
    g, p, k = _as_labels(gold, pred)
    total = g.size
    wp = wr = wf = 0.0
    for aspect in range(k):
        support = int(np.sum(g == aspect))
        if support == 0:
            continue
        prec, rec, f1 = per_aspect_prf(g, p, aspect)
        weight = support / total
        wp += weight * prec
        wr += weight * rec
        wf += weight * f1
    return wp, wr, wf


def evaluation_report(gold, pred, labels: list[str]) -> dict:
    """Full metric bundle used by `evaluate` and the mapping workbench."""
    g, p, _ = _as_labels(gold, pred, len(labels))
    cm = confusion_matrix(g, p, labels)
    wp, wr, wf = weighted_macro_prf(g, p)
    per_aspect = {}
    for i, name in enumerate(labels):
        prec, rec, f1 = per_aspect_prf(g, p, i)
        per_aspect[name] = {
            "precision": prec,
            "recall": rec,
            "f1": f1,
            "support": int(np.sum(g == i)),
        }
    return {
        "micro_f1": micro_f1(g, p),
        "weighted_macro": {"precision": wp, "recall": wr, "f1": wf},
        "per_aspect": per_aspect,
        "confusion": cm.matrix.tolist(),
        "labels": list(labels),
        "count": int(g.size),
    }
