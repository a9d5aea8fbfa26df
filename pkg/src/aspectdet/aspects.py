"""Aspect interpretation and the human-authored selective mapping.

Each model-inferred aspect (MIA) is interpreted by its top vocabulary words
under inner-product similarity. A human maps each MIA to a gold-standard
aspect (GSA) or leaves it unmapped; segment-level soft labels over GSAs are
then aggregated from the model's aspect distribution through that table.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .corpus import Vocabulary
from .errors import MissingArtifactError, SchemaError
from .teacher import TeacherModel, forward_segment


@dataclass
class AspectKeywords:
    aspect_index: int
    keywords: list[tuple[str, float]]  # (token, score), scores non-increasing


def top_keywords(
    aspects: np.ndarray,
    embeddings: np.ndarray,
    vocabulary: Vocabulary,
    top_k: int = 10,
) -> list[AspectKeywords]:
    """Rank vocabulary words per aspect by inner product with the aspect row.

    Ties break toward the lower vocabulary index so output is deterministic.
    """
    sim = aspects @ embeddings.T  # (N, V)
    top_k = min(top_k, vocabulary.size)
    out = []
    for n in range(aspects.shape[0]):
        scores = sim[n]
        # stable sort on (-score, index): mergesort keeps index order on ties
        order = np.argsort(-scores, kind="stable")[:top_k]
        out.append(
            AspectKeywords(n, [(vocabulary.index_to_word[i], float(scores[i])) for i in order])
        )
    return out


def save_keywords(path: str | Path, keywords: list[AspectKeywords], config_hash: str = "") -> None:
    payload = {
        "config_hash": config_hash,
        "aspects": [
            {
                "aspect_index": kw.aspect_index,
                "keywords": [{"token": t, "score": s} for t, s in kw.keywords],
            }
            for kw in keywords
        ],
    }
    Path(path).write_text(json.dumps(payload, indent=2, sort_keys=True) + "\n", encoding="utf-8")


def load_keywords(path: str | Path) -> list[AspectKeywords]:
    p = Path(path)
    if not p.exists():
        raise MissingArtifactError(f"keywords file not found: {p}")
    payload = json.loads(p.read_text(encoding="utf-8"))
    return [
        AspectKeywords(
            entry["aspect_index"],
            [(kw["token"], float(kw["score"])) for kw in entry["keywords"]],
        )
        for entry in payload["aspects"]
    ]


@dataclass
class AspectMapping:
    """MIA -> GSA assignment; None marks a deliberately unmapped aspect."""

    entries: list[int | None]
    gsa_names: list[str]
    general_index: int | None = None

    @property
    def num_model_aspects(self) -> int:
        return len(self.entries)

    @property
    def num_gold_aspects(self) -> int:
        return len(self.gsa_names)

    @property
    def mapped_count(self) -> int:
        return sum(1 for e in self.entries if e is not None)

    def validate(self) -> None:
        for n, e in enumerate(self.entries):
            if e is not None and not (0 <= e < len(self.gsa_names)):
                raise SchemaError(f"mapping entry {n} targets unknown aspect index {e}")
        if self.general_index is not None and not (0 <= self.general_index < len(self.gsa_names)):
            raise SchemaError("general index out of range")

    def require_mapped(self) -> None:
        if self.mapped_count == 0:
            raise SchemaError("no model aspect is mapped; inference refused")


def save_mapping(path: str | Path, mapping: AspectMapping, config_hash: str = "") -> None:
    mapping.validate()
    payload = {
        "gsa_names": mapping.gsa_names,
        "general": (
            mapping.gsa_names[mapping.general_index] if mapping.general_index is not None else None
        ),
        "entries": [
            {"mia": n, "gsa": (mapping.gsa_names[e] if e is not None else None)}
            for n, e in enumerate(mapping.entries)
        ],
        "config_hash": config_hash,
    }
    tmp = Path(str(path) + ".tmp")
    tmp.write_text(json.dumps(payload, indent=2, sort_keys=True) + "\n", encoding="utf-8")
    tmp.replace(path)


def load_mapping(path: str | Path, expect_model_aspects: int | None = None) -> AspectMapping:
    p = Path(path)
    if not p.exists():
        raise MissingArtifactError(f"mapping file not found: {p}")
    try:
        payload = json.loads(p.read_text(encoding="utf-8"))
    except json.JSONDecodeError as exc:
        raise SchemaError(f"{p}: invalid JSON ({exc})") from exc
    return mapping_from_payload(payload, expect_model_aspects, source=str(p))


def mapping_from_payload(
    payload: dict, expect_model_aspects: int | None = None, source: str = "mapping"
) -> AspectMapping:
    """Build and validate a mapping from its JSON schema."""
    try:
        gsa_names = list(payload["gsa_names"])
        general = payload.get("general")
        raw_entries = payload["entries"]
    except (KeyError, TypeError) as exc:
        raise SchemaError(f"{source}: missing required mapping field ({exc})") from exc
    name_to_idx = {n: i for i, n in enumerate(gsa_names)}
    if general is not None and general not in name_to_idx:
        raise SchemaError(f"{source}: general aspect {general!r} not in gsa_names")

    entries: list[int | None] = [None] * len(raw_entries)
    seen = set()
    for item in raw_entries:
        mia = item.get("mia")
        if not isinstance(mia, int) or not (0 <= mia < len(raw_entries)) or mia in seen:
            raise SchemaError(f"{source}: bad or duplicate mia index {mia!r}")
        seen.add(mia)
        gsa = item.get("gsa")
        if gsa is None:
            entries[mia] = None
        elif gsa in name_to_idx:
            entries[mia] = name_to_idx[gsa]
        else:
            raise SchemaError(f"{source}: unknown gold aspect name {gsa!r}")
    if expect_model_aspects is not None and len(entries) != expect_model_aspects:
        raise SchemaError(
            f"{source}: {len(entries)} entries but the model has {expect_model_aspects} aspects"
        )
    mapping = AspectMapping(
        entries=entries,
        gsa_names=gsa_names,
        general_index=name_to_idx.get(general) if general is not None else None,
    )
    mapping.validate()
    return mapping


@dataclass
class GoldLabel:
    """Soft label over gold aspects plus its hard argmax and entropy.

    gamma is renormalized after dropping unmapped mass; mapped_mass keeps the
    raw pre-normalization total for auditing. A segment whose aspect mass
    falls entirely on unmapped aspects (or that is empty after encoding) is
    flagged unmappable and defaults to General when one exists, else to the
    explicit Unknown label (y_hat = -1).
    """

    gamma: np.ndarray
    y_hat: int
    entropy: float
    mapped_mass: float
    unmappable: bool = False


def distribution_entropy(dist: np.ndarray) -> float:
    """Shannon entropy in nats with the 0*log(0) := 0 convention."""
    nz = dist[dist > 0.0]
    return float(-(nz * np.log(nz)).sum())


def aggregate_gamma(beta: np.ndarray, mapping: AspectMapping) -> GoldLabel:
    """Fold an aspect distribution through the mapping into a gold-label.

    Mass on unmapped aspects is discarded and gamma renormalized (argmax is
    unaffected); ties in the argmax break toward the lowest gold index.
    """
    k = mapping.num_gold_aspects
    if beta.shape[0] != mapping.num_model_aspects:
        raise SchemaError(
            f"beta has {beta.shape[0]} entries, mapping expects {mapping.num_model_aspects}"
        )
    raw = np.zeros(k)
    for n, target in enumerate(mapping.entries):
        if target is not None:
            raw[target] += beta[n]
    mass = float(raw.sum())
    if mass <= 0.0:
        return _degenerate_label(mapping)
    gamma = raw / mass
    y_hat = int(np.argmax(gamma))  # argmax returns the first (lowest) index on ties
    return GoldLabel(gamma, y_hat, distribution_entropy(gamma), mass)


def _degenerate_label(mapping: AspectMapping) -> GoldLabel:
    k = mapping.num_gold_aspects
    gamma = np.full(k, 1.0 / k)
    y_hat = mapping.general_index if mapping.general_index is not None else -1
    return GoldLabel(gamma, y_hat, distribution_entropy(gamma), 0.0, unmappable=True)


def infer_segment(model: TeacherModel, tokens, mapping: AspectMapping) -> GoldLabel:
    """Teacher prediction for one encoded segment through the mapping."""
    mapping.require_mapped()
    if len(tokens) == 0:
        return _degenerate_label(mapping)
    trace = forward_segment(model, tokens)
    return aggregate_gamma(trace.beta, mapping)


def infer_batch(model: TeacherModel, segments, mapping: AspectMapping) -> list[GoldLabel]:
    return [
        infer_segment(model, s.tokens if hasattr(s, "tokens") else s, mapping) for s in segments
    ]


def label_name(label: GoldLabel, mapping: AspectMapping) -> str:
    return "Unknown" if label.y_hat < 0 else mapping.gsa_names[label.y_hat]


def write_predictions(
    path: str | Path,
    segment_ids: list[str],
    labels: list[GoldLabel],
    mapping: AspectMapping,
    config_hash: str = "",
) -> None:
    """predictions.tsv: segment_id, predicted name, entropy, then gamma per GSA."""
    lines = [f"# config_hash={config_hash}"]
    lines.append(
        "segment_id\ty_hat\tentropy\t" + "\t".join(f"gamma_{n}" for n in mapping.gsa_names)
    )
    for sid, lab in zip(segment_ids, labels):
        gammas = "\t".join("%.9g" % g for g in lab.gamma)
        lines.append(f"{sid}\t{label_name(lab, mapping)}\t{'%.9g' % lab.entropy}\t{gammas}")
    Path(path).write_text("\n".join(lines) + "\n", encoding="utf-8")


def read_predictions(path: str | Path) -> tuple[list[str], list[str], list[float], np.ndarray]:
    """Return (segment_ids, predicted names, entropies, gamma matrix)."""
    p = Path(path)
    if not p.exists():
        raise MissingArtifactError(f"predictions file not found: {p}")
    ids, names, entropies, gammas = [], [], [], []
    for line in p.read_text(encoding="utf-8").splitlines():
        if not line or line.startswith("#") or line.startswith("segment_id\t"):
            continue
        parts = line.split("\t")
        if len(parts) < 4:
            raise SchemaError(f"{p}: bad prediction row {line!r}")
        ids.append(parts[0])
        names.append(parts[1])
        entropies.append(float(parts[2]))
        gammas.append([float(x) for x in parts[3:]])
    return ids, names, entropies, np.array(gammas)
