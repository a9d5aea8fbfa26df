"""Planted-topic synthetic corpus for end-to-end checks.

Topics have disjoint vocabularies, so a correct pipeline must recover them:
learned aspects should interpret as near-pure topic word lists, and the
scripted mapping (majority vote of keyword topic membership) should yield
high segment-level accuracy.
"""

from __future__ import annotations

from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .aspects import AspectKeywords, AspectMapping


@dataclass(frozen=True)
class SyntheticSpec:
    num_topics: int = 5
    words_per_topic: int = 50
    num_segments: int = 2000
    min_len: int = 6
    max_len: int = 12
    dev_fraction: float = 0.15
    test_fraction: float = 0.15
    seed: int = 7


def topic_word(topic: int, rank: int) -> str:
    return f"topic{topic}word{rank:02d}"


def topic_vocabularies(spec: SyntheticSpec) -> list[set[str]]:
    return [
        {topic_word(t, r) for r in range(spec.words_per_topic)} for t in range(spec.num_topics)
    ]


def generate(spec: SyntheticSpec) -> tuple[list[tuple[str, int]], list[str]]:
    """Return ((text, topic) segments, topic names).

    Word choice within a topic is mildly Zipfian so the vocabulary has a
    realistic frequency profile for subsampling and negative sampling.
    """
    rng = np.random.default_rng(spec.seed)
    ranks = np.arange(spec.words_per_topic)
    word_probs = 1.0 / (ranks + 3.0)
    word_probs /= word_probs.sum()

    segments = []
    for _ in range(spec.num_segments):
        topic = int(rng.integers(spec.num_topics))
        length = int(rng.integers(spec.min_len, spec.max_len + 1))
        words = rng.choice(spec.words_per_topic, size=length, p=word_probs)
        text = " ".join(topic_word(topic, int(w)) for w in words)
        segments.append((text, topic))
    names = [f"topic{t}" for t in range(spec.num_topics)]
    return segments, names


def write_split_files(
    segments: list[tuple[str, int]],
    names: list[str],
    out_dir: str | Path,
    spec: SyntheticSpec,
) -> tuple[Path, Path, Path]:
    """Write train.txt (unlabeled) plus labeled dev.tsv / test.tsv."""
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    n = len(segments)
    n_dev = int(n * spec.dev_fraction)
    n_test = int(n * spec.test_fraction)
    dev, test, train = (
        segments[:n_dev],
        segments[n_dev : n_dev + n_test],
        segments[n_dev + n_test :],
    )

    train_path = out / "train.txt"
    train_path.write_text("\n".join(text for text, _ in train) + "\n", encoding="utf-8")
    dev_path = out / "dev.tsv"
    dev_path.write_text(
        "\n".join(f"dev-{i:05d}\t{names[topic]}\t{text}" for i, (text, topic) in enumerate(dev))
        + "\n",
        encoding="utf-8",
    )
    test_path = out / "test.tsv"
    test_path.write_text(
        "\n".join(
            f"test-{i:05d}\t{names[topic]}\t{text}" for i, (text, topic) in enumerate(test)
        )
        + "\n",
        encoding="utf-8",
    )
    return train_path, dev_path, test_path


def keyword_topic_fractions(
    keywords: AspectKeywords, topic_vocabs: list[set[str]]
) -> np.ndarray:
    """Fraction of an aspect's keywords drawn from each topic's vocabulary."""
    counts = np.zeros(len(topic_vocabs))
    for token, _ in keywords.keywords:
        for t, vocab in enumerate(topic_vocabs):
            if token in vocab:
                counts[t] += 1
                break
    total = len(keywords.keywords)
    return counts / total if total else counts


def scripted_mapping(
    keyword_lists: list[AspectKeywords],
    topic_vocabs: list[set[str]],
    names: list[str],
    majority: float = 0.6,
) -> AspectMapping:
    """Deterministic stand-in for the human mapping step on synthetic data.

    An aspect maps to the topic that owns a clear majority of its keywords;
    mixed or unrecognizable keyword lists stay unmapped, mirroring how a
    human rejects noisy aspects.
    """
    entries: list[int | None] = []
    for kw in keyword_lists:
        fractions = keyword_topic_fractions(kw, topic_vocabs)
        best = int(np.argmax(fractions))
        entries.append(best if fractions[best] >= majority else None)
    return AspectMapping(entries=entries, gsa_names=list(names), general_index=None)
