"""Corpus ingestion: text normalization, vocabulary construction, segment encoding.

Input files are already segmented (one review segment per line); labeled
splits are TSV with ``segment_id<TAB>gold_aspect_name<TAB>text``.
"""

from __future__ import annotations

import hashlib
import re
from collections import Counter
from dataclasses import dataclass, field
from pathlib import Path

from .errors import SchemaError
from .stopwords import DEFAULT_STOPWORDS

_NON_WORD_RE = re.compile(r"[^a-z0-9\s]+")

SPLITS = ("train", "dev", "test")


@dataclass(frozen=True)
class PreprocessOptions:
    """Controls text normalization.

    Suffix normalization is a lightweight rule-based substitute for
    lemmatization (plural and verb endings only); off by default.
    """

    stopwords: frozenset[str] = DEFAULT_STOPWORDS
    normalize_suffixes: bool = False
    lowercase: bool = True


def _strip_suffix(token: str) -> str:
    """Rule-based plural/verb-ending normalization. Numbers pass through."""
    if token.isdigit() or len(token) <= 3:
        return token
    if token.endswith("sses"):
        return token[:-2]
    if token.endswith("ies") and len(token) > 4:
        return token[:-3] + "y"
    if token.endswith("ing") and len(token) > 5:
        return token[:-3]
    if token.endswith("ed") and len(token) > 4:
        return token[:-2]
    if token.endswith("s") and not token.endswith("ss"):
        return token[:-1]
    return token


def preprocess(raw_text: str, options: PreprocessOptions | None = None) -> list[str]:
    """Normalize one segment into a token list.

    Lowercases, replaces punctuation with whitespace, splits on whitespace,
    drops stopwords, then optionally applies suffix normalization. An empty
    result is legal (caller decides whether to quarantine).
    """
    opts = options or PreprocessOptions()
    text = raw_text.lower() if opts.lowercase else raw_text
    text = _NON_WORD_RE.sub(" ", text)
    tokens = [t for t in text.split() if t not in opts.stopwords]
    if opts.normalize_suffixes:
        tokens = [_strip_suffix(t) for t in tokens]
        tokens = [t for t in tokens if t and t not in opts.stopwords]
    return tokens


@dataclass
class Vocabulary:
    """Dense token index: id 0..V-1, ordered by descending frequency then token."""

    word_to_index: dict[str, int]
    index_to_word: list[str]
    counts: list[int]

    @property
    def size(self) -> int:
        return len(self.index_to_word)

    def encode(self, tokens: list[str]) -> list[int]:
        """Map tokens to indices, silently dropping out-of-vocabulary tokens."""
        w2i = self.word_to_index
        return [w2i[t] for t in tokens if t in w2i]

    def decode(self, indices: list[int]) -> list[str]:
        return [self.index_to_word[i] for i in indices]

    def save_tsv(self, path: str | Path) -> None:
        lines = [
            f"{i}\t{w}\t{c}"
            for i, (w, c) in enumerate(zip(self.index_to_word, self.counts))
        ]
        Path(path).write_text("\n".join(lines) + "\n", encoding="utf-8")

    @classmethod
    def load_tsv(cls, path: str | Path) -> "Vocabulary":
        index_to_word, counts = [], []
        for ln, line in enumerate(Path(path).read_text(encoding="utf-8").splitlines()):
            if not line:
                continue
            parts = line.split("\t")
            if len(parts) != 3:
                raise SchemaError(f"{path}:{ln + 1}: expected 3 TSV fields")
            idx, word, count = int(parts[0]), parts[1], int(parts[2])
            if idx != len(index_to_word):
                raise SchemaError(f"{path}:{ln + 1}: indices must be dense, got {idx}")
            index_to_word.append(word)
            counts.append(count)
        return cls(
            word_to_index={w: i for i, w in enumerate(index_to_word)},
            index_to_word=index_to_word,
            counts=counts,
        )

    def content_hash(self) -> str:
        h = hashlib.sha256()
        for w, c in zip(self.index_to_word, self.counts):
            h.update(f"{w}\t{c}\n".encode("utf-8"))
        return h.hexdigest()


def build_vocabulary(token_lists: list[list[str]], min_count: int = 10) -> Vocabulary:
    """Build a vocabulary from tokenized segments.

    Keeps tokens with corpus frequency >= min_count. Index order is
    descending frequency with lexicographic tie-break, so the same corpus
    and options always yield an identical vocabulary.
    """
    counter: Counter[str] = Counter()
    for tokens in token_lists:
        counter.update(tokens)
    kept = [(w, c) for w, c in counter.items() if c >= min_count]
    if not kept:
        raise SchemaError(
            f"vocabulary is empty at min_count={min_count}; lower the threshold"
        )
    kept.sort(key=lambda wc: (-wc[1], wc[0]))
    return Vocabulary(
        word_to_index={w: i for i, (w, _) in enumerate(kept)},
        index_to_word=[w for w, _ in kept],
        counts=[c for _, c in kept],
    )


@dataclass
class Segment:
    """One encoded review segment; gold_aspect is set on dev/test only."""

    segment_id: str
    split: str
    tokens: list[int]
    raw_text: str
    gold_aspect: int | None = None


@dataclass
class CorpusBundle:
    """Vocabulary plus encoded segments per split and the gold aspect schema."""

    vocabulary: Vocabulary
    segments: dict[str, list[Segment]] = field(default_factory=dict)
    quarantined: list[Segment] = field(default_factory=list)
    gold_aspect_names: list[str] = field(default_factory=list)
    general_index: int | None = None

    def split_segments(self, split: str) -> list[Segment]:
        return self.segments.get(split, [])

    def aspect_name(self, index: int) -> str:
        if index < 0:
            return "Unknown"
        return self.gold_aspect_names[index]


def encode_segments(
    vocabulary: Vocabulary,
    records: list[tuple[str, str, list[str], str, int | None]],
) -> tuple[list[Segment], list[Segment]]:
    """Encode (segment_id, split, tokens, raw_text, gold) records.

    Segments that end up with no in-vocabulary tokens are routed to the
    quarantine list with their ids preserved; they never enter training.
    """
    kept, quarantined = [], []
    for segment_id, split, tokens, raw_text, gold in records:
        indices = vocabulary.encode(tokens)
        seg = Segment(segment_id, split, indices, raw_text, gold)
        (kept if indices else quarantined).append(seg)
    return kept, quarantined


def read_unlabeled(path: str | Path, split: str = "train") -> list[tuple[str, str, str]]:
    """Read one-segment-per-line text; returns (segment_id, split, text) rows."""
    rows = []
    for i, line in enumerate(Path(path).read_text(encoding="utf-8").splitlines()):
        text = line.strip()
        if text:
            rows.append((f"{split}-{i:06d}", split, text))
    return rows


def read_labeled_tsv(path: str | Path, split: str) -> list[tuple[str, str, str, str]]:
    """Read a labeled split: segment_id<TAB>gold_aspect_name<TAB>text."""
    rows = []
    for ln, line in enumerate(Path(path).read_text(encoding="utf-8").splitlines()):
        if not line.strip():
            continue
        parts = line.split("\t")
        if len(parts) != 3:
            raise SchemaError(f"{path}:{ln + 1}: expected 3 TSV fields, got {len(parts)}")
        segment_id, gold_name, text = parts
        rows.append((segment_id, split, gold_name, text))
    return rows


def build_bundle(
    train_rows: list[tuple[str, str, str]],
    labeled_rows: list[tuple[str, str, str, str]],
    options: PreprocessOptions | None = None,
    min_count: int = 10,
    general_name: str = "General",
) -> CorpusBundle:
    """Preprocess, build the vocabulary on the train split, and encode everything.

    Gold aspect names are collected from the labeled rows, sorted for a
    stable index order. At most one name may match ``general_name``.
    """
    opts = options or PreprocessOptions()
    train_tokens = [(sid, split, preprocess(text, opts), text) for sid, split, text in train_rows]
    vocabulary = build_vocabulary([toks for _, _, toks, _ in train_tokens], min_count)

    gold_names = sorted({gold for _, _, gold, _ in labeled_rows})
    name_to_idx = {n: i for i, n in enumerate(gold_names)}
    general_index = name_to_idx.get(general_name)

    records = [(sid, split, toks, text, None) for sid, split, toks, text in train_tokens]
    for sid, split, gold_name, text in labeled_rows:
        records.append((sid, split, preprocess(text, opts), text, name_to_idx[gold_name]))

    kept, quarantined = encode_segments(vocabulary, records)
    segments: dict[str, list[Segment]] = {s: [] for s in SPLITS}
    for seg in kept:
        segments.setdefault(seg.split, []).append(seg)

    return CorpusBundle(
        vocabulary=vocabulary,
        segments=segments,
        quarantined=quarantined,
        gold_aspect_names=gold_names,
        general_index=general_index,
    )


def save_bundle(bundle: CorpusBundle, out_dir: str | Path) -> None:
    """Write the bundle as plain files: vocabulary.tsv, segments.tsv, raw.tsv,
    gold.tsv, aspects.tsv, quarantine.tsv."""
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    bundle.vocabulary.save_tsv(out / "vocabulary.tsv")

    seg_lines, raw_lines, gold_lines = [], [], []
    for split in SPLITS:
        for seg in bundle.split_segments(split):
            indices = " ".join(str(i) for i in seg.tokens)
            seg_lines.append(f"{seg.segment_id}\t{seg.split}\t{indices}")
            raw_lines.append(f"{seg.segment_id}\t{seg.split}\t{_tab_safe(seg.raw_text)}")
            if seg.gold_aspect is not None:
                gold_lines.append(f"{seg.segment_id}\t{bundle.gold_aspect_names[seg.gold_aspect]}")
    (out / "segments.tsv").write_text("\n".join(seg_lines) + "\n", encoding="utf-8")
    (out / "raw.tsv").write_text("\n".join(raw_lines) + "\n", encoding="utf-8")
    (out / "gold.tsv").write_text("\n".join(gold_lines) + ("\n" if gold_lines else ""), encoding="utf-8")

    aspect_lines = [
        f"{name}\t{'general' if bundle.general_index == i else '-'}"
        for i, name in enumerate(bundle.gold_aspect_names)
    ]
    (out / "aspects.tsv").write_text("\n".join(aspect_lines) + ("\n" if aspect_lines else ""), encoding="utf-8")

    q_lines = [
        f"{seg.segment_id}\t{seg.split}\t{_tab_safe(seg.raw_text)}" for seg in bundle.quarantined
    ]
    (out / "quarantine.tsv").write_text("\n".join(q_lines) + ("\n" if q_lines else ""), encoding="utf-8")


def load_bundle(in_dir: str | Path) -> CorpusBundle:
    src = Path(in_dir)
    vocabulary = Vocabulary.load_tsv(src / "vocabulary.tsv")

    gold_names, general_index = [], None
    aspects_path = src / "aspects.tsv"
    if aspects_path.exists():
        for line in aspects_path.read_text(encoding="utf-8").splitlines():
            if not line:
                continue
            name, flag = line.split("\t")
            if flag == "general":
                general_index = len(gold_names)
            gold_names.append(name)

    gold_by_id: dict[str, int] = {}
    gold_path = src / "gold.tsv"
    if gold_path.exists():
        name_to_idx = {n: i for i, n in enumerate(gold_names)}
        for line in gold_path.read_text(encoding="utf-8").splitlines():
            if not line:
                continue
            sid, name = line.split("\t")
            if name not in name_to_idx:
                raise SchemaError(f"gold.tsv references unknown aspect {name!r}")
            gold_by_id[sid] = name_to_idx[name]

    raw_by_id: dict[str, str] = {}
    raw_path = src / "raw.tsv"
    if raw_path.exists():
        for line in raw_path.read_text(encoding="utf-8").splitlines():
            if not line:
                continue
            sid, _, text = line.split("\t", 2)
            raw_by_id[sid] = text

    segments: dict[str, list[Segment]] = {s: [] for s in SPLITS}
    for ln, line in enumerate((src / "segments.tsv").read_text(encoding="utf-8").splitlines()):
        if not line:
            continue
        parts = line.split("\t")
        if len(parts) != 3:
            raise SchemaError(f"segments.tsv:{ln + 1}: expected 3 fields")
        sid, split, indices = parts
        tokens = [int(t) for t in indices.split()] if indices else []
        if any(t >= vocabulary.size for t in tokens):
            raise SchemaError(f"segments.tsv:{ln + 1}: token index out of range")
        segments.setdefault(split, []).append(
            Segment(sid, split, tokens, raw_by_id.get(sid, ""), gold_by_id.get(sid))
        )

    quarantined = []
    q_path = src / "quarantine.tsv"
    if q_path.exists():
        for line in q_path.read_text(encoding="utf-8").splitlines():
            if not line:
                continue
            sid, split, text = line.split("\t", 2)
            quarantined.append(Segment(sid, split, [], text, None))

    return CorpusBundle(
        vocabulary=vocabulary,
        segments=segments,
        quarantined=quarantined,
        gold_aspect_names=gold_names,
        general_index=general_index,
    )


def _tab_safe(text: str) -> str:
    return text.replace("\t", " ").replace("\n", " ")
