"""Pipeline configuration: one flat dataclass, key=value file, CLI overrides.

Precedence is CLI > file > defaults. Unknown keys are rejected so a typo in
a config file fails loudly instead of silently using a default.
"""

from __future__ import annotations

import dataclasses
import hashlib
import json
from dataclasses import dataclass
from pathlib import Path

from .errors import ConfigError


@dataclass
class PipelineConfig:
    # workspace and inputs
    workdir: str = "work"
    train_file: str = ""
    dev_file: str = ""
    test_file: str = ""
    stopwords_file: str = ""

    # preprocessing
    min_count: int = 10
    normalize_suffixes: bool = False
    general_aspect: str = "General"

    # word embeddings
    embedding_dim: int = 128
    window: int = 5
    negatives: int = 5
    w2v_epochs: int = 5
    w2v_initial_lr: float = 0.025
    w2v_subsample: float = 1e-4

    # teacher
    num_aspects: int = 30
    smooth_factor: float = 0.5
    temperature: float = 1.0
    attention: str = "smooth"
    include_positive: bool = False
    batch_size: int = 50
    teacher_epochs: int = 10
    warmup_steps: int = 2000
    d_model_constant: float = 1e5
    clip_norm: float = 2.0

    # interpretation / mapping
    top_k: int = 10

    # distillation
    chi_general: float = 0.8
    chi_other: float = 1.4
    student_smooth_factor: float = 0.5
    student_min_count: int = 2
    student_epochs: int = 20

    seed: int = 13

    def __post_init__(self):
        if self.attention not in ("smooth", "plain", "mean"):
            raise ConfigError(f"attention must be smooth|plain|mean, got {self.attention!r}")
        if self.chi_general > self.chi_other:
            raise ConfigError("chi_general must not exceed chi_other")
        for name in ("embedding_dim", "num_aspects", "batch_size", "min_count", "top_k"):
            if getattr(self, name) <= 0:
                raise ConfigError(f"{name} must be positive")

    # derived artifact paths, all under the workdir
    @property
    def corpus_dir(self) -> Path:
        return Path(self.workdir) / "corpus"

    @property
    def embeddings_path(self) -> Path:
        return Path(self.workdir) / "embeddings.txt"

    @property
    def aspect_init_path(self) -> Path:
        return Path(self.workdir) / "aspect_init.ckpt"

    @property
    def teacher_path(self) -> Path:
        return Path(self.workdir) / "teacher.ckpt"

    @property
    def student_path(self) -> Path:
        return Path(self.workdir) / "student.ckpt"

    @property
    def keywords_path(self) -> Path:
        return Path(self.workdir) / "keywords.json"

    @property
    def mapping_path(self) -> Path:
        return Path(self.workdir) / "mapping.json"

    @property
    def predictions_path(self) -> Path:
        return Path(self.workdir) / "predictions.tsv"

    @property
    def metrics_path(self) -> Path:
        return Path(self.workdir) / "metrics.json"

    @property
    def results_path(self) -> Path:
        return Path(self.workdir) / "results.tsv"

    @property
    def manifest_dir(self) -> Path:
        return Path(self.workdir) / "manifests"

    @property
    def log_dir(self) -> Path:
        return Path(self.workdir) / "logs"

    def to_dict(self) -> dict:
        return dataclasses.asdict(self)

    def config_hash(self) -> str:
        payload = json.dumps(self.to_dict(), sort_keys=True).encode("utf-8")
        return hashlib.sha256(payload).hexdigest()[:16]


_FIELDS = {f.name: f for f in dataclasses.fields(PipelineConfig)}


def _coerce(name: str, raw: str):
    field = _FIELDS.get(name)
    if field is None:
        raise ConfigError(f"unknown config key {name!r}")
    raw = raw.strip()
    if field.type in ("int", int):
        try:
            return int(raw)
        except ValueError as exc:
            raise ConfigError(f"{name}: expected an integer, got {raw!r}") from exc
    if field.type in ("float", float):
        try:
            return float(raw)
        except ValueError as exc:
            raise ConfigError(f"{name}: expected a number, got {raw!r}") from exc
    if field.type in ("bool", bool):
        lowered = raw.lower()
        if lowered in ("true", "1", "yes", "on"):
            return True
        if lowered in ("false", "0", "no", "off"):
            return False
        raise ConfigError(f"{name}: expected a boolean, got {raw!r}")
    return raw


def parse_config_file(path: str | Path) -> dict:
    """Parse `key = value` lines; '#' starts a comment, blank lines ignored."""
    values: dict = {}
    for ln, line in enumerate(Path(path).read_text(encoding="utf-8").splitlines()):
        stripped = line.strip()
        if not stripped or stripped.startswith("#"):
            continue
        if "=" not in stripped:
            raise ConfigError(f"{path}:{ln + 1}: expected 'key = value'")
        key, _, raw = stripped.partition("=")
        key = key.strip()
        values[key] = _coerce(key, raw)
    return values


def load_config(
    config_file: str | Path | None = None, overrides: dict | None = None
) -> PipelineConfig:
    """Merge defaults <- config file <- overrides into a validated config."""
    values: dict = {}
    if config_file:
        p = Path(config_file)
        if not p.exists():
            raise ConfigError(f"config file not found: {p}")
        values.update(parse_config_file(p))
    for key, raw in (overrides or {}).items():
        values[key] = _coerce(key, raw) if isinstance(raw, str) else raw
        if key not in _FIELDS:
            raise ConfigError(f"unknown config key {key!r}")
    return PipelineConfig(**values)
