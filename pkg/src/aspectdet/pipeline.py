"""Pipeline stages behind the CLI subcommands.

Every stage reads its inputs from the workspace, writes immutable artifacts,
and records a manifest (config hash + input hashes) so an unchanged rerun is
a no-op and any artifact can be traced to the exact configuration that
produced it.
"""

from __future__ import annotations

import json
import os
from contextlib import contextmanager
from pathlib import Path

import numpy as np

from . import corpus as corpus_mod
from . import distill as distill_mod
from .aspects import (
    infer_batch,
    label_name,
    load_mapping,
    read_predictions,
    save_keywords,
    top_keywords,
    write_predictions,
)
from .checkpoint import file_sha256, load_checkpoint, save_checkpoint
from .config import PipelineConfig
from .corpus import PreprocessOptions, load_bundle, read_labeled_tsv, read_unlabeled, save_bundle
from .distill import FilterConfig, load_student, save_student, student_predict_text
from .embeddings import (
    SkipGramConfig,
    kmeans_init,
    load_embeddings_text,
    save_embeddings_text,
    train_skipgram,
)
from .errors import ConfigError, MissingArtifactError, SchemaError
from .metrics import evaluation_report
from .stopwords import load_stopwords
from .teacher import init_teacher, load_teacher, save_teacher, train_teacher


@contextmanager
def workspace_lock(workdir: str | Path):
    """One mutating stage at a time per workspace; stale locks fail loudly."""
    lock = Path(workdir) / ".lock"
    lock.parent.mkdir(parents=True, exist_ok=True)
    try:
        fd = os.open(lock, os.O_CREAT | os.O_EXCL | os.O_WRONLY)
    except FileExistsError:
        raise ConfigError(
            f"workspace {workdir} is locked by another stage; remove {lock} if stale"
        ) from None
    try:
        os.write(fd, str(os.getpid()).encode())
        os.close(fd)
        yield
    finally:
        lock.unlink(missing_ok=True)


def _manifest_path(config: PipelineConfig, stage: str) -> Path:
    return config.manifest_dir / f"{stage}.json"


def _hash_inputs(paths: list[Path]) -> dict[str, str]:
    hashes = {}
    for p in paths:
        if p.is_dir():
            for child in sorted(p.rglob("*")):
                if child.is_file():
                    hashes[str(child)] = file_sha256(child)
        elif p.exists():
            hashes[str(p)] = file_sha256(p)
    return hashes


def stage_is_current(
    config: PipelineConfig, stage: str, inputs: list[Path], outputs: list[Path]
) -> bool:
    """True when the stage's manifest matches config + input hashes and all
    outputs still exist (so the stage can be skipped)."""
    manifest = _manifest_path(config, stage)
    if not manifest.exists() or not all(o.exists() for o in outputs):
        return False
    try:
        recorded = json.loads(manifest.read_text(encoding="utf-8"))
    except json.JSONDecodeError:
        return False
    return (
        recorded.get("config_hash") == config.config_hash()
        and recorded.get("inputs") == _hash_inputs(inputs)
    )


def check_overwrite(config: PipelineConfig, stage: str, outputs: list[Path], force: bool):
    if force:
        return
    existing = [str(o) for o in outputs if o.exists()]
    if existing:
        raise ConfigError(
            f"stage {stage} would overwrite {', '.join(existing)}; pass --force to replace"
        )


def write_manifest(
    config: PipelineConfig, stage: str, inputs: list[Path], outputs: list[Path]
) -> dict:
    manifest = {
        "stage": stage,
        "config_hash": config.config_hash(),
        "inputs": _hash_inputs(inputs),
        "outputs": {str(o): file_sha256(o) for o in outputs if o.exists()},
    }
    path = _manifest_path(config, stage)
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(json.dumps(manifest, indent=2, sort_keys=True) + "\n", encoding="utf-8")
    return manifest


def _preprocess_options(config: PipelineConfig) -> PreprocessOptions:
    if config.stopwords_file:
        return PreprocessOptions(
            stopwords=load_stopwords(config.stopwords_file),
            normalize_suffixes=config.normalize_suffixes,
        )
    return PreprocessOptions(normalize_suffixes=config.normalize_suffixes)


def run_preprocess(config: PipelineConfig, force: bool = False) -> dict:
    """train/dev/test files -> corpus bundle directory."""
    if not config.train_file:
        raise ConfigError("train_file is required for preprocess")
    train_path = Path(config.train_file)
    if not train_path.exists():
        raise MissingArtifactError(f"train file not found: {train_path}")
    inputs = [train_path]
    labeled = []
    for split, name in (("dev", config.dev_file), ("test", config.test_file)):
        if name:
            p = Path(name)
            if not p.exists():
                raise MissingArtifactError(f"{split} file not found: {p}")
            labeled.extend(read_labeled_tsv(p, split))
            inputs.append(p)
    outputs = [config.corpus_dir]
    if stage_is_current(config, "preprocess", inputs, [config.corpus_dir / "vocabulary.tsv"]):
        return {"stage": "preprocess", "skipped": True}
    check_overwrite(config, "preprocess", [config.corpus_dir / "vocabulary.tsv"], force)

    bundle = corpus_mod.build_bundle(
        read_unlabeled(train_path),
        labeled,
        options=_preprocess_options(config),
        min_count=config.min_count,
        general_name=config.general_aspect,
    )
    save_bundle(bundle, config.corpus_dir)
    write_manifest(config, "preprocess", inputs, [config.corpus_dir / "vocabulary.tsv"])
    return {
        "stage": "preprocess",
        "vocabulary_size": bundle.vocabulary.size,
        "segments": {s: len(bundle.split_segments(s)) for s in ("train", "dev", "test")},
        "quarantined": len(bundle.quarantined),
    }


def run_train_embeddings(config: PipelineConfig, force: bool = False) -> dict:
    bundle = load_bundle(_require_dir(config.corpus_dir, "corpus"))
    inputs = [config.corpus_dir]
    outputs = [config.embeddings_path]
    if stage_is_current(config, "train-embeddings", inputs, outputs):
        return {"stage": "train-embeddings", "skipped": True}
    check_overwrite(config, "train-embeddings", outputs, force)

    sg = SkipGramConfig(
        dim=config.embedding_dim,
        window=config.window,
        negatives=config.negatives,
        epochs=config.w2v_epochs,
        initial_lr=config.w2v_initial_lr,
        subsample=config.w2v_subsample,
        seed=config.seed,
    )
    sentences = [s.tokens for s in bundle.split_segments("train")]
    matrix, losses = train_skipgram(sentences, np.array(bundle.vocabulary.counts, float), sg)
    save_embeddings_text(config.embeddings_path, bundle.vocabulary, matrix)
    write_manifest(config, "train-embeddings", inputs, outputs)
    return {
        "stage": "train-embeddings",
        "shape": list(matrix.shape),
        "loss_first": losses[0] if losses else None,
        "loss_last": losses[-1] if losses else None,
    }


def run_init_aspects(config: PipelineConfig, force: bool = False) -> dict:
    bundle = load_bundle(_require_dir(config.corpus_dir, "corpus"))
    matrix = load_embeddings_text(
        config.embeddings_path, bundle.vocabulary, expect_dim=config.embedding_dim,
        seed=config.seed,
    )
    inputs = [config.corpus_dir, config.embeddings_path]
    outputs = [config.aspect_init_path]
    if stage_is_current(config, "init-aspects", inputs, outputs):
        return {"stage": "init-aspects", "skipped": True}
    check_overwrite(config, "init-aspects", outputs, force)

    centroids = kmeans_init(matrix, config.num_aspects, seed=config.seed)
    save_checkpoint(
        config.aspect_init_path,
        "aspect-init",
        {"centroids": centroids},
        {"config_hash": config.config_hash(), "vocab_hash": bundle.vocabulary.content_hash()},
    )
    write_manifest(config, "init-aspects", inputs, outputs)
    return {"stage": "init-aspects", "shape": list(centroids.shape)}


def run_train_teacher(config: PipelineConfig, force: bool = False) -> dict:
    bundle = load_bundle(_require_dir(config.corpus_dir, "corpus"))
    matrix = load_embeddings_text(
        config.embeddings_path, bundle.vocabulary, expect_dim=config.embedding_dim,
        seed=config.seed,
    )
    _, arrays, _ = load_checkpoint(config.aspect_init_path, expect_kind="aspect-init")
    inputs = [config.corpus_dir, config.embeddings_path, config.aspect_init_path]
    outputs = [config.teacher_path]
    if stage_is_current(config, "train-teacher", inputs, outputs):
        return {"stage": "train-teacher", "skipped": True}
    check_overwrite(config, "train-teacher", outputs, force)

    model = init_teacher(
        matrix,
        arrays["centroids"],
        smooth_factor=config.smooth_factor,
        temperature=config.temperature,
        attention=config.attention,
        include_positive=config.include_positive,
        seed=config.seed,
    )
    config.log_dir.mkdir(parents=True, exist_ok=True)
    history = train_teacher(
        model,
        bundle.split_segments("train"),
        epochs=config.teacher_epochs,
        batch_size=config.batch_size,
        seed=config.seed,
        clip_norm=config.clip_norm,
        warmup_steps=config.warmup_steps,
        d_model=config.d_model_constant,
        log_path=config.log_dir / "teacher.jsonl",
    )
    save_teacher(
        config.teacher_path,
        model,
        {
            "config_hash": config.config_hash(),
            "vocab_hash": bundle.vocabulary.content_hash(),
            "seed": config.seed,
            "epochs": config.teacher_epochs,
        },
    )
    write_manifest(config, "train-teacher", inputs, outputs)
    return {
        "stage": "train-teacher",
        "steps": history.steps,
        "loss_first": history.epoch_losses[0],
        "loss_last": history.epoch_losses[-1],
        "omega_last": history.epoch_penalties[-1],
    }


def run_keywords(config: PipelineConfig, force: bool = False) -> dict:
    bundle = load_bundle(_require_dir(config.corpus_dir, "corpus"))
    model, _ = load_teacher(config.teacher_path)
    inputs = [config.corpus_dir, config.teacher_path]
    outputs = [config.keywords_path]
    if stage_is_current(config, "keywords", inputs, outputs):
        return {"stage": "keywords", "skipped": True}
    check_overwrite(config, "keywords", outputs, force)

    kws = top_keywords(model.aspects, model.embeddings, bundle.vocabulary, top_k=config.top_k)
    save_keywords(config.keywords_path, kws, config_hash=config.config_hash())
    write_manifest(config, "keywords", inputs, outputs)
    return {"stage": "keywords", "aspects": len(kws), "top_k": config.top_k}


def run_infer(config: PipelineConfig, split: str = "dev", force: bool = False) -> dict:
    bundle = load_bundle(_require_dir(config.corpus_dir, "corpus"))
    model, _ = load_teacher(config.teacher_path)
    mapping = load_mapping(config.mapping_path, expect_model_aspects=model.num_aspects)
    mapping.require_mapped()
    if bundle.gold_aspect_names and set(mapping.gsa_names) != set(bundle.gold_aspect_names):
        raise SchemaError(
            "mapping gold-aspect names do not match the corpus; was the mapping "
            "authored against a different dataset?"
        )
    inputs = [config.corpus_dir, config.teacher_path, config.mapping_path]
    outputs = [config.predictions_path]
    if stage_is_current(config, f"infer-{split}", inputs, outputs):
        return {"stage": "infer", "skipped": True}
    check_overwrite(config, f"infer-{split}", outputs, force)

    segments = bundle.split_segments(split)
    if not segments:
        raise MissingArtifactError(f"no segments in split {split!r}")
    labels = infer_batch(model, segments, mapping)
    write_predictions(
        config.predictions_path,
        [s.segment_id for s in segments],
        labels,
        mapping,
        config_hash=config.config_hash(),
    )
    write_manifest(config, f"infer-{split}", inputs, outputs)
    return {"stage": "infer", "split": split, "count": len(labels)}


def run_distill(config: PipelineConfig, force: bool = False) -> dict:
    bundle = load_bundle(_require_dir(config.corpus_dir, "corpus"))
    model, _ = load_teacher(config.teacher_path)
    mapping = load_mapping(config.mapping_path, expect_model_aspects=model.num_aspects)
    mapping.require_mapped()
    inputs = [config.corpus_dir, config.teacher_path, config.mapping_path]
    outputs = [config.student_path]
    if stage_is_current(config, "distill", inputs, outputs):
        return {"stage": "distill", "skipped": True}
    check_overwrite(config, "distill", outputs, force)

    train_segments = bundle.split_segments("train")
    teacher_labels = infer_batch(model, train_segments, mapping)

    def embed_trainer(token_lists, counts):
        sg = SkipGramConfig(
            dim=config.embedding_dim,
            window=config.window,
            negatives=config.negatives,
            epochs=config.w2v_epochs,
            initial_lr=config.w2v_initial_lr,
            subsample=config.w2v_subsample,
            seed=config.seed,
        )
        matrix, _ = train_skipgram([t for t in token_lists if t], counts, sg)
        return matrix

    dev_pairs = [
        (s.raw_text, s.gold_aspect)
        for s in bundle.split_segments("dev")
        if s.gold_aspect is not None
    ]
    result = distill_mod.distill(
        [s.raw_text for s in train_segments],
        teacher_labels,
        num_classes=mapping.num_gold_aspects,
        general_index=mapping.general_index,
        filter_config=FilterConfig(config.chi_general, config.chi_other),
        embed_trainer=embed_trainer,
        smooth_factor=config.student_smooth_factor,
        min_count=config.student_min_count,
        epochs=config.student_epochs,
        batch_size=config.batch_size,
        seed=config.seed,
        clip_norm=config.clip_norm,
        warmup_steps=config.warmup_steps,
        d_model=config.d_model_constant,
        dev=dev_pairs or None,
    )
    save_student(
        config.student_path,
        result.model,
        result.vocabulary,
        {
            "config_hash": config.config_hash(),
            "gsa_names": mapping.gsa_names,
            "general": (
                mapping.gsa_names[mapping.general_index]
                if mapping.general_index is not None
                else None
            ),
        },
    )
    write_manifest(config, "distill", inputs, outputs)
    return {
        "stage": "distill",
        "kept": result.kept,
        "dropped": result.dropped,
        "loss_last": result.epoch_losses[-1],
        "dev_best": max(result.dev_scores) if result.dev_scores else None,
    }


def run_student_infer(config: PipelineConfig, split: str = "dev", force: bool = False) -> dict:
    """Student predictions.tsv for a split, same schema as teacher inference."""
    from .aspects import AspectMapping, GoldLabel

    bundle = load_bundle(_require_dir(config.corpus_dir, "corpus"))
    model, vocab, meta = load_student(config.student_path)
    names = list(meta["gsa_names"])
    general = meta.get("general")
    inputs = [config.corpus_dir, config.student_path]
    outputs = [config.predictions_path]
    if stage_is_current(config, f"infer-student-{split}", inputs, outputs):
        return {"stage": "infer", "skipped": True}
    check_overwrite(config, f"infer-student-{split}", outputs, force)

    # identity mapping: student classes already are the gold aspects
    mapping = AspectMapping(
        entries=list(range(len(names))),
        gsa_names=names,
        general_index=names.index(general) if general in names else None,
    )
    segments = bundle.split_segments(split)
    if not segments:
        raise MissingArtifactError(f"no segments in split {split!r}")
    labels = []
    for seg in segments:
        probs, had_tokens = student_predict_text(model, vocab, seg.raw_text)
        entropy = float(-(probs[probs > 0] * np.log(probs[probs > 0])).sum())
        labels.append(
            GoldLabel(
                gamma=probs,
                y_hat=int(np.argmax(probs)),
                entropy=entropy,
                mapped_mass=1.0,
                unmappable=not had_tokens,
            )
        )
    write_predictions(
        config.predictions_path,
        [s.segment_id for s in segments],
        labels,
        mapping,
        config_hash=config.config_hash(),
    )
    write_manifest(config, f"infer-student-{split}", inputs, outputs)
    return {"stage": "infer", "split": split, "count": len(labels), "model": "student"}


def run_evaluate(config: PipelineConfig, split: str = "dev", force: bool = False) -> dict:
    """Score predictions.tsv against the gold labels of a split."""
    bundle = load_bundle(_require_dir(config.corpus_dir, "corpus"))
    ids, names, _, _ = read_predictions(config.predictions_path)
    inputs = [config.corpus_dir, config.predictions_path]
    outputs = [config.metrics_path]
    if stage_is_current(config, f"evaluate-{split}", inputs, outputs):
        return dict(
            json.loads(config.metrics_path.read_text(encoding="utf-8")), skipped=True
        )
    check_overwrite(config, f"evaluate-{split}", outputs, force)

    gold_by_id = {
        s.segment_id: s.gold_aspect
        for s in bundle.split_segments(split)
        if s.gold_aspect is not None
    }
    label_names = bundle.gold_aspect_names
    name_to_idx = {n: i for i, n in enumerate(label_names)}
    gold, pred = [], []
    for sid, pname in zip(ids, names):
        if sid not in gold_by_id:
            continue
        gold.append(gold_by_id[sid])
        pred.append(name_to_idx.get(pname, -1))
    if not gold:
        raise MissingArtifactError(f"no gold labels for split {split!r} match the predictions")
    report = evaluation_report(gold, pred, label_names)
    report["config_hash"] = config.config_hash()
    config.metrics_path.write_text(
        json.dumps(report, indent=2, sort_keys=True) + "\n", encoding="utf-8"
    )
    write_manifest(config, f"evaluate-{split}", inputs, outputs)
    return report


def _require_dir(path: Path, what: str) -> Path:
    if not path.is_dir():
        raise MissingArtifactError(f"{what} directory not found: {path}")
    return path
