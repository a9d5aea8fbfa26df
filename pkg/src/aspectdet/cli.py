"""Command-line entry point: one subcommand per pipeline stage.

Exit codes: 0 ok, 2 config error, 3 missing artifact, 4 numeric failure,
5 schema violation. --json switches human-readable output to JSON.
"""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

import numpy as np

from . import pipeline
from .ablation import Variant, run_ablation, sweep_variants, write_results_tsv
from .config import PipelineConfig, load_config
from .corpus import load_bundle
from .embeddings import load_embeddings_text
from .errors import PipelineError

STAGES = {
    "preprocess": pipeline.run_preprocess,
    "train-embeddings": pipeline.run_train_embeddings,
    "init-aspects": pipeline.run_init_aspects,
    "train-teacher": pipeline.run_train_teacher,
    "keywords": pipeline.run_keywords,
}


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="aspectdet",
        description="Unsupervised aspect detection pipeline",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    def add_common(p):
        p.add_argument("--config", help="key = value config file")
        p.add_argument(
            "--set",
            dest="overrides",
            action="append",
            default=[],
            metavar="KEY=VALUE",
            help="override a config key (repeatable)",
        )
        p.add_argument("--workdir", help="workspace directory (shorthand for --set workdir=...)")
        p.add_argument("--json", action="store_true", help="machine-readable output")
        p.add_argument("--force", action="store_true", help="replace existing artifacts")
        return p

    for name in (
        "preprocess",
        "train-embeddings",
        "init-aspects",
        "train-teacher",
        "keywords",
        "distill",
    ):
        add_common(sub.add_parser(name))

    infer = add_common(sub.add_parser("infer"))
    infer.add_argument("--split", default="dev", choices=("train", "dev", "test"))
    infer.add_argument("--student", action="store_true", help="use the student checkpoint")

    ev = add_common(sub.add_parser("evaluate"))
    ev.add_argument("--split", default="dev", choices=("dev", "test"))

    ab = add_common(sub.add_parser("ablate"))
    ab.add_argument("--seeds", default="1,2,3,4,5", help="comma-separated seed list")
    ab.add_argument("--attentions", default="smooth,plain,mean")
    ab.add_argument("--smooth-factors", default="0.5,1,2,3,4,5")
    ab.add_argument("--batch-sizes", default="10,20,50,100,200")
    ab.add_argument("--epochs", type=int, default=None, help="override teacher epochs")

    serve = add_common(sub.add_parser("serve-map"))
    serve.add_argument("--port", type=int, default=7878)
    serve.add_argument("--host", default="127.0.0.1")
    serve.add_argument("--checkpoint", help="teacher checkpoint (default: workdir teacher.ckpt)")
    serve.add_argument("--ui-dir", help="static UI bundle directory")
    return parser


def _config_from_args(args) -> PipelineConfig:
    overrides = {}
    for item in args.overrides:
        key, sep, value = item.partition("=")
        if not sep:
            raise PipelineError(f"--set expects KEY=VALUE, got {item!r}")
        overrides[key.strip()] = value.strip()
    if args.workdir:
        overrides["workdir"] = args.workdir
    return load_config(args.config, overrides)


def _emit(result: dict, as_json: bool) -> None:
    if as_json:
        print(json.dumps(result, sort_keys=True))
        return
    stage = result.get("stage", "result")
    if result.get("skipped"):
        print(f"{stage}: up to date, skipped (use --force to rerun)")
        return
    parts = [f"{k}={v}" for k, v in result.items() if k != "stage"]
    print(f"{stage}: " + ", ".join(parts))


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        config = _config_from_args(args)
        if args.command in STAGES:
            with pipeline.workspace_lock(config.workdir):
                result = STAGES[args.command](config, force=args.force)
            _emit(result, args.json)
        elif args.command == "distill":
            with pipeline.workspace_lock(config.workdir):
                result = pipeline.run_distill(config, force=args.force)
            _emit(result, args.json)
        elif args.command == "infer":
            with pipeline.workspace_lock(config.workdir):
                if args.student:
                    result = pipeline.run_student_infer(config, args.split, force=args.force)
                else:
                    result = pipeline.run_infer(config, split=args.split, force=args.force)
            _emit(result, args.json)
        elif args.command == "evaluate":
            result = pipeline.run_evaluate(config, split=args.split, force=args.force)
            if args.json:
                print(json.dumps(result, sort_keys=True))
            else:
                wm = result["weighted_macro"]
                print(
                    f"evaluate[{args.split}]: micro_f1={result['micro_f1']:.4f} "
                    f"weighted P/R/F={wm['precision']:.4f}/{wm['recall']:.4f}/{wm['f1']:.4f} "
                    f"n={result['count']}"
                )
        elif args.command == "ablate":
            result = _run_ablate(config, args)
            _emit(result, args.json)
        elif args.command == "serve-map":
            _serve(config, args)
        else:  # pragma: no cover - argparse guards this
            raise PipelineError(f"unknown command {args.command}")
    except PipelineError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return exc.exit_code
    return 0


def _run_ablate(config: PipelineConfig, args) -> dict:
    pipeline.check_overwrite(config, "ablate", [config.results_path], args.force)
    bundle = load_bundle(config.corpus_dir)
    matrix = load_embeddings_text(
        config.embeddings_path, bundle.vocabulary, expect_dim=config.embedding_dim,
        seed=config.seed,
    )
    seeds = [int(s) for s in args.seeds.split(",") if s]
    variants = sweep_variants(
        attentions=tuple(a for a in args.attentions.split(",") if a),
        smooth_factors=tuple(float(x) for x in args.smooth_factors.split(",") if x),
        batch_sizes=tuple(int(x) for x in args.batch_sizes.split(",") if x),
        base=Variant(config.attention, config.smooth_factor, config.batch_size),
    )
    mapper = _keyword_majority_mapper(config, bundle)
    rows = run_ablation(
        bundle,
        matrix,
        variants,
        seeds,
        mapper,
        num_aspects=config.num_aspects,
        epochs=args.epochs or config.teacher_epochs,
        temperature=config.temperature,
        top_k=config.top_k,
        warmup_steps=config.warmup_steps,
        d_model=config.d_model_constant,
        clip_norm=config.clip_norm,
    )
    write_results_tsv(rows, config.results_path, config_hash=config.config_hash())
    return {"stage": "ablate", "rows": len(rows), "results": str(config.results_path)}


def _keyword_majority_mapper(config: PipelineConfig, bundle):
    """Ablation auto-mapper: majority vote of keyword membership per gold
    aspect, using dev-split tokens as the aspect lexicon. Works when segment
    vocabularies separate cleanly (the synthetic corpus); real corpora go
    through the interactive workbench instead."""
    lexicon: dict[str, int] = {}
    for seg in bundle.split_segments("dev"):
        if seg.gold_aspect is None:
            continue
        for idx in seg.tokens:
            word = bundle.vocabulary.index_to_word[idx]
            if word not in lexicon:
                lexicon[word] = seg.gold_aspect

    def mapper(keyword_lists):
        from .aspects import AspectMapping

        entries = []
        k = len(bundle.gold_aspect_names)
        for kw in keyword_lists:
            votes = np.zeros(k)
            for token, _ in kw.keywords:
                if token in lexicon:
                    votes[lexicon[token]] += 1
            total = votes.sum()
            if total == 0 or votes.max() / max(len(kw.keywords), 1) < 0.6:
                entries.append(None)
            else:
                entries.append(int(np.argmax(votes)))
        return AspectMapping(
            entries=entries,
            gsa_names=list(bundle.gold_aspect_names),
            general_index=bundle.general_index,
        )

    return mapper


def _serve(config: PipelineConfig, args) -> None:
    import uvicorn

    from .server import build_app

    checkpoint = Path(args.checkpoint) if args.checkpoint else config.teacher_path
    ui_dir = Path(args.ui_dir) if args.ui_dir else Path("frontend/dist")
    if not ui_dir.is_dir():
        print(f"note: no UI bundle at {ui_dir}, serving the JSON API only", file=sys.stderr)
        ui_dir = None
    app = build_app(config, checkpoint_path=checkpoint, ui_dir=ui_dir)
    uvicorn.run(app, host=args.host, port=args.port, log_level="warning")


if __name__ == "__main__":
    sys.exit(main())
