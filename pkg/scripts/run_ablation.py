#!/usr/bin/env python3
"""Ablation sweep on the synthetic corpus: attention kind, smoothing, batch size.

Expects a workspace produced by run_synthetic_pipeline.py (reuses its corpus
and embeddings). Writes results.tsv into the workspace.

Usage: python3 scripts/run_ablation.py [workspace_root] [--seeds 1,2,3,4,5]
"""

import argparse
import sys
from pathlib import Path

sys.path.insert(0, str(Path(__file__).resolve().parent.parent / "src"))

from aspectdet import synthetic
from aspectdet.ablation import Variant, run_ablation, sweep_variants, write_results_tsv
from aspectdet.config import load_config
from aspectdet.corpus import load_bundle
from aspectdet.embeddings import load_embeddings_text


def main():
    parser = argparse.ArgumentParser()
    parser.add_argument("root", nargs="?", default="synthetic_run")
    parser.add_argument("--seeds", default="1,2,3,4,5")
    parser.add_argument("--epochs", type=int, default=6)
    args = parser.parse_args()

    root = Path(args.root)
    config = load_config(root / "synthetic.cfg")
    bundle = load_bundle(config.corpus_dir)
    matrix = load_embeddings_text(
        config.embeddings_path, bundle.vocabulary, expect_dim=config.embedding_dim
    )
    spec = synthetic.SyntheticSpec(seed=config.seed)
    topic_vocabs = synthetic.topic_vocabularies(spec)
    names = [f"topic{t}" for t in range(spec.num_topics)]

    def mapper(kws):
        return synthetic.scripted_mapping(kws, topic_vocabs, names)

    variants = sweep_variants(
        attentions=("smooth", "plain", "mean"),
        smooth_factors=(0.5, 1.0, 2.0, 5.0),
        batch_sizes=(10, 20, 50, 100),
        base=Variant("smooth", config.smooth_factor, config.batch_size),
    )
    seeds = [int(s) for s in args.seeds.split(",") if s]
    print(f"{len(variants)} variants x {len(seeds)} seeds ...")
    rows = run_ablation(
        bundle, matrix, variants, seeds, mapper,
        num_aspects=config.num_aspects, epochs=args.epochs,
        warmup_steps=config.warmup_steps, d_model=config.d_model_constant,
    )
    write_results_tsv(rows, config.results_path, config_hash=config.config_hash())
    print(f"wrote {len(rows)} rows to {config.results_path}")

    by_attention = {}
    for row in rows:
        by_attention.setdefault(row["attention"], []).append(row["micro_f1"])
    for attention, scores in sorted(by_attention.items()):
        print(f"  {attention:>7}: mean micro-F1 {sum(scores) / len(scores):.4f}")


if __name__ == "__main__":
    main()
