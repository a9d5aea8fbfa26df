"""Acceptance suite: one test per release criterion, at pinned tolerances.

Each test prints a PASS line when its criterion holds so a `pytest -s -v`
run doubles as the acceptance report.
"""

import json
import math
import time
from pathlib import Path

import numpy as np
import pytest

from aspectdet import synthetic
from aspectdet.aspects import GoldLabel, distribution_entropy, infer_batch, load_keywords, load_mapping
from aspectdet.attention import attention_pool
from aspectdet.corpus import load_bundle
from aspectdet.distill import FilterConfig, entropy_filter, load_student, student_predict_text
from aspectdet.embeddings import load_embeddings_text
from aspectdet.metrics import micro_f1
from aspectdet.optim import warmup_lr
from aspectdet.teacher import (
    batch_loss,
    batch_loss_and_grads,
    contrastive_loss,
    init_teacher,
    load_teacher,
    orthogonality_penalty,
)
from aspectdet.ablation import Variant, run_ablation

from conftest import build_workspace, run_cli
from test_gradients import finite_difference, relative_error
from test_teacher_loss import naive_contrastive_loss


def _ok(name: str, detail: str = "") -> None:
    print(f"ACCEPTANCE PASS: {name}" + (f" ({detail})" if detail else ""))


def test_gradient_correctness():
    """Analytic gradients of (mean contrastive loss + penalty) vs central
    finite differences: >= 20 random configs at V=20, M=8, N=4, X=3."""
    start = time.monotonic()
    worst = 0.0
    for case in range(20):
        rng = np.random.default_rng(5000 + case)
        model = init_teacher(
            rng.normal(size=(20, 8)),
            rng.normal(size=(4, 8)),
            smooth_factor=float(rng.uniform(0.3, 2.0)),
            temperature=float(rng.uniform(0.5, 1.5)),
            seed=int(rng.integers(1 << 30)),
        )
        model.aspect_weight += rng.normal(scale=0.3, size=model.aspect_weight.shape)
        batch = [rng.integers(0, 20, size=int(rng.integers(1, 7))).tolist() for _ in range(3)]
        _, _, analytic = batch_loss_and_grads(model, batch)
        numeric = finite_difference(lambda: batch_loss(model, batch), model.trainable(), h=1e-4)
        for name in analytic:
            err = relative_error(analytic[name], numeric[name])
            worst = max(worst, err)
            assert err <= 1e-4, f"config {case}, {name}: {err:.3e}"
    elapsed = time.monotonic() - start
    assert elapsed < 30.0, f"gradient check took {elapsed:.1f}s"
    _ok("gradient correctness", f"20 configs, worst rel err {worst:.2e}, {elapsed:.1f}s")


def test_loss_oracle_equivalence():
    """Vectorized batch loss equals the naive double loop within 1e-10."""
    rng = np.random.default_rng(77)
    worst = 0.0
    for _ in range(100):
        x = int(rng.integers(2, 11))
        sim = rng.uniform(-1.0, 1.0, size=(x, x))
        mu = float(rng.uniform(0.2, 2.0))
        mean, per = contrastive_loss(sim, mu)
        oracle_mean, oracle_per = naive_contrastive_loss(sim, mu)
        worst = max(worst, abs(mean - oracle_mean), float(np.max(np.abs(per - oracle_per))))
        assert abs(mean - oracle_mean) <= 1e-10
        assert np.allclose(per, oracle_per, atol=1e-10)
    _ok("loss oracle equivalence", f"100 batches, worst abs diff {worst:.2e}")


def test_smooth_attention_invariants():
    """1000 random segments: weights sum to 1 and respect the exp(2*s) ratio
    bound for s in {0.5, 1, 5}; the unsquashed variant breaks the bound."""
    rng = np.random.default_rng(88)
    for smooth_factor in (0.5, 1.0, 5.0):
        bound = math.exp(2.0 * smooth_factor)
        for _ in range(1000):
            emb = rng.normal(scale=rng.uniform(0.5, 3.0), size=(15, 6))
            weight = rng.normal(scale=rng.uniform(0.5, 2.0), size=(6, 6))
            bias = rng.normal(size=6)
            tokens = rng.integers(0, 15, size=int(rng.integers(1, 10)))
            trace = attention_pool(emb, tokens, weight, bias, smooth_factor, "smooth")
            assert abs(trace.alpha.sum() - 1.0) <= 1e-9
            assert trace.alpha.max() / trace.alpha.min() <= bound + 1e-9

    # constructed input where plain attention exceeds the s=0.5 bound
    emb = np.zeros((2, 4))
    emb[0, 0] = 10.0
    emb[1, 0] = 1.0
    plain = attention_pool(emb, [0, 1], np.eye(4), np.zeros(4), 0.5, "plain")
    assert plain.alpha.max() / plain.alpha.min() > math.exp(1.0)
    _ok("smooth attention invariants", "3000 segments + constructed violation")


def test_regularizer_fixed_points():
    rng = np.random.default_rng(99)
    q, _ = np.linalg.qr(rng.normal(size=(8, 8)))
    assert orthogonality_penalty(q[:5]) == pytest.approx(0.0, abs=1e-12)
    row = rng.normal(size=6)
    row /= np.linalg.norm(row)
    assert orthogonality_penalty(np.stack([row, row])) == pytest.approx(
        math.sqrt(2.0), abs=1e-9
    )
    _ok("regularizer fixed points", "orthonormal -> 0, duplicated unit rows -> sqrt(2)")


def test_warmup_schedule():
    assert warmup_lr(2000, warmup_steps=2000, d_model=1e5) == pytest.approx(
        7.0711e-5, abs=1e-9
    )
    values = [warmup_lr(s, 2000, 1e5) for s in range(1, 10_001)]
    assert int(np.argmax(values)) + 1 == 2000
    _ok("warmup schedule", "lr(2000)=7.0711e-5, peak exactly at step 2000")


def test_entropy_arithmetic_and_filter():
    assert distribution_entropy(np.full(9, 1.0 / 9.0)) == pytest.approx(
        math.log(9.0), abs=1e-12
    )
    onehot = np.zeros(9)
    onehot[2] = 1.0
    assert distribution_entropy(onehot) == 0.0

    config = FilterConfig(chi_general=0.8, chi_other=1.4)

    def label(entropy, y_hat):
        return GoldLabel(np.full(9, 1 / 9), y_hat, entropy, 1.0)

    # H=0.9 is filtered for a General-labeled sample but passes otherwise
    assert not entropy_filter(label(0.9, y_hat=0), config, general_index=0)
    assert entropy_filter(label(0.9, y_hat=3), config, general_index=0)
    assert entropy_filter(label(0.0, y_hat=0), config, general_index=0)
    wide = FilterConfig(chi_general=0.8, chi_other=1.8)
    assert not entropy_filter(label(math.log(9.0), y_hat=3), wide, general_index=0)
    _ok("entropy arithmetic and filter", "ln 9 bound, chi thresholds split by class")


def test_synthetic_planted_topic_recovery(synthetic_workspace):
    """Full pipeline on 5 disjoint topics: dev micro-F1 >= 0.90 and every
    topic owned by at least one aspect with >= 80% keyword purity."""
    assert synthetic_workspace["elapsed"] < 300.0, "pipeline exceeded 5 minutes"
    metrics = synthetic_workspace["metrics"]
    assert metrics["micro_f1"] >= 0.90

    config = synthetic_workspace["config"]
    spec = synthetic_workspace["spec"]
    topic_vocabs = synthetic.topic_vocabularies(spec)
    keyword_lists = load_keywords(config.keywords_path)
    covered = set()
    for kw in keyword_lists:
        fractions = synthetic.keyword_topic_fractions(kw, topic_vocabs)
        best = int(np.argmax(fractions))
        if fractions[best] >= 0.8:
            covered.add(best)
    assert covered == set(range(spec.num_topics)), f"covered only {sorted(covered)}"
    _ok(
        "synthetic planted-topic recovery",
        f"dev micro-F1={metrics['micro_f1']:.3f}, all {spec.num_topics} topics covered, "
        f"{synthetic_workspace['elapsed']:.0f}s",
    )


def test_ablation_direction(synthetic_workspace):
    """Paired seeds: smooth >= plain and s=0.5 >= s=5.0 in >= 4 of 5 seeds."""
    config = synthetic_workspace["config"]
    spec = synthetic_workspace["spec"]
    names = synthetic_workspace["names"]
    bundle = load_bundle(config.corpus_dir)
    matrix = load_embeddings_text(
        config.embeddings_path, bundle.vocabulary, expect_dim=config.embedding_dim
    )
    topic_vocabs = synthetic.topic_vocabularies(spec)

    def mapper(kws):
        return synthetic.scripted_mapping(kws, topic_vocabs, names)

    variants = [Variant("smooth", 0.5, 50), Variant("plain", 0.5, 50), Variant("smooth", 5.0, 50)]
    seeds = [1, 2, 3, 4, 5]
    rows = run_ablation(
        bundle, matrix, variants, seeds, mapper,
        num_aspects=config.num_aspects, epochs=6,
        warmup_steps=config.warmup_steps, d_model=config.d_model_constant,
    )
    score = {
        (r["attention"], r["smooth_factor"], r["seed"]): r["micro_f1"] for r in rows
    }
    smooth_wins = sum(
        score[("smooth", 0.5, s)] >= score[("plain", 0.5, s)] for s in seeds
    )
    low_lambda_wins = sum(
        score[("smooth", 0.5, s)] >= score[("smooth", 5.0, s)] for s in seeds
    )
    assert smooth_wins >= 4, f"smooth >= plain in only {smooth_wins}/5 seeds"
    assert low_lambda_wins >= 4, f"s=0.5 >= s=5.0 in only {low_lambda_wins}/5 seeds"
    _ok("ablation direction", f"smooth wins {smooth_wins}/5, low smoothing wins {low_lambda_wins}/5")


def test_distillation_gain_contract(synthetic_workspace):
    """Student agrees with confident teacher labels >= 95% and lands within
    0.02 micro-F1 of the teacher on dev."""
    config = synthetic_workspace["config"]
    bundle = load_bundle(config.corpus_dir)
    teacher_model, _ = load_teacher(config.teacher_path)
    mapping = load_mapping(config.mapping_path, teacher_model.num_aspects)
    student, student_vocab, _ = load_student(config.student_path)

    dev = bundle.split_segments("dev")
    teacher_labels = infer_batch(teacher_model, dev, mapping)
    fc = FilterConfig(config.chi_general, config.chi_other)
    filtered = [
        (seg, lab)
        for seg, lab in zip(dev, teacher_labels)
        if not lab.unmappable and entropy_filter(lab, fc, mapping.general_index)
    ]
    assert filtered, "entropy filter left no confident dev samples"
    agree = sum(
        int(np.argmax(student_predict_text(student, student_vocab, seg.raw_text)[0]))
        == lab.y_hat
        for seg, lab in filtered
    )
    agreement = agree / len(filtered)
    assert agreement >= 0.95, f"agreement {agreement:.3f}"

    gold = [s.gold_aspect for s in dev]
    teacher_f1 = micro_f1(gold, [lab.y_hat for lab in teacher_labels])
    student_pred = [
        int(np.argmax(student_predict_text(student, student_vocab, s.raw_text)[0])) for s in dev
    ]
    student_f1 = micro_f1(gold, student_pred)
    assert student_f1 >= teacher_f1 - 0.02, f"student {student_f1:.3f} vs teacher {teacher_f1:.3f}"
    _ok(
        "distillation gain contract",
        f"agreement {agreement:.3f}, student F1 {student_f1:.3f} vs teacher {teacher_f1:.3f}",
    )


ARTIFACTS = (
    "corpus/vocabulary.tsv",
    "corpus/segments.tsv",
    "embeddings.txt",
    "aspect_init.ckpt",
    "teacher.ckpt",
    "keywords.json",
    "mapping.json",
    "predictions.tsv",
    "metrics.json",
    "student.ckpt",
)


def test_determinism_byte_identical(tmp_path):
    """The same seed and config reproduce every artifact byte for byte."""
    spec = synthetic.SyntheticSpec(num_topics=3, words_per_topic=40, num_segments=700)
    ws = build_workspace(tmp_path / "run", spec=spec)
    config = ws["config"]
    config_path = ws["config_path"]
    first = {name: (Path(config.workdir) / name).read_bytes() for name in ARTIFACTS}

    # identical config, rerun in place over the same workspace
    for stage in ("preprocess", "train-embeddings", "init-aspects", "train-teacher", "keywords"):
        assert run_cli(stage, "--config", config_path, "--force") == 0
    from aspectdet.aspects import save_mapping

    keyword_lists = load_keywords(config.keywords_path)
    mapping = synthetic.scripted_mapping(
        keyword_lists, synthetic.topic_vocabularies(spec), ws["names"]
    )
    save_mapping(config.mapping_path, mapping, config_hash=config.config_hash())
    assert run_cli("infer", "--config", config_path, "--split", "dev", "--force") == 0
    assert run_cli("evaluate", "--config", config_path, "--split", "dev", "--force") == 0
    assert run_cli("distill", "--config", config_path, "--force") == 0

    for name in ARTIFACTS:
        second = (Path(config.workdir) / name).read_bytes()
        assert second == first[name], f"{name} differs between identical runs"
    _ok("determinism", f"{len(ARTIFACTS)} artifacts byte-identical across reruns")
