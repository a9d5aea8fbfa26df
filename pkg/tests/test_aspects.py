import json
import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from aspectdet.aspects import (
    AspectMapping,
    aggregate_gamma,
    distribution_entropy,
    infer_segment,
    label_name,
    load_keywords,
    load_mapping,
    save_keywords,
    save_mapping,
    top_keywords,
)
from aspectdet.corpus import Vocabulary
from aspectdet.errors import SchemaError
from aspectdet.teacher import init_teacher


def _vocab(words):
    return Vocabulary(
        word_to_index={w: i for i, w in enumerate(words)},
        index_to_word=list(words),
        counts=[1] * len(words),
    )


def brute_force_top(aspect_row, embeddings, words, top_k):
    scored = [(float(aspect_row @ emb), -i, words[i]) for i, emb in enumerate(embeddings)]
    scored.sort(reverse=True)
    return [w for _, _, w in scored[:top_k]]


def test_top_keywords_matches_brute_force():
    rng = np.random.default_rng(0)
    words = [f"w{i}" for i in range(30)]
    emb = rng.normal(size=(30, 10))
    aspects = rng.normal(size=(4, 10))
    got = top_keywords(aspects, emb, _vocab(words), top_k=7)
    for n in range(4):
        assert [t for t, _ in got[n].keywords] == brute_force_top(aspects[n], emb, words, 7)
        scores = [s for _, s in got[n].keywords]
        assert all(a >= b for a, b in zip(scores, scores[1:]))
        assert len({t for t, _ in got[n].keywords}) == 7


def test_top_keywords_aspect_equal_to_word():
    rng = np.random.default_rng(1)
    # near-orthogonal random embeddings in high dimension
    emb = rng.normal(size=(20, 64))
    words = [f"w{i}" for i in range(20)]
    aspects = emb[[5]] * 1.0
    got = top_keywords(aspects, emb, _vocab(words), top_k=1)
    assert got[0].keywords[0][0] == "w5"


def test_top_keywords_full_vocab():
    rng = np.random.default_rng(2)
    emb = rng.normal(size=(9, 4))
    words = [f"w{i}" for i in range(9)]
    got = top_keywords(rng.normal(size=(2, 4)), emb, _vocab(words), top_k=9)
    assert len(got[0].keywords) == 9


def test_keywords_json_round_trip(tmp_path):
    rng = np.random.default_rng(3)
    emb = rng.normal(size=(12, 5))
    words = [f"w{i}" for i in range(12)]
    kws = top_keywords(rng.normal(size=(3, 5)), emb, _vocab(words), top_k=4)
    path = tmp_path / "keywords.json"
    save_keywords(path, kws, config_hash="abc")
    loaded = load_keywords(path)
    assert [(k.aspect_index, k.keywords) for k in loaded] == [
        (k.aspect_index, k.keywords) for k in kws
    ]


def _mapping(entries, names=("a", "b", "c"), general=None):
    return AspectMapping(entries=list(entries), gsa_names=list(names), general_index=general)


def test_mapping_round_trip(tmp_path):
    mapping = _mapping([0, None, 2, 1, None], general=0)
    path = tmp_path / "mapping.json"
    save_mapping(path, mapping)
    loaded = load_mapping(path, expect_model_aspects=5)
    assert loaded.entries == mapping.entries
    assert loaded.gsa_names == mapping.gsa_names
    assert loaded.general_index == 0
    # second save is byte-identical
    save_mapping(tmp_path / "again.json", loaded)
    assert (tmp_path / "again.json").read_bytes() == path.read_bytes()


def test_mapping_unknown_gsa_rejected(tmp_path):
    path = tmp_path / "mapping.json"
    payload = {
        "gsa_names": ["a", "b"],
        "general": None,
        "entries": [{"mia": 0, "gsa": "zzz"}],
    }
    path.write_text(json.dumps(payload))
    with pytest.raises(SchemaError):
        load_mapping(path)


def test_mapping_entry_count_must_match_model(tmp_path):
    path = tmp_path / "mapping.json"
    save_mapping(path, _mapping([0, 1]))
    with pytest.raises(SchemaError):
        load_mapping(path, expect_model_aspects=5)


def test_mapping_thirty_entries_three_unmapped(tmp_path):
    entries = [i % 3 for i in range(30)]
    for idx in (3, 7, 8):
        entries[idx] = None
    mapping = _mapping(entries)
    path = tmp_path / "mapping.json"
    save_mapping(path, mapping)
    loaded = load_mapping(path, expect_model_aspects=30)
    assert sum(1 for e in loaded.entries if e is None) == 3
    loaded.require_mapped()


def test_all_unmapped_refuses_inference():
    mapping = _mapping([None, None, None])
    with pytest.raises(SchemaError):
        mapping.require_mapped()


def test_aggregate_gamma_worked_example():
    mapping = _mapping([0, 0, None])
    label = aggregate_gamma(np.array([0.5, 0.3, 0.2]), mapping)
    assert label.mapped_mass == pytest.approx(0.8)
    assert label.gamma[0] == pytest.approx(1.0)
    assert label.y_hat == 0
    assert label.entropy == pytest.approx(0.0, abs=1e-12)
    assert not label.unmappable


def test_aggregate_gamma_unmapped_mass_to_general():
    mapping = _mapping([None, 0, 1], general=0)
    label = aggregate_gamma(np.array([1.0, 0.0, 0.0]), mapping)
    assert label.unmappable
    assert label.y_hat == 0  # the General index


def test_aggregate_gamma_unknown_without_general():
    mapping = _mapping([None, 0, 1], general=None)
    label = aggregate_gamma(np.array([1.0, 0.0, 0.0]), mapping)
    assert label.unmappable
    assert label.y_hat == -1
    assert label_name(label, mapping) == "Unknown"


def test_uniform_gamma_entropy_ln9():
    assert distribution_entropy(np.full(9, 1.0 / 9.0)) == pytest.approx(
        math.log(9.0), abs=1e-12
    )


def test_entropy_onehot_zero():
    onehot = np.zeros(9)
    onehot[4] = 1.0
    assert distribution_entropy(onehot) == 0.0


@given(
    st.lists(st.floats(0.001, 1.0), min_size=2, max_size=8),
    st.integers(0, 1_000_000),
)
@settings(max_examples=60, deadline=None)
def test_gamma_invariants(raw_beta, seed):
    rng = np.random.default_rng(seed)
    beta = np.array(raw_beta)
    beta = beta / beta.sum()
    n = len(beta)
    k = 3
    entries = [int(rng.integers(0, k + 1)) for _ in range(n)]
    entries = [e if e < k else None for e in entries]
    mapping = _mapping(entries, names=["a", "b", "c"])
    label = aggregate_gamma(beta, mapping)
    assert abs(label.gamma.sum() - 1.0) <= 1e-9
    assert 0.0 <= label.entropy <= math.log(k) + 1e-12
    if not label.unmappable:
        # renormalization must not change the argmax
        raw = np.zeros(k)
        for idx, e in enumerate(entries):
            if e is not None:
                raw[e] += beta[idx]
        assert int(np.argmax(raw)) == label.y_hat


@given(st.integers(0, 1_000_000))
@settings(max_examples=40, deadline=None)
def test_gamma_invariant_under_joint_permutation(seed):
    rng = np.random.default_rng(seed)
    n, k = 6, 3
    beta = rng.dirichlet(np.ones(n))
    entries = [int(e) if e < k else None for e in rng.integers(0, k + 1, size=n)]
    mapping = _mapping(entries)
    base = aggregate_gamma(beta, mapping)
    perm = rng.permutation(n)
    permuted = _mapping([entries[p] for p in perm])
    label = aggregate_gamma(beta[perm], permuted)
    assert np.allclose(label.gamma, base.gamma)
    assert label.y_hat == base.y_hat
    assert label.entropy == pytest.approx(base.entropy)


def test_infer_segment_empty_defaults_to_general():
    rng = np.random.default_rng(9)
    model = init_teacher(rng.normal(size=(10, 4)), rng.normal(size=(3, 4)), seed=0)
    mapping = _mapping([0, 1, None], general=0)
    label = infer_segment(model, [], mapping)
    assert label.unmappable and label.y_hat == 0


def test_infer_batch_matches_per_segment():
    rng = np.random.default_rng(10)
    model = init_teacher(rng.normal(size=(10, 4)), rng.normal(size=(3, 4)), seed=1)
    mapping = _mapping([0, 1, 2])
    batches = [[1, 2], [3], [4, 5, 6]]
    from aspectdet.aspects import infer_batch

    joint = infer_batch(model, batches, mapping)
    single = [infer_segment(model, t, mapping) for t in batches]
    for a, b in zip(joint, single):
        assert np.array_equal(a.gamma, b.gamma) and a.y_hat == b.y_hat


def test_keywords_inner_product_vs_cosine_agree_on_equal_norms():
    rng = np.random.default_rng(11)
    emb = rng.normal(size=(15, 6))
    emb /= np.linalg.norm(emb, axis=1, keepdims=True)  # equal norms
    aspects = rng.normal(size=(2, 6))
    words = [f"w{i}" for i in range(15)]
    inner = top_keywords(aspects, emb, _vocab(words), top_k=15)
    for n in range(2):
        cos_scores = (aspects[n] @ emb.T) / (np.linalg.norm(aspects[n]) * 1.0)
        cos_order = [words[i] for i in np.argsort(-cos_scores, kind="stable")]
        assert [t for t, _ in inner[n].keywords] == cos_order
