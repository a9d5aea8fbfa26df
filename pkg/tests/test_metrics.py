import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from aspectdet.errors import ConfigError
from aspectdet.metrics import (
    confusion_matrix,
    evaluation_report,
    micro_f1,
    per_aspect_prf,
    weighted_macro_prf,
)


def test_micro_f1_all_correct():
    assert micro_f1([0, 1, 2], [0, 1, 2]) == 1.0


def test_micro_f1_two_thirds():
    assert micro_f1([0, 1, 1], [0, 0, 1]) == pytest.approx(2.0 / 3.0)


def test_micro_f1_empty_errors():
    with pytest.raises(ConfigError):
        micro_f1([], [])


def test_micro_f1_length_mismatch():
    with pytest.raises(ConfigError):
        micro_f1([0, 1], [0])


def test_per_aspect_degenerate_conventions():
    # aspect 2 never predicted, never gold
    gold, pred = [0, 1, 0], [0, 1, 1]
    assert per_aspect_prf(gold, pred, 2, num_classes=3) == (0.0, 0.0, 0.0)


def test_per_aspect_perfect():
    assert per_aspect_prf([1, 1, 0], [1, 1, 0], 1) == (1.0, 1.0, 1.0)


def test_unknown_aspect_index_errors():
    with pytest.raises(ConfigError):
        per_aspect_prf([0, 1], [0, 1], 5, num_classes=2)


# hand-built 3-class example, verified by independent manual counting:
# gold [0,0,0,1,1,2], pred [0,1,0,1,2,2]
# class 0: TP=2 FP=0 FN=1 -> P=1,    R=2/3, F=0.8
# class 1: TP=1 FP=1 FN=1 -> P=0.5,  R=0.5, F=0.5
# class 2: TP=1 FP=1 FN=0 -> P=0.5,  R=1,   F=2/3
GOLD = [0, 0, 0, 1, 1, 2]
PRED = [0, 1, 0, 1, 2, 2]


def test_hand_built_per_aspect():
    assert per_aspect_prf(GOLD, PRED, 0) == pytest.approx((1.0, 2 / 3, 0.8))
    assert per_aspect_prf(GOLD, PRED, 1) == pytest.approx((0.5, 0.5, 0.5))
    assert per_aspect_prf(GOLD, PRED, 2) == pytest.approx((0.5, 1.0, 2 / 3))


def test_hand_built_weighted_macro():
    wp, wr, wf = weighted_macro_prf(GOLD, PRED)
    assert wp == pytest.approx((3 * 1.0 + 2 * 0.5 + 1 * 0.5) / 6)
    assert wr == pytest.approx((3 * (2 / 3) + 2 * 0.5 + 1 * 1.0) / 6)
    assert wf == pytest.approx((3 * 0.8 + 2 * 0.5 + 1 * (2 / 3)) / 6)


def test_weighted_macro_uniform_supports_equals_plain_macro():
    gold = [0, 0, 1, 1, 2, 2]
    pred = [0, 1, 1, 1, 0, 2]
    wp, wr, wf = weighted_macro_prf(gold, pred)
    parts = [per_aspect_prf(gold, pred, k) for k in range(3)]
    assert wp == pytest.approx(np.mean([p for p, _, _ in parts]))
    assert wr == pytest.approx(np.mean([r for _, r, _ in parts]))
    assert wf == pytest.approx(np.mean([f for _, _, f in parts]))


def test_single_class_gold_equals_that_class():
    gold = [1, 1, 1]
    pred = [1, 0, 1]
    assert weighted_macro_prf(gold, pred) == pytest.approx(per_aspect_prf(gold, pred, 1))


@st.composite
def labeled_data(draw):
    k = draw(st.integers(2, 5))
    n = draw(st.integers(1, 40))
    gold = draw(st.lists(st.integers(0, k - 1), min_size=n, max_size=n))
    pred = draw(st.lists(st.integers(0, k - 1), min_size=n, max_size=n))
    return k, gold, pred


@given(labeled_data())
@settings(max_examples=100, deadline=None)
def test_micro_f1_equals_accuracy(data):
    _, gold, pred = data
    accuracy = np.mean(np.array(gold) == np.array(pred))
    assert micro_f1(gold, pred) == pytest.approx(accuracy)


@given(labeled_data())
@settings(max_examples=100, deadline=None)
def test_weighted_macro_recall_equals_micro(data):
    _, gold, pred = data
    _, wr, _ = weighted_macro_prf(gold, pred)
    assert wr == pytest.approx(micro_f1(gold, pred))


@given(labeled_data(), st.integers(0, 10_000))
@settings(max_examples=60, deadline=None)
def test_metrics_invariant_under_label_permutation(data, seed):
    k, gold, pred = data
    rng = np.random.default_rng(seed)
    perm = rng.permutation(k)
    gold_p = [int(perm[g]) for g in gold]
    pred_p = [int(perm[p]) for p in pred]
    assert micro_f1(gold, pred) == pytest.approx(micro_f1(gold_p, pred_p))
    assert weighted_macro_prf(gold, pred) == pytest.approx(weighted_macro_prf(gold_p, pred_p))


def test_confusion_matrix_counts():
    cm = confusion_matrix(GOLD, PRED, ["a", "b", "c"])
    assert cm.matrix.tolist() == [[2, 1, 0], [0, 1, 1], [0, 0, 1]]
    assert cm.total == 6


def test_unknown_predictions_counted_as_misses():
    cm = confusion_matrix([0, 1], [-1, 1], ["a", "b"])
    assert cm.matrix.sum() == 1
    assert micro_f1([0, 1], [-1, 1]) == pytest.approx(0.5)


def test_evaluation_report_shape():
    report = evaluation_report(GOLD, PRED, ["a", "b", "c"])
    assert report["micro_f1"] == pytest.approx(4 / 6)
    assert set(report["per_aspect"]) == {"a", "b", "c"}
    assert report["per_aspect"]["a"]["support"] == 3
    assert len(report["confusion"]) == 3
