import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from aspectdet.attention import attention_pool, softmax
from aspectdet.errors import NumericError


def _random_setup(rng, vocab=12, dim=6):
    emb = rng.normal(size=(vocab, dim))
    weight = rng.normal(size=(dim, dim))
    bias = rng.normal(size=dim)
    return emb, weight, bias


def test_single_token_alpha_is_one():
    rng = np.random.default_rng(0)
    emb, weight, bias = _random_setup(rng)
    trace = attention_pool(emb, [3], weight, bias, 0.5, "smooth")
    assert np.allclose(trace.alpha, [1.0])
    assert np.allclose(trace.pooled, emb[3])


def test_identical_tokens_share_weight():
    rng = np.random.default_rng(1)
    emb, weight, bias = _random_setup(rng)
    trace = attention_pool(emb, [4, 4], weight, bias, 0.5, "smooth")
    assert np.allclose(trace.alpha, [0.5, 0.5])


@pytest.mark.parametrize("smooth_factor", [0.5, 1.0, 5.0])
def test_weight_ratio_bound(smooth_factor):
    rng = np.random.default_rng(2)
    for _ in range(200):
        emb, weight, bias = _random_setup(rng)
        t = int(rng.integers(2, 9))
        tokens = rng.integers(0, emb.shape[0], size=t)
        trace = attention_pool(emb, tokens, weight, bias, smooth_factor, "smooth")
        ratio = trace.alpha.max() / trace.alpha.min()
        assert ratio <= np.exp(2.0 * smooth_factor) + 1e-9
        assert abs(trace.alpha.sum() - 1.0) <= 1e-9 and np.all(trace.alpha > 0)


def test_plain_attention_can_violate_ratio_bound():
    # two tokens whose raw alignment scores differ by far more than 2*s
    dim = 4
    emb = np.zeros((2, dim))
    emb[0, 0] = 10.0
    emb[1, 0] = 1.0
    weight = np.eye(dim)
    bias = np.zeros(dim)
    smooth_factor = 0.5
    plain = attention_pool(emb, [0, 1], weight, bias, smooth_factor, "plain")
    assert plain.alpha.max() / plain.alpha.min() > np.exp(2.0 * smooth_factor)
    smooth = attention_pool(emb, [0, 1], weight, bias, smooth_factor, "smooth")
    assert smooth.alpha.max() / smooth.alpha.min() <= np.exp(2.0 * smooth_factor) + 1e-9


def test_mean_pooling_uniform():
    rng = np.random.default_rng(3)
    emb, weight, bias = _random_setup(rng)
    trace = attention_pool(emb, [0, 1, 2, 5], weight, bias, 0.5, "mean")
    assert np.allclose(trace.alpha, 0.25)
    assert np.allclose(trace.pooled, emb[[0, 1, 2, 5]].mean(axis=0))


def test_empty_segment_rejected():
    rng = np.random.default_rng(4)
    emb, weight, bias = _random_setup(rng)
    with pytest.raises(NumericError):
        attention_pool(emb, [], weight, bias, 0.5, "smooth")


def test_argmax_stable_under_pre_squash_scaling():
    # scaling W and b scales every raw score; tanh and softmax are monotone
    rng = np.random.default_rng(5)
    for _ in range(50):
        emb, weight, bias = _random_setup(rng)
        tokens = rng.integers(0, emb.shape[0], size=5)
        base = attention_pool(emb, tokens, weight, bias, 0.5, "smooth")
        scaled = attention_pool(emb, tokens, 3.0 * weight, 3.0 * bias, 0.5, "smooth")
        assert np.array_equal(np.sign(base.raw_scores), np.sign(scaled.raw_scores))
        assert int(np.argmax(base.alpha)) == int(np.argmax(scaled.alpha))


@given(st.lists(st.floats(-30, 30), min_size=1, max_size=12))
@settings(max_examples=100, deadline=None)
def test_softmax_is_distribution(values):
    probs = softmax(np.array(values))
    assert abs(probs.sum() - 1.0) <= 1e-9
    assert np.all(probs > 0)
