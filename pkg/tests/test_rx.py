"""RX detector oracles and statistical identities.

The numeric cases are evaluated by hand from the score formula and the
population-covariance definition, then frozen.
"""

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from hypothesis.extra import numpy as npst

from saai.errors import EmptyInputError, SingularCovarianceError
from saai.rx import AnomalyMask, RxScores, rx_detect, rx_score, threshold_mask


def scores_of(values):
    """Wrap a raw score array for threshold tests."""
    a = np.asarray(values, dtype=np.float64)
    return RxScores(
        scores=a, channel_count=1, mean=np.zeros(1), covariance=np.eye(1),
        regularization_used=0.0,
    )


# ---------------------------------------------------------------------------
# scoring oracles


def test_four_pixel_oracle():
    # {0,0,0,10}: mu=2.5, population var = (3*2.5^2 + 7.5^2)/4 = 18.75
    img = np.array([[0.0, 0.0], [0.0, 10.0]])
    s = rx_score(img)
    assert s.channel_count == 1
    assert s.mean[0] == pytest.approx(2.5)
    assert s.covariance[0, 0] == pytest.approx(18.75)
    assert s.scores[1, 1] == pytest.approx(3.0)
    assert s.scores[0, 0] == pytest.approx(1.0 / 3.0)


def test_pixel_at_mean_scores_zero():
    img = np.array([[1.0, 3.0, 2.0]])  # mean is exactly 2
    s = rx_score(img)
    assert s.scores[0, 2] == pytest.approx(0.0, abs=1e-15)


def test_constant_image_raises():
    with pytest.raises(SingularCovarianceError):
        rx_score(np.full((8, 8), 0.7))
    # relative regularization cannot rescue a zero-variance image
    with pytest.raises(SingularCovarianceError):
        rx_score(np.full((8, 8), 0.7), epsilon=1e-3)


def test_collinear_channels_raise():
    rng = np.random.default_rng(0)
    base = rng.random((16, 16))
    img = np.stack([base, 2.0 * base], axis=-1)
    with pytest.raises(SingularCovarianceError):
        rx_score(img)
    # regularization makes it usable
    s = rx_score(img, epsilon=1e-6)
    assert np.all(np.isfinite(s.scores))


def test_too_few_pixels():
    with pytest.raises(EmptyInputError):
        rx_score(np.array([[1.0]]))
    with pytest.raises(EmptyInputError):
        rx_score(np.zeros((1, 2, 3)))  # 2 pixels < n+1 = 4


def test_symmetric_two_channel_oracle():
    # four corner pixels of the unit square: K = 0.25 I, every alpha = 2
    img = np.array([[[0.0, 0.0], [1.0, 0.0]], [[0.0, 1.0], [1.0, 1.0]]])
    s = rx_score(img)
    np.testing.assert_allclose(s.covariance, 0.25 * np.eye(2), atol=1e-15)
    np.testing.assert_allclose(s.scores, 2.0, atol=1e-12)


def test_epsilon_recorded_and_scales_with_trace():
    rng = np.random.default_rng(1)
    img = rng.random((16, 16))
    s = rx_score(img, epsilon=0.5)
    assert s.regularization_used == 0.5
    # n = 1: K_reg = var * 1.5, so alpha shrinks by exactly 1/1.5
    s0 = rx_score(img)
    np.testing.assert_allclose(s.scores, s0.scores / 1.5, rtol=1e-12)


def test_negative_epsilon_rejected():
    with pytest.raises(ValueError):
        rx_score(np.random.default_rng(2).random((4, 4)), epsilon=-1e-3)


# ---------------------------------------------------------------------------
# mean identity


@pytest.mark.parametrize("channels", [1, 3])
def test_mean_score_equals_channel_count(channels):
    rng = np.random.default_rng(42)
    for _ in range(20):
        shape = (rng.integers(8, 64), rng.integers(8, 64))
        img = rng.random(shape if channels == 1 else (*shape, channels))
        s = rx_score(img)
        assert np.mean(s.scores) == pytest.approx(channels, rel=1e-9)


# ---------------------------------------------------------------------------
# affine invariance


def test_affine_invariance_multichannel():
    rng = np.random.default_rng(3)
    img = rng.random((24, 24, 2))
    a = np.array([[2.0, 1.0], [0.0, 3.0]])
    b = np.array([5.0, -1.0])
    transformed = img @ a.T + b
    s0 = rx_score(img)
    s1 = rx_score(transformed)
    np.testing.assert_allclose(s1.scores, s0.scores, rtol=1e-6)
    m0 = threshold_mask(s0, 95.0)
    m1 = threshold_mask(s1, 95.0)
    np.testing.assert_array_equal(m0.mask, m1.mask)


@given(
    scale=st.floats(0.1, 50.0),
    offset=st.floats(-100.0, 100.0),
    seed=st.integers(0, 2**32 - 1),
)
@settings(max_examples=50, deadline=None)
def test_affine_invariance_scalar(scale, offset, seed):
    img = np.random.default_rng(seed).random((12, 12))
    s0 = rx_score(img)
    s1 = rx_score(img * scale + offset)
    np.testing.assert_allclose(s1.scores, s0.scores, rtol=1e-6, atol=1e-9)


# ---------------------------------------------------------------------------
# thresholding oracles


def test_percentile_cutoff_four_values():
    # t=75 over {1,2,3,4}: interpolated cutoff 3.25, only the 4 passes
    m = threshold_mask(scores_of([[1.0, 2.0], [3.0, 4.0]]), 75.0)
    assert m.cutoff_score == pytest.approx(3.25)
    np.testing.assert_array_equal(m.mask, [[False, False], [False, True]])
    assert m.count == 1


def test_threshold_zero_flags_all_above_minimum():
    m = threshold_mask(scores_of([[1.0, 1.0], [2.0, 3.0]]), 0.0)
    assert m.cutoff_score == pytest.approx(1.0)
    np.testing.assert_array_equal(m.mask, [[False, False], [True, True]])


def test_threshold_hundred_is_empty():
    m = threshold_mask(scores_of([[1.0, 5.0], [2.0, 3.0]]), 100.0)
    assert m.count == 0


def test_threshold_range_validated():
    with pytest.raises(ValueError):
        threshold_mask(scores_of([[1.0, 2.0]]), -0.1)
    with pytest.raises(ValueError):
        threshold_mask(scores_of([[1.0, 2.0]]), 100.1)


def test_ties_at_cutoff_excluded():
    m = threshold_mask(scores_of([[2.0, 2.0], [2.0, 5.0]]), 75.0)
    # cutoff lies between 2 and 5; the tied 2s never pass
    assert m.count == 1
    m_all_tied = threshold_mask(scores_of([[2.0, 2.0], [2.0, 2.0]]), 50.0)
    assert m_all_tied.count == 0


# ---------------------------------------------------------------------------
# composition


def test_detect_composition_oracle():
    # alpha = {1/3, 1/3, 1/3, 3}; t=75 cutoff = 1.0; only the hot pixel
    img = np.array([[0.0, 0.0], [0.0, 10.0]])
    m = rx_detect(img, 75.0)
    np.testing.assert_array_equal(m.mask, [[False, False], [False, True]])


def test_detect_t100_always_empty():
    img = np.random.default_rng(5).random((16, 16))
    assert rx_detect(img, 100.0).count == 0


# ---------------------------------------------------------------------------
# properties


@given(
    arr=npst.arrays(
        np.float64,
        st.tuples(st.integers(2, 20), st.integers(2, 20)),
        elements=st.floats(0.0, 100.0),
    ),
    t1=st.floats(0.0, 100.0),
    t2=st.floats(0.0, 100.0),
)
@settings(max_examples=200, deadline=None)
def test_threshold_monotone(arr, t1, t2):
    lo, hi = sorted((t1, t2))
    s = scores_of(arr)
    tight = threshold_mask(s, hi).mask
    loose = threshold_mask(s, lo).mask
    assert np.all(loose[tight])  # mask(hi) subset of mask(lo)


def test_permutation_equivariance():
    rng = np.random.default_rng(6)
    img = rng.random((10, 10))
    perm = rng.permutation(100)
    permuted = img.reshape(-1)[perm].reshape(10, 10)
    s = rx_score(img).scores.reshape(-1)
    sp = rx_score(permuted).scores.reshape(-1)
    np.testing.assert_allclose(sp, s[perm], rtol=1e-12)


def test_scores_nonnegative():
    rng = np.random.default_rng(7)
    for _ in range(10):
        img = rng.normal(size=(20, 20, 3))
        assert np.all(rx_score(img).scores >= 0.0)
