import itertools
import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from hypothesis.extra.numpy import arrays

from textspot.tensor import as_tensor, bilinear_resize, conv2d, linear, maxpool2d, softmax

from oracles import bilinear_point, conv2d_loops


class TestBilinearResize:
    def test_constant_map_stays_constant(self):
        x = np.full((2, 5, 7), 3.0)
        for oh, ow in [(1, 1), (3, 9), (10, 2), (5, 7)]:
            np.testing.assert_array_equal(bilinear_resize(x, oh, ow), 3.0)

    def test_identity_resize_is_bitwise_copy(self):
        x = np.random.default_rng(0).normal(size=(3, 4, 6))
        y = bilinear_resize(x, 4, 6)
        assert y.tobytes() == x.tobytes()
        assert y is not x

    def test_two_by_two_to_three_by_three(self):
        y = bilinear_resize([[[1.0, 2.0], [3.0, 4.0]]], 3, 3)
        assert y[0, 1, 1] == 2.5
        np.testing.assert_array_equal(y[0, [0, 0, 2, 2], [0, 2, 0, 2]], [1, 2, 3, 4])

    def test_matches_pointwise_formula(self):
        rng = np.random.default_rng(1)
        x = rng.uniform(-5, 5, size=(2, 5, 6))
        y = bilinear_resize(x, 7, 4)
        for c, i, j in itertools.product(range(2), range(7), range(4)):
            want = bilinear_point(x[c], i * 4 / 6, j * 5 / 3)
            assert y[c, i, j] == pytest.approx(want, abs=1e-12)

    @given(arrays(np.float64, (2, 3, 4), elements=st.floats(-100, 100)),
           st.integers(1, 9), st.integers(1, 9))
    def test_output_within_channel_range(self, x, oh, ow):
        y = bilinear_resize(x, oh, ow)
        assert y.shape == (2, oh, ow)
        assert np.all(y >= x.min(axis=(1, 2))[:, None, None])
        assert np.all(y <= x.max(axis=(1, 2))[:, None, None])

    @pytest.mark.parametrize("bad", [np.ones((3, 3)), np.ones((1, 2, 3, 4))])
    def test_rejects_non_3d(self, bad):
        with pytest.raises(ValueError):
            bilinear_resize(bad, 2, 2)

    def test_rejects_zero_extent(self):
        with pytest.raises(ValueError):
            bilinear_resize(np.ones((1, 2, 2)), 0, 3)


class TestConv2d:
    def test_identity_kernel(self):
        x = np.random.default_rng(2).normal(size=(1, 5, 6))
        y = conv2d(x, np.ones((1, 1, 1, 1)), np.zeros(1), stride=1, pad=0)
        np.testing.assert_array_equal(y, x)

    def test_ones_kernel_on_constant(self):
        v = 1.5
        y = conv2d(np.full((1, 6, 6), v), np.ones((1, 1, 3, 3)), np.zeros(1), 1, 0)
        np.testing.assert_allclose(y, 9 * v)

    def test_shape_with_padding(self):
        rng = np.random.default_rng(3)
        y = conv2d(rng.normal(size=(3, 5, 5)), rng.normal(size=(4, 3, 3, 3)), rng.normal(size=4), 1, 1)
        assert y.shape == (4, 5, 5)

    def test_shape_sweep(self):
        rng = np.random.default_rng(4)
        for h, w, kh, kw, s, p in itertools.product([3, 4, 6], [3, 5], [1, 2, 3], [1, 3], [1, 2], [0, 1]):
            if h + 2 * p < kh or w + 2 * p < kw:
                continue
            y = conv2d(rng.normal(size=(2, h, w)), rng.normal(size=(3, 2, kh, kw)), np.zeros(3), s, p)
            assert y.shape == (3, (h + 2 * p - kh) // s + 1, (w + 2 * p - kw) // s + 1)

    def test_matches_loop_oracle(self):
        rng = np.random.default_rng(5)
        for h, w, s, p in [(6, 6, 1, 0), (5, 6, 2, 1), (4, 3, 1, 2)]:
            x = rng.normal(size=(2, h, w))
            k = rng.normal(size=(3, 2, 3, 2))
            b = rng.normal(size=3)
            np.testing.assert_allclose(conv2d(x, k, b, s, p), conv2d_loops(x, k, b, s, p), atol=1e-12)

    def test_one_hot_kernel_shifts(self):
        rng = np.random.default_rng(6)
        x = rng.normal(size=(1, 6, 6))
        for a, b in itertools.product(range(3), range(3)):
            k = np.zeros((1, 1, 3, 3))
            k[0, 0, a, b] = 1.0
            y = conv2d(x, k, np.zeros(1), 1, 1)
            xp = np.pad(x, ((0, 0), (1, 1), (1, 1)))
            np.testing.assert_array_equal(y, xp[:, a:a + 6, b:b + 6])
            np.testing.assert_allclose(y, conv2d_loops(x, k, np.zeros(1), 1, 1), atol=0)

    def test_channel_mismatch(self):
        with pytest.raises(ValueError, match="channels"):
            conv2d(np.ones((2, 4, 4)), np.ones((1, 3, 3, 3)), np.zeros(1))

    def test_kernel_too_large(self):
        with pytest.raises(ValueError, match="larger"):
            conv2d(np.ones((1, 2, 2)), np.ones((1, 1, 3, 3)), np.zeros(1), pad=0)


class TestMaxPool:
    def test_identity(self):
        x = np.random.default_rng(7).normal(size=(2, 3, 4))
        np.testing.assert_array_equal(maxpool2d(x, 1, 1), x)

    def test_two_by_two(self):
        np.testing.assert_array_equal(maxpool2d([[[1.0, 2.0], [3.0, 4.0]]], 2, 2), [[[4.0]]])

    def test_monotone_row_picks_right_element(self):
        x = np.arange(16, dtype=float).reshape(1, 2, 8)
        y = maxpool2d(x, 2, 2)
        np.testing.assert_array_equal(y[0, 0], x[0, 1, 1::2])

    def test_window_too_large(self):
        with pytest.raises(ValueError):
            maxpool2d(np.ones((1, 2, 5)), 3, 1)

    def test_shape(self):
        for h, k, s in itertools.product([3, 4, 7], [1, 2, 3], [1, 2, 3]):
            if h < k:
                continue
            assert maxpool2d(np.ones((1, h, h)), k, s).shape == (1, (h - k) // s + 1, (h - k) // s + 1)


class TestLinear:
    def test_identity_weight(self):
        x = np.array([1.0, -2.0, 3.0])
        np.testing.assert_array_equal(linear(x, np.eye(3), np.zeros(3)), x)

    def test_zero_weight_gives_bias(self):
        np.testing.assert_array_equal(linear(np.ones(2), np.zeros((3, 2)), [1.0, 2.0, 3.0]), [1, 2, 3])

    def test_hand_matvec(self):
        np.testing.assert_array_equal(linear([1.0, 1.0], [[1.0, 2.0], [3.0, 4.0]], [0.0, 0.0]), [3, 7])

    def test_extent_mismatch(self):
        with pytest.raises(ValueError):
            linear(np.ones(3), np.ones((2, 2)), np.zeros(2))


class TestSoftmax:
    def test_uniform(self):
        np.testing.assert_allclose(softmax(np.full(4, 2.0)), 0.25)

    def test_large_values_do_not_overflow(self):
        np.testing.assert_array_equal(softmax([1000.0, 1000.0]), [0.5, 0.5])

    def test_closed_form(self):
        np.testing.assert_allclose(softmax([0.0, math.log(3)]), [0.25, 0.75], atol=1e-15)

    @settings(max_examples=200)
    @given(arrays(np.float64, (3, 5), elements=st.floats(-50, 50)), st.sampled_from([0, 1, -1]))
    def test_slices_sum_to_one(self, x, axis):
        y = softmax(x, axis=axis)
        assert np.all(y >= 0)
        np.testing.assert_allclose(y.sum(axis=axis), 1.0, atol=1e-9)

    def test_joint_axes(self):
        y = softmax(np.random.default_rng(8).normal(size=(4, 5)), axis=(0, 1))
        assert abs(y.sum() - 1.0) < 1e-12

    def test_invalid_axis(self):
        with pytest.raises(ValueError):
            softmax(np.ones(3), axis=2)


def test_as_tensor_rejects_bad_inputs():
    with pytest.raises(ValueError):
        as_tensor(np.ones((1, 1, 1, 1, 1)))
    with pytest.raises(ValueError):
        as_tensor([1.0, np.nan])
    with pytest.raises(ValueError):
        as_tensor(np.ones((2, 0)))
    assert as_tensor(np.ones(3, dtype=np.float32)).dtype == np.float64
