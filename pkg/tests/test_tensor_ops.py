import numpy as np
import pytest

from mattekit.gradcheck import grad_check
from mattekit.tensor import (ConvSpec, Tensor, activation, conv2d, group_norm,
                             nearest_upsample, pixel_shuffle_compose, relu,
                             sigmoid, sum_pool, window_softmax)
from oracles import conv2d_oracle, group_stats_oracle


def _conv(x, w, b, **kw):
    spec = ConvSpec(out_channels=w.shape[0], kernel=w.shape[2:], **kw)
    return conv2d(Tensor(x), Tensor(w), Tensor(b), spec).data


class TestConv2d:
    def test_identity_kernel(self):
        out = _conv(np.array([[[5.0]]]), np.ones((1, 1, 1, 1)), np.zeros(1))
        assert out.shape == (1, 1, 1)
        assert out[0, 0, 0] == 5.0

    def test_zero_weights_annihilate(self):
        x = np.random.default_rng(0).standard_normal((6, 5, 3))
        out = _conv(x, np.zeros((2, 3, 3, 3)), np.zeros(2), padding=1)
        assert np.all(out == 0.0)

    def test_ones_4x4_stride2_pad1(self):
        out = _conv(np.ones((4, 4, 1)), np.ones((1, 1, 4, 4)), np.zeros(1),
                    stride=2, padding=1)
        assert out.shape == (2, 2, 1)
        np.testing.assert_allclose(out, 9.0)

    @pytest.mark.parametrize("seed", range(5))
    def test_matches_direct_summation(self, seed):
        rng = np.random.default_rng(seed)
        x = rng.standard_normal((7, 6, 4))
        w = rng.standard_normal((4, 2, 3, 3))
        b = rng.standard_normal(4)
        got = _conv(x, w, b, stride=2, padding=1, groups=2)
        np.testing.assert_allclose(got, conv2d_oracle(x, w, b, 2, 1, 2),
                                   atol=1e-12)

    def test_groups_equal_independent_convs(self):
        rng = np.random.default_rng(3)
        x = rng.standard_normal((5, 5, 4))
        w = rng.standard_normal((6, 2, 3, 3))
        b = rng.standard_normal(6)
        full = _conv(x, w, b, padding=1, groups=2)
        for g in range(2):
            part = _conv(x[:, :, 2 * g:2 * g + 2], w[3 * g:3 * g + 3],
                         b[3 * g:3 * g + 3], padding=1)
            np.testing.assert_array_equal(full[:, :, 3 * g:3 * g + 3], part)

    def test_rejects_channel_mismatch(self):
        with pytest.raises(ValueError, match="channels"):
            _conv(np.ones((4, 4, 3)), np.ones((1, 1, 2, 2)), np.zeros(1))

    def test_rejects_bad_groups(self):
        with pytest.raises(ValueError, match="groups"):
            _conv(np.ones((4, 4, 3)), np.ones((2, 1, 2, 2)), np.zeros(2), groups=2)

    def test_rejects_too_small_input(self):
        with pytest.raises(ValueError, match="too small"):
            _conv(np.ones((2, 2, 1)), np.ones((1, 1, 4, 4)), np.zeros(1))

    def test_deterministic(self):
        rng = np.random.default_rng(1)
        x = rng.standard_normal((6, 6, 2))
        w = rng.standard_normal((3, 2, 3, 3))
        b = rng.standard_normal(3)
        a = _conv(x, w, b, padding=1)
        assert np.array_equal(a, _conv(x, w, b, padding=1))


class TestGroupNorm:
    def test_constant_collapses_to_zero(self):
        x = Tensor(np.full((3, 3, 4), 2.5))
        out = group_norm(x, 2, Tensor(np.ones(4)), Tensor(np.zeros(4)))
        np.testing.assert_allclose(out.data, 0.0, atol=1e-6)

    def test_affine_shift(self):
        x = Tensor(np.full((3, 3, 4), 2.5))
        out = group_norm(x, 2, Tensor(np.ones(4)), Tensor(np.full(4, 0.7)))
        np.testing.assert_allclose(out.data, 0.7, atol=1e-6)

    def test_matches_direct_statistics(self):
        rng = np.random.default_rng(7)
        x = rng.standard_normal((2, 2, 2))
        out = group_norm(Tensor(x), 2, Tensor(np.ones(2)), Tensor(np.zeros(2)),
                         eps=1e-12).data
        means, variances = group_stats_oracle(x, 2)
        expected = np.stack([(x[:, :, g] - means[g]) / np.sqrt(variances[g] + 1e-12)
                             for g in range(2)], axis=2)
        np.testing.assert_allclose(out, expected, atol=1e-9)

    def test_normalized_stats(self):
        rng = np.random.default_rng(8)
        x = rng.standard_normal((6, 5, 6)) * 3 + 1
        out = group_norm(Tensor(x), 3, Tensor(np.ones(6)), Tensor(np.zeros(6)),
                         eps=1e-12).data
        for g in range(3):
            vals = out[:, :, 2 * g:2 * g + 2]
            assert abs(vals.mean()) < 1e-10
            assert abs(vals.var() - 1.0) < 1e-6

    def test_rejects_bad_groups(self):
        with pytest.raises(ValueError, match="groups"):
            group_norm(Tensor(np.ones((2, 2, 3))), 2, Tensor(np.ones(3)),
                       Tensor(np.zeros(3)))


class TestActivations:
    def test_sigmoid_at_zero(self):
        assert activation(Tensor(np.zeros((1, 1, 1))), "sigmoid").data[0, 0, 0] == 0.5

    def test_relu_clamps_negative(self):
        assert activation(Tensor(np.full((1, 1, 1), -3.2)), "relu").data[0, 0, 0] == 0.0

    def test_sigmoid_backward_at_zero(self):
        x = Tensor(np.zeros((1, 1, 1)))
        sigmoid(x).sum().backward()
        assert abs(x.grad[0, 0, 0] - 0.25) < 1e-12
        err = grad_check(lambda t: sigmoid(t).sum(), [Tensor(np.zeros((1, 1, 1)))])
        assert err < 1e-6

    def test_unknown_kind_rejected(self):
        with pytest.raises(ValueError, match="activation"):
            activation(Tensor(np.zeros((1, 1, 1))), "tanh")


class TestWindowSoftmax:
    def test_uniform_block(self):
        out = window_softmax(Tensor(np.full((2, 2, 1), 3.0)), 2)
        np.testing.assert_allclose(out.data, 0.25)

    def test_peaked_block(self):
        x = np.array([[0.0, 0.0], [0.0, 10.0]]).reshape(2, 2, 1)
        out = window_softmax(Tensor(x), 2).data
        e = np.exp([0.0, 0.0, 0.0, 10.0])
        want = (e / e.sum()).reshape(2, 2, 1)
        np.testing.assert_allclose(out, want, rtol=1e-12)
        assert abs(out[1, 1, 0] - 0.999864) < 1e-6
        assert abs(out[0, 0, 0] - 0.0000453) < 1e-6

    def test_blocks_sum_to_one(self):
        rng = np.random.default_rng(5)
        x = rng.standard_normal((8, 6, 1)) * 4
        out = window_softmax(Tensor(x), 2).data
        sums = out.reshape(4, 2, 3, 2).sum(axis=(1, 3))
        np.testing.assert_allclose(sums, 1.0, atol=1e-12)
        assert np.all(out > 0)

    def test_rejects_indivisible(self):
        with pytest.raises(ValueError, match="divisible"):
            window_softmax(Tensor(np.ones((3, 4, 1))), 2)

    def test_rejects_multichannel(self):
        with pytest.raises(ValueError, match="channel"):
            window_softmax(Tensor(np.ones((4, 4, 2))), 2)


class TestSumPool:
    def test_window_of_ones(self):
        out = sum_pool(Tensor(np.ones((2, 2, 1))), 2, 2)
        assert out.data[0, 0, 0] == 4.0

    def test_equals_ones_kernel_conv(self):
        rng = np.random.default_rng(2)
        x = rng.standard_normal((6, 4, 3))
        got = sum_pool(Tensor(x), 2, 2).data
        want = np.zeros_like(got)
        for c in range(3):
            want[:, :, c] = conv2d_oracle(x[:, :, c:c + 1], np.ones((1, 1, 2, 2)),
                                          np.zeros(1), 2, 0, 1)[:, :, 0]
        np.testing.assert_allclose(got, want, atol=1e-12)

    def test_shape_law(self):
        assert sum_pool(Tensor(np.ones((8, 6, 2))), 2, 2).data.shape == (4, 3, 2)

    def test_rejects_indivisible(self):
        with pytest.raises(ValueError, match="divisible"):
            sum_pool(Tensor(np.ones((5, 4, 1))), 2, 2)


class TestNearestUpsample:
    def test_factor_one_identity(self):
        x = np.arange(8.0).reshape(2, 2, 2)
        np.testing.assert_array_equal(nearest_upsample(Tensor(x), 1).data, x)

    def test_replication(self):
        out = nearest_upsample(Tensor(np.array([[[3.5]]])), 2)
        np.testing.assert_array_equal(out.data, np.full((2, 2, 1), 3.5))

    def test_mass_law(self):
        rng = np.random.default_rng(4)
        x = rng.standard_normal((3, 5, 2))
        out = nearest_upsample(Tensor(x), 3).data
        assert abs(out.sum() - 9 * x.sum()) < 1e-9

    def test_pool_of_upsample_scales_by_four(self):
        rng = np.random.default_rng(6)
        x = Tensor(rng.standard_normal((3, 3, 2)))
        out = sum_pool(nearest_upsample(x, 2), 2, 2)
        np.testing.assert_array_equal(out.data, 4.0 * x.data)


class TestPixelShuffle:
    def test_definition(self):
        maps = [Tensor(np.full((1, 1, 1), v)) for v in (1.0, 2.0, 3.0, 4.0)]
        out = pixel_shuffle_compose(maps).data
        np.testing.assert_array_equal(out[:, :, 0], [[1.0, 2.0], [3.0, 4.0]])

    def test_round_trip(self):
        rng = np.random.default_rng(9)
        maps = [Tensor(rng.standard_normal((3, 4, 1))) for _ in range(4)]
        out = pixel_shuffle_compose(maps).data
        np.testing.assert_array_equal(out[0::2, 0::2], maps[0].data)
        np.testing.assert_array_equal(out[0::2, 1::2], maps[1].data)
        np.testing.assert_array_equal(out[1::2, 0::2], maps[2].data)
        np.testing.assert_array_equal(out[1::2, 1::2], maps[3].data)

    def test_shape_doubles(self):
        maps = [Tensor(np.zeros((5, 7, 1))) for _ in range(4)]
        assert pixel_shuffle_compose(maps).data.shape == (10, 14, 1)

    def test_rejects_shape_mismatch(self):
        maps = [Tensor(np.zeros((2, 2, 1)))] * 3 + [Tensor(np.zeros((3, 2, 1)))]
        with pytest.raises(ValueError, match="shape"):
            pixel_shuffle_compose(maps)


class TestBackward:
    def test_sum_gradient_is_ones(self):
        x = Tensor(np.random.default_rng(0).standard_normal((3, 3, 2)))
        x.sum().backward()
        np.testing.assert_array_equal(x.grad, np.ones((3, 3, 2)))

    def test_quadratic_gradient(self):
        x = Tensor(np.random.default_rng(1).standard_normal((3, 3, 2)))
        (x * x).sum().backward()
        np.testing.assert_allclose(x.grad, 2 * x.data, atol=1e-12)

    def test_conv_relu_sum_matches_finite_differences(self):
        rng = np.random.default_rng(2)
        spec = ConvSpec(kernel=(3, 3), padding=1, out_channels=2)
        x = Tensor(rng.standard_normal((5, 5, 2)))
        w = Tensor(rng.standard_normal((2, 2, 3, 3)))
        b = Tensor(rng.standard_normal(2))
        err = grad_check(lambda x, w, b: relu(conv2d(x, w, b, spec)).sum(),
                         [x, w, b])
        assert err < 1e-4

    def test_grad_accumulates_over_shared_use(self):
        x = Tensor(np.ones((2, 2, 1)))
        (x + x).sum().backward()
        np.testing.assert_array_equal(x.grad, np.full((2, 2, 1), 2.0))

    def test_rejects_non_scalar_root(self):
        with pytest.raises(ValueError, match="scalar"):
            Tensor(np.ones((2, 2, 1))).backward()

    def test_all_finite_after_forward_backward(self):
        rng = np.random.default_rng(3)
        x = Tensor(rng.standard_normal((4, 4, 1)) * 10)
        out = window_softmax(sigmoid(x), 2)
        loss = (out * rng.standard_normal((4, 4, 1))).sum()
        loss.backward()
        assert np.isfinite(out.data).all()
        assert np.isfinite(x.grad).all()
