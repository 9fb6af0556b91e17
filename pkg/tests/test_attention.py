import numpy as np
import pytest

from mattekit.attention import (attention_block_forward, average_pool,
                                guided_pool, guided_unpool,
                                init_attention_block, normalize_decoder,
                                normalize_encoder)
from mattekit.gradcheck import grad_check
from mattekit.tensor import Tensor
from oracles import guided_pool_oracle


def _block(channels=4, seed=0, zero=False):
    block = init_attention_block(channels, np.random.default_rng(seed))
    if zero:
        for _, t in block.tensors():
            t.data = np.zeros_like(t.data)
    return block


class TestAttentionBlock:
    def test_zero_parameters_give_zero_map(self):
        block = _block(zero=True)
        feat = Tensor(np.random.default_rng(1).standard_normal((6, 6, 4)))
        raw = attention_block_forward(feat, block)
        np.testing.assert_array_equal(raw.data, 0.0)

    @pytest.mark.parametrize("channels,hw", [(2, 4), (4, 6), (8, 8)])
    def test_shape_law(self, channels, hw):
        block = _block(channels)
        feat = Tensor(np.zeros((hw, hw, channels)))
        assert attention_block_forward(feat, block).data.shape == (hw, hw, 1)

    def test_deterministic(self):
        block = _block()
        feat = Tensor(np.random.default_rng(2).standard_normal((4, 4, 4)))
        a = attention_block_forward(feat, block).data
        b = attention_block_forward(feat, block).data
        assert np.array_equal(a, b)

    def test_rejects_odd_dims(self):
        with pytest.raises(ValueError, match="even"):
            attention_block_forward(Tensor(np.zeros((5, 6, 4))), _block())

    def test_rejects_channel_mismatch(self):
        with pytest.raises(ValueError, match="channels"):
            attention_block_forward(Tensor(np.zeros((4, 4, 6))), _block(4))

    def test_branches_are_independent(self):
        block = _block()
        datas = [block.branches[i].gconv_w.data for i in range(4)]
        for i in range(4):
            for j in range(i + 1, 4):
                assert not np.array_equal(datas[i], datas[j])


class TestNormalization:
    def test_encoder_uniform_raw(self):
        enc = normalize_encoder(Tensor(np.zeros((4, 4, 1))))
        np.testing.assert_allclose(enc.data, 0.25)

    def test_encoder_peaked_window(self):
        raw = np.array([[10.0, -10.0], [-10.0, -10.0]]).reshape(2, 2, 1)
        enc = normalize_encoder(Tensor(raw)).data.ravel()
        s = 1.0 / (1.0 + np.exp(-raw.ravel()))
        want = np.exp(s) / np.exp(s).sum()
        np.testing.assert_allclose(enc, want, rtol=1e-12)
        np.testing.assert_allclose(enc, [0.4754, 0.1749, 0.1749, 0.1749], atol=2e-4)

    def test_encoder_windows_sum_to_one(self):
        rng = np.random.default_rng(3)
        enc = normalize_encoder(Tensor(rng.standard_normal((8, 8, 1)) * 5)).data
        sums = enc.reshape(4, 2, 4, 2, 1).sum(axis=(1, 3))
        np.testing.assert_allclose(sums, 1.0, atol=1e-12)
        assert np.all((enc > 0) & (enc < 1))

    def test_decoder_zero_raw(self):
        dec = normalize_decoder(Tensor(np.zeros((3, 3, 1))))
        np.testing.assert_allclose(dec.data, 0.5)

    def test_decoder_saturation(self):
        dec = normalize_decoder(Tensor(np.full((2, 2, 1), 20.0)))
        np.testing.assert_allclose(dec.data, 1.0, atol=1e-8)

    def test_decoder_monotone(self):
        rng = np.random.default_rng(4)
        a = rng.standard_normal((4, 4, 1))
        b = a - rng.uniform(0.1, 1.0, (4, 4, 1))
        da = normalize_decoder(Tensor(a)).data
        db = normalize_decoder(Tensor(b)).data
        assert np.all(da > db)


class TestGuidedPool:
    def test_uniform_attention_is_average_pooling(self):
        rng = np.random.default_rng(5)
        feat = Tensor(rng.standard_normal((6, 6, 3)))
        enc = Tensor(np.full((6, 6, 1), 0.25))
        got = guided_pool(feat, enc).data
        np.testing.assert_allclose(got, average_pool(feat).data, atol=1e-12)

    def test_constant_features_preserved(self):
        rng = np.random.default_rng(6)
        enc = normalize_encoder(Tensor(rng.standard_normal((6, 6, 1))))
        feat = Tensor(np.full((6, 6, 2), 3.7))
        np.testing.assert_allclose(guided_pool(feat, enc).data, 3.7, rtol=1e-12)

    @pytest.mark.parametrize("seed", range(5))
    def test_matches_window_oracle(self, seed):
        rng = np.random.default_rng(seed)
        feat = rng.standard_normal((6, 4, 3))
        enc = normalize_encoder(Tensor(rng.standard_normal((6, 4, 1)))).data
        got = guided_pool(Tensor(feat), Tensor(enc)).data
        np.testing.assert_allclose(got, guided_pool_oracle(feat, enc), atol=1e-12)

    def test_convex_combination_bounds(self):
        rng = np.random.default_rng(7)
        feat = rng.standard_normal((8, 8, 2))
        enc = normalize_encoder(Tensor(rng.standard_normal((8, 8, 1)) * 3)).data
        out = guided_pool(Tensor(feat), Tensor(enc)).data
        blocks = feat.reshape(4, 2, 4, 2, 2)
        assert np.all(out >= blocks.min(axis=(1, 3)) - 1e-12)
        assert np.all(out <= blocks.max(axis=(1, 3)) + 1e-12)

    def test_rejects_shape_mismatch(self):
        with pytest.raises(ValueError):
            guided_pool(Tensor(np.ones((4, 4, 2))), Tensor(np.ones((2, 2, 1))))


class TestGuidedUnpool:
    def test_definition(self):
        d = Tensor(np.array([[[2.0]]]))
        dec = Tensor(np.array([[0.1, 0.2], [0.3, 0.4]]).reshape(2, 2, 1))
        out = guided_unpool(d, dec).data
        np.testing.assert_allclose(out[:, :, 0], [[0.2, 0.4], [0.6, 0.8]])

    def test_neutral_attention(self):
        rng = np.random.default_rng(8)
        d = Tensor(rng.standard_normal((3, 3, 2)))
        out = guided_unpool(d, Tensor(np.ones((6, 6, 1)))).data
        np.testing.assert_array_equal(out, np.repeat(np.repeat(d.data, 2, 0), 2, 1))

    def test_half_attention_scales(self):
        rng = np.random.default_rng(9)
        d = Tensor(rng.standard_normal((2, 2, 1)))
        out = guided_unpool(d, Tensor(np.full((4, 4, 1), 0.5))).data
        np.testing.assert_allclose(out, 0.5 * np.repeat(np.repeat(d.data, 2, 0), 2, 1))

    def test_rejects_shape_mismatch(self):
        with pytest.raises(ValueError):
            guided_unpool(Tensor(np.ones((3, 3, 1))), Tensor(np.ones((3, 3, 1))))


class TestEndToEnd:
    def test_gradients_through_pool_path(self):
        rng = np.random.default_rng(10)
        block = init_attention_block(4, rng)
        feat = Tensor(rng.standard_normal((4, 4, 4)))
        w = rng.standard_normal((2, 2, 4))
        tensors = [feat] + [t for _, t in block.tensors()]

        def fn(feat, *_):
            raw = attention_block_forward(feat, block)
            return (guided_pool(feat, normalize_encoder(raw)) * w).sum()
        assert grad_check(fn, tensors, max_coords=30, rng=rng) < 1e-4

    def test_maps_depend_only_on_features(self):
        block = _block(seed=11)
        feat = Tensor(np.random.default_rng(12).standard_normal((4, 4, 4)))
        raw1 = attention_block_forward(feat, block)
        raw2 = attention_block_forward(Tensor(feat.data.copy()), block)
        assert np.array_equal(normalize_encoder(raw1).data, normalize_encoder(raw2).data)
        assert np.array_equal(normalize_decoder(raw1).data, normalize_decoder(raw2).data)
