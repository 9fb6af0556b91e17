"""Named central-difference checks for every differentiable operator.

Each check builds a small randomized instance for a given seed and returns
the max relative error between analytic and numeric gradients. The CLI
`gradcheck` subcommand and the acceptance suite both run this registry.
"""
from __future__ import annotations

import numpy as np

from .attention import (attention_block_forward, guided_pool, guided_unpool,
                        init_attention_block, normalize_decoder,
                        normalize_encoder)
from .gradcheck import grad_check, rand_tensor
from .losses import alpha_loss, comp_loss
from .network import NetConfig, forward, init_params
from .tensor import (ConvSpec, Tensor, activation, conv2d, group_norm,
                     nearest_upsample, pixel_shuffle_compose, sum_pool,
                     window_softmax)


def check_conv2d(seed):
    rng = np.random.default_rng(seed)
    spec = ConvSpec(kernel=(4, 4), stride=2, padding=1, groups=2, out_channels=4)
    x = rand_tensor((8, 8, 4), rng)
    w = rand_tensor((4, 2, 4, 4), rng, 0.5)
    b = rand_tensor((4,), rng, 0.1)
    return grad_check(lambda x, w, b: conv2d(x, w, b, spec).sum(), [x, w, b])


def check_group_norm(seed):
    rng = np.random.default_rng(seed)
    x = rand_tensor((4, 4, 4), rng)
    gamma = Tensor(1.0 + 0.1 * rng.standard_normal(4))
    beta = rand_tensor((4,), rng, 0.1)
    # weighted sum keeps the loss sensitive to the normalized values
    wsum = rng.standard_normal((4, 4, 4))
    return grad_check(
        lambda x, g, b: (group_norm(x, 2, g, b) * wsum).sum(), [x, gamma, beta])


def check_relu(seed):
    rng = np.random.default_rng(seed)
    # keep values away from the kink at 0, where the derivative jumps
    x = Tensor(np.sign(rng.standard_normal((5, 5, 2))) * rng.uniform(0.2, 2.0, (5, 5, 2)))
    w = rng.standard_normal((5, 5, 2))
    return grad_check(lambda x: (activation(x, "relu") * w).sum(), [x])


def check_sigmoid(seed):
    rng = np.random.default_rng(seed)
    x = rand_tensor((5, 5, 2), rng)
    w = rng.standard_normal((5, 5, 2))
    return grad_check(lambda x: (activation(x, "sigmoid") * w).sum(), [x])


def check_window_softmax(seed):
    rng = np.random.default_rng(seed)
    x = rand_tensor((6, 6, 1), rng)
    w = rng.standard_normal((6, 6, 1))
    return grad_check(lambda x: (window_softmax(x, 2) * w).sum(), [x])


def check_sum_pool(seed):
    rng = np.random.default_rng(seed)
    x = rand_tensor((6, 6, 3), rng)
    w = rng.standard_normal((3, 3, 3))
    return grad_check(lambda x: (sum_pool(x, 2, 2) * w).sum(), [x])


def check_nearest_upsample(seed):
    rng = np.random.default_rng(seed)
    x = rand_tensor((3, 3, 2), rng)
    w = rng.standard_normal((6, 6, 2))
    return grad_check(lambda x: (nearest_upsample(x, 2) * w).sum(), [x])


def check_pixel_shuffle(seed):
    rng = np.random.default_rng(seed)
    maps = [rand_tensor((3, 3, 1), rng) for _ in range(4)]
    w = rng.standard_normal((6, 6, 1))
    return grad_check(lambda *m: (pixel_shuffle_compose(m) * w).sum(), maps)


def check_attention_block(seed):
    rng = np.random.default_rng(seed)
    block = init_attention_block(4, rng)
    feat = rand_tensor((4, 4, 4), rng)
    w = rng.standard_normal((4, 4, 1))
    tensors = [feat] + [t for _, t in block.tensors()]

    def fn(feat, *_):
        return (attention_block_forward(feat, block) * w).sum()
    return grad_check(fn, tensors, max_coords=40, rng=rng)


def check_guided_pool(seed):
    rng = np.random.default_rng(seed)
    block = init_attention_block(4, rng)
    feat = rand_tensor((4, 4, 4), rng)
    w = rng.standard_normal((2, 2, 4))
    tensors = [feat] + [t for _, t in block.tensors()]

    def fn(feat, *_):
        raw = attention_block_forward(feat, block)
        return (guided_pool(feat, normalize_encoder(raw)) * w).sum()
    return grad_check(fn, tensors, max_coords=40, rng=rng)


def check_guided_unpool(seed):
    rng = np.random.default_rng(seed)
    dec_feat = rand_tensor((3, 3, 2), rng)
    raw = rand_tensor((6, 6, 1), rng)
    w = rng.standard_normal((6, 6, 2))

    def fn(dec_feat, raw):
        return (guided_unpool(dec_feat, normalize_decoder(raw)) * w).sum()
    return grad_check(fn, [dec_feat, raw])


def check_matting_forward(seed):
    rng = np.random.default_rng(seed)
    cfg = NetConfig(stages=2, base_channels=4, convs_per_stage=1, seed=seed)
    params = init_params(cfg)
    x = Tensor(rng.uniform(0.0, 1.0, (8, 8, 4)))
    w = rng.standard_normal((8, 8, 1))
    tensors = [x] + list(params.tensors.values())

    def fn(x, *_):
        raw, _ = forward(x, params)
        return (raw * w).sum()
    return grad_check(fn, tensors, max_coords=8, rng=rng)


def check_alpha_loss(seed):
    rng = np.random.default_rng(seed)
    pred = Tensor(rng.uniform(0.05, 0.95, (5, 5, 1)))
    gt = rng.uniform(0.0, 1.0, (5, 5))
    return grad_check(lambda p: alpha_loss(p, gt), [pred])


def check_comp_loss(seed):
    rng = np.random.default_rng(seed)
    pred = Tensor(rng.uniform(0.05, 0.95, (5, 5, 1)))
    fg = rng.uniform(0.0, 1.0, (5, 5, 3))
    bg = rng.uniform(0.0, 1.0, (5, 5, 3))
    obs = rng.uniform(0.0, 1.0, (5, 5, 3))
    return grad_check(lambda p: comp_loss(p, fg, bg, obs), [pred])


OPERATOR_CHECKS = {
    "conv2d": check_conv2d,
    "group_norm": check_group_norm,
    "relu": check_relu,
    "sigmoid": check_sigmoid,
    "window_softmax": check_window_softmax,
    "sum_pool": check_sum_pool,
    "nearest_upsample": check_nearest_upsample,
    "pixel_shuffle": check_pixel_shuffle,
    "attention_block": check_attention_block,
    "guided_pool": check_guided_pool,
    "guided_unpool": check_guided_unpool,
    "matting_forward": check_matting_forward,
    "alpha_loss": check_alpha_loss,
    "comp_loss": check_comp_loss,
}


def run_operator_checks(seeds=10, tol=1e-4):
    """Returns {operator: max rel err over seeds}; all should be <= tol."""
    results = {}
    for name, fn in OPERATOR_CHECKS.items():
        results[name] = max(fn(seed) for seed in range(seeds))
    return results
