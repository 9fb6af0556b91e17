"""Attention-guided pooling and unpooling.

A small fully-convolutional block projects an encoder feature map
(H, W, C) down to a single-channel raw attention map at full resolution:
four independent branches (4x4 grouped conv, stride 2 -> group norm -> relu
-> two pointwise convs) each produce an (H/2, W/2, 1) quarter map, and the
four quarters are interleaved back to (H, W, 1) by pixel shuffle.

The raw map is normalized two ways: the encoder map gets sigmoid followed by
a 2x2-window softmax, so weighted sum pooling becomes a convex combination
per window (magnitude preserved); the decoder map gets sigmoid only and
modulates nearest-upsampled features.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .tensor import (ConvSpec, Tensor, conv2d, group_norm, nearest_upsample,
                     pixel_shuffle_compose, relu, sigmoid, sum_pool,
                     window_softmax)


@dataclass
class AttentionBranchParams:
    """One of the four parallel branches; parameters are not shared."""
    gconv_w: Tensor   # (2C, C/2, 4, 4), stride 2, pad 1, groups 2
    gconv_b: Tensor
    gn_gamma: Tensor  # (2C,)
    gn_beta: Tensor
    pw1_w: Tensor     # (mid, 2C, 1, 1)
    pw1_b: Tensor
    pw2_w: Tensor     # (1, mid, 1, 1)
    pw2_b: Tensor


@dataclass
class AttentionBlockParams:
    branches: list[AttentionBranchParams]
    channels: int
    gn_groups: int = 2

    def __post_init__(self):
        if len(self.branches) != 4:
            raise ValueError(f"attention block needs 4 branches, got {len(self.branches)}")

    def tensors(self):
        for i, br in enumerate(self.branches):
            for name in ("gconv_w", "gconv_b", "gn_gamma", "gn_beta",
                         "pw1_w", "pw1_b", "pw2_w", "pw2_b"):
                yield f"branch{i}.{name}", getattr(br, name)


def init_attention_block(channels: int, rng: np.random.Generator,
                         mid: int | None = None) -> AttentionBlockParams:
    """He-initialized parameters for one attention block over C channels.

    ``mid`` is the width between the two pointwise convs (default C/2).
    """
    if channels % 2:
        raise ValueError(f"attention block needs an even channel count, got {channels}")
    if mid is None:
        mid = max(1, channels // 2)
    c2 = 2 * channels
    branches = []
    for _ in range(4):
        branches.append(AttentionBranchParams(
            gconv_w=_he(rng, (c2, channels // 2, 4, 4)),
            gconv_b=Tensor(np.zeros(c2)),
            gn_gamma=Tensor(np.ones(c2)),
            gn_beta=Tensor(np.zeros(c2)),
            pw1_w=_he(rng, (mid, c2, 1, 1)),
            pw1_b=Tensor(np.zeros(mid)),
            pw2_w=_he(rng, (1, mid, 1, 1)),
            pw2_b=Tensor(np.zeros(1)),
        ))
    return AttentionBlockParams(branches, channels)


def _he(rng, shape):
    fan_in = shape[1] * shape[2] * shape[3]
    return Tensor(rng.standard_normal(shape) * np.sqrt(2.0 / fan_in))


def attention_block_forward(feat: Tensor, params: AttentionBlockParams) -> Tensor:
    """(H, W, C) features -> (H, W, 1) raw (un-normalized) attention map."""
    h, w, c = feat.data.shape
    if h % 2 or w % 2:
        raise ValueError(f"attention block needs even spatial dims, got {h}x{w}")
    if c != params.channels:
        raise ValueError(f"attention block built for {params.channels} channels, got {c}")
    gspec = ConvSpec(kernel=(4, 4), stride=2, padding=1, groups=2,
                     out_channels=2 * c)
    quarters = []
    for br in params.branches:
        y = conv2d(feat, br.gconv_w, br.gconv_b, gspec)
        y = relu(group_norm(y, params.gn_groups, br.gn_gamma, br.gn_beta))
        mid = br.pw1_w.data.shape[0]
        y = relu(conv2d(y, br.pw1_w, br.pw1_b,
                        ConvSpec(kernel=(1, 1), out_channels=mid)))
        y = conv2d(y, br.pw2_w, br.pw2_b, ConvSpec(kernel=(1, 1), out_channels=1))
        quarters.append(y)
    return pixel_shuffle_compose(quarters)


def normalize_encoder(raw_map: Tensor) -> Tensor:
    """Sigmoid then 2x2-window softmax: every pooling window sums to 1."""
    return window_softmax(sigmoid(raw_map), 2)


def normalize_decoder(raw_map: Tensor) -> Tensor:
    """Sigmoid only."""
    return sigmoid(raw_map)


def guided_pool(feat: Tensor, enc: Tensor) -> Tensor:
    """Sum pooling of the elementwise product feat * enc (2x2, stride 2)."""
    if enc.data.shape[:2] != feat.data.shape[:2] or enc.data.shape[2] != 1:
        raise ValueError(f"guided_pool: enc {enc.data.shape} vs feat {feat.data.shape}")
    return sum_pool(feat * enc, 2, 2)


def guided_unpool(dec_feat: Tensor, dec: Tensor) -> Tensor:
    """Nearest-upsample the decoder features, then modulate by the map."""
    h, w, _ = dec_feat.data.shape
    if dec.data.shape != (2 * h, 2 * w, 1):
        raise ValueError(
            f"guided_unpool: map {dec.data.shape} must be 2x the features {dec_feat.data.shape}")
    return nearest_upsample(dec_feat, 2) * dec


def average_pool(feat: Tensor) -> Tensor:
    """Plain 2x2 average pooling: the no-attention ablation's downsampler."""
    return sum_pool(feat, 2, 2) * 0.25
