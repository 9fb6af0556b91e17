"""Compact encoder-decoder matting network.

Input is (H, W, 4): RGB plus the trimap as a fourth channel. Each encoder
stage applies a small conv stack, computes its attention maps, and pools
2x (attention-guided sum pooling, or plain average pooling in the
no-attention ablation). The decoder mirrors the encoder with guided
unpooling (using the maps stored on the way down) and channel-concat skip
connections. A pointwise head plus sigmoid yields raw alpha in (0, 1),
which is finally clamped against the trimap's known regions.
"""
from __future__ import annotations

import json
import struct
from dataclasses import asdict, dataclass

import numpy as np

from .attention import (AttentionBlockParams, attention_block_forward,
                        average_pool, guided_pool, guided_unpool,
                        init_attention_block, normalize_decoder,
                        normalize_encoder)
from .tensor import (ConvSpec, Tensor, concat_channels, conv2d, crop_spatial,
                     group_norm, nearest_upsample, pad_spatial, relu, sigmoid)

_CKPT_MAGIC = b"MKCKPT01"
_CKPT_VERSION = 1


@dataclass(frozen=True)
class NetConfig:
    stages: int = 3
    base_channels: int = 16
    convs_per_stage: int = 2
    seed: int = 0
    attention: bool = True
    skip: bool = True
    norm: bool = True

    def __post_init__(self):
        if self.stages < 1:
            raise ValueError(f"stages must be >= 1, got {self.stages}")
        if self.base_channels % 2:
            raise ValueError(f"base_channels must be even, got {self.base_channels}")
        if self.convs_per_stage < 1:
            raise ValueError("convs_per_stage must be >= 1")

    def stage_width(self, i):
        return self.base_channels * (2 ** i)


class NetParams:
    """Flat name -> Tensor registry plus the structured attention blocks."""

    def __init__(self, cfg: NetConfig):
        self.cfg = cfg
        self.tensors: dict[str, Tensor] = {}
        self.att_blocks: list[AttentionBlockParams] = []

    def add(self, name, tensor):
        if name in self.tensors:
            raise ValueError(f"duplicate parameter {name}")
        self.tensors[name] = tensor
        return tensor

    def count(self):
        return sum(t.data.size for t in self.tensors.values())

    def zero_grad(self):
        for t in self.tensors.values():
            t.zero_grad()


def _he_conv(rng, out_c, in_c, kh, kw, groups=1):
    icg = in_c // groups
    w = rng.standard_normal((out_c, icg, kh, kw)) * np.sqrt(2.0 / (icg * kh * kw))
    return Tensor(w), Tensor(np.zeros(out_c))


def _gn_groups(channels):
    return 2 if channels % 2 == 0 else 1


def init_params(cfg: NetConfig) -> NetParams:
    """He-initialized Gaussian conv weights (var 2/fan_in), zero biases;
    deterministic under cfg.seed."""
    rng = np.random.default_rng(cfg.seed)
    p = NetParams(cfg)

    def conv_stack(prefix, in_c, out_c, n):
        c = in_c
        for j in range(n):
            w, b = _he_conv(rng, out_c, c, 3, 3)
            p.add(f"{prefix}.conv{j}.w", w)
            p.add(f"{prefix}.conv{j}.b", b)
            if cfg.norm:
                p.add(f"{prefix}.gn{j}.gamma", Tensor(np.ones(out_c)))
                p.add(f"{prefix}.gn{j}.beta", Tensor(np.zeros(out_c)))
            c = out_c

    in_c = 4
    for i in range(cfg.stages):
        w_i = cfg.stage_width(i)
        conv_stack(f"enc{i}", in_c, w_i, cfg.convs_per_stage)
        if cfg.attention:
            block = init_attention_block(w_i, rng)
            p.att_blocks.append(block)
            for name, t in block.tensors():
                p.add(f"att{i}.{name}", t)
        in_c = w_i
    wb = cfg.stage_width(cfg.stages)
    conv_stack("bott", in_c, wb, cfg.convs_per_stage)
    cur = wb
    for i in reversed(range(cfg.stages)):
        w_i = cfg.stage_width(i)
        dec_in = cur + (w_i if cfg.skip else 0)
        conv_stack(f"dec{i}", dec_in, w_i, cfg.convs_per_stage)
        cur = w_i
    hw, hb = _he_conv(rng, 1, cur, 1, 1)
    p.add("head.w", hw)
    p.add("head.b", hb)
    return p


def _conv_gn_relu(x, p, prefix, j, freeze_norm=False):
    w = p.tensors[f"{prefix}.conv{j}.w"]
    b = p.tensors[f"{prefix}.conv{j}.b"]
    oc = w.data.shape[0]
    x = conv2d(x, w, b, ConvSpec(kernel=(3, 3), stride=1, padding=1, out_channels=oc))
    if not p.cfg.norm:
        return relu(x)
    gamma = p.tensors[f"{prefix}.gn{j}.gamma"]
    beta = p.tensors[f"{prefix}.gn{j}.beta"]
    if freeze_norm:
        gamma = Tensor(gamma.data)
        beta = Tensor(beta.data)
    return relu(group_norm(x, _gn_groups(oc), gamma, beta))


def _stack(x, p, prefix, n, freeze_norm=False):
    for j in range(n):
        x = _conv_gn_relu(x, p, prefix, j, freeze_norm)
    return x


def forward(x, params: NetParams, collect_maps: bool = False,
            freeze_norm: bool = False):
    """Run the matting net; returns (raw_alpha Tensor (H, W, 1), aux dict).

    aux holds per-stage attention maps ('raw', 'enc', 'dec') when
    ``collect_maps`` is set and the net has attention.
    """
    cfg = params.cfg
    if not isinstance(x, Tensor):
        x = Tensor(x)
    if x.data.ndim != 3 or x.data.shape[2] != 4:
        raise ValueError(f"matting net expects (H, W, 4) input, got {x.data.shape}")
    h0, w0, _ = x.data.shape
    mult = 2 ** cfg.stages
    x = pad_spatial(x, (-h0) % mult, (-w0) % mult)

    aux = {"maps": []}
    skips, dec_maps = [], []
    for i in range(cfg.stages):
        x = _stack(x, params, f"enc{i}", cfg.convs_per_stage, freeze_norm)
        skips.append(x)
        if cfg.attention:
            raw = attention_block_forward(x, params.att_blocks[i])
            enc = normalize_encoder(raw)
            dec = normalize_decoder(raw)
            dec_maps.append(dec)
            if collect_maps:
                aux["maps"].append({"raw": raw, "enc": enc, "dec": dec})
            x = guided_pool(x, enc)
        else:
            dec_maps.append(None)
            x = average_pool(x)
    x = _stack(x, params, "bott", cfg.convs_per_stage, freeze_norm)
    for i in reversed(range(cfg.stages)):
        if cfg.attention:
            x = guided_unpool(x, dec_maps[i])
        else:
            x = nearest_upsample(x, 2)
        if cfg.skip:
            x = concat_channels(x, skips[i])
        x = _stack(x, params, f"dec{i}", cfg.convs_per_stage, freeze_norm)
    x = conv2d(x, params.tensors["head.w"], params.tensors["head.b"],
               ConvSpec(kernel=(1, 1), out_channels=1))
    x = sigmoid(x)
    return crop_spatial(x, h0, w0), aux


def fuse_with_trimap(raw_alpha: np.ndarray, tri: np.ndarray) -> np.ndarray:
    """Clamp the prediction to the trimap's known regions."""
    raw_alpha = np.asarray(raw_alpha, dtype=np.float64)
    if raw_alpha.ndim == 3:
        raw_alpha = raw_alpha[:, :, 0]
    if raw_alpha.shape != tri.shape:
        raise ValueError(f"fuse: alpha {raw_alpha.shape} vs trimap {tri.shape}")
    out = raw_alpha.copy()
    out[tri == 1.0] = 1.0
    out[tri == 0.0] = 0.0
    return out


def save_checkpoint(path, params: NetParams, step: int = 0):
    """Versioned binary container; identical (config, data, step) always
    produce identical bytes."""
    names = sorted(params.tensors)
    header = {
        "version": _CKPT_VERSION,
        "config": asdict(params.cfg),
        "step": int(step),
        "arrays": [{"name": n, "shape": list(params.tensors[n].data.shape)}
                   for n in names],
    }
    hj = json.dumps(header, sort_keys=True, separators=(",", ":")).encode()
    with open(path, "wb") as f:
        f.write(_CKPT_MAGIC)
        f.write(struct.pack("<I", len(hj)))
        f.write(hj)
        for n in names:
            f.write(np.ascontiguousarray(params.tensors[n].data, dtype="<f8").tobytes())


def load_checkpoint(path):
    """Returns (NetParams, step)."""
    with open(path, "rb") as f:
        blob = f.read()
    if blob[:8] != _CKPT_MAGIC:
        raise ValueError(f"{path}: not a mattekit checkpoint")
    hlen = struct.unpack("<I", blob[8:12])[0]
    header = json.loads(blob[12:12 + hlen])
    if header["version"] != _CKPT_VERSION:
        raise ValueError(f"{path}: unsupported checkpoint version {header['version']}")
    cfg = NetConfig(**header["config"])
    params = init_params(cfg)
    off = 12 + hlen
    for entry in header["arrays"]:
        name, shape = entry["name"], tuple(entry["shape"])
        if name not in params.tensors or params.tensors[name].data.shape != shape:
            raise ValueError(f"{path}: unexpected array {name} {shape}")
        n = int(np.prod(shape)) if shape else 1
        arr = np.frombuffer(blob, dtype="<f8", count=n, offset=off).reshape(shape)
        params.tensors[name].data = arr.copy()
        off += 8 * n
    return params, header["step"]
