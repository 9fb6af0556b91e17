"""Synthetic desk-scale matting dataset.

Each sample is a procedural soft-edged foreground object (ellipse union plus
thin hair-like strokes) composited over a textured noise background via the
compositing equation. All planes are quantized to 8 bits before compositing,
so the stored image reproduces the composite of the stored planes to within
one quantization level after a file round-trip.
"""
from __future__ import annotations

import json
import os
from dataclasses import dataclass, replace

import numpy as np
import scipy.ndimage

from . import pngio
from .losses import composite
from .trimap import TrimapConfig, generate_trimap, trimap_radius, trimap_with_radius

MANIFEST_VERSION = 1


@dataclass
class Sample:
    sample_id: str
    image: np.ndarray     # (H, W, 3)
    gt_alpha: np.ndarray  # (H, W)
    gt_fg: np.ndarray     # (H, W, 3)
    gt_bg: np.ndarray     # (H, W, 3)
    mask: np.ndarray      # (H, W) binary float
    trimap: np.ndarray    # (H, W) in {0, 0.5, 1}


def _quant(a):
    return np.round(np.clip(a, 0.0, 1.0) * 255.0) / 255.0


def synth_foreground(seed: int, size: int):
    """Deterministic procedural object; returns (fg (H,W,3), alpha (H,W))."""
    if size < 32:
        raise ValueError(f"size must be >= 32, got {size}")
    rng = np.random.default_rng(seed)
    yy, xx = np.mgrid[0:size, 0:size].astype(np.float64)
    alpha = np.zeros((size, size))

    centers = []
    for _ in range(rng.integers(2, 5)):
        cy, cx = rng.uniform(0.3, 0.7, 2) * size
        a = rng.uniform(0.10, 0.26) * size
        b = rng.uniform(0.10, 0.26) * size
        th = rng.uniform(0.0, np.pi)
        edge = rng.uniform(1.0, 2.5)  # soft edge width in pixels
        xr = (xx - cx) * np.cos(th) + (yy - cy) * np.sin(th)
        yr = -(xx - cx) * np.sin(th) + (yy - cy) * np.cos(th)
        d = np.sqrt((xr / a) ** 2 + (yr / b) ** 2)
        reff = np.sqrt(a * b)
        alpha = np.maximum(alpha, np.clip((1.0 - d) * reff / edge, 0.0, 1.0))
        centers.append((cy, cx, reff))

    # hair-like strokes growing outward from the object body
    for _ in range(rng.integers(4, 9)):
        cy, cx, reff = centers[rng.integers(0, len(centers))]
        ang = rng.uniform(0.0, 2.0 * np.pi)
        r0 = reff * rng.uniform(0.5, 0.9)
        length = rng.uniform(6.0, 0.22 * size)
        p0 = np.array([cy + r0 * np.sin(ang), cx + r0 * np.cos(ang)])
        p1 = p0 + length * np.array([np.sin(ang + rng.uniform(-0.5, 0.5)),
                                     np.cos(ang + rng.uniform(-0.5, 0.5))])
        seg = p1 - p0
        denom = max(float(seg @ seg), 1e-9)
        t = np.clip(((yy - p0[0]) * seg[0] + (xx - p0[1]) * seg[1]) / denom, 0.0, 1.0)
        dist = np.sqrt((yy - (p0[0] + t * seg[0])) ** 2 + (xx - (p0[1] + t * seg[1])) ** 2)
        hw = rng.uniform(0.5, 1.0)  # half-width: strokes are 1-2 px thick
        alpha = np.maximum(alpha, np.clip(1.0 - dist / (hw + 0.7), 0.0, 1.0) * (1.0 - t * 0.3))

    base = rng.uniform(0.15, 0.95, 3)
    gy, gx = rng.uniform(-0.25, 0.25, 2)
    grad = (yy / size - 0.5) * gy + (xx / size - 0.5) * gx
    fg = np.clip(base[None, None, :] + grad[:, :, None], 0.0, 1.0)
    return fg, np.clip(alpha, 0.0, 1.0)


def synth_background(seed: int, size: int) -> np.ndarray:
    """Multi-octave value noise plus a color gradient, in [0, 1]."""
    if size < 32:
        raise ValueError(f"size must be >= 32, got {size}")
    rng = np.random.default_rng(seed)
    img = np.zeros((size, size, 3))
    amp = 0.5
    for res in (4, 8, 16, 32):
        grid = rng.uniform(-1.0, 1.0, (res, res, 3))
        z = scipy.ndimage.zoom(grid, (size / res, size / res, 1), order=1)[:size, :size]
        img += amp * z
        amp *= 0.5
    c0, c1 = rng.uniform(0.1, 0.9, (2, 3))
    yy = np.linspace(0.0, 1.0, size)[:, None, None]
    img = 0.6 * (c0 + (c1 - c0) * yy) + 0.25 * img + 0.2
    return np.clip(img, 0.0, 1.0)


def make_sample(sample_id: str, fg_seed: int, bg_seed: int, size: int,
                trimap_cfg: TrimapConfig = TrimapConfig(),
                radius_jitter: int = 0,
                rng: np.random.Generator | None = None) -> Sample:
    """Compose one sample from quantized planes; the image equals the
    composite of the stored planes exactly at generation time.

    ``radius_jitter`` adds a random offset in [-j, j] to the trimap radius
    to emulate coarse predicted trimaps.
    """
    fg, alpha = synth_foreground(fg_seed, size)
    bg = synth_background(bg_seed, size)
    fg, alpha, bg = _quant(fg), _quant(alpha), _quant(bg)
    image = composite(alpha, fg, bg)
    mask = (alpha >= 0.5).astype(np.float64)
    r = trimap_radius(mask, trimap_cfg)
    if radius_jitter:
        if rng is None:
            rng = np.random.default_rng(fg_seed ^ bg_seed)
        r = max(1, r + int(rng.integers(-radius_jitter, radius_jitter + 1)))
    tri = trimap_with_radius(mask, r)
    return Sample(sample_id, image, alpha, fg, bg, mask, tri)


# -- on-disk dataset ------------------------------------------------------

_DIRS = ("images", "alphas", "fgs", "bgs", "trimaps")


def write_sample(root, s: Sample):
    pngio.save_rgb(os.path.join(root, "images", s.sample_id + ".png"), _quant(s.image))
    pngio.save_gray(os.path.join(root, "alphas", s.sample_id + ".png"), s.gt_alpha)
    pngio.save_rgb(os.path.join(root, "fgs", s.sample_id + ".png"), s.gt_fg)
    pngio.save_rgb(os.path.join(root, "bgs", s.sample_id + ".png"), s.gt_bg)
    from .trimap import trimap_to_u8
    pngio.save_gray_u8(os.path.join(root, "trimaps", s.sample_id + ".png"),
                       trimap_to_u8(s.trimap))


def load_sample(root, sample_id: str) -> Sample:
    from .trimap import u8_to_trimap
    image = pngio.load_rgb(os.path.join(root, "images", sample_id + ".png"))
    alpha = pngio.load_gray(os.path.join(root, "alphas", sample_id + ".png"))
    fg = pngio.load_rgb(os.path.join(root, "fgs", sample_id + ".png"))
    bg = pngio.load_rgb(os.path.join(root, "bgs", sample_id + ".png"))
    tri = u8_to_trimap(pngio.load_gray_u8(os.path.join(root, "trimaps", sample_id + ".png")))
    return Sample(sample_id, image, alpha, fg, bg,
                  (alpha >= 0.5).astype(np.float64), tri)


def generate_dataset(root, count: int, size: int = 96, master_seed: int = 0,
                     test_fraction: float = 1 / 9,
                     trimap_cfg: TrimapConfig = TrimapConfig(),
                     radius_jitter: int = 0) -> dict:
    """Write ``count`` samples plus manifest.json; foreground seeds are
    unique per sample, so train/test never share a foreground."""
    if count < 1:
        raise ValueError("dataset must contain at least one sample")
    for d in _DIRS:
        os.makedirs(os.path.join(root, d), exist_ok=True)
    n_test = max(1, int(round(count * test_fraction))) if count > 1 else 0
    jit_rng = np.random.default_rng(master_seed + 7)
    entries = []
    for i in range(count):
        sid = f"s{i:05d}"
        fg_seed = master_seed * 1_000_003 + 2 * i
        bg_seed = fg_seed + 1
        s = make_sample(sid, fg_seed, bg_seed, size, trimap_cfg,
                        radius_jitter, jit_rng)
        write_sample(root, s)
        entries.append({"id": sid, "split": "test" if i >= count - n_test else "train",
                        "fg_seed": fg_seed, "bg_seed": bg_seed})
    manifest = {"version": MANIFEST_VERSION, "master_seed": master_seed,
                "size": size, "entries": entries}
    tmp = os.path.join(root, "manifest.json.tmp")
    with open(tmp, "w") as f:
        json.dump(manifest, f, indent=1, sort_keys=True)
        f.write("\n")
    os.replace(tmp, os.path.join(root, "manifest.json"))
    return manifest


def load_manifest(root) -> dict:
    with open(os.path.join(root, "manifest.json")) as f:
        m = json.load(f)
    if m.get("version") != MANIFEST_VERSION:
        raise ValueError(f"unsupported manifest version {m.get('version')}")
    ids = [e["id"] for e in m["entries"]]
    if len(ids) != len(set(ids)):
        raise ValueError("manifest ids are not unique")
    return m


def split_ids(manifest, split):
    return [e["id"] for e in manifest["entries"] if e["split"] == split]


# -- augmentation ---------------------------------------------------------

def _zoom_plane(a, scale, size):
    out = scipy.ndimage.zoom(a, (scale,) * 2 + (1,) * (a.ndim - 2), order=1)
    return np.clip(out[:size, :size], 0.0, 1.0)


def apply_augment(sample: Sample, scale: float, flip: bool, top: int, left: int,
                  crop: int, trimap_cfg: TrimapConfig = TrimapConfig()) -> Sample:
    """Deterministic scale -> crop -> flip, applied identically to every
    plane; mask and trimap are re-derived from the transformed alpha."""
    size = sample.gt_alpha.shape[0]
    new = max(crop, int(round(size * scale)))
    eff = new / size
    if abs(scale - 1.0) < 1e-9:
        image, alpha, fg, bg = (sample.image, sample.gt_alpha,
                                sample.gt_fg, sample.gt_bg)
    else:
        image = _zoom_plane(sample.image, eff, new)
        alpha = _zoom_plane(sample.gt_alpha, eff, new)
        fg = _zoom_plane(sample.gt_fg, eff, new)
        bg = _zoom_plane(sample.gt_bg, eff, new)
    sl = np.s_[top:top + crop, left:left + crop]
    image, alpha, fg, bg = image[sl], alpha[sl], fg[sl], bg[sl]
    if flip:
        image, alpha, fg, bg = (np.ascontiguousarray(p[:, ::-1])
                                for p in (image, alpha, fg, bg))
    mask = (alpha >= 0.5).astype(np.float64)
    tri = generate_trimap(mask, trimap_cfg)
    return Sample(sample.sample_id, image, alpha, fg, bg, mask, tri)


def augment(sample: Sample, seed: int, crop: int,
            trimap_cfg: TrimapConfig = TrimapConfig(),
            scale_range=(0.75, 1.25)) -> Sample:
    """Random scale / crop / horizontal flip; retries the crop up to 10
    times to keep at least one unknown-trimap pixel in view, then falls
    back to a center crop."""
    size = sample.gt_alpha.shape[0]
    if crop > size * scale_range[0] and crop > size:
        raise ValueError(f"crop {crop} exceeds sample size {size}")
    rng = np.random.default_rng(seed)
    scale = float(rng.uniform(*scale_range))
    new = max(crop, int(round(size * scale)))
    flip = bool(rng.random() < 0.5)
    for _ in range(10):
        top = int(rng.integers(0, new - crop + 1))
        left = int(rng.integers(0, new - crop + 1))
        out = apply_augment(sample, scale, flip, top, left, crop, trimap_cfg)
        if (out.trimap == 0.5).any() and (out.mask > 0).any():
            return out
    c = (new - crop) // 2
    return apply_augment(sample, scale, flip, c, c, crop, trimap_cfg)


def resize_cap(image: np.ndarray, max_edge: int = 1500):
    """Downscale so the longer edge is at most ``max_edge``; returns
    (image, scale). scale is 1.0 when no resize happened."""
    if max_edge < 1:
        raise ValueError("max_edge must be >= 1")
    h, w = image.shape[:2]
    longer = max(h, w)
    if longer <= max_edge:
        return image, 1.0
    s = max_edge / longer
    factors = (s, s) + (1,) * (image.ndim - 2)
    out = np.clip(scipy.ndimage.zoom(image, factors, order=1), 0.0, 1.0)
    return out, s


def resize_to(plane: np.ndarray, shape):
    """Bilinear resize to an exact (H, W); used to undo resize_cap."""
    h, w = plane.shape[:2]
    th, tw = shape
    factors = (th / h, tw / w) + (1,) * (plane.ndim - 2)
    out = scipy.ndimage.zoom(plane, factors, order=1)
    return np.clip(out[:th, :tw], 0.0, 1.0)
