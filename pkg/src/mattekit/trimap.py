"""Binary mask -> trimap via bounding-box-scaled erosion/dilation.

The unknown band is the region between an eroded and a dilated copy of the
object mask; its radius is a fixed fraction of the mean object dimension.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import kernels

LEVELS = (0.0, 0.5, 1.0)


class EmptyMaskError(ValueError):
    """Raised when a mask contains no foreground pixel; callers skip the sample."""


@dataclass(frozen=True)
class BBox:
    """Half-open pixel box: x in [x0, x1), y in [y0, y1)."""
    x0: int
    y0: int
    x1: int
    y1: int

    @property
    def width(self):
        return self.x1 - self.x0

    @property
    def height(self):
        return self.y1 - self.y0


@dataclass(frozen=True)
class TrimapConfig:
    rate: float = 0.03
    min_radius: int = 1

    def __post_init__(self):
        if not 0.0 < self.rate < 0.5:
            raise ValueError(f"trimap rate must lie in (0, 0.5), got {self.rate}")
        if self.min_radius < 1:
            raise ValueError(f"min_radius must be >= 1, got {self.min_radius}")


def mask_bbox(mask: np.ndarray) -> BBox:
    """Tightest box around pixels >= 0.5."""
    fg = np.asarray(mask) >= 0.5
    ys, xs = np.nonzero(fg)
    if ys.size == 0:
        raise EmptyMaskError("mask has no foreground pixels")
    return BBox(int(xs.min()), int(ys.min()), int(xs.max()) + 1, int(ys.max()) + 1)


def morph(mask: np.ndarray, radius: int, mode: str) -> np.ndarray:
    """Square-structuring-element erosion or dilation.

    Erosion treats out-of-image pixels as background; dilation clips the
    window at the border. radius 0 is the identity.
    """
    if radius < 0:
        raise ValueError(f"morph radius must be >= 0, got {radius}")
    if mode not in ("erode", "dilate"):
        raise ValueError(f"morph mode must be 'erode' or 'dilate', got {mode!r}")
    m = (np.asarray(mask, dtype=np.float64) >= 0.5).astype(np.float64)
    return kernels.morph(m, int(radius), mode == "erode")


def trimap_radius(mask: np.ndarray, cfg: TrimapConfig) -> int:
    box = mask_bbox(mask)
    return max(cfg.min_radius, int(round(cfg.rate * (box.height + box.width) / 2.0)))


def generate_trimap(mask: np.ndarray, cfg: TrimapConfig = TrimapConfig()) -> np.ndarray:
    """Three-level map: eroded core -> 1.0, dilated band -> 0.5, rest -> 0.0."""
    return trimap_with_radius(mask, trimap_radius(mask, cfg))


def trimap_with_radius(mask: np.ndarray, r: int) -> np.ndarray:
    mask_bbox(mask)  # reject empty masks
    eroded = morph(mask, r, "erode")
    dilated = morph(mask, r, "dilate")
    tri = np.zeros(np.asarray(mask).shape, dtype=np.float64)
    tri[dilated >= 0.5] = 0.5
    tri[eroded >= 0.5] = 1.0
    return tri


def trimap_to_u8(tri: np.ndarray) -> np.ndarray:
    """Encode 0 / 0.5 / 1 as exactly 0 / 128 / 255."""
    out = np.zeros(tri.shape, dtype=np.uint8)
    out[tri == 0.5] = 128
    out[tri == 1.0] = 255
    bad = ~np.isin(tri, LEVELS)
    if bad.any():
        raise ValueError(f"trimap contains {np.unique(tri[bad])}: not a 3-level map")
    return out


def u8_to_trimap(img: np.ndarray) -> np.ndarray:
    """Decode an 8-bit trimap; 128 +/- 1 is accepted for the unknown level."""
    img = np.asarray(img)
    tri = np.full(img.shape, -1.0)
    tri[img == 0] = 0.0
    tri[np.abs(img.astype(np.int64) - 128) <= 1] = 0.5
    tri[img == 255] = 1.0
    if (tri < 0).any():
        raise ValueError(f"invalid trimap levels: {np.unique(img[tri < 0])}")
    return tri
