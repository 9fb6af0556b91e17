"""Compositing primitive and the training losses.

Total loss = gamma * alpha-prediction loss + (1 - gamma) * compositional
loss, both smoothed absolute differences averaged over the whole image.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .tensor import Tensor, blend, charbonnier_mean


@dataclass(frozen=True)
class LossConfig:
    gamma: float = 0.5
    eps: float = 1e-6

    def __post_init__(self):
        if not 0.0 <= self.gamma <= 1.0:
            raise ValueError(f"gamma must lie in [0, 1], got {self.gamma}")


def composite(alpha: np.ndarray, fg: np.ndarray, bg: np.ndarray) -> np.ndarray:
    """I = alpha * FG + (1 - alpha) * BG, per pixel and channel."""
    alpha = np.asarray(alpha, dtype=np.float64)
    fg = np.asarray(fg, dtype=np.float64)
    bg = np.asarray(bg, dtype=np.float64)
    if fg.shape != bg.shape:
        raise ValueError(f"composite: fg {fg.shape} vs bg {bg.shape}")
    if alpha.shape != fg.shape[:2]:
        raise ValueError(f"composite: alpha {alpha.shape} vs layers {fg.shape}")
    if alpha.min() < 0.0 or alpha.max() > 1.0:
        raise ValueError(f"composite: alpha outside [0, 1] "
                         f"(min {alpha.min():.4g}, max {alpha.max():.4g})")
    a = alpha[:, :, None]
    return a * fg + (1.0 - a) * bg


def alpha_loss(pred: Tensor, gt: np.ndarray, eps: float = 1e-6) -> Tensor:
    """Smoothed |pred - gt| averaged over all pixels."""
    gt = np.asarray(gt, dtype=np.float64)
    if gt.ndim == 2:
        gt = gt[:, :, None]
    return charbonnier_mean(pred, gt, eps)


def comp_loss(pred: Tensor, fg: np.ndarray, bg: np.ndarray,
              observed: np.ndarray, eps: float = 1e-6) -> Tensor:
    """Smoothed |composite(pred) - observed| averaged over pixels/channels."""
    return charbonnier_mean(blend(pred, fg, bg), observed, eps)


def total_loss(a_l, c_l, cfg: LossConfig = LossConfig()):
    """gamma * A_L + (1 - gamma) * C_L; works on Tensors or floats."""
    return cfg.gamma * a_l + (1.0 - cfg.gamma) * c_l
