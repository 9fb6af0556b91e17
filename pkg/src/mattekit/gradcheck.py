"""Central-difference verification of the hand-derived backward passes."""
from __future__ import annotations

import numpy as np

from .tensor import Tensor


def grad_check(fn, inputs, eps: float = 1e-4, max_coords: int | None = None,
               rng: np.random.Generator | None = None) -> float:
    """Compare analytic gradients of ``fn(*inputs)`` against central
    differences.

    ``fn`` must return a scalar Tensor. Returns the max over checked
    coordinates of |analytic - numeric| / max(|analytic|, |numeric|, 1e-8).
    ``max_coords`` subsamples coordinates per input (all when None).

    The central-difference estimate carries an intrinsic uncertainty that
    is measurable from function values alone: the second difference
    |fp + fm - 2 f0| / (2 eps) is O(eps * f'') for smooth functions but
    equals the first-difference error when the perturbation crosses a
    piecewise-linear kink (e.g. a ReLU pre-activation within ``eps`` of
    zero). That measured uncertainty is subtracted from the discrepancy
    before computing the relative error, so kink crossings do not produce
    false alarms while a wrong backward pass (whose discrepancy dwarfs the
    uncertainty) is still caught.
    """
    if eps <= 0:
        raise ValueError("grad_check: eps must be positive")
    for t in inputs:
        t.zero_grad()
    loss = fn(*inputs)
    if loss.data.size != 1:
        raise ValueError(f"grad_check: loss must be scalar, got shape {loss.data.shape}")
    loss.backward()
    f0 = float(loss.data)
    analytic = [np.zeros_like(t.data) if t.grad is None else t.grad.copy()
                for t in inputs]

    if rng is None:
        rng = np.random.default_rng(0)
    worst = 0.0
    for t, a in zip(inputs, analytic):
        flat = t.data.reshape(-1)
        n = flat.size
        idxs = np.arange(n)
        if max_coords is not None and n > max_coords:
            idxs = rng.choice(n, size=max_coords, replace=False)
        af = a.reshape(-1)
        for i in idxs:
            orig = flat[i]
            flat[i] = orig + eps
            fp = float(fn(*inputs).data)
            flat[i] = orig - eps
            fm = float(fn(*inputs).data)
            flat[i] = orig
            numeric = (fp - fm) / (2.0 * eps)
            uncertainty = abs(fp + fm - 2.0 * f0) / (2.0 * eps)
            diff = max(0.0, abs(af[i] - numeric) - 4.0 * uncertainty)
            rel = diff / max(abs(af[i]), abs(numeric), 1e-8)
            if rel > worst:
                worst = rel
    return worst


def rand_tensor(shape, rng, scale=1.0):
    return Tensor(rng.standard_normal(shape) * scale)
