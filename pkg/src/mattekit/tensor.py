"""Reverse-mode autodiff over dense numpy arrays.

The operator set is exactly what the matting network needs: grouped strided
convolution, group normalization, relu/sigmoid, windowed softmax, sum
pooling, nearest upsampling, pixel-shuffle recomposition, channel concat and
a handful of elementwise/reduction ops. Images are rank-3 (H, W, C) arrays;
scalars (loss roots) are 0-d.

Hot convolution loops live in :mod:`mattekit.kernels` (numba by default,
numpy fallback); everything else is plain vectorized numpy.
"""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from . import kernels


class Tensor:
    """A value in the computation graph, with an optional gradient slot."""

    __slots__ = ("data", "grad", "_prev", "_backward")

    def __init__(self, data, _prev=()):
        self.data = np.asarray(data, dtype=np.float64)
        self.grad = None
        self._prev = tuple(_prev)
        self._backward = None

    @property
    def shape(self):
        return self.data.shape

    def __repr__(self):
        return f"Tensor(shape={self.data.shape})"

    def _accum(self, g):
        if self.grad is None:
            self.grad = np.zeros_like(self.data)
        self.grad += g

    def zero_grad(self):
        self.grad = None

    def backward(self):
        """Populate .grad on every upstream node; self must be scalar."""
        if self.data.size != 1:
            raise ValueError(f"backward requires a scalar loss, got shape {self.data.shape}")
        topo = []
        visited = set()
        stack = [(self, False)]
        while stack:
            node, done = stack.pop()
            if done:
                topo.append(node)
                continue
            if id(node) in visited:
                continue
            visited.add(id(node))
            stack.append((node, True))
            for p in node._prev:
                stack.append((p, False))
        self.grad = np.ones_like(self.data)
        for node in reversed(topo):
            if node._backward is not None:
                node._backward()

    # -- elementwise arithmetic -------------------------------------------

    def __add__(self, other):
        if not isinstance(other, Tensor):
            out = Tensor(self.data + other, (self,))

            def back():
                self._accum(out.grad)
            out._backward = back
            return out
        _require(self.data.shape == other.data.shape,
                 f"add: shape {self.data.shape} vs {other.data.shape}")
        out = Tensor(self.data + other.data, (self, other))

        def back():
            self._accum(out.grad)
            other._accum(out.grad)
        out._backward = back
        return out

    __radd__ = __add__

    def __neg__(self):
        return self * -1.0

    def __sub__(self, other):
        return self + (-other if isinstance(other, Tensor) else -other)

    def __mul__(self, other):
        if not isinstance(other, Tensor):
            other_arr = np.asarray(other, dtype=np.float64)
            out = Tensor(self.data * other_arr, (self,))

            def back():
                g = out.grad * other_arr
                if g.shape != self.data.shape:
                    g = _reduce_to(g, self.data.shape)
                self._accum(g)
            out._backward = back
            return out
        a, b = self, other
        _require(_mul_compatible(a.data.shape, b.data.shape),
                 f"mul: shape {a.data.shape} vs {b.data.shape}")
        out = Tensor(a.data * b.data, (a, b))

        def back():
            a._accum(_reduce_to(out.grad * b.data, a.data.shape))
            b._accum(_reduce_to(out.grad * a.data, b.data.shape))
        out._backward = back
        return out

    __rmul__ = __mul__

    def sum(self):
        out = Tensor(self.data.sum(), (self,))

        def back():
            self._accum(np.full_like(self.data, float(out.grad)))
        out._backward = back
        return out

    def mean(self):
        return self.sum() * (1.0 / self.data.size)

    def item(self):
        return float(self.data)


def _require(cond, msg):
    if not cond:
        raise ValueError(msg)


def _mul_compatible(sa, sb):
    if sa == sb:
        return True
    # the only broadcast used: a single-channel map against an (H, W, C) stack
    if len(sa) == 3 and len(sb) == 3 and sa[:2] == sb[:2] and (sa[2] == 1 or sb[2] == 1):
        return True
    return False


def _reduce_to(g, shape):
    if g.shape == shape:
        return g
    return g.sum(axis=2, keepdims=True)


@dataclass
class ConvSpec:
    """Geometry of a (possibly grouped) 2-d convolution."""
    kernel: tuple[int, int]
    stride: int = 1
    padding: int = 0
    groups: int = 1
    out_channels: int = 1

    def validate(self, in_channels):
        if in_channels % self.groups or self.out_channels % self.groups:
            raise ValueError(
                f"conv groups={self.groups} must divide in={in_channels} and out={self.out_channels}")


def conv2d(x: Tensor, w: Tensor, b: Tensor, spec: ConvSpec) -> Tensor:
    """Grouped strided convolution with zero padding.

    x: (H, W, Cin); w: (OC, Cin/groups, kh, kw); b: (OC,).
    """
    _require(x.data.ndim == 3, f"conv2d input must be rank 3, got {x.data.shape}")
    h, wd, cin = x.data.shape
    oc, icg, kh, kw = w.data.shape
    spec.validate(cin)
    _require((kh, kw) == tuple(spec.kernel) and oc == spec.out_channels,
             "conv2d: weight shape disagrees with spec")
    _require(icg == cin // spec.groups,
             f"conv2d: input has {cin} channels, weights expect {icg * spec.groups}")
    p, s = spec.padding, spec.stride
    _require(h + 2 * p >= kh and wd + 2 * p >= kw,
             f"conv2d: {h}x{wd} input too small for {kh}x{kw} kernel with padding {p}")
    xpad = np.pad(x.data, ((p, p), (p, p), (0, 0)))
    out = Tensor(kernels.conv2d_forward(xpad, w.data, b.data, s, spec.groups),
                 (x, w, b))

    def back():
        gx, gw, gb = kernels.conv2d_backward(xpad, w.data, out.grad, s, spec.groups)
        if p:
            gx = gx[p:-p, p:-p]
        x._accum(gx)
        w._accum(gw)
        b._accum(gb)
    out._backward = back
    return out


def group_norm(x: Tensor, groups: int, gamma: Tensor, beta: Tensor, eps: float = 1e-5) -> Tensor:
    """Normalize each channel-group of a single sample to mean 0 / var 1,
    then apply a per-channel affine."""
    h, w, c = x.data.shape
    _require(c % groups == 0, f"group_norm: {groups} groups do not divide {c} channels")
    _require(eps > 0, "group_norm: eps must be positive")
    cg = c // groups
    xg = x.data.reshape(h, w, groups, cg)
    mu = xg.mean(axis=(0, 1, 3), keepdims=True)
    var = xg.var(axis=(0, 1, 3), keepdims=True)
    inv = 1.0 / np.sqrt(var + eps)
    xhat = ((xg - mu) * inv).reshape(h, w, c)
    out = Tensor(xhat * gamma.data + beta.data, (x, gamma, beta))

    def back():
        g = out.grad
        gamma._accum((g * xhat).sum(axis=(0, 1)))
        beta._accum(g.sum(axis=(0, 1)))
        dxhat = (g * gamma.data).reshape(h, w, groups, cg)
        xh = xhat.reshape(h, w, groups, cg)
        m1 = dxhat.mean(axis=(0, 1, 3), keepdims=True)
        m2 = (dxhat * xh).mean(axis=(0, 1, 3), keepdims=True)
        gx = (dxhat - m1 - xh * m2) * inv
        x._accum(gx.reshape(h, w, c))
    out._backward = back
    return out


def relu(x: Tensor) -> Tensor:
    mask = x.data > 0
    out = Tensor(np.where(mask, x.data, 0.0), (x,))

    def back():
        x._accum(out.grad * mask)
    out._backward = back
    return out


def sigmoid(x: Tensor) -> Tensor:
    s = 1.0 / (1.0 + np.exp(-x.data))
    out = Tensor(s, (x,))

    def back():
        x._accum(out.grad * s * (1.0 - s))
    out._backward = back
    return out


def activation(x: Tensor, kind: str) -> Tensor:
    if kind == "relu":
        return relu(x)
    if kind == "sigmoid":
        return sigmoid(x)
    raise ValueError(f"unknown activation {kind!r}")


def window_softmax(x: Tensor, window: int = 2) -> Tensor:
    """Softmax within each non-overlapping window×window block of a
    single-channel map; every block sums to 1."""
    h, w, c = x.data.shape
    _require(c == 1, f"window_softmax expects a single channel, got {c}")
    _require(h % window == 0 and w % window == 0,
             f"window_softmax: {h}x{w} not divisible by window {window}")
    blocks = x.data.reshape(h // window, window, w // window, window)
    e = np.exp(blocks - blocks.max(axis=(1, 3), keepdims=True))
    s = e / e.sum(axis=(1, 3), keepdims=True)
    out = Tensor(s.reshape(h, w, 1), (x,))

    def back():
        g = out.grad.reshape(h // window, window, w // window, window)
        dot = (g * s).sum(axis=(1, 3), keepdims=True)
        x._accum((s * (g - dot)).reshape(h, w, 1))
    out._backward = back
    return out


def sum_pool(x: Tensor, k: int = 2, s: int = 2) -> Tensor:
    """Sum over each k×k window with stride s; only k == s is supported."""
    _require(k == s, "sum_pool: only kernel == stride is supported")
    h, w, c = x.data.shape
    _require(h % s == 0 and w % s == 0, f"sum_pool: {h}x{w} not divisible by stride {s}")
    out = Tensor(x.data.reshape(h // s, s, w // s, s, c).sum(axis=(1, 3)), (x,))

    def back():
        x._accum(np.repeat(np.repeat(out.grad, s, axis=0), s, axis=1))
    out._backward = back
    return out


def nearest_upsample(x: Tensor, factor: int = 2) -> Tensor:
    _require(factor >= 1, "nearest_upsample: factor must be >= 1")
    if factor == 1:
        return x * 1.0
    out = Tensor(np.repeat(np.repeat(x.data, factor, axis=0), factor, axis=1), (x,))

    def back():
        h, w, c = x.data.shape
        g = out.grad.reshape(h, factor, w, factor, c).sum(axis=(1, 3))
        x._accum(g)
    out._backward = back
    return out


def pixel_shuffle_compose(maps) -> Tensor:
    """Interleave four (h, w, 1) maps into a (2h, 2w, 1) map; map m lands on
    the (m // 2, m % 2) sub-lattice of each 2x2 block."""
    m0, m1, m2, m3 = maps
    shp = m0.data.shape
    for m in (m1, m2, m3):
        _require(m.data.shape == shp, "pixel_shuffle_compose: maps must share one shape")
    h, w, c = shp
    _require(c == 1, "pixel_shuffle_compose: maps must be single channel")
    full = np.empty((2 * h, 2 * w, 1))
    full[0::2, 0::2] = m0.data
    full[0::2, 1::2] = m1.data
    full[1::2, 0::2] = m2.data
    full[1::2, 1::2] = m3.data
    out = Tensor(full, (m0, m1, m2, m3))

    def back():
        m0._accum(out.grad[0::2, 0::2])
        m1._accum(out.grad[0::2, 1::2])
        m2._accum(out.grad[1::2, 0::2])
        m3._accum(out.grad[1::2, 1::2])
    out._backward = back
    return out


def concat_channels(a: Tensor, b: Tensor) -> Tensor:
    _require(a.data.shape[:2] == b.data.shape[:2],
             f"concat: spatial dims differ, {a.data.shape} vs {b.data.shape}")
    ca = a.data.shape[2]
    out = Tensor(np.concatenate([a.data, b.data], axis=2), (a, b))

    def back():
        a._accum(out.grad[:, :, :ca])
        b._accum(out.grad[:, :, ca:])
    out._backward = back
    return out


def pad_spatial(x: Tensor, ph: int, pw: int) -> Tensor:
    """Zero-pad at the bottom/right (used to reach even dims before pooling)."""
    if ph == 0 and pw == 0:
        return x
    out = Tensor(np.pad(x.data, ((0, ph), (0, pw), (0, 0))), (x,))

    def back():
        h, w, _ = x.data.shape
        x._accum(out.grad[:h, :w])
    out._backward = back
    return out


def crop_spatial(x: Tensor, h: int, w: int) -> Tensor:
    if x.data.shape[0] == h and x.data.shape[1] == w:
        return x
    out = Tensor(x.data[:h, :w].copy(), (x,))

    def back():
        g = np.zeros_like(x.data)
        g[:h, :w] = out.grad
        x._accum(g)
    out._backward = back
    return out


def charbonnier_mean(x: Tensor, target: np.ndarray, eps: float = 1e-6) -> Tensor:
    """Mean of sqrt((x - target)^2 + eps^2): a smoothed absolute difference."""
    target = np.asarray(target, dtype=np.float64)
    _require(x.data.shape == target.shape,
             f"charbonnier: shape {x.data.shape} vs {target.shape}")
    d = x.data - target
    r = np.sqrt(d * d + eps * eps)
    out = Tensor(r.mean(), (x,))

    def back():
        x._accum(float(out.grad) * d / (r * d.size))
    out._backward = back
    return out


def blend(alpha: Tensor, fg: np.ndarray, bg: np.ndarray) -> Tensor:
    """Compositing primitive with fixed layers: alpha*fg + (1-alpha)*bg.

    alpha is (H, W, 1) and broadcasts across the layers' channels.
    """
    fg = np.asarray(fg, dtype=np.float64)
    bg = np.asarray(bg, dtype=np.float64)
    _require(fg.shape == bg.shape, "blend: fg/bg shapes differ")
    _require(alpha.data.shape[:2] == fg.shape[:2] and alpha.data.shape[2] == 1,
             f"blend: alpha {alpha.data.shape} vs layers {fg.shape}")
    out = Tensor(alpha.data * fg + (1.0 - alpha.data) * bg, (alpha,))

    def back():
        alpha._accum((out.grad * (fg - bg)).sum(axis=2, keepdims=True))
    out._backward = back
    return out
