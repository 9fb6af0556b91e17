"""Pure-numpy reference kernels (fallback backend).

All convolution kernels take an already zero-padded input `xpad` of shape
(Hp, Wp, Cin) and weights of shape (OC, Cin // groups, kh, kw).
"""
import numpy as np
from numpy.lib.stride_tricks import sliding_window_view


def conv2d_forward(xpad, w, b, stride, groups):
    oc, icg, kh, kw = w.shape
    ho = (xpad.shape[0] - kh) // stride + 1
    wo = (xpad.shape[1] - kw) // stride + 1
    ocg = oc // groups
    # windows: (Ho, Wo, Cin, kh, kw)
    win = sliding_window_view(xpad, (kh, kw), axis=(0, 1))[::stride, ::stride]
    out = np.empty((ho, wo, oc), dtype=xpad.dtype)
    for g in range(groups):
        wg = win[:, :, g * icg:(g + 1) * icg]
        out[:, :, g * ocg:(g + 1) * ocg] = np.einsum(
            "hwcij,ocij->hwo", wg, w[g * ocg:(g + 1) * ocg], optimize=True)
    return out + b


def conv2d_backward(xpad, w, gout, stride, groups):
    oc, icg, kh, kw = w.shape
    ocg = oc // groups
    win = sliding_window_view(xpad, (kh, kw), axis=(0, 1))[::stride, ::stride]
    ho, wo = gout.shape[:2]
    gx = np.zeros_like(xpad)
    gw = np.empty_like(w)
    for g in range(groups):
        go = gout[:, :, g * ocg:(g + 1) * ocg]
        wg = w[g * ocg:(g + 1) * ocg]
        gw[g * ocg:(g + 1) * ocg] = np.einsum(
            "hwo,hwcij->ocij", go, win[:, :, g * icg:(g + 1) * icg], optimize=True)
        csl = slice(g * icg, (g + 1) * icg)
        for i in range(kh):
            for j in range(kw):
                gx[i:i + ho * stride:stride, j:j + wo * stride:stride, csl] += \
                    np.einsum("hwo,oc->hwc", go, wg[:, :, i, j], optimize=True)
    gb = gout.sum(axis=(0, 1))
    return gx, gw, gb


def morph(mask, radius, erode):
    """Square-window min (erode) / max (dilate) over a zero-padded mask."""
    if radius == 0:
        return mask.copy()
    k = 2 * radius + 1
    pad = np.zeros((mask.shape[0] + 2 * radius, mask.shape[1] + 2 * radius),
                   dtype=mask.dtype)
    pad[radius:-radius, radius:-radius] = mask
    win = sliding_window_view(pad, (k, k))
    if erode:
        return win.min(axis=(2, 3))
    return win.max(axis=(2, 3))
