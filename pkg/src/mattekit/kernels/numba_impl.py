"""Numba-jitted kernels. Same contracts as numpy_impl; serial loops only,
so results are bit-reproducible regardless of thread count.

Weights are transposed once per call to (kh, kw, icg, oc) so the innermost
loops run over the contiguous output-channel axis.
"""
import numpy as np
from numba import njit


@njit(cache=True)
def _conv2d_forward(xpad, wt, b, stride, groups, ho, wo):
    kh, kw, icg, oc = wt.shape
    ocg = oc // groups
    out = np.empty((ho, wo, oc), dtype=xpad.dtype)
    for oy in range(ho):
        for ox in range(wo):
            for o in range(oc):
                out[oy, ox, o] = b[o]
    for oy in range(ho):
        y0 = oy * stride
        for i in range(kh):
            y = y0 + i
            for ox in range(wo):
                x0 = ox * stride
                for j in range(kw):
                    x = x0 + j
                    for g in range(groups):
                        base = g * ocg
                        for c in range(icg):
                            xv = xpad[y, x, g * icg + c]
                            if xv != 0.0:
                                for o in range(ocg):
                                    out[oy, ox, base + o] += xv * wt[i, j, c, base + o]
    return out


def conv2d_forward(xpad, w, b, stride, groups):
    oc, icg, kh, kw = w.shape
    ho = (xpad.shape[0] - kh) // stride + 1
    wo = (xpad.shape[1] - kw) // stride + 1
    wt = np.ascontiguousarray(w.transpose(2, 3, 1, 0))
    return _conv2d_forward(np.ascontiguousarray(xpad), wt, b, stride, groups, ho, wo)


@njit(cache=True)
def _conv2d_backward(xpad, wt, gout, stride, groups):
    kh, kw, icg, oc = wt.shape
    ocg = oc // groups
    ho, wo = gout.shape[:2]
    gx = np.zeros_like(xpad)
    gwt = np.zeros_like(wt)
    for oy in range(ho):
        y0 = oy * stride
        for i in range(kh):
            y = y0 + i
            for ox in range(wo):
                x0 = ox * stride
                for j in range(kw):
                    x = x0 + j
                    for g in range(groups):
                        base = g * ocg
                        for c in range(icg):
                            xv = xpad[y, x, g * icg + c]
                            acc = 0.0
                            if xv != 0.0:
                                for o in range(ocg):
                                    go = gout[oy, ox, base + o]
                                    acc += go * wt[i, j, c, base + o]
                                    gwt[i, j, c, base + o] += go * xv
                            else:
                                for o in range(ocg):
                                    acc += gout[oy, ox, base + o] * wt[i, j, c, base + o]
                            gx[y, x, g * icg + c] += acc
    return gx, gwt


def conv2d_backward(xpad, w, gout, stride, groups):
    wt = np.ascontiguousarray(w.transpose(2, 3, 1, 0))
    gx, gwt = _conv2d_backward(np.ascontiguousarray(xpad), wt,
                               np.ascontiguousarray(gout), stride, groups)
    gb = gout.sum(axis=(0, 1))
    return gx, np.ascontiguousarray(gwt.transpose(3, 2, 0, 1)), gb


@njit(cache=True)
def _morph(mask, radius, erode):
    h, wd = mask.shape
    out = np.empty_like(mask)
    for y in range(h):
        for x in range(wd):
            if erode:
                v = mask[y, x]
                for i in range(y - radius, y + radius + 1):
                    for j in range(x - radius, x + radius + 1):
                        if i < 0 or j < 0 or i >= h or j >= wd:
                            v = 0.0
                        elif mask[i, j] < v:
                            v = mask[i, j]
                out[y, x] = v
            else:
                v = mask[y, x]
                for i in range(max(0, y - radius), min(h, y + radius + 1)):
                    for j in range(max(0, x - radius), min(wd, x + radius + 1)):
                        if mask[i, j] > v:
                            v = mask[i, j]
                out[y, x] = v
    return out


def morph(mask, radius, erode):
    if radius == 0:
        return mask.copy()
    return _morph(mask, radius, erode)
