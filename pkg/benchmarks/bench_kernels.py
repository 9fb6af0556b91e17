#!/usr/bin/env python3
"""Benchmark the numba kernel backend against the pure-numpy fallback.

Times the three dispatched kernels (conv2d forward, conv2d backward,
morphology) on shapes representative of real use, verifies that both
backends agree to near machine precision, and reports the speedup.

Usage: python3 benchmarks/bench_kernels.py [--repeats N]
"""
import argparse
import time

import numpy as np

from mattekit import kernels
from mattekit.kernels import numba_impl, numpy_impl

CONV_CASES = [
    # (label, H, W, in_c, out_c, k, stride, pad, groups)
    ("enc 96x96x16->16 3x3", 96, 96, 16, 16, 3, 1, 1, 1),
    ("enc 48x48x32->32 3x3", 48, 48, 32, 32, 3, 1, 1, 1),
    ("bott 12x12x64->128 3x3", 12, 12, 64, 128, 3, 1, 1, 1),
    ("att 96x96x16->32 4x4/s2 g2", 96, 96, 16, 32, 4, 2, 1, 2),
]
MORPH_CASES = [("mask 256x256 r=5", 256, 5), ("mask 512x512 r=8", 512, 8)]


def timeit(fn, repeats):
    fn()  # warm-up (jit compilation for the numba path)
    best = np.inf
    for _ in range(repeats):
        t0 = time.perf_counter()
        fn()
        best = min(best, time.perf_counter() - t0)
    return best


def bench_conv(repeats):
    rng = np.random.default_rng(0)
    rows = []
    for label, h, w, ic, oc, k, stride, pad, groups in CONV_CASES:
        x = rng.standard_normal((h + 2 * pad, w + 2 * pad, ic))
        wt = rng.standard_normal((oc, ic // groups, k, k))
        b = rng.standard_normal(oc)
        y_nb = numba_impl.conv2d_forward(x, wt, b, stride, groups)
        y_np = numpy_impl.conv2d_forward(x, wt, b, stride, groups)
        assert np.abs(y_nb - y_np).max() < 1e-10, label
        gout = rng.standard_normal(y_nb.shape)
        for name, mod in (("forward", None), ("backward", None)):
            if name == "forward":
                f_nb = lambda: numba_impl.conv2d_forward(x, wt, b, stride, groups)
                f_np = lambda: numpy_impl.conv2d_forward(x, wt, b, stride, groups)
            else:
                f_nb = lambda: numba_impl.conv2d_backward(x, wt, gout, stride, groups)
                f_np = lambda: numpy_impl.conv2d_backward(x, wt, gout, stride, groups)
                for a, bb in zip(f_nb(), f_np()):
                    assert np.abs(a - bb).max() < 1e-10, label
            t_nb, t_np = timeit(f_nb, repeats), timeit(f_np, repeats)
            rows.append((f"conv {name}: {label}", t_nb, t_np))
    return rows


def bench_morph(repeats):
    rng = np.random.default_rng(1)
    rows = []
    for label, size, radius in MORPH_CASES:
        mask = (rng.random((size, size)) > 0.5).astype(np.float64)
        for erode in (True, False):
            y_nb = numba_impl.morph(mask, radius, erode)
            y_np = numpy_impl.morph(mask, radius, erode)
            assert np.array_equal(y_nb, y_np), label
            f_nb = lambda: numba_impl.morph(mask, radius, erode)
            f_np = lambda: numpy_impl.morph(mask, radius, erode)
            op = "erode" if erode else "dilate"
            rows.append((f"{op}: {label}", timeit(f_nb, repeats), timeit(f_np, repeats)))
    return rows


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--repeats", type=int, default=5)
    args = ap.parse_args()
    print(f"active backend: {kernels.get_backend()}  (repeats={args.repeats}, best-of)")
    print(f"{'case':42s} {'numba':>10s} {'numpy':>10s} {'speedup':>8s}")
    rows = bench_conv(args.repeats) + bench_morph(args.repeats)
    for label, t_nb, t_np in rows:
        print(f"{label:42s} {t_nb * 1e3:8.2f}ms {t_np * 1e3:8.2f}ms {t_np / t_nb:7.2f}x")
    geo = np.exp(np.mean([np.log(t_np / t_nb) for _, t_nb, t_np in rows]))
    print(f"\ngeometric-mean speedup (numba over numpy): {geo:.2f}x")


if __name__ == "__main__":
    main()
