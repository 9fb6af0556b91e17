"""Matte quality metrics: MSE, SAD, gradient error and connectivity error.

All four are computed over the entire image and averaged by pixel count.
Reports apply display scaling (x1e3 for MSE/SAD, x1e5 for gradient and
connectivity) only when written to CSV; the stored values are raw means.
"""
from __future__ import annotations

import csv
from dataclasses import dataclass

import numpy as np
import scipy.ndimage


@dataclass(frozen=True)
class MetricsReport:
    mse: float
    sad: float
    grad: float
    conn: float
    pixels: int

    CSV_HEADER = ("method", "mse_x1e3", "sad_x1e3", "grad_x1e5", "conn_x1e5", "pixels")

    def csv_row(self, method):
        return (method, f"{self.mse * 1e3:.6f}", f"{self.sad * 1e3:.6f}",
                f"{self.grad * 1e5:.6f}", f"{self.conn * 1e5:.6f}", str(self.pixels))


def write_report_csv(path, rows):
    """rows: iterable of (method_name, MetricsReport)."""
    with open(path, "w", newline="") as f:
        w = csv.writer(f)
        w.writerow(MetricsReport.CSV_HEADER)
        for method, rep in rows:
            w.writerow(rep.csv_row(method))


def _gauss(x, sigma):
    return np.exp(-x ** 2 / (2.0 * sigma ** 2)) / (sigma * np.sqrt(2.0 * np.pi))


def _dgauss(x, sigma):
    return -x * _gauss(x, sigma) / sigma ** 2


def gauss_gradient(im, sigma=1.4):
    """First-order Gaussian-derivative gradient (gx, gy), 'nearest' borders."""
    eps = 1e-2
    half = int(np.ceil(sigma * np.sqrt(-2.0 * np.log(np.sqrt(2.0 * np.pi) * sigma * eps))))
    xs = np.arange(-half, half + 1)
    hx = _gauss(xs[:, None], sigma) * _dgauss(xs[None, :], sigma)
    hx = hx / np.sqrt((hx ** 2).sum())
    gx = scipy.ndimage.convolve(im, hx, mode="nearest")
    gy = scipy.ndimage.convolve(im, hx.T, mode="nearest")
    return gx, gy


def gradient_error(pred, gt, sigma=1.4):
    px, py = gauss_gradient(pred, sigma)
    gx, gy = gauss_gradient(gt, sigma)
    pa = np.sqrt(px ** 2 + py ** 2)
    ga = np.sqrt(gx ** 2 + gy ** 2)
    return float(((pa - ga) ** 2).mean())


def _largest_component(binary):
    """Largest 4-connected component as a 0/1 array (zeros if empty)."""
    labels, n = scipy.ndimage.label(binary)
    if n == 0:
        return np.zeros(binary.shape)
    sizes = scipy.ndimage.sum_labels(np.ones(binary.shape), labels, range(1, n + 1))
    return (labels == (int(np.argmax(sizes)) + 1)).astype(np.float64)


def connectivity_error(pred, gt, step=0.1, theta=0.15):
    """Mean absolute difference of degrees of connectedness.

    For each threshold level, the connected source region is the largest
    4-connected component where both mattes exceed the level; a pixel's
    level-of-connectedness is the highest level at which it still belongs
    to that region.
    """
    nlev = int(round(1.0 / step))
    l_map = np.full(pred.shape, -1.0)
    for k in range(1, nlev + 1):
        t = k * step
        omega = _largest_component((pred >= t) & (gt >= t))
        newly_cut = (l_map == -1.0) & (omega == 0)
        l_map[newly_cut] = (k - 1) * step
    l_map[l_map == -1.0] = 1.0
    dp = pred - l_map
    dg = gt - l_map
    phi_p = 1.0 - dp * (dp >= theta)
    phi_g = 1.0 - dg * (dg >= theta)
    return float(np.abs(phi_p - phi_g).mean())


def evaluate(pred, gt, grad_sigma=1.4, conn_step=0.1, conn_theta=0.15) -> MetricsReport:
    """Whole-image, pixel-averaged MSE / SAD / gradient / connectivity."""
    pred = np.asarray(pred, dtype=np.float64)
    gt = np.asarray(gt, dtype=np.float64)
    if pred.shape != gt.shape or pred.ndim != 2:
        raise ValueError(f"evaluate: need matching 2-d mattes, got {pred.shape} vs {gt.shape}")
    for name, a in (("pred", pred), ("gt", gt)):
        if a.min() < 0.0 or a.max() > 1.0:
            raise ValueError(f"evaluate: {name} outside [0, 1]")
    d = pred - gt
    return MetricsReport(
        mse=float((d ** 2).mean()),
        sad=float(np.abs(d).mean()),
        grad=gradient_error(pred, gt, grad_sigma),
        conn=connectivity_error(pred, gt, conn_step, conn_theta),
        pixels=pred.size,
    )
