"""8-bit PNG/PGM helpers. Images live in [0, 1] as float64 in memory; writes
are atomic (temp file then rename)."""
from __future__ import annotations

import os

import numpy as np
from PIL import Image


def _atomic_save(img: Image.Image, path):
    path = os.fspath(path)
    tmp = path + ".tmp"
    img.save(tmp, format="PPM" if path.endswith((".pgm", ".ppm")) else "PNG")
    os.replace(tmp, path)


def to_u8(arr) -> np.ndarray:
    arr = np.asarray(arr, dtype=np.float64)
    if arr.min() < 0.0 or arr.max() > 1.0:
        raise ValueError(f"image values outside [0, 1]: min {arr.min()}, max {arr.max()}")
    return np.round(arr * 255.0).astype(np.uint8)


def save_gray(path, arr):
    _atomic_save(Image.fromarray(to_u8(arr), mode="L"), path)


def save_gray_u8(path, arr_u8):
    _atomic_save(Image.fromarray(np.asarray(arr_u8, dtype=np.uint8), mode="L"), path)


def save_rgb(path, arr):
    _atomic_save(Image.fromarray(to_u8(arr), mode="RGB"), path)


def load_gray(path) -> np.ndarray:
    return np.asarray(Image.open(path).convert("L"), dtype=np.float64) / 255.0


def load_gray_u8(path) -> np.ndarray:
    return np.asarray(Image.open(path).convert("L"), dtype=np.uint8)


def load_rgb(path) -> np.ndarray:
    return np.asarray(Image.open(path).convert("RGB"), dtype=np.float64) / 255.0
