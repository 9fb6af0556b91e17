"""Backend dispatch for the hot inner-loop kernels.

Two interchangeable implementations exist: numba-jitted loops (default) and
pure numpy. Selection order:

  1. ``MATTEKIT_KERNELS`` environment variable: ``numba`` or ``numpy``
  2. ``numba`` if importable, else ``numpy``

``set_backend`` switches at runtime (used by the benchmark and tests).
"""
import os

from . import numpy_impl

_BACKENDS = {"numpy": numpy_impl}
try:
    from . import numba_impl
    _BACKENDS["numba"] = numba_impl
except ImportError:  # pragma: no cover - numba is a declared dependency
    numba_impl = None

_env = os.environ.get("MATTEKIT_KERNELS", "").strip().lower()
if _env and _env not in _BACKENDS:
    raise RuntimeError(f"MATTEKIT_KERNELS={_env!r}: expected one of {sorted(_BACKENDS)}")
_active = _env or ("numba" if "numba" in _BACKENDS else "numpy")


def set_backend(name):
    global _active
    if name not in _BACKENDS:
        raise ValueError(f"unknown kernel backend {name!r}; have {sorted(_BACKENDS)}")
    _active = name


def get_backend():
    return _active


def conv2d_forward(xpad, w, b, stride, groups):
    return _BACKENDS[_active].conv2d_forward(xpad, w, b, stride, groups)


def conv2d_backward(xpad, w, gout, stride, groups):
    return _BACKENDS[_active].conv2d_backward(xpad, w, gout, stride, groups)


def morph(mask, radius, erode):
    return _BACKENDS[_active].morph(mask, radius, erode)
