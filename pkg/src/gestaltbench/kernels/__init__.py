"""Rasterization and labeling kernels with a compiled core.

Two interchangeable backends live here: `_ckernels` (Cython) and
`_pykernels` (numpy). They produce bit-identical output, so selection is
purely a speed question. `GESTALTBENCH_KERNELS=c|python|auto` forces a
backend; the default prefers the compiled one and silently falls back.
"""

from __future__ import annotations

import os

import numpy as np


def _load_backend():
    choice = os.environ.get("GESTALTBENCH_KERNELS", "auto").strip().lower()
    if choice not in {"auto", "c", "python"}:
        raise ValueError(
            f"GESTALTBENCH_KERNELS must be one of auto/c/python, got {choice!r}"
        )
    if choice in ("auto", "c"):
        try:
            from . import _ckernels

            return _ckernels, "c"
        except ImportError:
            if choice == "c":
                raise
    from . import _pykernels

    return _pykernels, "python"


_impl, BACKEND = _load_backend()

fill_polygon = _impl.fill_polygon
_label_raw = _impl.label_raw


def backend_name() -> str:
    return BACKEND


def get_backend(name: str):
    """Return (fill_polygon, label_raw) for an explicit backend. Test/bench hook."""
    if name == "c":
        from . import _ckernels as mod
    elif name == "python":
        from . import _pykernels as mod
    else:
        raise ValueError(f"unknown backend {name!r}")
    return mod.fill_polygon, mod.label_raw


def canonical_relabel(raw: np.ndarray) -> tuple[np.ndarray, int]:
    """Map arbitrary positive labels to 1..n in first-occurrence row-major order.

    Canonicalizing here means component ids do not depend on which backend
    (or which union-find ordering) produced the raw labels.
    """
    raw = np.asarray(raw)
    flat = raw.ravel()
    nz = flat[flat > 0]
    if nz.size == 0:
        return np.zeros(raw.shape, dtype=np.int32), 0
    uniq, first = np.unique(nz, return_index=True)
    order = uniq[np.argsort(first)]
    lut = np.zeros(int(uniq[-1]) + 1, dtype=np.int32)
    lut[order] = np.arange(1, order.size + 1, dtype=np.int32)
    return lut[raw], int(order.size)


def label_components(img: np.ndarray, raw_label=None) -> tuple[np.ndarray, int]:
    """8-connectivity components of img > 0.

    Returns (labels, n) where labels is int32, background 0, components
    numbered 1..n by first occurrence in row-major scan order.
    """
    fn = raw_label if raw_label is not None else _label_raw
    return canonical_relabel(fn(np.asarray(img)))
