"""Shared placement helpers for the task generators.

All generators work on a 200x200 canvas and keep objects at least two
pixels apart (Chebyshev).  Separation is enforced through an occupancy
map that stores a one pixel dilation of everything placed so far; a
candidate spot is valid when its own dilated mask misses the map.
"""

from __future__ import annotations

from typing import Optional

import numpy as np

from ..errors import PlacementError
from ..raster import CANVAS, dilate1, fits

# Per-object rejection budget.  Scenes that exhaust it are abandoned by
# the caller and resampled wholesale, so this only needs to be generous
# enough that feasible scenes almost never trip it.
MAX_SPOT_TRIES = 1000


def blit(img: np.ndarray, mask: np.ndarray, top: int, left: int, intensity: int) -> None:
    h, w = mask.shape
    region = img[top : top + h, left : left + w]
    region[mask > 0] = intensity


def occupy(occupied: np.ndarray, mask: np.ndarray, top: int, left: int) -> None:
    """OR the dilated mask into the occupancy map (clipped at borders)."""
    h, w = mask.shape
    grown = dilate1(mask)
    gh, gw = grown.shape
    t0, l0 = top - 1, left - 1
    y0, x0 = max(t0, 0), max(l0, 0)
    y1 = min(t0 + gh, occupied.shape[0])
    x1 = min(l0 + gw, occupied.shape[1])
    occupied[y0:y1, x0:x1] |= grown[y0 - t0 : y1 - t0, x0 - l0 : x1 - l0]


def find_spot(
    rng: np.random.Generator,
    occupied: np.ndarray,
    mask: np.ndarray,
    region: Optional[tuple[int, int, int, int]] = None,
    tries: int = MAX_SPOT_TRIES,
) -> Optional[tuple[int, int]]:
    """Uniformly sample a free (top, left) for ``mask``.

    ``region`` is (top, left, bottom, right), exclusive bounds, limiting
    where the mask may land.  Returns None when the budget runs out.
    """
    H, W = occupied.shape
    h, w = mask.shape
    if region is None:
        region = (0, 0, H, W)
    rt, rl, rb, rr = region
    lo_t, hi_t = max(rt, 0), min(rb, H) - h
    lo_l, hi_l = max(rl, 0), min(rr, W) - w
    if hi_t < lo_t or hi_l < lo_l:
        return None
    for _ in range(tries):
        top = int(rng.integers(lo_t, hi_t + 1))
        left = int(rng.integers(lo_l, hi_l + 1))
        if fits(occupied, mask, top, left):
            return top, left
    return None


def place_shape(
    img: np.ndarray,
    occupied: np.ndarray,
    rng: np.random.Generator,
    mask: np.ndarray,
    intensity: int,
    region: Optional[tuple[int, int, int, int]] = None,
    tries: int = MAX_SPOT_TRIES,
) -> Optional[tuple[int, int]]:
    """Place one mask at a free uniform spot; returns (top, left) or None."""
    spot = find_spot(rng, occupied, mask, region, tries)
    if spot is None:
        return None
    top, left = spot
    blit(img, mask, top, left, intensity)
    occupy(occupied, mask, top, left)
    return spot


def mirror_left(left: int, width_px: int, canvas_w: int = CANVAS) -> int:
    """Column of the mirror twin for a mask of given width placed at ``left``."""
    return canvas_w - left - width_px


def place_mirror_pair(
    img: np.ndarray,
    occupied: np.ndarray,
    rng: np.random.Generator,
    mask: np.ndarray,
    intensity: int,
    y_range: tuple[int, int] = (0, CANVAS),
    tries: int = MAX_SPOT_TRIES,
) -> Optional[tuple[int, int]]:
    """Place ``mask`` in the left half and its fliplr twin mirrored about
    the vertical midline.  Both spots must be free.  Returns the left
    instance's (top, left) or None."""
    H, W = occupied.shape
    h, w = mask.shape
    half = W // 2
    flipped = mask[:, ::-1]
    lo_t, hi_t = max(y_range[0], 0), min(y_range[1], H) - h
    hi_l = half - w - 1  # keep a 2px midline gap so the pair stays disconnected
    if hi_t < lo_t or hi_l < 0:
        return None
    for _ in range(tries):
        top = int(rng.integers(lo_t, hi_t + 1))
        left = int(rng.integers(0, hi_l + 1))
        right = mirror_left(left, w, W)
        if fits(occupied, mask, top, left) and fits(occupied, flipped, top, right):
            blit(img, mask, top, left, intensity)
            occupy(occupied, mask, top, left)
            blit(img, flipped, top, right, intensity)
            occupy(occupied, flipped, top, right)
            return top, left
    return None


def scene_or_fail(err: str) -> PlacementError:
    return PlacementError(err)
