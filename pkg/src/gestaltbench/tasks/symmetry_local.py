"""Per-object symmetry scenes.

Positive images contain only objects that are mirror-symmetric about
their own vertical axis; negatives hide one or two asymmetric objects
among symmetric ones.  Objects are never rotated here.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Optional

import numpy as np

from ..errors import GenerationError
from ..kernels import label_components
from ..oracles import oracle_local_sym
from ..raster import new_canvas
from ..sample import Sample
from ..shapes import (
    ShapeKind,
    is_mirror_symmetric,
    polygon_mask,
    random_polygon,
    shape_mask,
    symmetrize_mask,
)
from ._place import place_shape

TASK = "symmetry_local"

SYMPOLY = "sympoly"  # symmetric free-form polygon pseudo-kind
_TRAIN_POOL = (ShapeKind.TRIANGLE, ShapeKind.SQUARE, ShapeKind.BALL, SYMPOLY)
_NEW_POOL = (ShapeKind.HEXAGRAM, ShapeKind.F4, ShapeKind.F2)
_POLY_SKETCH = (0.0, 0.0, 60.0, 60.0)  # control-point box before resizing
_MIN_AREA_FRAC = 0.18  # reject threadlike polygons
_MASK_TRIES = 200
_SCENE_TRIES = 60


@dataclass(frozen=True)
class LocalSymSpec:
    shape_pool: tuple
    size_range: tuple[int, int] = (30, 40)
    object_count_range: tuple[int, int] = (3, 6)


TRAIN_SPEC = LocalSymSpec(_TRAIN_POOL)
DEL1_SPEC = LocalSymSpec(_NEW_POOL)
DEL2_SPEC = LocalSymSpec(_TRAIN_POOL, size_range=(40, 45))


def _single_component(mask: np.ndarray) -> bool:
    return label_components(mask.astype(np.uint8))[1] == 1


def _usable(mask: np.ndarray, size: int) -> bool:
    return (
        _single_component(mask)
        and int(mask.sum()) >= _MIN_AREA_FRAC * size * size
        and max(mask.shape) >= size - 1
    )


def sympoly_mask(rng: np.random.Generator, size: int) -> tuple[np.ndarray, dict]:
    """Random free-form polygon made pixel-symmetric by folding the left
    half over the right, sized like the named shapes."""
    for _ in range(_MASK_TRIES):
        spec = random_polygon(rng, _POLY_SKETCH, (4, 9))
        mask = symmetrize_mask(polygon_mask(spec, size))
        if _usable(mask, size) and is_mirror_symmetric(mask):
            return mask, {"kind": SYMPOLY, "polygon": spec.to_json()}
    raise GenerationError("no usable symmetric polygon after retries")


def asympoly_mask(rng: np.random.Generator, size: int) -> tuple[np.ndarray, dict]:
    """Random polygon kept only when visibly asymmetric."""
    for _ in range(_MASK_TRIES):
        spec = random_polygon(rng, _POLY_SKETCH, (4, 9))
        mask = polygon_mask(spec, size)
        if _usable(mask, size) and not is_mirror_symmetric(mask):
            return mask, {"kind": "asympoly", "polygon": spec.to_json()}
    raise GenerationError("no usable asymmetric polygon after retries")


_ASYM_ADD_KINDS = (ShapeKind.TRIANGLE, ShapeKind.SQUARE, ShapeKind.BALL)


def asymmetrized_sym_mask(rng: np.random.Generator, size: int) -> tuple[np.ndarray, dict]:
    """Start from a symmetric polygon and break it the way D2 breaks
    images: rescale one half, or attach a small shape off-axis."""
    from ..raster import nn_scale_half
    from ..shapes import _tight_crop  # noqa: the crop rule is shared on purpose

    for _ in range(_MASK_TRIES):
        base, rec = sympoly_mask(rng, size)
        if rng.random() < 0.5:
            f = float(rng.uniform(*((1.2, 1.4) if rng.random() < 0.5 else (0.55, 0.75))))
            side = "left" if rng.random() < 0.5 else "right"
            img = (base * np.uint8(255)).astype(np.uint8)
            out = nn_scale_half(img, f, side) > 0
            out = _tight_crop(out)
            mode = {"mode": "scale_half", "factor": f, "side": side}
        else:
            kind = _ASYM_ADD_KINDS[int(rng.integers(0, len(_ASYM_ADD_KINDS)))]
            add = shape_mask(kind, max(6, size // 3))
            ah, aw = add.shape
            bh, bw = base.shape
            frame = np.zeros((bh + 2 * ah, bw + 2 * aw), dtype=bool)
            frame[ah : ah + bh, aw : aw + bw] = base
            # off-axis anchor with guaranteed overlap
            top = int(rng.integers(ah // 2, ah + bh - ah // 2))
            left = int(rng.integers(aw // 2, aw))
            if not (frame[top : top + ah, left : left + aw] & add).any():
                continue
            frame[top : top + ah, left : left + aw] |= add
            out = _tight_crop(frame)
            mode = {"mode": "attach", "attached": kind.value}
        if max(out.shape) > size + 4:
            from ..shapes import resize_mask_nn

            out = resize_mask_nn(out, size)
        if _usable(out, size) and not is_mirror_symmetric(out):
            rec = dict(rec, **mode)
            rec["kind"] = "asympoly"
            return out, rec
    raise GenerationError("asymmetrization failed after retries")


def _object_mask(
    rng: np.random.Generator, pool: tuple, size: int
) -> tuple[np.ndarray, dict]:
    kind = pool[int(rng.integers(0, len(pool)))]
    if kind == SYMPOLY:
        return sympoly_mask(rng, size)
    return shape_mask(kind, size, 0.0, symmetric=True), {"kind": kind.value}


def gen_local(
    rng: np.random.Generator,
    label: int,
    spec: LocalSymSpec = TRAIN_SPEC,
    round_id: str = "train",
    asym_factory=None,
) -> Sample:
    """Place 3-6 objects; negatives swap 1 (p=0.8) or 2 (p=0.2) of them
    for asymmetric polygons."""
    if asym_factory is None:
        asym_factory = asympoly_mask
    lo, hi = spec.size_range
    for _ in range(_SCENE_TRIES):
        img = new_canvas()
        occupied = np.zeros(img.shape, dtype=bool)
        n = int(rng.integers(spec.object_count_range[0], spec.object_count_range[1] + 1))
        n_fail = 0
        if label == 1:
            n_fail = 1 if rng.random() < 0.8 else 2
        fail_at = set(rng.choice(n, size=n_fail, replace=False).tolist())
        objs = []
        ok = True
        for i in range(n):
            size = int(rng.integers(lo, hi + 1))
            if i in fail_at:
                mask, rec = asym_factory(rng, size)
            else:
                mask, rec = _object_mask(rng, spec.shape_pool, size)
            val = int(rng.integers(64, 255))
            spot = place_shape(img, occupied, rng, mask, val)
            if spot is None:
                ok = False
                break
            objs.append(dict(rec, size=size, intensity=val,
                             top=spot[0], left=spot[1]))
        if not ok:
            continue
        verdict = oracle_local_sym(img)
        if verdict.positive != (label == 0):
            continue
        if label == 1 and len(verdict.evidence["failing"]) != n_fail:
            continue
        recipe = {"objects": objs, "n_fail": n_fail}
        return Sample(img, label, TASK, round_id, -1, recipe)
    raise GenerationError("local-sym scene rejected too many times")


def gen_train(rng: np.random.Generator, label: int) -> Sample:
    return gen_local(rng, label, TRAIN_SPEC, "train")


def deliberate_local_1(rng: np.random.Generator, label: int) -> Sample:
    """New symmetric kinds; asymmetric objects come from broken
    symmetric polygons instead of raw random ones."""
    return gen_local(rng, label, DEL1_SPEC, "del1", asym_factory=asymmetrized_sym_mask)


def deliberate_local_2(rng: np.random.Generator, label: int) -> Sample:
    return gen_local(rng, label, DEL2_SPEC, "del2")
