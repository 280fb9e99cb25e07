"""Counting tasks: 3-vs-other object counts and one-vs-two shape kinds."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ..errors import GenerationError
from ..oracles import oracle_count, oracle_type_count
from ..raster import new_canvas
from ..sample import Sample
from ..shapes import ShapeKind
from ._place import place_shape

COUNT_TASK = "counting"
TYPES_TASK = "types"

_BASE_POOL = (ShapeKind.TRIANGLE, ShapeKind.SQUARE, ShapeKind.BALL)
_NEW_POOL = (ShapeKind.HEXAGRAM, ShapeKind.F4, ShapeKind.F2)
NEGATIVE_COUNTS = (1, 2, 4, 5)
_SCENE_TRIES = 60


def _masks_for(
    rng: np.random.Generator,
    kinds: list,
    sizes: list,
    rotate: bool,
) -> list:
    from ..shapes import shape_mask

    out = []
    for kind, size in zip(kinds, sizes):
        rot = 0.0
        if rotate and kind != ShapeKind.BALL:
            rot = float(rng.uniform(0.0, 360.0))
        out.append((shape_mask(kind, size, rot), rot))
    return out


def _place_all(img, occupied, rng, masks) -> list | None:
    placed = []
    for mask, rot in masks:
        val = int(rng.integers(64, 255))
        spot = place_shape(img, occupied, rng, mask, val)
        if spot is None:
            return None
        placed.append({"rotation": rot, "intensity": val,
                       "top": spot[0], "left": spot[1]})
    return placed


# ---------------------------------------------------------------------------
# 3 vs {1,2,4,5}


@dataclass(frozen=True)
class CountSpec:
    setting: int  # 1 balls, 2 one kind per image, 3 mixed
    size_range: tuple[int, int] = (20, 30)
    pool: tuple = _BASE_POOL


def _pick_kinds(rng: np.random.Generator, spec: CountSpec, n: int) -> list:
    if spec.setting == 1:
        if spec.pool is _BASE_POOL:
            return [ShapeKind.BALL] * n
        # new-shape variant of the balls-only setting: one new kind per image
        kind = spec.pool[int(rng.integers(0, len(spec.pool)))]
        return [kind] * n
    if spec.setting == 2:
        kind = spec.pool[int(rng.integers(0, len(spec.pool)))]
        return [kind] * n
    if spec.setting == 3:
        return [spec.pool[int(rng.integers(0, len(spec.pool)))] for _ in range(n)]
    raise GenerationError(f"unknown counting setting {spec.setting}")


def gen_count(
    rng: np.random.Generator,
    label: int,
    spec: CountSpec,
    round_id: str = "train",
) -> Sample:
    for _ in range(_SCENE_TRIES):
        n = 3 if label == 0 else int(NEGATIVE_COUNTS[rng.integers(0, 4)])
        kinds = _pick_kinds(rng, spec, n)
        sizes = [int(rng.integers(spec.size_range[0], spec.size_range[1] + 1))
                 for _ in range(n)]
        img = new_canvas()
        occupied = np.zeros(img.shape, dtype=bool)
        placed = _place_all(img, occupied, rng,
                            _masks_for(rng, kinds, sizes, rotate=True))
        if placed is None:
            continue
        verdict = oracle_count(img)
        if verdict.evidence["count"] != n or verdict.positive != (label == 0):
            continue
        objs = [dict(p, kind=k.value, size=s)
                for p, k, s in zip(placed, kinds, sizes)]
        recipe = {"setting": spec.setting, "count": n, "objects": objs}
        return Sample(img, label, COUNT_TASK, round_id, -1, recipe)
    raise GenerationError("counting scene rejected too many times")


def gen_count_train(setting: int):
    spec = CountSpec(setting)

    def gen(rng: np.random.Generator, label: int) -> Sample:
        return gen_count(rng, label, spec, f"count{setting}")

    return gen


def deliberate_count_1(setting: int):
    spec = CountSpec(setting, pool=_NEW_POOL)

    def gen(rng: np.random.Generator, label: int) -> Sample:
        return gen_count(rng, label, spec, f"count{setting}_del1")

    return gen


def deliberate_count_2(setting: int):
    spec = CountSpec(setting, size_range=(30, 40))

    def gen(rng: np.random.Generator, label: int) -> Sample:
        return gen_count(rng, label, spec, f"count{setting}_del2")

    return gen


# ---------------------------------------------------------------------------
# one kind vs two kinds


@dataclass(frozen=True)
class TypeSpec:
    single_pool: tuple = (ShapeKind.TRIANGLE, ShapeKind.SQUARE)
    pair_pool: tuple = (ShapeKind.TRIANGLE, ShapeKind.SQUARE)
    size_range: tuple[int, int] = (20, 30)
    object_count_range: tuple[int, int] = (3, 8)
    rotate: bool = False
    split_sizes: tuple | None = None  # e.g. ((20,25),(40,45)) for the gap set


def _type_sizes(rng: np.random.Generator, spec: TypeSpec, n: int) -> list:
    if spec.split_sizes is not None:
        out = []
        for _ in range(n):
            lo, hi = spec.split_sizes[int(rng.integers(0, len(spec.split_sizes)))]
            out.append(int(rng.integers(lo, hi + 1)))
        return out
    return [int(rng.integers(spec.size_range[0], spec.size_range[1] + 1))
            for _ in range(n)]


def gen_types(
    rng: np.random.Generator,
    label: int,
    spec: TypeSpec = TypeSpec(),
    round_id: str = "types",
) -> Sample:
    """label 0: every object one kind; label 1: exactly two kinds, each
    appearing at least once."""
    if len(spec.pair_pool) < 2:
        raise GenerationError("need at least two kinds for the two-type class")
    for _ in range(_SCENE_TRIES):
        n = int(rng.integers(spec.object_count_range[0],
                             spec.object_count_range[1] + 1))
        if label == 0:
            kind = spec.single_pool[int(rng.integers(0, len(spec.single_pool)))]
            kinds = [kind] * n
        else:
            i, j = rng.choice(len(spec.pair_pool), size=2, replace=False)
            a, b = spec.pair_pool[int(i)], spec.pair_pool[int(j)]
            k1 = int(rng.integers(1, n))
            kinds = [a] * k1 + [b] * (n - k1)
        sizes = _type_sizes(rng, spec, n)
        img = new_canvas()
        occupied = np.zeros(img.shape, dtype=bool)
        placed = _place_all(img, occupied, rng,
                            _masks_for(rng, kinds, sizes, spec.rotate))
        if placed is None:
            continue
        verdict = oracle_type_count(img, rotation_sweep=spec.rotate)
        if verdict.positive != (label == 0):
            continue
        if verdict.evidence["components"] != n or "unknown" in verdict.evidence["assigned"]:
            continue
        objs = [dict(p, kind=k.value, size=s)
                for p, k, s in zip(placed, kinds, sizes)]
        recipe = {"count": n, "objects": objs,
                  "kinds": sorted({k.value for k in kinds})}
        return Sample(img, label, TYPES_TASK, round_id, -1, recipe)
    raise GenerationError("type scene rejected too many times")


_FIVE = (ShapeKind.TRIANGLE, ShapeKind.SQUARE, ShapeKind.BALL,
         ShapeKind.HEXAGRAM, ShapeKind.F4)

TYPE_VARIANTS: dict[str, TypeSpec] = {
    "types": TypeSpec(),
    # new kinds: single-type class from three unseen kinds, two-type class
    # from any 2 of the five kinds
    "types_del1": TypeSpec(single_pool=(ShapeKind.BALL, ShapeKind.HEXAGRAM, ShapeKind.F4),
                           pair_pool=_FIVE),
    "types_del2a": TypeSpec(size_range=(30, 40)),
    "types_del2b": TypeSpec(size_range=(40, 50)),
    "types_aug1": TypeSpec(single_pool=(ShapeKind.TRIANGLE, ShapeKind.SQUARE, ShapeKind.F4),
                           pair_pool=(ShapeKind.TRIANGLE, ShapeKind.SQUARE, ShapeKind.F4)),
    "types_aug2_train": TypeSpec(split_sizes=((20, 25), (40, 45))),
    "types_aug2_test": TypeSpec(size_range=(30, 35)),
}


def gen_types_round(round_id: str):
    spec = TYPE_VARIANTS[round_id]

    def gen(rng: np.random.Generator, label: int) -> Sample:
        return gen_types(rng, label, spec, round_id)

    return gen
