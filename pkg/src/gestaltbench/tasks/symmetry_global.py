"""Global bilateral-symmetry curriculum.

Base round A1 draws free-form polygons and makes the positive class
symmetric by mirror completion.  The deliberate operators D1/D2/D3
transform existing samples (erase, scale or add shapes), and A4/C4
build symmetric scenes purely out of named shape pairs.

Every generator re-checks its own output against the fold oracle before
returning; the construction and the check are separate code paths.
"""

from __future__ import annotations

from typing import Optional

import numpy as np

from ..errors import GenerationError
from ..oracles import oracle_global_sym
from ..raster import CANVAS, dilate1, fits, mirror_onto, new_canvas, nn_scale, nn_scale_half
from ..sample import Sample
from ..shapes import ShapeKind, flatten_polygon, polygon_mask, random_polygon, shape_mask
from ._place import blit, occupy

TASK = "symmetry_global"

# A1 free-form polygons.
_POLY_REGION = (12.0, 15.0, 188.0, 185.0)
_POLY_POINTS = (4, 9)
_MIN_FG = 150  # px; scenes thinner than this are resampled

# D1 erase rectangles.
_ERASE_EDGE = (10, 40)

# D2/D3 added shapes.  Intensity range per the round parameter block;
# a shape landing fully inside foreground becomes a hole instead.
_ADD_KINDS = (ShapeKind.TRIANGLE, ShapeKind.SQUARE, ShapeKind.BALL)
_ADD_SIZE = 25
_ADD_INTENSITY = (128, 255)
_SCALE_UP = (1.3, 1.5)
_SCALE_DOWN = (0.5, 0.7)
_D3_PAIRS = (2, 4)
_D3_SIZE = (15, 30)

# A4/C4 placement rounds.
_A4_KINDS = (ShapeKind.TRIANGLE, ShapeKind.SQUARE, ShapeKind.BALL)
_C4_KINDS = (ShapeKind.HEXAGRAM, ShapeKind.F4, ShapeKind.F2)
_PLACED_PAIRS = (2, 4)
_PLACED_SIZE = (18, 36)
_BASE_INTENSITY = (64, 255)

_SCENE_TRIES = 60


def _intensity(rng: np.random.Generator, lo: int = 64, hi: int = 255) -> int:
    return int(rng.integers(lo, hi))


def _fg_count(img: np.ndarray) -> int:
    return int(np.count_nonzero(img))


def _sym_mask(kind: ShapeKind, size: int) -> np.ndarray:
    """Pixel-exact mirror-symmetric mask; pairs built from it mirror cleanly."""
    return shape_mask(kind, size, 0.0, symmetric=True)


# ---------------------------------------------------------------------------
# A1: free-form polygons, symmetric by mirror completion.


def _draw_polygons(img: np.ndarray, rng: np.random.Generator, k: int) -> list:
    recipes = []
    for _ in range(k):
        spec = random_polygon(rng, _POLY_REGION, _POLY_POINTS)
        mask = polygon_mask(spec)
        xs, ys = flatten_polygon(spec)
        top = int(np.floor(ys.min()))
        left = int(np.floor(xs.min()))
        top = max(0, min(top, CANVAS - mask.shape[0]))
        left = max(0, min(left, CANVAS - mask.shape[1]))
        val = _intensity(rng, *_BASE_INTENSITY)
        blit(img, mask, top, left, val)
        recipes.append({"polygon": spec.to_json(), "intensity": val})
    return recipes


def gen_a1(rng: np.random.Generator, label: int, biased: bool = False) -> Sample:
    """Base polygon round.

    label 0: polygons drawn anywhere, then one side mirrored onto the
    other, so the image is pixel-exactly symmetric and may hold one or
    several components.  With ``biased`` the draw is repeated until the
    symmetric image is a single connected blob (the variant shown to the
    first human group).  label 1: polygons left as drawn.
    """
    from ..raster import connected_components

    for _ in range(_SCENE_TRIES * 4):
        img = new_canvas()
        if label == 0:
            k = 1 if (biased or rng.random() < 0.6) else 2
            polys = _draw_polygons(img, rng, k)
            side = "left" if rng.random() < 0.5 else "right"
            img = mirror_onto(img, side)
            if _fg_count(img) < _MIN_FG:
                continue
            if biased and connected_components(img)[1] != 1:
                continue
            recipe = {"mode": "mirror_completion", "side": side, "polygons": polys,
                      "biased": biased}
        else:
            k = int(rng.integers(1, 4))
            polys = _draw_polygons(img, rng, k)
            if _fg_count(img) < _MIN_FG:
                continue
            recipe = {"mode": "free", "polygons": polys}
        if oracle_global_sym(img).positive == (label == 0):
            return Sample(img, label, TASK, "a1", -1, recipe)
    raise GenerationError("a1 scene rejected too many times")


def gen_c1(rng: np.random.Generator, label: int) -> Sample:
    """Fresh test draw from the A1 distribution."""
    s = gen_a1(rng, label)
    s.round = "c1"
    return s


# ---------------------------------------------------------------------------
# D1: erase a region / mirror a side.


def _erase_rect(
    img: np.ndarray,
    rng: np.random.Generator,
    x_bounds: tuple[int, int],
    require_fg: bool = True,
    tries: int = 400,
) -> Optional[tuple[int, int, int, int]]:
    """Erase one axis-aligned rectangle whose footprint intersects the
    foreground, confined to columns [x_bounds).  Returns (top,left,h,w)."""
    x0, x1 = x_bounds
    for _ in range(tries):
        rh = int(rng.integers(_ERASE_EDGE[0], _ERASE_EDGE[1] + 1))
        rw = int(rng.integers(_ERASE_EDGE[0], _ERASE_EDGE[1] + 1))
        rw = min(rw, x1 - x0)
        top = int(rng.integers(0, CANVAS - rh + 1))
        left = int(rng.integers(x0, x1 - rw + 1))
        window = img[top : top + rh, left : left + rw]
        if require_fg and not (window > 0).any():
            continue
        window[:] = 0
        return top, left, rh, rw
    return None


def d1(src: Sample, rng: np.random.Generator) -> Sample:
    """Label-reversing operator.

    Symmetric source: erase a rectangle confined to one half (it must
    hit foreground, so the surviving mirror pixels break the fold).
    Asymmetric source: mirror one side onto the other; half the time a
    rectangle is then erased symmetrically from both halves.
    """
    target = 1 - src.label
    half = CANVAS // 2
    for _ in range(_SCENE_TRIES):
        img = src.image.copy()
        if src.label == 0:
            side = "left" if rng.random() < 0.5 else "right"
            bounds = (0, half) if side == "left" else (half, CANVAS)
            rect = _erase_rect(img, rng, bounds)
            if rect is None or _fg_count(img) < 40:
                continue
            recipe = {"op": "d1", "mode": "erase", "side": side, "rect": rect}
        else:
            side = "left" if rng.random() < 0.5 else "right"
            mirrored = mirror_onto(src.image, side)
            other = mirror_onto(src.image, "right" if side == "left" else "left")
            if _fg_count(mirrored) < 40 <= _fg_count(other):
                side = "right" if side == "left" else "left"
                mirrored = other
            img = mirrored
            rect = None
            if rng.random() < 0.5:
                trial = img.copy()
                rect = _erase_rect(trial, rng, (0, half))
                if rect is not None:
                    top, left, rh, rw = rect
                    mleft = CANVAS - left - rw
                    trial[top : top + rh, mleft : mleft + rw] = 0
                    if _fg_count(trial) >= 40:
                        img = trial
                    else:
                        rect = None
            recipe = {"op": "d1", "mode": "mirror", "side": side, "erase_rect": rect}
        if oracle_global_sym(img).positive == (target == 0):
            recipe["source_seed"] = src.seed
            recipe["source_round"] = src.round
            return Sample(img, target, TASK, f"d1{src.round}", -1, recipe)
    raise GenerationError("d1 rejected all attempts")


# ---------------------------------------------------------------------------
# Shape dropping with the hole rule (shared by D2/D3).


def _grown_inside_fg(img: np.ndarray, mask: np.ndarray, top: int, left: int) -> bool:
    """True when mask plus a 1px ring lies entirely on foreground."""
    h, w = mask.shape
    padded = np.zeros((h + 2, w + 2), dtype=bool)
    padded[1:-1, 1:-1] = mask
    grown = dilate1(padded)
    y0, x0 = max(top - 1, 0), max(left - 1, 0)
    y1 = min(top + h + 1, img.shape[0])
    x1 = min(left + w + 1, img.shape[1])
    sub = grown[y0 - (top - 1) : y1 - (top - 1), x0 - (left - 1) : x1 - (left - 1)]
    win = img[y0:y1, x0:x1] > 0
    return bool(win[sub].all())


def _spot_mode(
    img: np.ndarray,
    occupied: np.ndarray,
    holes: np.ndarray,
    mask: np.ndarray,
    top: int,
    left: int,
) -> Optional[str]:
    """Classify a candidate spot: clear background -> "solid", strictly
    inside foreground -> "hole", anything else (partial overlap, too
    close to a neighbor) -> None."""
    h, w = mask.shape
    overlap = (img[top : top + h, left : left + w] > 0) & mask
    if not overlap.any():
        if fits(occupied, mask, top, left) and fits(holes, mask, top, left):
            return "solid"
        return None
    if _grown_inside_fg(img, mask, top, left) and fits(holes, mask, top, left):
        return "hole"
    return None


def _apply_drop(
    img: np.ndarray,
    occupied: np.ndarray,
    holes: np.ndarray,
    mask: np.ndarray,
    top: int,
    left: int,
    mode: str,
    intensity: int,
) -> None:
    if mode == "hole":
        blit(img, mask, top, left, 0)
        occupy(holes, mask, top, left)
    else:
        blit(img, mask, top, left, intensity)
        occupy(occupied, mask, top, left)


def _drop_single(
    img: np.ndarray,
    occupied: np.ndarray,
    holes: np.ndarray,
    rng: np.random.Generator,
    mask: np.ndarray,
    intensity: int,
    x_bounds: tuple[int, int] = (0, CANVAS),
    tries: int = 400,
) -> Optional[dict]:
    h, w = mask.shape
    lo, hi = x_bounds[0], x_bounds[1] - w
    if hi < lo or h > CANVAS:
        return None
    for _ in range(tries):
        top = int(rng.integers(0, CANVAS - h + 1))
        left = int(rng.integers(lo, hi + 1))
        mode = _spot_mode(img, occupied, holes, mask, top, left)
        if mode is None:
            continue
        _apply_drop(img, occupied, holes, mask, top, left, mode, intensity)
        return {"top": top, "left": left, "mode": mode}
    return None


def _mirror_twin(top: int, left: int, shape_a: tuple, shape_b: tuple) -> tuple[int, int]:
    """Placement of the mirror partner, aligning component centers when
    the two masks differ in size."""
    ha, wa = shape_a
    hb, wb = shape_b
    cx = left + (wa - 1) / 2.0
    cy = top + (ha - 1) / 2.0
    left_b = int(round((CANVAS - 1) - cx - (wb - 1) / 2.0))
    top_b = int(round(cy - (hb - 1) / 2.0))
    return top_b, left_b


def _drop_pair(
    img: np.ndarray,
    occupied: np.ndarray,
    holes: np.ndarray,
    rng: np.random.Generator,
    mask_a: np.ndarray,
    mask_b: np.ndarray,
    intensity: int,
    tries: int = 400,
) -> Optional[dict]:
    """Drop mask_a in the left half and mask_b center-mirrored in the
    right half.  Both spots must classify identically (solid/solid or
    hole/hole) so a symmetric base stays symmetric for identical masks."""
    ha, wa = mask_a.shape
    hb, wb = mask_b.shape
    half = CANVAS // 2
    hi_left = half - wa - 1
    if hi_left < 0:
        return None
    for _ in range(tries):
        top = int(rng.integers(0, CANVAS - ha + 1))
        left = int(rng.integers(0, hi_left + 1))
        top_b, left_b = _mirror_twin(top, left, mask_a.shape, mask_b.shape)
        if not (0 <= top_b <= CANVAS - hb and half + 1 <= left_b <= CANVAS - wb):
            continue
        mode_a = _spot_mode(img, occupied, holes, mask_a, top, left)
        if mode_a is None:
            continue
        mode_b = _spot_mode(img, occupied, holes, mask_b, top_b, left_b)
        if mode_b != mode_a:
            continue
        _apply_drop(img, occupied, holes, mask_a, top, left, mode_a, intensity)
        _apply_drop(img, occupied, holes, mask_b, top_b, left_b, mode_b, intensity)
        return {"top": top, "left": left, "mode": mode_a,
                "twin_top": top_b, "twin_left": left_b}
    return None


# ---------------------------------------------------------------------------
# D2: rescale or add a shape (pair).


def _max_enlarge(img: np.ndarray) -> float:
    ys, xs = np.nonzero(img)
    c = (CANVAS - 1) / 2.0
    d = max(np.abs(ys - c).max(), np.abs(xs - c).max())
    return 99.0 / float(d) if d > 0 else _SCALE_UP[1]


def _scale_whole(img: np.ndarray, rng: np.random.Generator) -> Optional[tuple[np.ndarray, float]]:
    """Whole-image rescale that keeps exact symmetry; None if neither
    direction is feasible/visible."""
    grow_cap = _max_enlarge(img)
    options = []
    if grow_cap >= _SCALE_UP[0]:
        options.append((_SCALE_UP[0], min(_SCALE_UP[1], grow_cap)))
    options.append(_SCALE_DOWN)
    lo, hi = options[int(rng.integers(0, len(options)))]
    for _ in range(20):
        f = float(rng.uniform(lo, hi))
        out = nn_scale(img, f)
        # rounding at exact half-pixels can nick single columns; re-fold
        out = mirror_onto(out, "left")
        if _fg_count(out) >= 60:
            return out, f
    return None


def _scale_half_op(img: np.ndarray, rng: np.random.Generator) -> Optional[tuple[np.ndarray, float, str]]:
    half = CANVAS // 2
    side = "left" if rng.random() < 0.5 else "right"
    cols = slice(0, half) if side == "left" else slice(half, CANVAS)
    if not (img[:, cols] > 0).any():
        side = "right" if side == "left" else "left"
        cols = slice(0, half) if side == "left" else slice(half, CANVAS)
    sub = img[:, cols]
    ys, xs = np.nonzero(sub)
    if ys.size == 0:
        return None
    cy, cx = (sub.shape[0] - 1) / 2.0, (sub.shape[1] - 1) / 2.0
    d = max(np.abs(ys - cy).max() / cy, np.abs(xs - cx).max() / cx)
    grow_cap = 0.98 / d if d > 0 else _SCALE_UP[1]
    if grow_cap >= _SCALE_UP[0] and rng.random() < 0.5:
        lo, hi = _SCALE_UP[0], min(_SCALE_UP[1], grow_cap)
    else:
        lo, hi = _SCALE_DOWN
    for _ in range(20):
        f = float(rng.uniform(lo, hi))
        out = nn_scale_half(img, f, side)
        if _fg_count(out) >= 60 and not oracle_global_sym(out).positive:
            return out, f, side
    return None


def d2(src: Sample, rng: np.random.Generator, target_label: int) -> Sample:
    """Scale the image (whole vs one half) or add a size-25 shape (pair
    vs one side), honoring the target label.  Added shapes strictly
    inside foreground become holes (intensity 0)."""
    if not oracle_global_sym(src.image).positive:
        raise GenerationError("d2 requires a symmetric source")
    for _ in range(_SCENE_TRIES):
        img = src.image.copy()
        recipe: dict = {"op": "d2", "source_seed": src.seed, "source_round": src.round}
        if rng.random() < 0.5:  # rescale branch
            if target_label == 0:
                scaled = _scale_whole(img, rng)
                if scaled is None:
                    continue
                img, f = scaled
                recipe.update(mode="scale_whole", factor=f)
            else:
                scaled = _scale_half_op(img, rng)
                if scaled is None:
                    continue
                img, f, side = scaled
                recipe.update(mode="scale_half", factor=f, side=side)
        else:  # add-shape branch
            occupied = dilate1(img > 0)
            holes = np.zeros_like(occupied)
            kind = _ADD_KINDS[int(rng.integers(0, len(_ADD_KINDS)))]
            mask = _sym_mask(kind, _ADD_SIZE)
            val = _intensity(rng, *_ADD_INTENSITY)
            if target_label == 0:
                drop = _drop_pair(img, occupied, holes, rng, mask, mask.copy(), val)
                if drop is None:
                    continue
                recipe.update(mode="add_pair", kind=kind.value, intensity=val, drop=drop)
            else:
                side = "left" if rng.random() < 0.5 else "right"
                half = CANVAS // 2
                bounds = (0, half - 1) if side == "left" else (half + 1, CANVAS)
                drop = _drop_single(img, occupied, holes, rng, mask, val, bounds)
                if drop is None:
                    continue
                recipe.update(mode="add_one_side", kind=kind.value, side=side,
                              intensity=val, drop=drop)
        if oracle_global_sym(img).positive == (target_label == 0):
            return Sample(img, target_label, TASK, f"d2{src.round}", -1, recipe)
    raise GenerationError("d2 rejected all attempts")


# ---------------------------------------------------------------------------
# D3: add several shape pairs / break one of them.


def _d3_strategy_pair(
    img: np.ndarray,
    occupied: np.ndarray,
    holes: np.ndarray,
    rng: np.random.Generator,
    strategy: int,
    kinds: tuple,
    size_range: tuple[int, int],
    intensity_range: tuple[int, int],
) -> Optional[dict]:
    """One label-breaking addition. 0: two shapes at unrelated spots;
    1: different kinds mirrored; 2: same kind, different sizes, mirrored."""
    size = int(rng.integers(size_range[0], size_range[1] + 1))
    val = _intensity(rng, *intensity_range)
    kind = kinds[int(rng.integers(0, len(kinds)))]
    if strategy == 0:
        mask = _sym_mask(kind, size)
        a = _drop_single(img, occupied, holes, rng, mask, val)
        b = _drop_single(img, occupied, holes, rng, mask, val)
        if a is None or b is None:
            return None
        return {"strategy": "locations", "kind": kind.value, "size": size,
                "intensity": val, "drops": [a, b]}
    if strategy == 1:
        other = kinds[int(rng.integers(0, len(kinds)))]
        while other == kind:
            other = kinds[int(rng.integers(0, len(kinds)))]
        drop = _drop_pair(img, occupied, holes, rng,
                          _sym_mask(kind, size), _sym_mask(other, size), val)
        if drop is None:
            return None
        return {"strategy": "kinds", "kind": kind.value, "other": other.value,
                "size": size, "intensity": val, "drop": drop}
    delta = int(rng.integers(6, 11)) * (1 if rng.random() < 0.5 else -1)
    size_b = int(np.clip(size + delta, 12, size_range[1] + 6))
    if size_b == size:
        size_b = size + 6
    drop = _drop_pair(img, occupied, holes, rng,
                      _sym_mask(kind, size), _sym_mask(kind, size_b), val)
    if drop is None:
        return None
    return {"strategy": "sizes", "kind": kind.value, "size": size,
            "size_b": size_b, "intensity": val, "drop": drop}


def d3(src: Sample, rng: np.random.Generator, target_label: int) -> Sample:
    """Add 2-4 mirrored shape pairs; for target 1 one addition instead
    follows a breaking strategy chosen uniformly from three."""
    if not oracle_global_sym(src.image).positive:
        raise GenerationError("d3 requires a symmetric source")
    for _ in range(_SCENE_TRIES):
        img = src.image.copy()
        occupied = dilate1(img > 0)
        holes = np.zeros_like(occupied)
        n_pairs = int(rng.integers(_D3_PAIRS[0], _D3_PAIRS[1] + 1))
        strategy = int(rng.integers(0, 3)) if target_label == 1 else -1
        adds = []
        ok = True
        n_regular = n_pairs - 1 if target_label == 1 else n_pairs
        for _ in range(n_regular):
            size = int(rng.integers(_D3_SIZE[0], _D3_SIZE[1] + 1))
            kind = _ADD_KINDS[int(rng.integers(0, len(_ADD_KINDS)))]
            val = _intensity(rng, *_ADD_INTENSITY)
            mask = _sym_mask(kind, size)
            drop = _drop_pair(img, occupied, holes, rng, mask, mask.copy(), val)
            if drop is None:
                ok = False
                break
            adds.append({"kind": kind.value, "size": size, "intensity": val,
                         "drop": drop})
        if ok and target_label == 1:
            broken = _d3_strategy_pair(img, occupied, holes, rng, strategy,
                                       _ADD_KINDS, _D3_SIZE, _ADD_INTENSITY)
            if broken is None:
                ok = False
            else:
                adds.append(broken)
        if not ok:
            continue
        if oracle_global_sym(img).positive != (target_label == 0):
            continue
        recipe = {"op": "d3", "source_seed": src.seed, "source_round": src.round,
                  "pairs": n_pairs, "adds": adds}
        if target_label == 1:
            recipe["strategy"] = ("locations", "kinds", "sizes")[strategy]
        return Sample(img, target_label, TASK, f"d3{src.round}", -1, recipe)
    raise GenerationError("d3 rejected all attempts")


# ---------------------------------------------------------------------------
# A4/C4: scenes built from named-shape pairs only.


def _gen_placed(rng: np.random.Generator, label: int, kinds: tuple, round_id: str) -> Sample:
    for _ in range(_SCENE_TRIES):
        img = new_canvas()
        occupied = np.zeros(img.shape, dtype=bool)
        holes = np.zeros_like(occupied)
        n_pairs = int(rng.integers(_PLACED_PAIRS[0], _PLACED_PAIRS[1] + 1))
        strategy = int(rng.integers(0, 3)) if label == 1 else -1
        adds = []
        ok = True
        n_regular = n_pairs - 1 if label == 1 else n_pairs
        for _ in range(n_regular):
            size = int(rng.integers(_PLACED_SIZE[0], _PLACED_SIZE[1] + 1))
            kind = kinds[int(rng.integers(0, len(kinds)))]
            val = _intensity(rng, *_BASE_INTENSITY)
            mask = _sym_mask(kind, size)
            drop = _drop_pair(img, occupied, holes, rng, mask, mask.copy(), val)
            if drop is None:
                ok = False
                break
            adds.append({"kind": kind.value, "size": size, "intensity": val,
                         "drop": drop})
        if ok and label == 1:
            broken = _d3_strategy_pair(img, occupied, holes, rng, strategy,
                                       kinds, _PLACED_SIZE, _BASE_INTENSITY)
            if broken is None:
                ok = False
            else:
                adds.append(broken)
        if not ok:
            continue
        if oracle_global_sym(img).positive != (label == 0):
            continue
        recipe = {"pairs": n_pairs, "adds": adds}
        if label == 1:
            recipe["strategy"] = ("locations", "kinds", "sizes")[strategy]
        return Sample(img, label, TASK, round_id, -1, recipe)
    raise GenerationError(f"{round_id} rejected all attempts")


def gen_a4(rng: np.random.Generator, label: int) -> Sample:
    return _gen_placed(rng, label, _A4_KINDS, "a4")


def gen_c4(rng: np.random.Generator, label: int) -> Sample:
    return _gen_placed(rng, label, _C4_KINDS, "c4")


# ---------------------------------------------------------------------------
# Standalone wrappers for the derived rounds.  The curriculum runner
# applies d1/d2/d3 to samples it already emitted; these rebuild a source
# of the right distribution on the fly so a derived round can also be
# generated directly from (round, seed).


def _symmetric_a2(rng: np.random.Generator) -> Sample:
    # symmetric mass of A2 = A1 class 0 plus D1(A1 class 1), half each
    if rng.random() < 0.5:
        return gen_a1(rng, 0)
    return d1(gen_a1(rng, 1), rng)


def _symmetric_a3(rng: np.random.Generator) -> Sample:
    # symmetric mass of A3 = symmetric A2 plus D2(A2, target 0)
    if rng.random() < 0.5:
        return _symmetric_a2(rng)
    return d2(_symmetric_a2(rng), rng, 0)


def gen_round_d1(rng: np.random.Generator, label: int) -> Sample:
    s = d1(gen_a1(rng, 1 - label), rng)
    s.round = "d1a1"
    return s


def gen_round_d2(rng: np.random.Generator, label: int) -> Sample:
    s = d2(_symmetric_a2(rng), rng, label)
    s.round = "d2a2"
    return s


def gen_round_d3(rng: np.random.Generator, label: int) -> Sample:
    s = d3(_symmetric_a3(rng), rng, label)
    s.round = "d3a3"
    return s
