"""Rule-based ground-truth classifiers, independent of the generators.

Each oracle returns an OracleVerdict whose label follows the shared
convention (0 = concept holds) and whose evidence is enough to re-derive
the verdict. Generators never call these to construct images, only to
reject the rare accidental counterexample; tests sweep both paths against
each other.
"""

from __future__ import annotations

import functools
import math
from dataclasses import dataclass, field

import numpy as np
from PIL import Image, ImageDraw

from .errors import OracleError
from .raster import Component, components
from .shapes import ShapeKind, unit_outline


@dataclass
class OracleVerdict:
    label: int  # 0 = concept holds
    evidence: dict = field(default_factory=dict)

    @property
    def positive(self) -> bool:
        return self.label == 0


def oracle_global_sym(img: np.ndarray, tol: float = 0.0) -> OracleVerdict:
    """Fold about the vertical mid-line and count mismatched pixels.

    Symmetric iff the mismatch fraction (over all pixels) is <= tol.
    """
    if img.shape[1] % 2:
        raise OracleError(f"fold-compare needs even width, got {img.shape[1]}")
    if not 0.0 <= tol < 1.0:
        raise OracleError(f"tolerance {tol} outside [0,1)")
    mism = int(np.count_nonzero(img != img[:, ::-1]))
    frac = mism / img.size
    return OracleVerdict(
        label=0 if frac <= tol else 1,
        evidence={"mismatched_pixels": mism, "mismatch_fraction": frac},
    )


def oracle_local_sym(img: np.ndarray) -> OracleVerdict:
    """Positive iff every component is mirror-symmetric about its own bbox
    vertical center line, pixel-exactly."""
    comps = components(img)
    failing = [
        c.label for c in comps if not np.array_equal(c.mask, c.mask[:, ::-1])
    ]
    ev: dict = {"components": len(comps), "failing": failing}
    if not comps:
        ev["vacuous"] = True
    return OracleVerdict(label=0 if not failing else 1, evidence=ev)


def oracle_count(img: np.ndarray) -> OracleVerdict:
    """Component count; positive iff exactly 3."""
    n = len(components(img))
    return OracleVerdict(label=0 if n == 3 else 1, evidence={"count": n})


_SIG_SIDE = 32
_MIN_CLASSIFIABLE_AREA = 4
_MIN_TEMPLATE_IOU = 0.6  # below this a component matches nothing in the lexicon
_TEMPLATE_SUPERSAMPLE = 4

# The kind lexicon the type oracle classifies against. Part of the task
# definition, not of any generator.
TYPE_LEXICON = (
    ShapeKind.TRIANGLE,
    ShapeKind.SQUARE,
    ShapeKind.BALL,
    ShapeKind.HEXAGRAM,
    ShapeKind.F4,
    ShapeKind.F2,
)


def shape_signature(mask: np.ndarray) -> np.ndarray:
    """Scale-normalized silhouette: tight mask resampled to 32x32, binarized."""
    im = Image.fromarray((mask > 0).astype(np.uint8) * 255, mode="L")
    arr = np.asarray(im.resize((_SIG_SIDE, _SIG_SIDE), Image.BILINEAR))
    return arr >= 128


def signature_iou(a: np.ndarray, b: np.ndarray) -> float:
    inter = int(np.count_nonzero(a & b))
    union = int(np.count_nonzero(a | b))
    return inter / union if union else 1.0


@functools.lru_cache(maxsize=4096)
def _template_signature(kind: ShapeKind, size: int, rotation: float) -> np.ndarray:
    """Signature of a lexicon shape, rasterized independently of the
    production kernels: supersampled PIL polygon fill, area-downsampled.
    Keeping this a second code path means the oracle's notion of each kind
    never collapses into the generator's rasterizer.
    """
    xs, ys = unit_outline(kind)
    if rotation != 0.0:
        a = math.radians(rotation)
        ca, sa = math.cos(a), math.sin(a)
        xs, ys = ca * xs - sa * ys, sa * xs + ca * ys
    ext = max(xs.max() - xs.min(), ys.max() - ys.min())
    f = size / ext * _TEMPLATE_SUPERSAMPLE
    xs, ys = xs * f, ys * f
    x0, y0 = float(xs.min()), float(ys.min())
    w = int(math.ceil(float(xs.max()) - x0)) + 2
    h = int(math.ceil(float(ys.max()) - y0)) + 2
    im = Image.new("L", (w, h), 0)
    ImageDraw.Draw(im).polygon(
        list(zip((xs - x0 + 1).tolist(), (ys - y0 + 1).tolist())), fill=255
    )
    ss = _TEMPLATE_SUPERSAMPLE
    arr = (
        np.asarray(im.resize((max(1, w // ss), max(1, h // ss)), Image.BOX)) >= 128
    )
    rows = np.flatnonzero(arr.any(axis=1))
    cols = np.flatnonzero(arr.any(axis=0))
    tight = arr[rows[0] : rows[-1] + 1, cols[0] : cols[-1] + 1]
    return shape_signature(tight)


def classify_component(
    mask: np.ndarray, rotation_sweep: bool = False
) -> tuple[str, float]:
    """Nearest lexicon kind of a tight component mask, by signature IoU.

    Templates are tried at the component's bbox long edge +-1 px (and over
    5 degree rotations in sweep mode). Returns (kind name, best IoU);
    kind is "unknown" when nothing in the lexicon comes close.
    """
    sig = shape_signature(mask)
    size = max(mask.shape)
    rotations = np.arange(0.0, 360.0, 5.0) if rotation_sweep else (0.0,)
    best_kind, best_iou = "unknown", -1.0
    for kind in TYPE_LEXICON:
        iou = max(
            signature_iou(sig, _template_signature(kind, s, float(r)))
            for s in (size - 1, size, size + 1)
            if s >= 4
            for r in rotations
        )
        if iou > best_iou:
            best_kind, best_iou = kind.value, iou
    if best_iou < _MIN_TEMPLATE_IOU:
        return "unknown", best_iou
    return best_kind, best_iou


def oracle_type_count(img: np.ndarray, rotation_sweep: bool = False) -> OracleVerdict:
    """Number of distinct shape kinds present; positive iff exactly one.

    Each component is classified independently against the lexicon, so two
    components are the same kind iff they match the same template. (A pure
    pairwise-IoU clustering was measured to be unable to separate kinds at
    any single threshold: spiky shapes at adjacent sizes score lower
    against themselves than a square scores against a ball.)
    """
    comps = components(img)
    for c in comps:
        if c.area < _MIN_CLASSIFIABLE_AREA:
            raise OracleError(
                f"component {c.label} ({c.area} px) too small to classify"
            )
    assigned = []
    ious = []
    for c in comps:
        kind, iou = classify_component(c.mask, rotation_sweep)
        assigned.append(kind)
        ious.append(iou)
    kinds = len(set(assigned))
    return OracleVerdict(
        label=0 if kinds <= 1 else 1,
        evidence={
            "kinds": kinds,
            "components": len(comps),
            "assigned": assigned,
            "template_ious": ious,
        },
    )


_APEX_BAND = 0.75  # px: pixels this close to the max radius form the apex tip


def apex_direction(comp: Component) -> tuple[float, float, float]:
    """(cy, cx, angle) of the component: subpixel apex estimated as the mean
    of the pixels at maximal centroid distance; angle in degrees of
    centroid -> apex."""
    ys, xs = np.nonzero(comp.mask)
    cy = float(ys.mean())
    cx = float(xs.mean())
    d = np.hypot(ys - cy, xs - cx)
    tip = d >= d.max() - _APEX_BAND
    ay = float(ys[tip].mean())
    ax = float(xs[tip].mean())
    ang = math.degrees(math.atan2(ay - cy, ax - cx))
    return cy + comp.bbox[0], cx + comp.bbox[1], ang


def _angle_diff(a: float, b: float) -> float:
    return abs((a - b + 180.0) % 360.0 - 180.0)


def oracle_common_fate(img: np.ndarray, angle_tol: float = 5.0) -> OracleVerdict:
    """All triangles face the dot? The dot is the unique smallest component
    and must be under half the size of everything else."""
    comps = components(img)
    if len(comps) < 2:
        raise OracleError(f"need a dot and at least one triangle, got {len(comps)}")
    dot = comps[-1]  # area-descending order
    rest = comps[:-1]
    if min(c.area for c in rest) < 2 * dot.area:
        raise OracleError(
            f"no unambiguous dot: smallest {dot.area} px vs next {min(c.area for c in rest)} px"
        )
    dy = dot.bbox[0] + (dot.mask.shape[0] - 1) / 2.0
    dx = dot.bbox[1] + (dot.mask.shape[1] - 1) / 2.0
    outliers = []
    angles = []
    for c in rest:
        cy, cx, facing = apex_direction(c)
        to_dot = math.degrees(math.atan2(dy - cy, dx - cx))
        dev = _angle_diff(facing, to_dot)
        angles.append(dev)
        if dev > angle_tol:
            outliers.append({"label": c.label, "deviation_deg": dev})
    return OracleVerdict(
        label=0 if not outliers else 1,
        evidence={
            "triangles": len(rest),
            "dot_center": (dy, dx),
            "deviations_deg": angles,
            "outliers": outliers,
        },
    )
