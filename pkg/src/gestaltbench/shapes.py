"""Shape outlines and tight binary masks.

Every shape is defined by a unit outline centered on the origin, then
rotated, scaled so the longer edge of its axis-aligned bounding box equals
the requested size, and rasterized with the even-odd scanline kernel. The
returned mask is tight: its first/last rows and columns are nonempty, so
mask.shape is the rendered bounding box.

The pixel grid cannot mirror arbitrary float geometry exactly, so shapes
that must be symmetric about their own vertical axis are post-symmetrized
(right half becomes a flip of the left half). That is only meaningful at
rotation 0 for the kinds that are mirror-symmetric to begin with.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass

import numpy as np

from .errors import GenerationError
from .kernels import fill_polygon

_CURVE_SEGMENTS = 720


class ShapeKind(str, enum.Enum):
    TRIANGLE = "triangle"
    SQUARE = "square"
    BALL = "ball"
    POINTY = "pointy"
    HEXAGRAM = "hexagram"
    F4 = "f4"
    F2 = "f2"
    POLYGON = "polygon"  # free-form, carries a PolygonSpec


# Kinds whose unit outline is mirror-symmetric about the vertical axis.
MIRROR_SYMMETRIC_KINDS = frozenset(
    {
        ShapeKind.TRIANGLE,
        ShapeKind.SQUARE,
        ShapeKind.BALL,
        ShapeKind.HEXAGRAM,
        ShapeKind.F4,
        ShapeKind.F2,
    }
)


@dataclass(frozen=True)
class ShapeSpec:
    kind: ShapeKind
    size: int
    rotation: float = 0.0  # degrees, counterclockwise

    def to_json(self) -> dict:
        return {"kind": self.kind.value, "size": self.size, "rotation": self.rotation}

    @classmethod
    def from_json(cls, obj: dict) -> "ShapeSpec":
        return cls(ShapeKind(obj["kind"]), int(obj["size"]), float(obj["rotation"]))


def unit_outline(kind: ShapeKind) -> tuple[np.ndarray, np.ndarray]:
    """Closed outline of the unrotated unit shape, centered on the origin.

    Curved kinds are sampled densely enough that the polygonal
    approximation is invisible at the sizes used here (<= ~60 px).
    """
    if kind == ShapeKind.TRIANGLE:
        # Equilateral, apex up.
        ang = np.deg2rad([90.0, 210.0, 330.0])
        return np.cos(ang), np.sin(ang)
    if kind == ShapeKind.SQUARE:
        return (
            np.array([-0.5, 0.5, 0.5, -0.5]),
            np.array([-0.5, -0.5, 0.5, 0.5]),
        )
    if kind == ShapeKind.BALL:
        t = np.linspace(0.0, 2.0 * np.pi, _CURVE_SEGMENTS, endpoint=False)
        return 0.5 * np.cos(t), 0.5 * np.sin(t)
    if kind == ShapeKind.POINTY:
        # Isoceles with a 40 degree apex pointing along +x. The apex is
        # much farther from the centroid than the base corners, which is
        # what the facing-direction oracle keys on.
        half = math.tan(math.radians(20.0))
        return (
            np.array([0.5, -0.5, -0.5]),
            np.array([0.0, half, -half]),
        )
    if kind == ShapeKind.HEXAGRAM:
        # Six-pointed star: 12 vertices alternating outer/inner radius.
        ang = np.deg2rad(90.0 + 30.0 * np.arange(12))
        rad = np.where(np.arange(12) % 2 == 0, 1.0, 1.0 / math.sqrt(3.0))
        return rad * np.cos(ang), rad * np.sin(ang)
    if kind == ShapeKind.F4:
        # Four-petal rose r = cos(2 theta); petals on both axes.
        t = np.linspace(0.0, 2.0 * np.pi, _CURVE_SEGMENTS, endpoint=False)
        r = np.cos(2.0 * t)
        return r * np.cos(t), r * np.sin(t)
    if kind == ShapeKind.F2:
        # Figure-eight (Gerono lemniscate), lobes left and right.
        t = np.linspace(0.0, 2.0 * np.pi, _CURVE_SEGMENTS, endpoint=False)
        return np.cos(t), 0.5 * np.sin(2.0 * t)
    raise GenerationError(f"unknown shape kind {kind!r}")


def _tight_crop(mask: np.ndarray) -> np.ndarray:
    rows = np.flatnonzero(mask.any(axis=1))
    cols = np.flatnonzero(mask.any(axis=0))
    if rows.size == 0:
        raise GenerationError("rasterized shape is empty")
    return mask[rows[0] : rows[-1] + 1, cols[0] : cols[-1] + 1]


def symmetrize_mask(mask: np.ndarray) -> np.ndarray:
    """Force mirror symmetry about the vertical center: right := flip(left).

    Odd widths keep their middle column. The result is re-cropped so its
    bounding box stays tight.
    """
    out = mask.copy()
    w = out.shape[1]
    out[:, w - w // 2 :] = out[:, : w // 2][:, ::-1]
    return _tight_crop(out)


def is_mirror_symmetric(mask: np.ndarray) -> bool:
    return bool(np.array_equal(mask, mask[:, ::-1]))


def _disc_mask(size: int) -> np.ndarray:
    # Pixel-center distance rule. All quantities are multiples of 1/2 at
    # small magnitude, so the arithmetic is exact and the disc is exactly
    # mirror-symmetric in both axes.
    r = size / 2.0
    c = (np.arange(size) + 0.5) - r
    d2 = c[:, None] ** 2 + c[None, :] ** 2
    return d2 <= r * r


def shape_mask(
    kind: ShapeKind,
    size: int,
    rotation: float = 0.0,
    symmetric: bool = False,
) -> np.ndarray:
    """Tight uint8 0/1 mask of the shape.

    size: target length in pixels of the longer bounding-box edge after
    rotation; pixelization can shift either rendered edge by one pixel.
    symmetric: enforce exact mirror symmetry about the mask's vertical
    center (requires rotation 0 and a mirror-symmetric kind).
    """
    if size < 3:
        raise GenerationError(f"shape size {size} too small to rasterize")
    if symmetric:
        if kind not in MIRROR_SYMMETRIC_KINDS:
            raise GenerationError(f"{kind.value} cannot be made mirror-symmetric")
        if rotation % 360.0 != 0.0:
            raise GenerationError("symmetric masks are only defined at rotation 0")

    if kind == ShapeKind.BALL:
        return _disc_mask(size)

    xs, ys = unit_outline(kind)
    if rotation % 360.0 != 0.0:
        a = math.radians(rotation)
        ca, sa = math.cos(a), math.sin(a)
        xs, ys = ca * xs - sa * ys, sa * xs + ca * ys
    mask = _outline_to_mask(xs, ys, size)
    if symmetric:
        mask = symmetrize_mask(mask)
    return mask


def _outline_to_mask(xs: np.ndarray, ys: np.ndarray, size: int) -> np.ndarray:
    """Scale an outline so its longer bbox edge is `size` px and rasterize."""
    ext = max(xs.max() - xs.min(), ys.max() - ys.min())
    if ext <= 0:
        raise GenerationError("degenerate outline")
    f = size / ext
    xs, ys = xs * f, ys * f
    x0, y0 = float(xs.min()), float(ys.min())
    w = int(math.ceil(float(xs.max()) - x0)) + 1
    h = int(math.ceil(float(ys.max()) - y0)) + 1
    return _tight_crop(fill_polygon(xs, ys, x0, y0, w, h).astype(bool))


STRAIGHT = "straight"
BEZIER = "bezier"
_BEZIER_STEPS = 16


@dataclass(frozen=True)
class PolygonSpec:
    """Closed free-form polygon: control points joined by straight lines or
    quadratic bezier arcs (off-curve point stored per bezier segment)."""

    control_x: tuple
    control_y: tuple
    segment_kinds: tuple  # per segment i: point i -> point i+1 (cyclic)
    off_x: tuple  # off-curve point per segment; unused for straight ones
    off_y: tuple

    def __post_init__(self):
        n = len(self.control_x)
        if n < 3:
            raise GenerationError("polygon needs at least 3 control points")
        if not (len(self.control_y) == len(self.segment_kinds) == n):
            raise GenerationError("inconsistent polygon spec lengths")

    def to_json(self) -> dict:
        return {
            "control_x": list(self.control_x),
            "control_y": list(self.control_y),
            "segment_kinds": list(self.segment_kinds),
            "off_x": list(self.off_x),
            "off_y": list(self.off_y),
        }


def flatten_polygon(spec: PolygonSpec) -> tuple[np.ndarray, np.ndarray]:
    """Expand bezier segments into short chords; returns the closed outline."""
    xs: list[float] = []
    ys: list[float] = []
    n = len(spec.control_x)
    t = np.linspace(0.0, 1.0, _BEZIER_STEPS, endpoint=False)
    for i in range(n):
        x1, y1 = spec.control_x[i], spec.control_y[i]
        x2, y2 = spec.control_x[(i + 1) % n], spec.control_y[(i + 1) % n]
        if spec.segment_kinds[i] == STRAIGHT:
            xs.append(x1)
            ys.append(y1)
        else:
            cx, cy = spec.off_x[i], spec.off_y[i]
            u = 1.0 - t
            xs.extend(u * u * x1 + 2.0 * u * t * cx + t * t * x2)
            ys.extend(u * u * y1 + 2.0 * u * t * cy + t * t * y2)
    return np.asarray(xs, dtype=np.float64), np.asarray(ys, dtype=np.float64)


def random_polygon(rng, region: tuple, point_count_range: tuple = (3, 12)) -> PolygonSpec:
    """Random closed polygon with control points uniform in region
    (x0, y0, x1, y1); each segment independently straight or bezier with
    probability 1/2. Off-curve bezier points are drawn from the same region.
    """
    lo, hi = point_count_range
    if lo < 3 or hi > 12 or lo > hi:
        raise GenerationError(f"point count range {point_count_range} outside [3,12]")
    x0, y0, x1, y1 = region
    n = int(rng.integers(lo, hi + 1))
    cx = rng.uniform(x0, x1, n)
    cy = rng.uniform(y0, y1, n)
    kinds = tuple(BEZIER if rng.random() < 0.5 else STRAIGHT for _ in range(n))
    ox = rng.uniform(x0, x1, n)
    oy = rng.uniform(y0, y1, n)
    return PolygonSpec(tuple(cx), tuple(cy), kinds, tuple(ox), tuple(oy))


def polygon_mask(spec: PolygonSpec, size: int | None = None) -> np.ndarray:
    """Tight mask of a free-form polygon. With size given, the outline is
    scaled like the named shapes (longer bbox edge = size); otherwise it is
    rasterized at its native coordinates.
    """
    xs, ys = flatten_polygon(spec)
    if size is not None:
        return _outline_to_mask(xs, ys, size)
    x0, y0 = float(xs.min()), float(ys.min())
    w = int(math.ceil(float(xs.max()) - x0)) + 1
    h = int(math.ceil(float(ys.max()) - y0)) + 1
    return _tight_crop(fill_polygon(xs, ys, x0, y0, w, h).astype(bool))


def resize_mask_nn(mask: np.ndarray, size: int) -> np.ndarray:
    """Nearest-neighbor resize of a binary mask so the longer edge is size."""
    h, w = mask.shape
    f = size / max(h, w)
    nh, nw = max(1, int(round(h * f))), max(1, int(round(w * f)))
    rows = np.minimum((np.arange(nh) + 0.5) / f, h - 1).astype(np.int64)
    cols = np.minimum((np.arange(nw) + 0.5) / f, w - 1).astype(np.int64)
    return _tight_crop(mask[rows][:, cols])
