"""Canvas utilities: blitting, placement with separation, symmetry, PNG IO.

Images are 2-D uint8 arrays, background 0, foreground intensities in
[64, 255). The canvas is 200x200; the even width puts the global mirror
axis between columns 99 and 100, so x -> W-1-x is an exact involution.
"""

from __future__ import annotations

import io
from dataclasses import dataclass

import numpy as np
from PIL import Image

from .errors import DecodeError, PlacementError
from .kernels import label_components
from .shapes import PolygonSpec, ShapeKind, polygon_mask, shape_mask

CANVAS = 200
MIN_INTENSITY = 64
MAX_INTENSITY = 255  # exclusive bound for sampling
MIN_SEPARATION = 2  # Chebyshev distance between pixels of distinct objects


def new_canvas(height: int = CANVAS, width: int = CANVAS) -> np.ndarray:
    return np.zeros((height, width), dtype=np.uint8)


def dilate1(mask: np.ndarray) -> np.ndarray:
    """Binary dilation by one pixel (3x3 structuring element)."""
    m = mask > 0
    vert = m.copy()
    vert[1:, :] |= m[:-1, :]
    vert[:-1, :] |= m[1:, :]
    out = vert.copy()
    out[:, 1:] |= vert[:, :-1]
    out[:, :-1] |= vert[:, 1:]
    return out


def fits(occupied: np.ndarray, mask: np.ndarray, top: int, left: int) -> bool:
    """True when mask placed at (top, left) stays in bounds and keeps the
    minimum separation from everything already on the canvas.

    `occupied` is the dilated occupancy map maintained by `place`.
    """
    h, w = mask.shape
    ch, cw = occupied.shape
    if top < 0 or left < 0 or top + h > ch or left + w > cw:
        return False
    region = occupied[top : top + h, left : left + w]
    return not bool(np.any(region & (mask > 0)))


def place(
    canvas: np.ndarray,
    occupied: np.ndarray,
    mask: np.ndarray,
    top: int,
    left: int,
    intensity: int,
) -> None:
    """Blit mask at (top, left) with the given intensity and update the
    dilated occupancy map. Raises PlacementError when `fits` fails.
    """
    if not fits(occupied, mask, top, left):
        raise PlacementError(
            f"mask {mask.shape} does not fit at ({top}, {left}) with separation"
        )
    h, w = mask.shape
    region = canvas[top : top + h, left : left + w]
    region[mask > 0] = intensity
    # Dilate in a 1-px padded frame so the halo survives clipping at the
    # canvas border.
    padded = np.zeros((h + 2, w + 2), dtype=bool)
    padded[1 : h + 1, 1 : w + 1] = mask > 0
    grown = dilate1(padded)
    t0, l0 = max(top - 1, 0), max(left - 1, 0)
    t1 = min(top + h + 1, occupied.shape[0])
    l1 = min(left + w + 1, occupied.shape[1])
    gt, gl = t0 - (top - 1), l0 - (left - 1)
    occupied[t0:t1, l0:l1] |= grown[gt : gt + (t1 - t0), gl : gl + (l1 - l0)]


@dataclass(frozen=True)
class ShapeInstance:
    """A drawable object: named kind or free-form polygon, positioned by
    center, sized by the longer bbox edge."""

    kind: ShapeKind
    center: tuple  # (x, y) pixel coords
    size: int
    intensity: int
    rotation: float = 0.0
    polygon: PolygonSpec | None = None

    def mask(self, symmetric: bool = False) -> np.ndarray:
        if self.kind == ShapeKind.POLYGON:
            if self.polygon is None:
                raise PlacementError("polygon instance without a PolygonSpec")
            return polygon_mask(self.polygon, self.size)
        return shape_mask(self.kind, self.size, self.rotation, symmetric)


def rasterize(shape: ShapeInstance, canvas: np.ndarray) -> np.ndarray:
    """Draw the shape onto the canvas (in place), overwriting underlying
    pixels. Raises PlacementError when the rendered mask leaves the canvas.
    """
    if not 1 <= shape.intensity <= 255:
        raise PlacementError(f"intensity {shape.intensity} outside [1,255]")
    mask = shape.mask()
    h, w = mask.shape
    top = int(round(shape.center[1] - h / 2))
    left = int(round(shape.center[0] - w / 2))
    if top < 0 or left < 0 or top + h > canvas.shape[0] or left + w > canvas.shape[1]:
        raise PlacementError(
            f"{shape.kind.value} size {shape.size} at {shape.center} leaves canvas"
        )
    region = canvas[top : top + h, left : left + w]
    region[mask > 0] = shape.intensity
    return canvas


@dataclass
class Component:
    """One 8-connected foreground component (tight mask, canvas placement)."""

    label: int
    mask: np.ndarray  # tight bool mask
    bbox: tuple  # (top, left, height, width)
    centroid: tuple  # (y, x), pixel-index mean
    area: int


def components(img: np.ndarray) -> list[Component]:
    """All foreground components, sorted by area descending (ties by
    first-occurrence label, so the order is deterministic)."""
    labels, n = label_components(img)
    ys, xs = np.nonzero(labels)
    vals = labels[ys, xs]
    # stable sort keeps row-major order inside each label, so the y runs
    # stay nondecreasing and bbox tops/bottoms fall out of the run ends
    order = np.argsort(vals, kind="stable")
    ys, xs, vals = ys[order], xs[order], vals[order]
    starts = np.searchsorted(vals, np.arange(1, n + 1), side="left")
    stops = np.searchsorted(vals, np.arange(1, n + 1), side="right")
    out = []
    for lbl in range(1, n + 1):
        yy = ys[starts[lbl - 1] : stops[lbl - 1]]
        xx = xs[starts[lbl - 1] : stops[lbl - 1]]
        t, b = int(yy[0]), int(yy[-1])
        l, r = int(xx.min()), int(xx.max())
        tight = np.zeros((b - t + 1, r - l + 1), dtype=bool)
        tight[yy - t, xx - l] = True
        out.append(
            Component(
                label=lbl,
                mask=tight,
                bbox=(t, l, b - t + 1, r - l + 1),
                centroid=(float(yy.mean()), float(xx.mean())),
                area=int(yy.size),
            )
        )
    out.sort(key=lambda c: (-c.area, c.label))
    return out


def nn_scale(img: np.ndarray, factor: float) -> np.ndarray:
    """Scale image content about the image center, nearest-neighbor, output
    the same canvas size (content falling outside is cropped, uncovered
    pixels become background). Half-to-even rounding.
    """
    h, w = img.shape
    cy, cx = (h - 1) / 2.0, (w - 1) / 2.0
    ys = np.rint((np.arange(h) - cy) / factor + cy).astype(np.int64)
    xs = np.rint((np.arange(w) - cx) / factor + cx).astype(np.int64)
    yok = (ys >= 0) & (ys < h)
    xok = (xs >= 0) & (xs < w)
    out = np.zeros_like(img)
    out[np.ix_(yok, xok)] = img[np.ix_(ys[yok], xs[xok])]
    return out


def nn_scale_half(img: np.ndarray, factor: float, side: str) -> np.ndarray:
    """Scale only one half of the image (about that half's own center)."""
    if side not in ("left", "right"):
        raise ValueError(f"side must be left or right, got {side!r}")
    out = img.copy()
    w = img.shape[1]
    if side == "left":
        out[:, : w // 2] = nn_scale(img[:, : w // 2], factor)
    else:
        out[:, w - w // 2 :] = nn_scale(img[:, w - w // 2 :], factor)
    return out


def mirror_left_onto_right(img: np.ndarray) -> np.ndarray:
    """Return a copy whose right half is the mirror of its left half."""
    out = img.copy()
    w = out.shape[1]
    out[:, w - w // 2 :] = out[:, : w // 2][:, ::-1]
    return out


def mirror_onto(img: np.ndarray, source_side: str) -> np.ndarray:
    """Mirror one side onto the other; source_side names the half kept."""
    if source_side == "left":
        return mirror_left_onto_right(img)
    if source_side == "right":
        return mirror_left_onto_right(img[:, ::-1])[:, ::-1]
    raise ValueError(f"source_side must be left or right, got {source_side!r}")


def flip_horizontal(img: np.ndarray) -> np.ndarray:
    return img[:, ::-1].copy()


def is_globally_symmetric(img: np.ndarray) -> bool:
    return bool(np.array_equal(img, img[:, ::-1]))


def connected_components(img: np.ndarray) -> tuple[np.ndarray, int]:
    """8-connectivity components of img > 0, labels canonical (see kernels)."""
    return label_components(img)


def encode_png(img: np.ndarray) -> bytes:
    buf = io.BytesIO()
    Image.fromarray(np.asarray(img, dtype=np.uint8), mode="L").save(buf, format="PNG")
    return buf.getvalue()


def decode_png(data: bytes) -> np.ndarray:
    try:
        with Image.open(io.BytesIO(data)) as im:
            if im.mode != "L":
                raise DecodeError(f"expected 8-bit grayscale PNG, got mode {im.mode}")
            return np.asarray(im, dtype=np.uint8)
    except DecodeError:
        raise
    except Exception as exc:
        raise DecodeError(f"cannot decode PNG: {exc}") from exc


def save_png(img: np.ndarray, path) -> None:
    Image.fromarray(np.asarray(img, dtype=np.uint8), mode="L").save(path, format="PNG")


def load_png(path) -> np.ndarray:
    try:
        with Image.open(path) as im:
            if im.mode != "L":
                raise DecodeError(f"{path}: expected 8-bit grayscale, got {im.mode}")
            return np.asarray(im, dtype=np.uint8)
    except DecodeError:
        raise
    except Exception as exc:
        raise DecodeError(f"{path}: cannot decode PNG: {exc}") from exc
