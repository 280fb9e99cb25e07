"""Tampered-face construction.

Two frontal faces are rotated upright (nose line vertical), scaled to a
common height keeping their widths, aligned on the mass center of eyes,
nose, and mouth, then blended with a horizontal sigmoid so the left half
of the result comes from the first face.  Landmarks arrive as sidecar
text files with 68 coordinate pairs; detection is out of scope.

Photographic inputs are the one place this package resamples with
bilinear interpolation instead of exact pixel arithmetic.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from pathlib import Path

import numpy as np
from PIL import Image

from . import __version__
from .dataset import Manifest, Record, image_digest, load_png, save_png
from .errors import AlignmentError, DataError, FusionError
from .sample import Sample

N_LANDMARKS = 68
# 0-based index groups of the standard 68-point annotation
NOSE_BRIDGE = slice(27, 31)
EYES = slice(36, 48)
NOSE = slice(27, 36)
MOUTH = slice(48, 68)

DEFAULT_SIGMA = 4.0
FACES_TASK = "faces"


@dataclass
class LandmarkSet:
    """68 (x, y) rows; `clipped` flags points forced back into frame."""

    points: np.ndarray
    clipped: bool = False

    def __post_init__(self):
        pts = np.asarray(self.points, dtype=np.float64)
        if pts.shape != (N_LANDMARKS, 2):
            raise DataError(f"need {N_LANDMARKS} landmark points, got shape {pts.shape}")
        if not np.isfinite(pts).all():
            raise DataError("landmarks must be finite")
        self.points = pts


def load_landmarks(path) -> LandmarkSet:
    """Sidecar parser: 68 whitespace- or comma-separated x/y pairs.

    Lines that do not parse as exactly two numbers (pts-style headers,
    braces, comments) are skipped, so plain listings and classic pts
    files both load.
    """
    pts = []
    for raw in Path(path).read_text().splitlines():
        line = raw.strip().replace(",", " ")
        if not line or line.startswith("#"):
            continue
        fields = line.split()
        if len(fields) != 2:
            continue
        try:
            pts.append((float(fields[0]), float(fields[1])))
        except ValueError:
            continue
    if len(pts) != N_LANDMARKS:
        raise DataError(f"{path}: parsed {len(pts)} coordinate pairs, "
                        f"need {N_LANDMARKS}")
    return LandmarkSet(np.array(pts, dtype=np.float64))


def nose_angle(lm: LandmarkSet) -> float:
    """Signed degrees the nose-bridge line leans from vertical."""
    bridge = lm.points[NOSE_BRIDGE]
    vx, vy = bridge[-1] - bridge[0]
    if math.hypot(vx, vy) < 1e-9:
        raise AlignmentError("degenerate nose line")
    return math.degrees(math.atan2(vx, vy))


def upright_align(face: np.ndarray, lm: LandmarkSet,
                  ) -> tuple[np.ndarray, LandmarkSet]:
    """Rotate about the frame center until the nose line is vertical.

    Landmarks get the matching rotation; any that leave the frame are
    clipped back and flagged.
    """
    theta = nose_angle(lm)
    if abs(theta) < 1e-9:
        return face, lm
    h, w = face.shape
    ctr = np.array([w / 2.0, h / 2.0])
    # rotate(-theta) moves content by [[c,-s],[s,c]] about the center
    im = Image.fromarray(face, mode="L").rotate(
        -theta, resample=Image.Resampling.BILINEAR, center=(ctr[0], ctr[1]),
        fillcolor=0)
    rad = math.radians(theta)
    c, s = math.cos(rad), math.sin(rad)
    rot = np.array([[c, -s], [s, c]])
    pts = (lm.points - ctr) @ rot.T + ctr
    clipped = bool((pts < 0).any()
                   or (pts[:, 0] > w - 1).any() or (pts[:, 1] > h - 1).any())
    pts[:, 0] = np.clip(pts[:, 0], 0.0, w - 1.0)
    pts[:, 1] = np.clip(pts[:, 1], 0.0, h - 1.0)
    return np.asarray(im, dtype=np.uint8), LandmarkSet(pts, clipped=clipped)


def face_center(lm: LandmarkSet) -> tuple[float, float]:
    """Mass center of the eyes, nose, and mouth point groups."""
    pts = np.concatenate([lm.points[EYES], lm.points[NOSE], lm.points[MOUTH]])
    cx, cy = pts.mean(axis=0)
    return float(cx), float(cy)


def normalize_height(face: np.ndarray, lm: LandmarkSet,
                     target_h: int) -> tuple[np.ndarray, LandmarkSet]:
    """Vertical-only rescale to target_h rows, keeping the original width."""
    h, w = face.shape
    target_h = int(target_h)
    if target_h < 2:
        raise FusionError(f"target height {target_h} too small")
    if h == target_h:
        return face, lm
    im = Image.fromarray(face, mode="L").resize(
        (w, target_h), Image.Resampling.BILINEAR)
    sy = target_h / h
    pts = lm.points.copy()
    pts[:, 1] = (pts[:, 1] + 0.5) * sy - 0.5  # pixel-center convention
    return np.asarray(im, dtype=np.uint8), LandmarkSet(pts, lm.clipped)


def omega(x, width: int, sigma: float = DEFAULT_SIGMA) -> np.ndarray:
    """Horizontal sigmoid weight: ~1 at the left edge, 0.5 at mid-width,
    ~0 at the right; strictly decreasing in x."""
    if sigma <= 0:
        raise FusionError(f"sigma must be positive, got {sigma}")
    x = np.asarray(x, dtype=np.float64)
    return 1.0 / (1.0 + np.exp((x - width / 2.0) / sigma))


def blend_fuse(i1: np.ndarray, i2: np.ndarray,
               sigma: float = DEFAULT_SIGMA) -> np.ndarray:
    """Per-column convex blend of two equal-shape planes.

    Columns left of mid-width weight toward i1, right toward i2.  The
    combination is computed in float and rounded half to even, so each
    output pixel stays within [min(i1, i2), max(i1, i2)].
    """
    a = np.asarray(i1, dtype=np.float64)
    b = np.asarray(i2, dtype=np.float64)
    if a.shape != b.shape or a.ndim != 2:
        raise FusionError(f"blend needs two equal planes, got {a.shape} vs {b.shape}")
    w = a.shape[1]
    wgt = omega(np.arange(w), w, sigma)
    return np.rint(wgt * a + (1.0 - wgt) * b).astype(np.uint8)


def make_tampered(face_a: np.ndarray, face_b: np.ndarray,
                  lm_a: LandmarkSet, lm_b: LandmarkSet,
                  sigma: float = DEFAULT_SIGMA) -> Sample:
    """Full pipeline: upright both faces, scale B to A's height, shift B
    so the face centers coincide (whole pixels), crop to the overlap,
    blend.  The left half of the result comes from face_a."""
    a_img, a_lm = upright_align(face_a, lm_a)
    b_img, b_lm = upright_align(face_b, lm_b)
    b_img, b_lm = normalize_height(b_img, b_lm, a_img.shape[0])
    ca, cb = face_center(a_lm), face_center(b_lm)
    dx = int(np.rint(ca[0] - cb[0]))
    dy = int(np.rint(ca[1] - cb[1]))
    ha, wa = a_img.shape
    hb, wb = b_img.shape
    x0, y0 = max(0, dx), max(0, dy)
    x1, y1 = min(wa, wb + dx), min(ha, hb + dy)
    if x1 - x0 < 2 or y1 - y0 < 2:
        raise FusionError("faces do not overlap after center alignment")
    crop_a = a_img[y0:y1, x0:x1]
    crop_b = b_img[y0 - dy:y1 - dy, x0 - dx:x1 - dx]
    fused = blend_fuse(crop_a, crop_b, sigma)
    recipe = {"op": "fuse", "sigma": sigma, "shift": [dx, dy],
              "overlap": [y0, x0, y1 - y0, x1 - x0],
              "clipped": [a_lm.clipped, b_lm.clipped]}
    return Sample(fused, 1, FACES_TASK, "fused", -1, recipe)


# ---------------------------------------------------------------------------
# Batch emission from a pairing list.


def _parse_pairs(path: Path) -> list[tuple]:
    """`real,<img>` or `fused,<imgA>,<lmA>,<imgB>,<lmB>` per line;
    whitespace works as well as commas.  Paths resolve against the
    list's own directory."""
    base = path.parent
    jobs = []
    for lineno, raw in enumerate(path.read_text().splitlines(), start=1):
        line = raw.strip().replace(",", " ")
        if not line or line.startswith("#"):
            continue
        fields = line.split()
        kind = fields[0].lower()
        if kind == "real" and len(fields) == 2:
            jobs.append(("real", base / fields[1]))
        elif kind == "fused" and len(fields) == 5:
            jobs.append(("fused", base / fields[1], base / fields[2],
                         base / fields[3], base / fields[4]))
        else:
            raise DataError(f"{path}:{lineno}: expected `real,<img>` or "
                            f"`fused,<imgA>,<lmA>,<imgB>,<lmB>`, got {raw!r}")
    if not jobs:
        raise DataError(f"{path}: no fusion jobs")
    return jobs


def fuse_pairs(pairs_path, out_root, sigma: float = DEFAULT_SIGMA) -> Manifest:
    """Emit a face round from a pairing list.

    Real faces pass through untouched as class 0; fused pairs become
    class 1.  The round is typically imbalanced, which the manifest
    records as-is.  Records carry no seed (nothing here is random).
    """
    jobs = _parse_pairs(Path(pairs_path))
    out_dir = Path(out_root) / FACES_TASK / "train"
    records = []
    for i, job in enumerate(jobs):
        if job[0] == "real":
            img = load_png(job[1])
            label = 0
            recipe = {"op": "copy", "source": str(job[1])}
        else:
            _, img_a, lm_a, img_b, lm_b = job
            sample = make_tampered(load_png(img_a), load_png(img_b),
                                   load_landmarks(lm_a), load_landmarks(lm_b),
                                   sigma)
            img = sample.image
            label = 1
            recipe = dict(sample.recipe)
            recipe.update(image_a=str(img_a), landmarks_a=str(lm_a),
                          image_b=str(img_b), landmarks_b=str(lm_b))
        rel = f"{label}/{i:06d}.png"
        save_png(img, out_dir / rel)
        records.append(Record(rel, label, -1, image_digest(img), "train", recipe))
    manifest = Manifest(FACES_TASK, "train", __version__, None, records)
    manifest.save(out_dir)
    return manifest
