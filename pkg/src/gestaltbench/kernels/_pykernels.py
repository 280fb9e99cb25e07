"""Pure-numpy kernels: the fallback backend.

These mirror the compiled kernels in `_ckernels.pyx` operation for
operation. Both backends must produce bit-identical output; the scanline
crossing is evaluated with the exact same float64 expression
(t = (yc - y1) / (y2 - y1); x = x1 + t * (x2 - x1)) and the extension is
compiled without FP contraction, so equality holds ulp-for-ulp.
"""

from __future__ import annotations

import numpy as np


def fill_polygon(xs, ys, x0: float, y0: float, width: int, height: int) -> np.ndarray:
    """Even-odd scanline fill of the closed polygon (xs, ys).

    Pixel (i, j) of the returned (height, width) uint8 mask covers the
    center (x0 + j + 0.5, y0 + i + 0.5). A center is foreground when it
    falls in [c0, c1) for an odd/even crossing pair, with edges crossing a
    row under the half-open rule min(y1,y2) <= yc < max(y1,y2). The rule
    makes an axis-aligned s-pixel square cover exactly s*s pixels.
    """
    xs = np.ascontiguousarray(xs, dtype=np.float64)
    ys = np.ascontiguousarray(ys, dtype=np.float64)
    x1, y1 = xs[:, None], ys[:, None]
    x2, y2 = np.roll(xs, -1)[:, None], np.roll(ys, -1)[:, None]

    yc = y0 + np.arange(height, dtype=np.float64) + 0.5  # (H,)
    crosses = ((y1 <= yc) & (yc < y2)) | ((y2 <= yc) & (yc < y1))  # (E, H)
    with np.errstate(divide="ignore", invalid="ignore"):
        t = (yc - y1) / (y2 - y1)
        xc = np.where(crosses, x1 + t * (x2 - x1), np.inf)
    xc.sort(axis=0)
    if xc.shape[0] % 2:
        # Crossing counts are even per row; pad so the inf tail pairs up.
        xc = np.vstack([xc, np.full((1, height), np.inf)])

    # Even/odd pairs -> +1/-1 difference rows, accumulated along x.
    starts = np.clip(np.ceil(xc[0::2] - x0 - 0.5), 0, width).astype(np.int64)
    ends = np.clip(np.ceil(xc[1::2] - x0 - 0.5), 0, width).astype(np.int64)
    diff = np.zeros((height, width + 1), dtype=np.int32)
    rows = np.broadcast_to(np.arange(height), starts.shape)
    live = starts < ends
    np.add.at(diff, (rows[live], starts[live]), 1)
    np.add.at(diff, (rows[live], ends[live]), -1)
    return (np.cumsum(diff[:, :width], axis=1) > 0).astype(np.uint8)


def label_raw(img: np.ndarray) -> np.ndarray:
    """8-connectivity labeling of img > 0; labels are arbitrary positive ints.

    Run-based two-pass: extract horizontal foreground runs, union runs that
    touch (including diagonally) across adjacent rows.
    """
    h, w = img.shape
    fg = img > 0
    labels = np.zeros((h, w), dtype=np.int32)

    parent: list[int] = [0]

    def find(a: int) -> int:
        while parent[a] != a:
            parent[a] = parent[parent[a]]
            a = parent[a]
        return a

    def union(a: int, b: int) -> None:
        ra, rb = find(a), find(b)
        if ra != rb:
            parent[max(ra, rb)] = min(ra, rb)

    prev_runs: list[tuple[int, int, int]] = []  # (start, end, run_id)
    for y in range(h):
        row = fg[y]
        if not row.any():
            prev_runs = []
            continue
        padded = np.empty(w + 2, dtype=np.int8)
        padded[0] = padded[-1] = 0
        padded[1:-1] = row
        edges = np.flatnonzero(np.diff(padded))
        runs = []
        for s, e in zip(edges[0::2], edges[1::2]):
            rid = len(parent)
            parent.append(rid)
            # 8-connectivity: a run touches any previous-row run that
            # overlaps [s-1, e+1).
            for ps, pe, pid in prev_runs:
                if ps < e + 1 and pe > s - 1:
                    union(rid, pid)
            runs.append((int(s), int(e), rid))
        prev_runs = runs
        for s, e, rid in runs:
            labels[y, s:e] = rid

    if len(parent) > 1:
        roots = np.array([find(i) for i in range(len(parent))], dtype=np.int32)
        labels = roots[labels]
    return labels
