"""Compare the compiled and numpy kernel backends on realistic scenes.

Run as a script; prints per-op timings and the speedup, and asserts the
two backends stay bit-identical on everything they process.

    python benchmarks/bench_kernels.py [--scenes N] [--repeats N]
"""

from __future__ import annotations

import argparse
import time

import numpy as np

from gestaltbench import tasks
from gestaltbench.kernels import canonical_relabel, get_backend
from gestaltbench.rng import make_rng
from gestaltbench.shapes import flatten_polygon, random_polygon


def make_scenes(n: int) -> list[np.ndarray]:
    rng = make_rng(2024)
    rounds = [tasks.ROUNDS[k] for k in sorted(tasks.ROUNDS)]
    return [rounds[i % len(rounds)].gen(rng, i % 2).image for i in range(n)]


def make_outlines(n: int) -> list[tuple]:
    """fill_polygon payloads, prepared the same way shape rendering does."""
    rng = make_rng(77)
    out = []
    for _ in range(n):
        spec = random_polygon(rng, (0.0, 0.0, 64.0, 64.0))
        xs, ys = flatten_polygon(spec)
        size = int(rng.integers(12, 64))
        f = size / max(xs.max() - xs.min(), ys.max() - ys.min())
        xs, ys = xs * f, ys * f
        x0, y0 = float(xs.min()), float(ys.min())
        w = int(np.ceil(float(xs.max()) - x0)) + 1
        h = int(np.ceil(float(ys.max()) - y0)) + 1
        out.append((xs, ys, x0, y0, w, h))
    return out


def bench(fn, payloads, repeats: int) -> float:
    best = np.inf
    for _ in range(repeats):
        t0 = time.perf_counter()
        for p in payloads:
            fn(*p)
        best = min(best, time.perf_counter() - t0)
    return best


def main() -> int:
    parser = argparse.ArgumentParser()
    parser.add_argument("--scenes", type=int, default=200)
    parser.add_argument("--repeats", type=int, default=5)
    args = parser.parse_args()

    try:
        fill_c, label_c = get_backend("c")
    except ImportError:
        print("compiled backend unavailable; nothing to compare")
        return 1
    fill_py, label_py = get_backend("python")

    scenes = make_scenes(args.scenes)
    outlines = make_outlines(args.scenes)

    for payload in outlines:
        a = fill_c(*payload)
        b = fill_py(*payload)
        assert np.array_equal(a, b), "fill_polygon outputs differ"
    for img in scenes:
        a = canonical_relabel(label_c(img))
        b = canonical_relabel(label_py(img))
        assert a[1] == b[1] and np.array_equal(a[0], b[0]), "labeling differs"
    print(f"bit-identical on {args.scenes} scenes and {args.scenes} polygons")

    t_fill_c = bench(fill_c, outlines, args.repeats)
    t_fill_py = bench(fill_py, outlines, args.repeats)
    t_lab_c = bench(lambda im: label_c(im), [(s,) for s in scenes], args.repeats)
    t_lab_py = bench(lambda im: label_py(im), [(s,) for s in scenes], args.repeats)

    n = args.scenes
    print(f"fill_polygon  c: {t_fill_c / n * 1e6:8.1f} us/shape   "
          f"python: {t_fill_py / n * 1e6:8.1f} us/shape   "
          f"speedup x{t_fill_py / t_fill_c:.1f}")
    print(f"label_raw     c: {t_lab_c / n * 1e6:8.1f} us/scene   "
          f"python: {t_lab_py / n * 1e6:8.1f} us/scene   "
          f"speedup x{t_lab_py / t_lab_c:.1f}")
    return 0


if __name__ == "__main__":
    raise SystemExit(main())
