# cython: boundscheck=False, wraparound=False, cdivision=True, language_level=3
"""Compiled twins of the kernels in `_pykernels.py`.

The scanline crossing uses the exact expression order of the numpy
backend (t = (yc - y1) / (y2 - y1); x = x1 + t * (x2 - x1)) and the
module is compiled with -ffp-contract=off, so the two backends agree
bit for bit.
"""

import numpy as np

cimport numpy as cnp
from libc.math cimport ceil
from libc.stdlib cimport free, malloc

cnp.import_array()


def fill_polygon(xs, ys, double x0, double y0, int width, int height):
    """Even-odd scanline fill; see the numpy backend for the pixel rule."""
    cdef cnp.ndarray[cnp.float64_t, ndim=1] vx = np.ascontiguousarray(xs, dtype=np.float64)
    cdef cnp.ndarray[cnp.float64_t, ndim=1] vy = np.ascontiguousarray(ys, dtype=np.float64)
    cdef Py_ssize_t n = vx.shape[0]
    cdef cnp.ndarray[cnp.uint8_t, ndim=2] out = np.zeros((height, width), dtype=np.uint8)
    cdef double* cross = <double*> malloc(n * sizeof(double))
    if cross == NULL:
        raise MemoryError()
    cdef Py_ssize_t i, e, a, b, p, j
    cdef long s, t_end
    cdef double yc, x1, y1, x2, y2, t, v
    cdef Py_ssize_t m
    try:
        for i in range(height):
            yc = y0 + i + 0.5
            m = 0
            for e in range(n):
                x1 = vx[e]
                y1 = vy[e]
                x2 = vx[(e + 1) % n]
                y2 = vy[(e + 1) % n]
                if (y1 <= yc < y2) or (y2 <= yc < y1):
                    t = (yc - y1) / (y2 - y1)
                    cross[m] = x1 + t * (x2 - x1)
                    m += 1
            for a in range(1, m):
                v = cross[a]
                b = a - 1
                while b >= 0 and cross[b] > v:
                    cross[b + 1] = cross[b]
                    b -= 1
                cross[b + 1] = v
            for p in range(0, m - 1, 2):
                s = <long> ceil(cross[p] - x0 - 0.5)
                t_end = <long> ceil(cross[p + 1] - x0 - 0.5)
                if s < 0:
                    s = 0
                if t_end > width:
                    t_end = width
                for j in range(s, t_end):
                    out[i, j] = 1
    finally:
        free(cross)
    return out


cdef inline cnp.int32_t _find(cnp.int32_t* parent, cnp.int32_t a) nogil:
    while parent[a] != a:
        parent[a] = parent[parent[a]]
        a = parent[a]
    return a


def label_raw(img):
    """8-connectivity labeling of img > 0; labels are arbitrary positive ints."""
    cdef cnp.ndarray[cnp.uint8_t, ndim=2] fg = (np.asarray(img) > 0).astype(np.uint8)
    cdef Py_ssize_t h = fg.shape[0]
    cdef Py_ssize_t w = fg.shape[1]
    cdef cnp.ndarray[cnp.int32_t, ndim=2] labels = np.zeros((h, w), dtype=np.int32)
    # Worst case one new label per isolated pixel in a checkerboard row.
    cdef Py_ssize_t cap = h * ((w + 1) // 2) + 2
    cdef cnp.ndarray[cnp.int32_t, ndim=1] parent_arr = np.zeros(cap, dtype=np.int32)
    cdef cnp.int32_t* parent = <cnp.int32_t*> parent_arr.data
    cdef cnp.int32_t nxt = 1
    cdef Py_ssize_t y, x
    cdef cnp.int32_t best, lab, ra, rb
    cdef Py_ssize_t k
    cdef cnp.int32_t neigh[4]
    cdef Py_ssize_t nn

    for y in range(h):
        for x in range(w):
            if fg[y, x] == 0:
                continue
            nn = 0
            if x > 0 and labels[y, x - 1] != 0:
                neigh[nn] = labels[y, x - 1]
                nn += 1
            if y > 0:
                if x > 0 and labels[y - 1, x - 1] != 0:
                    neigh[nn] = labels[y - 1, x - 1]
                    nn += 1
                if labels[y - 1, x] != 0:
                    neigh[nn] = labels[y - 1, x]
                    nn += 1
                if x + 1 < w and labels[y - 1, x + 1] != 0:
                    neigh[nn] = labels[y - 1, x + 1]
                    nn += 1
            if nn == 0:
                parent[nxt] = nxt
                labels[y, x] = nxt
                nxt += 1
            else:
                best = _find(parent, neigh[0])
                for k in range(1, nn):
                    ra = _find(parent, neigh[k])
                    if ra < best:
                        parent[best] = ra
                        best = ra
                    elif ra > best:
                        parent[ra] = best
                labels[y, x] = best

    for y in range(h):
        for x in range(w):
            lab = labels[y, x]
            if lab != 0:
                labels[y, x] = _find(parent, lab)
    return labels
