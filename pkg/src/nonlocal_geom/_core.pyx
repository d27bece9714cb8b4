# cython: boundscheck=False, wraparound=False, cdivision=True, initializedcheck=False
"""Compiled hot loops.

Two kernels live here:

``nearest_center``
    nearest grain centre within one hash cell, used by the membership
    predicate of large unions of equal balls (sparse dust).
``disk_counts``
    direct summation of a boolean raster over a digital ball, used by the
    grid brute force for sparse points.

Both have numpy/scipy twins in ``_fallback`` that return identical
results; ``_accel`` picks one at import time.
"""
import numpy as np
cimport numpy as cnp
from libc.math cimport floor

cnp.import_array()


cdef Py_ssize_t _bsearch(const long long[:] keys, long long key) noexcept nogil:
    cdef Py_ssize_t lo = 0, hi = keys.shape[0], mid
    while lo < hi:
        mid = (lo + hi) >> 1
        if keys[mid] < key:
            lo = mid + 1
        else:
            hi = mid
    if lo < keys.shape[0] and keys[lo] == key:
        return lo
    return -1


def nearest_center(const double[:, :] points,
                   const double[:, :] centers,
                   const double[:] origin,
                   double cell,
                   const long long[:] dims,
                   const long long[:] strides,
                   const long long[:] keys,
                   const long long[:] starts,
                   const long long[:] order,
                   const int[:] table):
    """Index of the nearest centre within distance ``cell`` (-1 if none).

    ``table`` maps a flat cell key to its slot (-1 when empty); when it is
    empty the sorted ``keys`` are searched instead.
    """
    cdef Py_ssize_t n = points.shape[0]
    cdef Py_ssize_t d = points.shape[1]
    cdef Py_ssize_t i, j, k, m, slot, ci, nnb
    cdef long long q[3]
    cdef long long qq, key
    cdef double best, d2, diff, cell2 = cell * cell
    cdef long long best_idx
    cdef int off[3]
    cdef bint ok
    cdef bint dense = table.shape[0] > 0
    out = np.full(n, -1, dtype=np.int64)
    cdef long long[:] res = out
    if d > 3:
        raise ValueError("nearest_center supports d <= 3")
    nnb = 1
    for j in range(d):
        nnb *= 3
    with nogil:
        for i in range(n):
            for j in range(d):
                q[j] = <long long> floor((points[i, j] - origin[j]) / cell)
            best = cell2
            best_idx = -1
            for m in range(nnb):
                k = m
                ok = True
                key = 0
                for j in range(d):
                    off[j] = <int> (k % 3) - 1
                    k = k // 3
                    qq = q[j] + off[j]
                    if qq < 0 or qq >= dims[j]:
                        ok = False
                        break
                    key += qq * strides[j]
                if not ok:
                    continue
                if dense:
                    slot = table[key]
                else:
                    slot = _bsearch(keys, key)
                if slot < 0:
                    continue
                for ci in range(starts[slot], starts[slot + 1]):
                    d2 = 0.0
                    for j in range(d):
                        diff = points[i, j] - centers[order[ci], j]
                        d2 = d2 + diff * diff
                    if d2 < best or (d2 == best and best_idx >= 0 and order[ci] < best_idx):
                        best = d2
                        best_idx = order[ci]
            res[i] = best_idx
    return out


def disk_counts(const unsigned char[:] mask,
                const long long[:] shape,
                const long long[:, :] queries,
                const long long[:, :] offsets):
    """Count raster hits and in-grid cells over ``query + offsets``.

    ``mask`` is the C-ordered flattening of a d-dimensional raster of the
    given ``shape``. Returns ``(hits, cells)`` as int64 arrays.

    Offsets are merged into runs along the last axis and each run is
    summed from row prefix sums, so a digital ball of radius r costs
    O(r^(d-1)) per query.
    """
    cdef Py_ssize_t nq = queries.shape[0]
    cdef Py_ssize_t d = queries.shape[1]
    cdef Py_ssize_t i, j, u, nrun
    cdef long long row, c, lo, hi, last = shape[d - 1]
    cdef long long h, t
    cdef bint inside
    hits_arr = np.zeros(nq, dtype=np.int64)
    cells_arr = np.zeros(nq, dtype=np.int64)
    cdef long long[:] hits = hits_arr
    cdef long long[:] cells = cells_arr
    if offsets.shape[0] == 0 or nq == 0:
        return hits_arr, cells_arr
    runs_np = _runs(np.asarray(offsets))
    cdef long long[:, :] runs = runs_np
    nrun = runs.shape[0]
    n_rows = 1
    for j in range(d - 1):
        n_rows *= shape[j]
    prefix_np = np.zeros((n_rows, last + 1), dtype=np.int64)
    np.cumsum(np.asarray(mask).reshape(n_rows, last), axis=1, out=prefix_np[:, 1:])
    cdef long long[:, :] prefix = prefix_np
    with nogil:
        for i in range(nq):
            h = 0
            t = 0
            for u in range(nrun):
                row = 0
                inside = True
                for j in range(d - 1):
                    c = queries[i, j] + runs[u, j]
                    if c < 0 or c >= shape[j]:
                        inside = False
                        break
                    row = row * shape[j] + c
                if not inside:
                    continue
                lo = queries[i, d - 1] + runs[u, d - 1]
                hi = queries[i, d - 1] + runs[u, d]
                if lo < 0:
                    lo = 0
                if hi > last - 1:
                    hi = last - 1
                if lo > hi:
                    continue
                t += hi - lo + 1
                h += prefix[row, hi + 1] - prefix[row, lo]
            hits[i] = h
            cells[i] = t
    return hits_arr, cells_arr


def _runs(offsets):
    """Maximal runs ``(*leading, first, last)`` of offsets along the last axis."""
    offsets = np.unique(offsets, axis=0)
    d = offsets.shape[1]
    lead, tail = offsets[:, :-1], offsets[:, -1]
    brk = np.ones(len(offsets), dtype=bool)
    if len(offsets) > 1:
        same = np.all(lead[1:] == lead[:-1], axis=1) & (tail[1:] == tail[:-1] + 1)
        brk[1:] = ~same
    starts = np.flatnonzero(brk)
    ends = np.append(starts[1:], len(offsets)) - 1
    out = np.empty((len(starts), d + 1), dtype=np.int64)
    out[:, :d - 1] = lead[starts]
    out[:, d - 1] = tail[starts]
    out[:, d] = tail[ends]
    return out
