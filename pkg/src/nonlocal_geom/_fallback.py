"""Numpy/scipy implementations of the compiled kernels in ``_core``.

Same signatures, same results. Used when the extension is not built or
when ``NONLOCAL_GEOM_BACKEND=python``.
"""
import numpy as np
from scipy.signal import fftconvolve
from scipy.spatial import cKDTree


def nearest_center(points, centers, origin, cell, dims, strides, keys, starts, order, table):
    """Index of the nearest centre within distance ``cell`` (-1 if none)."""
    points = np.asarray(points, dtype=float)
    centers = np.asarray(centers, dtype=float)
    if len(centers) == 0:
        return np.full(len(points), -1, dtype=np.int64)
    tree = cKDTree(centers)
    dist, idx = tree.query(points, k=1, distance_upper_bound=cell)
    idx = np.where(np.isfinite(dist), idx, -1).astype(np.int64)
    return idx


def disk_counts(mask, shape, queries, offsets):
    """Count raster hits and in-grid cells over ``query + offsets``."""
    shape = tuple(int(v) for v in shape)
    grid = np.asarray(mask, dtype=np.float64).reshape(shape)
    offsets = np.asarray(offsets, dtype=np.int64)
    queries = np.asarray(queries, dtype=np.int64)
    m = int(np.abs(offsets).max()) if len(offsets) else 0
    stencil = np.zeros((2 * m + 1,) * len(shape))
    stencil[tuple((offsets + m).T)] = 1.0
    # correlation == convolution with the flipped stencil
    flipped = stencil[(slice(None, None, -1),) * len(shape)]
    hits_full = fftconvolve(grid, flipped, mode="full")
    cells_full = fftconvolve(np.ones(shape), flipped, mode="full")
    idx = queries + m
    inside = np.all((idx >= 0) & (idx < np.asarray(hits_full.shape)), axis=1)
    at = tuple(idx[inside].T)
    hits = np.zeros(len(queries), dtype=np.int64)
    cells = np.zeros(len(queries), dtype=np.int64)
    # beyond the padded grid no offset lands in the raster
    hits[inside] = np.rint(hits_full[at]).astype(np.int64)
    cells[inside] = np.rint(cells_full[at]).astype(np.int64)
    return hits, cells
