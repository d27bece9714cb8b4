"""Backend selection for the hot kernels.

The compiled ``_core`` extension is used when it imports; otherwise the
numpy fallback. Set ``NONLOCAL_GEOM_BACKEND=python`` to force the fallback
(``=compiled`` makes a missing extension an error).
"""
import logging
import os

import numpy as np

from . import _fallback

logger = logging.getLogger(__name__)

DENSE_TABLE_LIMIT = 1 << 22

_requested = os.environ.get("NONLOCAL_GEOM_BACKEND", "auto").lower()

if _requested == "python":
    _impl = _fallback
    BACKEND = "python"
else:
    try:
        from . import _core as _impl

        BACKEND = "compiled"
    except ImportError:
        if _requested == "compiled":
            raise
        logger.info("compiled core unavailable, using numpy fallback")
        _impl = _fallback
        BACKEND = "python"


def backends():
    """Available kernel modules keyed by name (used by the benchmark)."""
    out = {"python": _fallback}
    try:
        from . import _core

        out["compiled"] = _core
    except ImportError:
        pass
    return out


class CenterIndex:
    """Spatial hash over equal-radius ball centres.

    ``nearest(points)`` returns the index of the nearest centre closer than
    ``cell`` or -1.
    """

    def __init__(self, centers, cell, impl=None):
        self.centers = np.ascontiguousarray(centers, dtype=float)
        self.cell = float(cell)
        self.impl = impl or _impl
        d = self.centers.shape[1]
        if len(self.centers):
            self.origin = self.centers.min(axis=0) - self.cell
            q = np.floor((self.centers - self.origin) / self.cell).astype(np.int64)
            self.dims = q.max(axis=0) + 2
        else:
            self.origin = np.zeros(d)
            q = np.zeros((0, d), dtype=np.int64)
            self.dims = np.ones(d, dtype=np.int64)
        strides = np.ones(d, dtype=np.int64)
        for j in range(d - 2, -1, -1):
            strides[j] = strides[j + 1] * self.dims[j + 1]
        self.strides = strides
        key = q @ strides if len(q) else np.zeros(0, dtype=np.int64)
        self.order = np.argsort(key, kind="stable").astype(np.int64)
        sorted_keys = key[self.order]
        self.keys, first = np.unique(sorted_keys, return_index=True)
        self.keys = self.keys.astype(np.int64)
        self.starts = np.append(first, len(sorted_keys)).astype(np.int64)
        n_cells = int(np.prod(self.dims))
        if n_cells <= DENSE_TABLE_LIMIT:
            self.table = np.full(n_cells, -1, dtype=np.int32)
            self.table[self.keys] = np.arange(len(self.keys), dtype=np.int32)
        else:
            self.table = np.zeros(0, dtype=np.int32)

    def nearest(self, points):
        points = np.ascontiguousarray(points, dtype=float)
        if points.ndim == 1:
            points = points[None, :]
        return self.impl.nearest_center(points, self.centers, self.origin, self.cell,
                                        self.dims, self.strides, self.keys, self.starts,
                                        self.order, self.table)


def disk_counts(mask, queries, offsets, impl=None):
    """Raster hits and in-grid cells inside digital balls around ``queries``."""
    impl = impl or _impl
    mask = np.asarray(mask)
    flat = np.ascontiguousarray(mask.reshape(-1), dtype=np.uint8)
    shape = np.asarray(mask.shape, dtype=np.int64)
    return impl.disk_counts(flat, shape,
                            np.ascontiguousarray(queries, dtype=np.int64),
                            np.ascontiguousarray(offsets, dtype=np.int64))
