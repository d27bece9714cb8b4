import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from nonlocal_geom import _accel, _fallback
from nonlocal_geom.density import sparse_point_measure
from nonlocal_geom.sets import SparseDust, UnionOfBoxes

IMPLS = _accel.backends()
compiled = pytest.mark.skipif("compiled" not in IMPLS, reason="compiled core not built")


def _brute_nearest(points, centers, cell):
    out = np.full(len(points), -1)
    for i, p in enumerate(points):
        dist = np.linalg.norm(centers - p, axis=1)
        j = int(np.argmin(dist)) if len(dist) else -1
        if j >= 0 and dist[j] < cell:
            out[i] = j
    return out


@pytest.mark.parametrize("name", sorted(IMPLS))
def test_nearest_matches_brute_force(name):
    rng = np.random.default_rng(0)
    centers = rng.uniform(-1, 1, (300, 2))
    pts = rng.uniform(-1.2, 1.2, (2000, 2))
    idx = _accel.CenterIndex(centers, 0.05, impl=IMPLS[name])
    got = idx.nearest(pts)
    ref = _brute_nearest(pts, centers, 0.05)
    hit = ref >= 0
    assert np.array_equal(got >= 0, hit)
    # ties aside, the chosen centre is the nearest one
    d_got = np.linalg.norm(centers[got[hit]] - pts[hit], axis=1)
    d_ref = np.linalg.norm(centers[ref[hit]] - pts[hit], axis=1)
    assert np.allclose(d_got, d_ref)


@compiled
@settings(max_examples=25)
@given(seed=st.integers(0, 10_000), side=st.integers(8, 40), radius=st.integers(0, 6))
def test_disk_counts_backends_agree(seed, side, radius):
    rng = np.random.default_rng(seed)
    mask = rng.random((side, side)) < 0.2
    queries = rng.integers(-3, side + 3, (50, 2))
    span = np.arange(-radius, radius + 1)
    grid = np.stack(np.meshgrid(span, span, indexing="ij"), -1).reshape(-1, 2)
    offsets = grid[np.linalg.norm(grid, axis=1) <= radius]
    a = _accel.disk_counts(mask, queries, offsets, impl=IMPLS["compiled"])
    b = _accel.disk_counts(mask, queries, offsets, impl=_fallback)
    for u, v in zip(a, b):
        assert np.array_equal(np.asarray(u), np.asarray(v))


def test_disk_counts_brute_force():
    rng = np.random.default_rng(5)
    mask = rng.random((20, 20)) < 0.3
    queries = np.array([[0, 0], [10, 10], [19, 3], [25, 25]])
    offsets = np.array([[i, j] for i in range(-3, 4) for j in range(-3, 4) if i * i + j * j <= 9])
    for impl in IMPLS.values():
        hits, cells = _accel.disk_counts(mask, queries, offsets, impl=impl)
        for q, h, c in zip(queries, hits, cells):
            pts = q + offsets
            ok = np.all((pts >= 0) & (pts < 20), axis=1)
            assert c == ok.sum()
            assert h == mask[pts[ok, 0], pts[ok, 1]].sum()


@compiled
def test_dust_lookup_backends_agree():
    dust = SparseDust(2, 0.01, 2.0 ** -8, seed=7)
    pts = np.random.default_rng(2).uniform(-1, 1, (20_000, 2))
    a = _accel.CenterIndex(dust.centers, dust.cell, impl=IMPLS["compiled"]).nearest(pts)
    b = _accel.CenterIndex(dust.centers, dust.cell, impl=_fallback).nearest(pts)
    assert np.array_equal(a >= 0, b >= 0)


@compiled
def test_sparse_raster_backends_agree():
    E = UnionOfBoxes(2, [[0.1, 0.1], [-0.3, 0.05]], [[0.2, 0.3], [-0.1, 0.1]])
    a = sparse_point_measure(E, 1.0, 0.05, 1 / 128, method="raster", impl=IMPLS["compiled"])
    b = sparse_point_measure(E, 1.0, 0.05, 1 / 128, method="raster", impl=_fallback)
    assert a.n_qualified == b.n_qualified


def test_backend_name():
    assert _accel.BACKEND in ("compiled", "python")
