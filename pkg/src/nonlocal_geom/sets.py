"""Borel sets given by exact membership predicates.

A :class:`RegionSet` answers, for a batch of points, whether each point is
inside, outside or on the boundary, and provides a sign field that is
negative inside and positive outside. Membership is derived from the sign
field with a rounding band of ``BOUNDARY_RTOL * (1 + |x|)`` so that points
produced by the boundary samplers classify as boundary points.

Classification is returned as the signed indicator ``chi~ = chi_{E^c} - chi_E``:
``-1`` inside, ``+1`` outside, ``0`` on the boundary.
"""
from __future__ import annotations

import enum
import logging
import math
from dataclasses import dataclass, field

import numpy as np
from scipy import special
from scipy.stats import qmc

from ._accel import CenterIndex

logger = logging.getLogger(__name__)

BOUNDARY_RTOL = 1e-12
MIN_RADIUS_OCTAVES = 24
RADIUS_SAFETY = 0.99

CANONICAL_NAMES = ("halfSpace", "ball", "ballComplement", "slab", "periodicSlab",
                   "coneSector", "sparseDust")


class SetError(ValueError):
    pass


class Membership(enum.IntEnum):
    INSIDE = -1
    BOUNDARY = 0
    OUTSIDE = 1


def unit_ball_volume(d):
    return math.pi ** (d / 2) / math.gamma(d / 2 + 1)


def unit_sphere_area(d):
    """Surface measure of the unit sphere in R^d (2 for d = 1)."""
    return d * unit_ball_volume(d)


def ball_volume(d, r):
    return unit_ball_volume(d) * r ** d


def cap_volume(d, radius, height):
    """Volume of the cap of height ``height`` cut from a d-ball (vectorised)."""
    radius = np.asarray(radius, dtype=float)
    h = np.clip(np.asarray(height, dtype=float), 0.0, 2 * radius)
    full = unit_ball_volume(d) * radius ** d
    small = np.minimum(h, 2 * radius - h)
    with np.errstate(divide="ignore", invalid="ignore"):
        x = np.where(radius > 0, (2 * radius * small - small * small) / radius ** 2, 0.0)
    part = 0.5 * full * special.betainc((d + 1) / 2, 0.5, np.clip(x, 0.0, 1.0))
    return np.where(h <= radius, part, full - part)


def ball_intersection_volume(d, r1, r2, dist):
    """Exact volume of ``B_r1(a) & B_r2(b)`` with ``|a - b| = dist`` (vectorised)."""
    r1 = np.asarray(r1, dtype=float)
    r2 = np.asarray(r2, dtype=float)
    t = np.asarray(dist, dtype=float)
    r1, r2, t = np.broadcast_arrays(r1, r2, t)
    out = np.zeros(t.shape)
    rmin = np.minimum(r1, r2)
    nested = t <= np.abs(r1 - r2)
    out = np.where(nested, unit_ball_volume(d) * rmin ** d, out)
    lens = (~nested) & (t < r1 + r2)
    if np.any(lens):
        tt, a, b = t[lens], r1[lens], r2[lens]
        c1 = (tt * tt + a * a - b * b) / (2 * tt)
        h1 = a - c1
        h2 = b - (tt - c1)
        out[lens] = cap_volume(d, a, h1) + cap_volume(d, b, h2)
    return out


def _as_points(x, d):
    pts = np.asarray(x, dtype=float)
    if pts.ndim == 1:
        pts = pts.reshape(1, d)
    if pts.shape[1] != d:
        raise SetError(f"expected points of dimension {d}, got shape {pts.shape}")
    return pts


def uniform_in_ball(rng, n, d, center, radius):
    g = rng.standard_normal((n, d))
    g /= np.linalg.norm(g, axis=1)[:, None]
    rad = radius * rng.random(n) ** (1.0 / d)
    return np.asarray(center, dtype=float) + g * rad[:, None]


def unit_vectors(rng, n, d):
    g = rng.standard_normal((n, d))
    return g / np.linalg.norm(g, axis=1)[:, None]


@dataclass(frozen=True)
class SymmetryTag:
    """Reflection across ``{x : x . normal = offset}``.

    ``swaps`` is True when the reflection exchanges E and its complement.
    """
    normal: tuple
    offset: float
    swaps: bool

    def reflect(self, points):
        n = np.asarray(self.normal, dtype=float)
        n = n / np.linalg.norm(n)
        t = points @ n - self.offset
        return points - 2.0 * t[:, None] * n[None, :]


class RegionSet:
    """Base class: subclasses implement :meth:`sign_field`.

    Attributes
    ----------
    dim : int
    name : str
        canonical name (or a wrapper name such as ``complement``).
    params : dict
        JSON-serialisable parameters.
    feature_scale : float
        smallest geometric length of the set (``inf`` for a half-space).
    bounds : tuple or None
        ``(center, radius, far_sign)``: outside ``B_radius(center)`` the
        signed indicator is the constant ``far_sign``.
    """

    name = "region"
    sign_is_distance = True

    def __init__(self, dim, params=None):
        self.dim = int(dim)
        if self.dim < 1:
            raise SetError("dimension must be positive")
        self.params = dict(params or {})
        self.feature_scale = math.inf
        self.bounds = None
        self.symmetry_tags = ()

    # -- membership --------------------------------------------------------
    def sign_field(self, points):
        raise NotImplementedError

    def classify(self, points):
        pts = _as_points(points, self.dim)
        sgn = self.sign_field(pts)
        tol = BOUNDARY_RTOL * (1.0 + np.max(np.abs(pts), axis=1))
        out = np.zeros(len(pts), dtype=np.int8)
        out[sgn > tol] = 1
        out[sgn < -tol] = -1
        return out

    def membership(self, x):
        return Membership(int(self.classify(x)[0]))

    def complement(self):
        return Complement(self)

    def scaled(self, factor):
        return Scaled(self, factor)

    # -- geometry helpers ---------------------------------------------------
    def reference_point(self):
        """A canonical boundary point (the default evaluation point)."""
        return np.zeros(self.dim)

    def exact_volume_in_ball(self, center, radius):
        """``|E & B_radius(center)|`` when known in closed form, else None."""
        return None

    def exact_volumes(self, centers, radius):
        """Vectorised :meth:`exact_volume_in_ball` over many centres, or None."""
        centers = _as_points(centers, self.dim)
        if len(centers) == 0:
            return np.zeros(0)
        first = self.exact_volume_in_ball(centers[0], radius)
        if first is None:
            return None
        return np.array([first] + [self.exact_volume_in_ball(c, radius) for c in centers[1:]])

    def sample_boundary(self, rng, n, center=None, radius=1.0):
        """Up to ``n`` boundary points inside ``B_radius(center)``.

        Generic version: bisect segments between uniformly drawn inside and
        outside points.
        """
        center = np.zeros(self.dim) if center is None else np.asarray(center, dtype=float)
        found = []
        for _ in range(50):
            a = uniform_in_ball(rng, 4 * n, self.dim, center, radius)
            b = uniform_in_ball(rng, 4 * n, self.dim, center, radius)
            ca, cb = self.classify(a), self.classify(b)
            sel = (ca * cb) < 0
            a, b, ca = a[sel], b[sel], ca[sel]
            if len(a) == 0:
                continue
            lo = np.where((ca < 0)[:, None], a, b)
            hi = np.where((ca < 0)[:, None], b, a)
            for _ in range(80):
                mid = 0.5 * (lo + hi)
                cm = self.classify(mid)
                if np.all(cm == 0):
                    break
                lo = np.where((cm < 0)[:, None], mid, lo)
                hi = np.where((cm > 0)[:, None], mid, hi)
            mid = 0.5 * (lo + hi)
            ok = self.classify(mid) == 0
            found.extend(mid[ok])
            if len(found) >= n:
                break
        return np.array(found[:n]).reshape(-1, self.dim)

    def descriptor(self):
        return {"name": self.name, "params": _jsonable(self.params), "dim": self.dim}

    def label(self):
        inner = ",".join(f"{k}={_short(v)}" for k, v in sorted(self.params.items()))
        return f"{self.name}({inner})"

    def __repr__(self):
        return f"<{self.label()} d={self.dim}>"


def _short(v):
    if isinstance(v, (list, tuple, np.ndarray)):
        return "[" + ";".join(f"{float(t):g}" for t in np.ravel(v)) + "]"
    if isinstance(v, float):
        return f"{v:g}"
    return str(v)


def _jsonable(params):
    out = {}
    for k, v in params.items():
        if isinstance(v, np.ndarray):
            out[k] = v.tolist()
        elif isinstance(v, (np.floating, np.integer)):
            out[k] = v.item()
        else:
            out[k] = v
    return out


def tilde_chi(E, x):
    """Signed indicator at a single point: -1 inside, 0 boundary, +1 outside."""
    return int(E.classify(x)[0])


# ---------------------------------------------------------------------------
# canonical sets
# ---------------------------------------------------------------------------
def _unit(v, d):
    v = np.asarray(v, dtype=float).reshape(d)
    nrm = np.linalg.norm(v)
    if not nrm > 0:
        raise SetError("normal/axis vector must be non-zero")
    return v / nrm


class HalfSpace(RegionSet):
    """``{x : x . normal < offset}``."""

    name = "halfSpace"

    def __init__(self, dim, normal=None, offset=0.0):
        normal = np.eye(dim)[0] if normal is None else normal
        super().__init__(dim, {"normal": list(np.asarray(normal, float)), "offset": float(offset)})
        self.normal = _unit(normal, dim)
        self.offset = float(offset)
        self.symmetry_tags = (SymmetryTag(tuple(self.normal), self.offset, True),)

    def sign_field(self, points):
        return points @ self.normal - self.offset

    def reference_point(self):
        return self.offset * self.normal

    def exact_volume_in_ball(self, center, radius):
        h = float(np.dot(center, self.normal) - self.offset)
        # E occupies the cap on the negative side: height radius - h
        return float(cap_volume(self.dim, radius, radius - h))

    def sample_boundary(self, rng, n, center=None, radius=1.0):
        center = np.zeros(self.dim) if center is None else np.asarray(center, float)
        h = float(center @ self.normal - self.offset)
        if abs(h) >= radius:
            return np.zeros((0, self.dim))
        foot = center - h * self.normal
        rad = math.sqrt(radius * radius - h * h)
        if self.dim == 1:
            return np.repeat(foot[None, :], n, axis=0)
        g = rng.standard_normal((n, self.dim))
        g -= (g @ self.normal)[:, None] * self.normal[None, :]
        g /= np.linalg.norm(g, axis=1)[:, None]
        t = rad * rng.random(n) ** (1.0 / (self.dim - 1))
        pts = foot + g * t[:, None]
        # project exactly onto the plane to stay inside the rounding band
        pts -= (pts @ self.normal - self.offset)[:, None] * self.normal[None, :]
        return pts


class Ball(RegionSet):
    """Open ball ``B_radius(center)``."""

    name = "ball"

    def __init__(self, dim, center=None, radius=1.0):
        center = np.zeros(dim) if center is None else np.asarray(center, float).reshape(dim)
        if not radius > 0:
            raise SetError("radius must be positive")
        super().__init__(dim, {"center": list(center), "radius": float(radius)})
        self.center = center
        self.radius = float(radius)
        self.feature_scale = self.radius
        self.bounds = (self.center, self.radius, 1)
        self.symmetry_tags = tuple(SymmetryTag(tuple(e), float(e @ center), False)
                                   for e in np.eye(dim))

    def sign_field(self, points):
        return np.linalg.norm(points - self.center, axis=1) - self.radius

    def reference_point(self):
        return self.center - self.radius * np.eye(self.dim)[0]

    def exact_volume_in_ball(self, center, radius):
        t = float(np.linalg.norm(np.asarray(center, float) - self.center))
        return float(ball_intersection_volume(self.dim, self.radius, radius, t))

    def exact_volumes(self, centers, radius):
        t = np.linalg.norm(_as_points(centers, self.dim) - self.center, axis=1)
        return ball_intersection_volume(self.dim, self.radius, radius, t)

    def sample_boundary(self, rng, n, center=None, radius=math.inf):
        out = []
        for _ in range(200):
            pts = self.center + self.radius * unit_vectors(rng, 4 * n, self.dim)
            if center is not None and math.isfinite(radius):
                pts = pts[np.linalg.norm(pts - np.asarray(center, float), axis=1) < radius]
            out.extend(pts)
            if len(out) >= n:
                break
        return np.array(out[:n]).reshape(-1, self.dim)


class BallComplement(Ball):
    """``R^d`` minus the closed ball ``B_radius(center)``."""

    name = "ballComplement"

    def __init__(self, dim, center=None, radius=1.0):
        super().__init__(dim, center, radius)
        self.bounds = (self.center, self.radius, -1)

    def sign_field(self, points):
        return self.radius - np.linalg.norm(points - self.center, axis=1)

    def exact_volume_in_ball(self, center, radius):
        return ball_volume(self.dim, radius) - super().exact_volume_in_ball(center, radius)

    def exact_volumes(self, centers, radius):
        return ball_volume(self.dim, radius) - super().exact_volumes(centers, radius)


class Slab(RegionSet):
    """``{lower < x_axis < lower + width}``."""

    name = "slab"

    def __init__(self, dim, width=1.0, axis=0, lower=0.0):
        if not width > 0:
            raise SetError("slab width must be positive")
        super().__init__(dim, {"width": float(width), "axis": int(axis), "lower": float(lower)})
        self.width, self.axis, self.lower = float(width), int(axis), float(lower)
        self.feature_scale = self.width
        mid = self.lower + 0.5 * self.width
        e = np.eye(dim)[self.axis]
        self.symmetry_tags = (SymmetryTag(tuple(e), mid, False),)
        if dim == 1:
            self.bounds = (np.array([mid]), 0.5 * self.width, 1)

    def sign_field(self, points):
        mid = self.lower + 0.5 * self.width
        return np.abs(points[:, self.axis] - mid) - 0.5 * self.width

    def reference_point(self):
        p = np.zeros(self.dim)
        p[self.axis] = self.lower
        return p

    def exact_volume_in_ball(self, center, radius):
        c = float(center[self.axis])
        lo, hi = self.lower - c, self.lower + self.width - c
        # |{lo < t < hi} & B_r| = cap(r - lo) - cap(r - hi) for the cap {t > .}
        return float(cap_volume(self.dim, radius, radius - lo) - cap_volume(self.dim, radius, radius - hi))

    def sample_boundary(self, rng, n, center=None, radius=1.0):
        return _sample_planes(self, rng, n, center, radius,
                              lambda t: np.where(np.abs(t - self.lower) <= np.abs(t - self.lower - self.width),
                                                 self.lower, self.lower + self.width))


def _sample_planes(E, rng, n, center, radius, snap):
    center = np.zeros(E.dim) if center is None else np.asarray(center, float)
    out = []
    for _ in range(200):
        pts = uniform_in_ball(rng, 4 * n, E.dim, center, radius)
        pts[:, E.axis] = snap(pts[:, E.axis])
        pts = pts[np.linalg.norm(pts - center, axis=1) < radius]
        pts = pts[E.classify(pts) == 0]
        out.extend(pts)
        if len(out) >= n:
            break
    return np.array(out[:n]).reshape(-1, E.dim)


class PeriodicSlab(RegionSet):
    """Alternating slabs ``x_axis in (2k delta, (2k+1) delta)``, k integer."""

    name = "periodicSlab"

    def __init__(self, dim, delta, axis=0):
        if not delta > 0:
            raise SetError("periodicSlab needs delta > 0")
        super().__init__(dim, {"delta": float(delta), "axis": int(axis)})
        self.delta, self.axis = float(delta), int(axis)
        self.feature_scale = self.delta
        e = tuple(np.eye(dim)[self.axis])
        self.symmetry_tags = (SymmetryTag(e, 0.0, True), SymmetryTag(e, self.delta, True))

    def sign_field(self, points):
        t = points[:, self.axis] / self.delta
        k = np.floor(t)
        frac = t - k
        dist = np.minimum(frac, 1.0 - frac) * self.delta
        even = (k % 2) == 0
        return np.where(even, -dist, dist)

    def exact_volume_in_ball(self, center, radius):
        c = float(center[self.axis])
        k0 = math.floor((c - radius) / (2 * self.delta)) - 1
        k1 = math.ceil((c + radius) / (2 * self.delta)) + 1
        ks = np.arange(k0, k1 + 1)
        lo = 2 * ks * self.delta - c
        hi = lo + self.delta
        caps = cap_volume(self.dim, radius, radius - lo) - cap_volume(self.dim, radius, radius - hi)
        return float(np.sum(caps))

    def sample_boundary(self, rng, n, center=None, radius=1.0):
        return _sample_planes(self, rng, n, center, radius,
                              lambda t: np.round(t / self.delta) * self.delta)


class ConeSector(RegionSet):
    """``{x : angle(x - apex, axis) < half_angle}`` (d >= 2)."""

    name = "coneSector"

    def __init__(self, dim, apex=None, axis=None, half_angle=math.pi / 4):
        if dim < 2:
            raise SetError("coneSector needs d >= 2")
        if not 0 < half_angle < math.pi:
            raise SetError("half_angle must lie in (0, pi)")
        apex = np.zeros(dim) if apex is None else np.asarray(apex, float).reshape(dim)
        axis = np.eye(dim)[0] if axis is None else axis
        super().__init__(dim, {"apex": list(apex), "axis": list(np.asarray(axis, float)),
                               "half_angle": float(half_angle)})
        self.apex, self.axis_vec, self.half_angle = apex, _unit(axis, dim), float(half_angle)

    def sign_field(self, points):
        p = points - self.apex
        rho = np.linalg.norm(p, axis=1)
        with np.errstate(invalid="ignore", divide="ignore"):
            cosphi = np.where(rho > 0, (p @ self.axis_vec) / rho, 1.0)
        phi = np.arccos(np.clip(cosphi, -1.0, 1.0))
        diff = phi - self.half_angle
        dist = np.where(np.abs(diff) <= math.pi / 2, rho * np.sin(np.abs(diff)), rho)
        return np.sign(diff) * dist

    def reference_point(self):
        return self.apex.copy()

    def sample_boundary(self, rng, n, center=None, radius=1.0):
        center = self.apex if center is None else np.asarray(center, float)
        out = []
        for _ in range(200):
            u = rng.standard_normal((4 * n, self.dim))
            u -= (u @ self.axis_vec)[:, None] * self.axis_vec[None, :]
            u /= np.linalg.norm(u, axis=1)[:, None]
            gen = math.cos(self.half_angle) * self.axis_vec + math.sin(self.half_angle) * u
            t = (np.linalg.norm(center - self.apex) + radius) * rng.random(4 * n)
            pts = self.apex + gen * t[:, None]
            pts = pts[np.linalg.norm(pts - center, axis=1) < radius]
            pts = pts[self.classify(pts) == 0]
            out.extend(pts)
            if len(out) >= n:
                break
        return np.array(out[:n]).reshape(-1, self.dim)


class EmptySet(RegionSet):
    name = "empty"

    def __init__(self, dim):
        super().__init__(dim)
        self.bounds = (np.zeros(dim), 0.0, 1)

    def sign_field(self, points):
        return np.full(len(points), math.inf)

    def exact_volume_in_ball(self, center, radius):
        return 0.0

    def exact_volumes(self, centers, radius):
        return np.zeros(len(_as_points(centers, self.dim)))

    def sample_boundary(self, rng, n, center=None, radius=1.0):
        return np.zeros((0, self.dim))


class UnionOfBalls(RegionSet):
    """Finite union of open balls of a common radius.

    Exact volumes add up the balls, so they overcount where balls overlap.
    """

    name = "unionOfBalls"

    def __init__(self, dim, centers, radius, cell=None, params=None):
        centers = np.asarray(centers, dtype=float).reshape(-1, dim)
        super().__init__(dim, params if params is not None else
                         {"centers": centers.tolist(), "radius": float(radius)})
        self.centers = centers
        self.radius = float(radius)
        self.feature_scale = self.radius
        self.cell = float(cell) if cell else 4.0 * self.radius
        self.index = CenterIndex(self.centers, self.cell)
        if len(centers):
            c0 = centers.mean(axis=0)
            rad = float(np.max(np.linalg.norm(centers - c0, axis=1))) + self.radius
            self.bounds = (c0, rad, 1)
        else:
            self.bounds = (np.zeros(dim), 0.0, 1)

    def sign_field(self, points):
        idx = self.index.nearest(points)
        found = idx >= 0
        dist = np.full(len(points), self.cell)
        if np.any(found):
            diff = points[found] - self.centers[idx[found]]
            acc = np.zeros(len(diff))
            for j in range(self.dim):
                acc += diff[:, j] * diff[:, j]
            dist[found] = np.sqrt(acc)
        return dist - self.radius

    def reference_point(self):
        return self.centers[0] - self.radius * np.eye(self.dim)[0]

    def exact_volume_in_ball(self, center, radius):
        if len(self.centers) == 0:
            return 0.0
        t = np.linalg.norm(self.centers - np.asarray(center, float), axis=1)
        near = t < radius + self.radius
        return float(np.sum(ball_intersection_volume(self.dim, self.radius, radius, t[near])))

    def exact_volumes(self, centers, radius):
        centers = _as_points(centers, self.dim)
        out = np.zeros(len(centers))
        for lo in range(0, len(self.centers), 256):
            block = self.centers[lo:lo + 256]
            t = np.linalg.norm(centers[:, None, :] - block[None, :, :], axis=2)
            out += ball_intersection_volume(self.dim, self.radius, radius, t).sum(axis=1)
        return out

    def sample_boundary(self, rng, n, center=None, radius=math.inf):
        cs = self.centers
        if center is not None and math.isfinite(radius):
            cs = cs[np.linalg.norm(cs - np.asarray(center, float), axis=1) < radius - self.radius]
        if len(cs) == 0:
            return np.zeros((0, self.dim))
        pick = rng.integers(0, len(cs), n)
        return cs[pick] + self.radius * unit_vectors(rng, n, self.dim)


class SparseDust(UnionOfBalls):
    """Greedy dust of tiny equal balls that is sparse at every scale.

    Grains of radius ``rho = (scale/2) * target**(1/d)`` are placed at
    scrambled-Halton points of ``B_R`` and kept only if, for every grain
    centre ``c`` and every dyadic ``r >= scale/2``, the number of grains
    within ``6r + rho`` of ``c`` stays below ``target * (r/rho)**d``.
    Since any ball ``B_r(y)`` meeting the dust lies in ``B_{3r}(c)`` for some
    centre ``c``, this certifies ``|E & B_r(y)| <= target |B_r|`` for every
    ``y`` and every ``r >= scale/2``.
    """

    name = "sparseDust"

    def __init__(self, dim, target, scale, seed=0, R=1.0, max_grains=400, candidates=None):
        if not 0.0 < target < 1.0:
            raise SetError("density target must lie in (0, 1)")
        if not scale > 0:
            raise SetError("feature scale must be positive")
        rho = 0.5 * scale * target ** (1.0 / dim) * (1 - 1e-9)
        levels = []
        r = 0.5 * scale
        while True:
            levels.append(r)
            if r >= 2.0 * R:
                break
            r *= 2.0
        levels = np.array(levels)
        caps = target * (levels / rho) ** dim
        reach = 6.0 * levels + rho
        n_cand = int(candidates or 30 * max_grains)
        sampler = qmc.Halton(d=dim, scramble=True, seed=seed)
        cand = (2.0 * sampler.random(n_cand) - 1.0) * R
        cand = cand[np.linalg.norm(cand, axis=1) < R - rho]
        centers = np.zeros((0, dim))
        counts = np.zeros((0, len(levels)), dtype=np.int64)
        for c in cand:
            if len(centers) >= max_grains:
                break
            dist = np.linalg.norm(centers - c, axis=1) if len(centers) else np.zeros(0)
            nbr = dist[:, None] < reach[None, :]
            own = nbr.sum(axis=0) + 1
            if np.any(own > caps):
                continue
            if len(centers) and np.any((counts + 1 > caps[None, :]) & nbr):
                continue
            counts = counts + nbr.astype(np.int64)
            centers = np.vstack([centers, c])
            counts = np.vstack([counts, own])
        params = {"target": float(target), "scale": float(scale), "seed": int(seed),
                  "R": float(R), "max_grains": int(max_grains)}
        super().__init__(dim, centers, rho, cell=max(scale, 4 * rho), params=params)
        self.target, self.scale, self.R = float(target), float(scale), float(R)
        self.feature_scale = self.scale
        self.curvature_scale = rho
        self.grain_radius = rho
        self.levels = levels
        logger.debug("sparseDust: %d grains of radius %.3g", len(centers), rho)


class Complement(RegionSet):
    name = "complement"

    def __init__(self, inner):
        super().__init__(inner.dim, {"of": inner.descriptor()})
        self.inner = inner
        self.feature_scale = inner.feature_scale
        if inner.bounds is not None:
            c, r, s = inner.bounds
            self.bounds = (c, r, -s)
        self.symmetry_tags = inner.symmetry_tags

    def sign_field(self, points):
        return -self.inner.sign_field(points)

    def complement(self):
        return self.inner

    def reference_point(self):
        return self.inner.reference_point()

    def exact_volume_in_ball(self, center, radius):
        v = self.inner.exact_volume_in_ball(center, radius)
        return None if v is None else ball_volume(self.dim, radius) - v

    def sample_boundary(self, rng, n, center=None, radius=1.0):
        return self.inner.sample_boundary(rng, n, center, radius)

    def label(self):
        return f"complement({self.inner.label()})"


class Scaled(RegionSet):
    """``factor * E``."""

    name = "scaled"

    def __init__(self, inner, factor):
        if not factor > 0:
            raise SetError("scale factor must be positive")
        super().__init__(inner.dim, {"of": inner.descriptor(), "factor": float(factor)})
        self.inner, self.factor = inner, float(factor)
        self.feature_scale = inner.feature_scale * self.factor
        if inner.bounds is not None:
            c, r, s = inner.bounds
            self.bounds = (np.asarray(c) * self.factor, r * self.factor, s)

    def sign_field(self, points):
        return self.factor * self.inner.sign_field(points / self.factor)

    def reference_point(self):
        return self.factor * self.inner.reference_point()

    def exact_volume_in_ball(self, center, radius):
        v = self.inner.exact_volume_in_ball(np.asarray(center) / self.factor, radius / self.factor)
        return None if v is None else v * self.factor ** self.dim

    def sample_boundary(self, rng, n, center=None, radius=1.0):
        c = None if center is None else np.asarray(center, float) / self.factor
        return self.factor * self.inner.sample_boundary(rng, n, c, radius / self.factor)

    def label(self):
        return f"{self.factor:g}*{self.inner.label()}"


class UnionOfBoxes(RegionSet):
    """Finite union of open axis-aligned boxes ``(lo, hi)``."""

    name = "unionOfBoxes"
    sign_is_distance = False

    def __init__(self, dim, lows, highs):
        lows = np.asarray(lows, float).reshape(-1, dim)
        highs = np.asarray(highs, float).reshape(-1, dim)
        super().__init__(dim, {"lows": lows.tolist(), "highs": highs.tolist()})
        self.lows, self.highs = lows, highs
        self.feature_scale = float(np.min(highs - lows)) if len(lows) else math.inf
        if len(lows):
            c = 0.5 * (lows.min(axis=0) + highs.max(axis=0))
            corners = np.maximum(np.abs(lows - c), np.abs(highs - c))
            self.bounds = (c, float(np.max(np.linalg.norm(corners, axis=1))), 1)
        else:
            self.bounds = (np.zeros(dim), 0.0, 1)

    def sign_field(self, points):
        out = np.full(len(points), math.inf)
        for lo, hi in zip(self.lows, self.highs):
            c, h = 0.5 * (lo + hi), 0.5 * (hi - lo)
            q = np.abs(points - c) - h
            outside = np.linalg.norm(np.maximum(q, 0.0), axis=1)
            inside = np.minimum(np.max(q, axis=1), 0.0)
            out = np.minimum(out, outside + inside)
        return out


def canonical_set(name, params=None, dim=None):
    """Build one of the canonical sets from a name and a parameter map."""
    params = dict(params or {})
    d = int(params.pop("dim", dim if dim is not None else 2))
    try:
        if name == "halfSpace":
            return HalfSpace(d, params.get("normal"), params.get("offset", 0.0))
        if name == "ball":
            return Ball(d, params.get("center"), params.get("radius", 1.0))
        if name == "ballComplement":
            return BallComplement(d, params.get("center"), params.get("radius", 1.0))
        if name == "slab":
            return Slab(d, params.get("width", 1.0), params.get("axis", 0), params.get("lower", 0.0))
        if name == "periodicSlab":
            if "delta" not in params:
                raise SetError("periodicSlab needs delta")
            return PeriodicSlab(d, float(params["delta"]), params.get("axis", 0))
        if name == "coneSector":
            return ConeSector(d, params.get("apex"), params.get("axis"),
                              params.get("half_angle", math.pi / 4))
        if name == "sparseDust":
            for key in ("target", "scale", "seed"):
                if key not in params:
                    raise SetError(f"sparseDust needs {key}")
            return SparseDust(d, float(params["target"]), float(params["scale"]),
                              int(params["seed"]), float(params.get("R", 1.0)),
                              int(params.get("max_grains", 400)))
    except (TypeError, KeyError) as exc:
        raise SetError(f"invalid parameters for {name}: {exc}") from exc
    raise SetError(f"unknown set name {name!r}; expected one of {', '.join(CANONICAL_NAMES)}")


def set_from_json(obj):
    """Scene format ``{"set": {"name": ..., "params": {...}}, "dim": d}``."""
    spec = obj["set"]
    return canonical_set(spec["name"], spec.get("params", {}), int(obj.get("dim", 2)))


# ---------------------------------------------------------------------------
# exterior touching balls
# ---------------------------------------------------------------------------
@dataclass(frozen=True)
class TouchingBall:
    center: np.ndarray
    radius: float
    contact: np.ndarray

    def as_set(self):
        return Ball(len(self.center), self.center, self.radius)


@dataclass
class _BallProbe:
    n: int = 10_000
    seed: int = 0
    log: list = field(default_factory=list)


def _points_in_ball_near_contact(rng, n, center, radius, contact):
    d = len(center)
    half = n // 2
    uni = uniform_in_ball(rng, half, d, center, radius)
    t = radius * np.exp(rng.uniform(math.log(1e-6), math.log(2.0), n - half))
    pts = contact + unit_vectors(rng, n - half, d) * t[:, None]
    pts = pts[np.linalg.norm(pts - center, axis=1) < radius * (1 - 1e-12)]
    return np.vstack([uni, pts])


def ball_is_exterior(E, center, radius, contact, n=10_000, seed=0):
    """Sampled check that the open ball misses the interior of E.

    Points in the rounding band around the boundary are tolerated.
    """
    rng = np.random.default_rng(seed)
    pts = _points_in_ball_near_contact(rng, n, center, radius, contact)
    return bool(np.all(E.classify(pts) >= 0))


def rejection_check(E, ball, n=10_000, seed=12345):
    """Independent disjointness oracle: uniform rejection sampling in the ball.

    Draws from the bounding cube and keeps points strictly inside the ball
    until ``n`` have been tested.
    """
    rng = np.random.default_rng(seed)
    d = len(ball.center)
    tested, bad = 0, 0
    while tested < n:
        cube = ball.center + ball.radius * rng.uniform(-1, 1, (2 * n, d))
        inside = np.linalg.norm(cube - ball.center, axis=1) < ball.radius
        pts = cube[inside][: n - tested]
        bad += int(np.sum(E.classify(pts) < 0))
        tested += len(pts)
    return bad == 0


def outward_normal(E, x, length_scale):
    """Unit gradient of the sign field by central differences, or None."""
    x = np.asarray(x, dtype=float)
    h = 1e-6 * length_scale
    eye = np.eye(E.dim)
    plus = E.sign_field(x[None, :] + h * eye)
    minus = E.sign_field(x[None, :] - h * eye)
    g = (plus - minus) / (2 * h)
    nrm = float(np.linalg.norm(g))
    if not np.all(np.isfinite(g)) or nrm < 1e-8:
        return None
    return g / nrm


def find_exterior_ball(E, x, max_radius, n_check=10_000, seed=0):
    """Largest verified exterior ball touching ``E`` at ``x`` (radius <= max_radius).

    Candidates are centred along the outward sign-field gradient; the radius
    is bisected on the largest radius passing :func:`ball_is_exterior`.
    Returns None when no candidate direction exists or no radius down to
    ``max_radius * 2**-MIN_RADIUS_OCTAVES`` verifies; smaller balls would sit
    inside the rounding band of the boundary and always pass.
    """
    x = np.asarray(x, dtype=float)
    if E.membership(x) != Membership.BOUNDARY:
        raise SetError(f"point {x} is not on the boundary")
    scale = min(E.feature_scale, max_radius)
    n = outward_normal(E, x, scale)
    if n is None:
        logger.debug("no candidate direction at %s", x)
        return None

    def ok(r):
        return ball_is_exterior(E, x + r * n, r, x, n_check, seed)

    if ok(max_radius):
        return TouchingBall(x + max_radius * n, float(max_radius), x)
    lo = None
    r = max_radius
    for _ in range(MIN_RADIUS_OCTAVES):
        r *= 0.5
        if ok(r):
            lo = r
            break
    if lo is None:
        return None
    hi = min(2 * lo, max_radius)
    for _ in range(20):
        mid = 0.5 * (lo + hi)
        if ok(mid):
            lo = mid
        else:
            hi = mid
    # sampling cannot see thin caps near the threshold; back off a little
    lo *= RADIUS_SAFETY
    return TouchingBall(x + lo * n, float(lo), x)
