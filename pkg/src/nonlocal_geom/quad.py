"""Monte Carlo quadrature over spherical shells.

Integrals against kernels comparable to ``|y|**(-d-s)`` are split into
annuli ``inner < |y - x| < outer``. In each annulus the radius is drawn
from the density proportional to ``r**(-1-s)`` (so ``r**(d-1) K`` becomes a
bounded weight) and the direction uniformly; both are Latin-hypercube
stratified for d <= 3. Every shell owns a generator seeded from
``(cfg.seed, *key)``, so results do not depend on evaluation order.
"""
from __future__ import annotations

import json
import math
from dataclasses import asdict, dataclass, replace

import numpy as np

from .sets import ball_volume, uniform_in_ball, unit_sphere_area


class QuadratureError(RuntimeError):
    pass


@dataclass(frozen=True)
class QuadConfig:
    eps0: float = 0.5
    k_max: int = 12
    r_out: float = 64.0
    samples_per_shell: int = 4096
    seed: int = 0
    tol_abs: float = 1e-2
    tol_rel: float = 1e-2
    far_shells: int = 20
    extrapolate: bool = True
    ceiling: float = 1e12
    volume_samples: int = 16384

    def __post_init__(self):
        if not 0 < self.eps0 < self.r_out:
            raise ValueError(f"need 0 < eps0 < r_out, got {self.eps0}, {self.r_out}")
        if self.samples_per_shell < 100:
            raise ValueError("samples_per_shell must be at least 100")
        if self.k_max < 4:
            raise ValueError("k_max must be at least 4")
        if self.seed < 0:
            raise ValueError("seed must be non-negative")
        if self.far_shells < 0 or self.volume_samples < 100:
            raise ValueError("far_shells >= 0 and volume_samples >= 100 required")

    @property
    def eps_schedule(self):
        return [self.eps0 * 2.0 ** (-k) for k in range(self.k_max + 1)]

    def with_(self, **kw):
        return replace(self, **kw)

    def to_json(self):
        return json.dumps(asdict(self), sort_keys=True)

    @classmethod
    def from_json(cls, text):
        obj = json.loads(text) if isinstance(text, str) else dict(text)
        return cls(**obj)


@dataclass(frozen=True)
class ShellIntegral:
    inner: float
    outer: float
    value: float
    stat_error: float

    def __post_init__(self):
        if not self.inner < self.outer:
            raise ValueError("shell needs inner < outer")


def rng_for(seed, *key):
    """Generator for the task identified by ``key`` (non-negative ints)."""
    return np.random.default_rng([int(seed), *(int(k) for k in key)])


def _stratified_uniform(rng, n, k):
    """``n`` points in ``[0,1)^k`` with one point per stratum in each axis."""
    u = np.empty((n, k))
    for j in range(k):
        u[:, j] = (rng.permutation(n) + rng.random(n)) / n
    return u


def stratified_directions(rng, n, d, u=None):
    """Uniform unit vectors; stratified in the angle(s) for d <= 3."""
    if d == 1:
        signs = np.where(rng.permutation(n) % 2 == 0, 1.0, -1.0)
        return signs[:, None]
    if d == 2:
        u = _stratified_uniform(rng, n, 1)[:, 0] if u is None else u[:, 0]
        t = 2 * math.pi * u
        return np.column_stack([np.cos(t), np.sin(t)])
    if d == 3:
        u = _stratified_uniform(rng, n, 2) if u is None else u
        z = 2 * u[:, 0] - 1
        phi = 2 * math.pi * u[:, 1]
        rho = np.sqrt(np.maximum(0.0, 1 - z * z))
        return np.column_stack([z, rho * np.cos(phi), rho * np.sin(phi)])
    g = rng.standard_normal((n, d))
    return g / np.linalg.norm(g, axis=1)[:, None]


def _band_directions(rng, n, d, normal, w):
    """Unit vectors with ``t = omega . normal`` uniform on ``[-w, w]``."""
    u = _stratified_uniform(rng, n, 1)[:, 0]
    t = w * (2 * u - 1)
    g = rng.standard_normal((n, d))
    g -= (g @ normal)[:, None] * normal[None, :]
    g /= np.linalg.norm(g, axis=1)[:, None]
    return t[:, None] * normal[None, :] + np.sqrt(1 - t * t)[:, None] * g


def _band_ratio(d, t, w):
    """Density of the band sampler relative to the uniform sphere law."""
    c = unit_sphere_area(d - 1) / unit_sphere_area(d)
    with np.errstate(divide="ignore"):
        base = c * np.maximum(1 - t * t, 0.0) ** ((d - 3) / 2)
    return np.where(np.abs(t) < w, 1.0 / (2 * w * base), 0.0)


def sample_shell(rng, d, inner, outer, n, s=None, normal=None, band=0.0):
    """Radii, unit directions and weights for ``int_{inner<|v|<outer} g(v) dv``.

    With ``s`` given the radius has density proportional to ``r**(-1-s)``
    and ``weight * K(v)`` equals ``profile * |S| (inner**-s - outer**-s)/s``;
    ``outer`` may then be infinite. Without ``s`` sampling is uniform in
    volume.

    With a unit ``normal`` and ``0 < band < 0.5`` (d >= 2), half of the
    directions are drawn with ``|omega . normal| < band`` and every sample
    is reweighted by the mixture density, which keeps the estimate
    unbiased while resolving thin regions around the tangent plane.
    """
    u = _stratified_uniform(rng, n, 1 + min(d - 1, 2) if d <= 3 else 1)
    dirs = stratified_directions(rng, n, d, u[:, 1:] if d in (2, 3) else None)
    mix = np.ones(n)
    if normal is not None and d >= 2 and 0.0 < band < 0.5:
        normal = np.asarray(normal, dtype=float)
        half = rng.permutation(n)[: n // 2]
        dirs[half] = _band_directions(rng, len(half), d, normal, band)
        t = np.clip(dirs @ normal, -1.0, 1.0)
        mix = 1.0 / (0.5 + 0.5 * _band_ratio(d, t, band))
    area = unit_sphere_area(d)
    if s is None:
        if math.isinf(outer):
            raise QuadratureError("an unbounded shell needs the kernel order s")
        r = (inner ** d + u[:, 0] * (outer ** d - inner ** d)) ** (1.0 / d)
        w = np.full(n, area * (outer ** d - inner ** d) / d)
        return r, dirs, w * mix
    lo = inner ** (-s) if inner > 0 else math.inf
    if math.isinf(lo):
        raise QuadratureError("importance sampling in r**(-1-s) needs inner > 0")
    hi = 0.0 if math.isinf(outer) else outer ** (-s)
    r = (lo - u[:, 0] * (lo - hi)) ** (-1.0 / s)
    w = area * (lo - hi) / s * r ** (d + s)
    return r, dirs, w * mix


def shell_integrate(f, x, inner, outer, cfg, s=None, key=(0,), n=None, paired=False,
                    normal=None, band=0.0):
    """Estimate ``int_{inner<|y-x|<outer} f(y) dy``.

    ``f`` maps an (n, d) array of points to n values. With ``paired`` each
    sample also evaluates the antipodal point ``2x - y`` and uses the mean,
    which is exact for kernels with ``K(v) = K(-v)``.
    """
    x = np.asarray(x, dtype=float)
    d = x.shape[0]
    n = int(n or cfg.samples_per_shell)
    rng = rng_for(cfg.seed, *key)
    r, dirs, w = sample_shell(rng, d, inner, outer, n, s, normal, band)
    pts = x + dirs * r[:, None]
    vals = np.asarray(f(pts), dtype=float)
    if paired:
        vals = 0.5 * (vals + np.asarray(f(2 * x - pts), dtype=float))
    _check_finite(vals, pts)
    contrib = vals * w
    return ShellIntegral(float(inner), float(outer), float(np.mean(contrib)),
                         float(np.std(contrib) / math.sqrt(n)))


def _check_finite(vals, pts):
    bad = ~np.isfinite(vals)
    if np.any(bad):
        i = int(np.argmax(bad))
        raise QuadratureError(f"non-finite integrand value {vals[i]} at y = {pts[i].tolist()}")


def tail_bound(K, truncation):
    """``Lam d |B_1| / (s truncation**s)``: bounds the integral beyond truncation."""
    if not truncation > 0:
        raise ValueError("truncation must be positive")
    if math.isinf(truncation):
        return 0.0
    return K.Lam * unit_sphere_area(K.dim) / K.s * truncation ** (-K.s)


@dataclass(frozen=True)
class VolumeFraction:
    value: float
    error: float
    boundary: float
    boundary_error: float
    n: int

    def upper(self, k=3.0):
        """Conservative upper bound ``value + k * max(error, 1/n)``."""
        return self.value + k * max(self.error, 1.0 / self.n)

    def lower(self, k=3.0):
        return self.value - k * max(self.error, 1.0 / self.n)


def volume_fraction(E, center, r, cfg, key=(0,), n=None):
    """Monte Carlo ``|E & B_r(center)| / |B_r|`` with a separate boundary share."""
    if not r > 0:
        raise ValueError("radius must be positive")
    n = int(n or cfg.volume_samples)
    rng = rng_for(cfg.seed, 7, *key)
    pts = uniform_in_ball(rng, n, E.dim, np.asarray(center, float), r)
    cls = E.classify(pts)
    p = float(np.mean(cls < 0))
    b = float(np.mean(cls == 0))
    return VolumeFraction(p, math.sqrt(p * (1 - p) / n), b, math.sqrt(b * (1 - b) / n), n)


def volume_in_ball(E, center, r, cfg, key=(0,)):
    """``(|E & B_r(center)|, sigma)``: exact when the set provides it."""
    exact = E.exact_volume_in_ball(np.asarray(center, float), r)
    if exact is not None:
        return float(exact), 0.0
    vf = volume_fraction(E, center, r, cfg, key)
    vol = ball_volume(E.dim, r)
    return vf.value * vol, vf.error * vol
