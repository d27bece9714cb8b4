"""Symmetric kernels comparable to the fractional kernel.

Every kernel here has the form ``K(y) = profile(y/|y|) * |y|**(-d-s)`` with
an even angular profile written as a cosine series in the angle ``theta``
(polar angle in 2-D, angle to ``e_1`` otherwise)::

    profile(theta) = sum_k a_k cos(k theta),   k even

The ellipticity envelope ``lam <= profile <= Lam`` and the symmetry
``K(y) = K(-y)`` can be checked by sampling with :meth:`KernelSpec.validate`.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy import integrate

from .sets import unit_ball_volume, unit_sphere_area


class KernelError(ValueError):
    pass


def _angles(omega):
    """Angle used by the cosine profile, for unit vectors of shape (n, d)."""
    d = omega.shape[1]
    if d == 1:
        return np.where(omega[:, 0] >= 0.0, 0.0, np.pi)
    if d == 2:
        return np.arctan2(omega[:, 1], omega[:, 0])
    return np.arccos(np.clip(omega[:, 0], -1.0, 1.0))


@dataclass(frozen=True)
class KernelSpec:
    dim: int
    s: float
    lam: float
    Lam: float
    kind: str = "fractional"
    coeffs: tuple = ((0, 1.0),)
    _sphere_mass: float = field(default=float("nan"), repr=False, compare=False)

    def __post_init__(self):
        if self.dim < 1:
            raise KernelError(f"dimension must be >= 1, got {self.dim}")
        if not 0.0 < self.s < 1.0:
            raise KernelError(f"s must lie in (0, 1), got {self.s}")
        if not 0.0 < self.lam <= self.Lam:
            raise KernelError(f"need 0 < lambda <= Lambda, got {self.lam}, {self.Lam}")
        if math.isnan(self._sphere_mass):
            object.__setattr__(self, "_sphere_mass", self._compute_sphere_mass())

    @property
    def isotropic(self):
        return all(k == 0 for k, _ in self.coeffs)

    def profile_angle(self, theta):
        theta = np.asarray(theta, dtype=float)
        out = np.zeros_like(theta)
        for k, a in self.coeffs:
            out = out + a * np.cos(k * theta)
        return out

    def profile(self, omega):
        """Angular profile at unit vectors ``omega`` of shape (n, d)."""
        omega = np.atleast_2d(np.asarray(omega, dtype=float))
        if self.isotropic:
            return np.full(len(omega), self.coeffs[0][1] if self.coeffs else 0.0)
        return self.profile_angle(_angles(omega))

    def evaluate(self, y):
        """Kernel value at displacement(s) ``y``; ``+inf`` at the origin."""
        y = np.asarray(y, dtype=float)
        single = y.ndim == 1
        y = np.atleast_2d(y)
        r = np.sqrt(np.sum(y * y, axis=1))
        with np.errstate(divide="ignore", invalid="ignore"):
            omega = y / r[:, None]
            val = self.profile(omega) * r ** (-(self.dim + self.s))
        val = np.where(r > 0, val, np.inf)
        return val[0] if single else val

    __call__ = evaluate

    # -- radial integrals -------------------------------------------------
    def _compute_sphere_mass(self):
        d = self.dim
        if self.isotropic:
            return self.coeffs[0][1] * unit_sphere_area(d)
        if d == 1:
            return float(self.profile_angle(np.array([0.0, np.pi])).sum())
        if d == 2:
            return 2.0 * math.pi * sum(a for k, a in self.coeffs if k == 0)
        sub = unit_sphere_area(d - 1)
        val, _ = integrate.quad(
            lambda t: float(self.profile_angle(np.array([t]))[0]) * math.sin(t) ** (d - 2),
            0.0, math.pi, limit=200)
        return sub * val

    @property
    def sphere_mass(self):
        """Integral of the profile over the unit sphere."""
        return self._sphere_mass

    def annulus_integral(self, inner, outer=math.inf):
        """Exact integral of K over ``inner < |y| < outer``."""
        hi = 0.0 if math.isinf(outer) else outer ** (-self.s)
        return self.sphere_mass * (inner ** (-self.s) - hi) / self.s

    def tail_integral(self, radius):
        return self.annulus_integral(radius, math.inf)

    # -- checks ------------------------------------------------------------
    def validate(self, n=10_000, seed=0, rmin=1e-6, rmax=1e6):
        """Sample the envelope and symmetry; returns a dict of booleans."""
        rng = np.random.default_rng(seed)
        omega = rng.standard_normal((n, self.dim))
        omega /= np.linalg.norm(omega, axis=1)[:, None]
        r = np.exp(rng.uniform(math.log(rmin), math.log(rmax), n))
        y = omega * r[:, None]
        k_plus = self.evaluate(y)
        k_minus = self.evaluate(-y)
        base = r ** (-(self.dim + self.s))
        rel = 1e-12
        return {
            "symmetric": bool(np.allclose(k_plus, k_minus, rtol=1e-12, atol=0.0)),
            "lower": bool(np.all(k_plus >= self.lam * base * (1 - rel))),
            "upper": bool(np.all(k_plus <= self.Lam * base * (1 + rel))),
        }

    def descriptor(self):
        return {"kind": self.kind, "s": self.s,
                "profile": {str(k): a for k, a in self.coeffs}}

    def label(self):
        if self.isotropic and self.coeffs[0][1] == 1.0:
            return f"fractional(s={self.s:g})"
        terms = "+".join(f"{a:g}cos{k}" for k, a in self.coeffs)
        return f"{self.kind}(s={self.s:g},{terms})"


def fractional_kernel(d, s):
    """``K(y) = |y|**(-d-s)`` with ``lam = Lam = 1``."""
    return KernelSpec(dim=int(d), s=float(s), lam=1.0, Lam=1.0, kind="fractional",
                      coeffs=((0, 1.0),))


def _profile_range(coeffs, d):
    theta = np.linspace(0.0, math.pi, 20_001)
    vals = sum(a * np.cos(k * theta) for k, a in coeffs)
    if d == 1:
        vals = np.array([vals[0], vals[-1]])
    return float(np.min(vals)), float(np.max(vals))


def anisotropic_kernel(d, s, profile, kind="anisotropic", n_check=10_000, seed=0):
    """Kernel with cosine-series angular profile ``{k: a_k}``.

    The envelope constants are the range of the profile. Odd harmonics,
    which would break ``K(y) = K(-y)``, are rejected after a sampling check.
    """
    coeffs = tuple(sorted((int(k), float(a)) for k, a in dict(profile).items() if a != 0.0))
    if not coeffs:
        raise KernelError("profile is identically zero")
    lo, hi = _profile_range(coeffs, d)
    if lo <= 0.0:
        raise KernelError(f"profile range [{lo:g}, {hi:g}] is not positive")
    spec = KernelSpec(dim=int(d), s=float(s), lam=lo, Lam=hi, kind=kind, coeffs=coeffs)
    if d > 1:
        rng = np.random.default_rng(seed)
        omega = rng.standard_normal((n_check, d))
        omega /= np.linalg.norm(omega, axis=1)[:, None]
        odd = np.max(np.abs(spec.profile(omega) - spec.profile(-omega)))
        if odd > 1e-9 * max(1.0, abs(hi)):
            raise KernelError(f"profile has an odd component (max |p(w)-p(-w)| = {odd:.3g})")
    elif any(k % 2 for k, _ in coeffs):
        raise KernelError("profile has an odd component")
    return spec


def perturbed_kernel(d, s, amplitude, mode=2):
    """Fractional kernel times ``1 + amplitude*cos(mode*theta)``."""
    if not 0.0 <= amplitude < 1.0:
        raise KernelError("amplitude must lie in [0, 1)")
    return anisotropic_kernel(d, s, {0: 1.0, mode: amplitude}, kind="perturbed")


def kernel_from_json(obj, d):
    """Build a kernel from ``{"kind": ..., "s": ..., "profile": {k: a_k}}``."""
    kind = obj.get("kind", "fractional")
    s = float(obj["s"])
    if kind == "fractional":
        return fractional_kernel(d, s)
    profile = {int(k): float(v) for k, v in obj.get("profile", {"0": 1.0}).items()}
    if kind not in ("anisotropic", "perturbed"):
        raise KernelError(f"unknown kernel kind {kind!r}")
    return anisotropic_kernel(d, s, profile, kind=kind)


def unit_ball_tail_constant(K):
    """``Lam * d * |B_1| / s``: bound on ``|int_{|y|>1} chi K|`` for any set."""
    return K.Lam * K.dim * unit_ball_volume(K.dim) / K.s
