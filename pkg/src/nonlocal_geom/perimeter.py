"""Nonlocal perimeters localised to balls, and a Minkowski-content estimator.

``Per_K(E; Omega) = 1/4 iint_{Q(Omega)} |chi~_E(x) - chi~_E(y)| K(x - y)``
with ``Q(Omega) = R^2d \\ (Omega^c x Omega^c)``. The integral splits into
``Omega x Omega``, ``Omega^c x Omega`` and ``Omega x Omega^c``; the last two
agree by the symmetry of K and are estimated from independent streams.

Pairs are drawn as ``(x, x + r omega)`` with ``x`` uniform in Omega and
``log r`` stratified in equal bins, so pairs straddling the boundary are
sampled at every scale.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy import special

from .quad import rng_for, stratified_directions
from .sets import ball_volume, uniform_in_ball, unit_sphere_area

PAIR_FACTOR = 16


@dataclass(frozen=True)
class Omega:
    """Localising ball ``B_radius(center)``."""
    center: tuple
    radius: float

    def __post_init__(self):
        if not self.radius > 0:
            raise ValueError("Omega radius must be positive")

    @property
    def c(self):
        return np.asarray(self.center, dtype=float)

    def volume(self):
        return ball_volume(len(self.center), self.radius)

    @classmethod
    def ball(cls, center, radius):
        return cls(tuple(float(v) for v in np.ravel(center)), float(radius))


@dataclass
class PerimeterEstimate:
    value: float
    stat_error: float
    decomposition: tuple
    decomposition_errors: tuple
    tail: float
    remainder: float
    low_precision: bool

    def cross_terms_agree(self, k=3.0):
        a, b = self.decomposition[1], self.decomposition[2]
        ea, eb = self.decomposition_errors[1], self.decomposition_errors[2]
        return abs(a - b) <= k * math.hypot(ea, eb) + self.tail


def ball_perimeter_exact(d, s, r=1.0):
    """``Per_s(B_r)`` for ``K = |y|**(-d-s)``, by slicing along lines.

    Each line meets the ball in a chord of length L, whose 1-D perimeter
    is ``2 L**(1-s) / (s (1-s))``.
    """
    if d == 1:
        return 2.0 * (2.0 * r) ** (1 - s) / (s * (1 - s))
    chord = 2.0 / (s * (1 - s)) * 2.0 ** (1 - s)
    radial = 0.5 * special.beta((d - 1) / 2, (3 - s) / 2)
    return 0.5 * unit_sphere_area(d) * chord * unit_sphere_area(d - 1) * radial * r ** (d - s)


def _radius_bins(r_min, r_max, n_bins):
    edges = np.exp(np.linspace(math.log(r_min), math.log(r_max), n_bins + 1))
    return edges


def _far_sign_beyond(E, omega, r_max):
    """``chi~`` beyond distance ``r_max`` from any point of Omega, or None."""
    if E.bounds is None:
        return None
    c, rb, fs = E.bounds
    reach = omega.radius + float(np.linalg.norm(omega.c - np.asarray(c, float))) + rb
    return fs if r_max >= reach else None


def perimeter_k(E, omega, K, cfg, key=(), n=None, r_min=None, r_max=None):
    """Monte Carlo ``Per_K(E; Omega)``; ``omega=None`` means the full perimeter.

    The full perimeter needs a bounded set or a bounded complement; it is
    computed as ``Per_K(E; B)`` for a ball B containing the bounded part,
    which is exact because pairs with both ends outside B do not straddle.
    """
    d = E.dim
    if omega is None:
        if E.bounds is None:
            raise ValueError("full perimeter needs a bounded set or complement")
        c, rb, _ = E.bounds
        omega = Omega.ball(c, max(rb, 1e-300) * 1.01)
    elif not isinstance(omega, Omega):
        omega = Omega.ball(*omega)
    n = int(n or PAIR_FACTOR * cfg.samples_per_shell)
    R = omega.radius
    ell = min(R, E.feature_scale)
    r_min = r_min or 1e-6 * ell
    far_sign = None
    if r_max is None:
        if E.bounds is not None:
            cE, rb, _ = E.bounds
            r_max = 1.01 * max(2 * R, R + float(np.linalg.norm(omega.c - np.asarray(cE, float))) + rb)
            far_sign = _far_sign_beyond(E, omega, r_max)
        else:
            r_max = R * 2.0 ** 20
    else:
        far_sign = _far_sign_beyond(E, omega, r_max)
    n_bins = max(1, int(math.ceil(math.log10(r_max / r_min))))
    edges = _radius_bins(r_min, r_max, n_bins)
    per_bin = max(100, n // n_bins)
    vol = omega.volume()
    area = unit_sphere_area(d)
    terms = np.zeros((3, n_bins))
    var = np.zeros((3, n_bins))
    # variance of the total: terms sharing a sample stream are summed per sample
    total_var = 0.0
    for b in range(n_bins):
        a, z = edges[b], edges[b + 1]
        span = math.log(z / a)
        for stream in (0, 1):
            rng = rng_for(cfg.seed, *key, 11, stream, b)
            x = uniform_in_ball(rng, per_bin, d, omega.c, R)
            u = (rng.permutation(per_bin) + rng.random(per_bin)) / per_bin
            r = a * np.exp(u * span)
            w = stratified_directions(rng, per_bin, d)
            y = x + w * r[:, None]
            jump = 0.25 * np.abs(E.classify(x).astype(float) - E.classify(y))
            # weight of dv = r^(d-1) dr dw under log-uniform r and uniform w
            kv = K.evaluate(w * r[:, None] if stream == 0 else -w * r[:, None])
            contrib = vol * area * span * r ** d * kv * jump
            in_omega = np.linalg.norm(y - omega.c, axis=1) < R
            if stream == 0:
                sel = [(0, in_omega), (2, ~in_omega)]
            else:
                sel = [(1, ~in_omega)]
            for t, mask in sel:
                vals = np.where(mask, contrib, 0.0)
                terms[t, b] = vals.mean()
                var[t, b] = vals.var() / per_bin
            stream_sum = contrib if stream == 0 else np.where(~in_omega, contrib, 0.0)
            total_var += stream_sum.var() / per_bin
    tail = 0.0
    tail_exact = np.zeros(3)
    if far_sign is not None:
        rng = rng_for(cfg.seed, *key, 12)
        x = uniform_in_ball(rng, per_bin, d, omega.c, R)
        jump = 0.25 * np.abs(E.classify(x).astype(float) - far_sign)
        t_val = vol * jump.mean() * K.tail_integral(r_max)
        t_err = vol * jump.std() / math.sqrt(per_bin) * K.tail_integral(r_max)
        tail_exact[1] = tail_exact[2] = t_val
        var[1, 0] += t_err ** 2
        var[2, 0] += t_err ** 2
        # both cross terms reuse the same tail samples
        total_var += (2 * t_err) ** 2
    else:
        tail = 2 * 0.5 * vol * K.Lam * unit_sphere_area(d) / K.s * r_max ** (-K.s)
    sums = terms.sum(axis=1) + tail_exact
    if cfg.extrapolate:
        q = (edges[1] / edges[0]) ** (-(1 - K.s))
        remainder = float(terms[:, 0].sum() * q / (1 - q))
    else:
        remainder = 0.0
    errs = np.sqrt(var.sum(axis=1))
    value = float(sums.sum() + remainder)
    stat = float(math.sqrt(total_var) + 0.5 * abs(remainder))
    low = stat > cfg.tol_rel * abs(value) if value else False
    return PerimeterEstimate(value, stat, tuple(float(v) for v in sums),
                             tuple(float(v) for v in errs), float(tail), remainder, bool(low))


@dataclass(frozen=True)
class ScalingResult:
    ratio: float
    error: float
    expected: float

    def within(self, k=3.0):
        return abs(self.ratio - self.expected) <= k * self.error


def perimeter_scaling_check(E, r, K, cfg, key=()):
    """``Per_s(rE) / Per_s(E)`` with its propagated standard error."""
    if K.kind != "fractional":
        raise ValueError("the scaling check needs the fractional kernel")
    if r == 1:
        return ScalingResult(1.0, 0.0, 1.0)
    a = perimeter_k(E, None, K, cfg, key=(*key, 0))
    b = perimeter_k(E.scaled(r), None, K, cfg, key=(*key, 1))
    ratio = b.value / a.value
    err = abs(ratio) * math.hypot(a.stat_error / a.value, b.stat_error / b.value)
    return ScalingResult(float(ratio), float(err), float(r ** (E.dim - K.s)))


@dataclass(frozen=True)
class MinkowskiEstimate:
    value: float
    stat_error: float
    reliable: bool


def classical_perimeter_minkowski(E, omega, h, cfg, key=(), n=None):
    """``|{x in Omega : dist(x, dE) < h}| / (2h)`` by uniform sampling in Omega."""
    if not isinstance(omega, Omega):
        omega = Omega.ball(*omega)
    n = int(n or PAIR_FACTOR * cfg.samples_per_shell)
    rng = rng_for(cfg.seed, *key, 13)
    x = uniform_in_ball(rng, n, E.dim, omega.c, omega.radius)
    near = np.abs(E.sign_field(x)) < h
    p = float(near.mean())
    vol = omega.volume()
    reliable = bool(h <= E.feature_scale / 4 and E.sign_is_distance)
    return MinkowskiEstimate(vol * p / (2 * h), vol * math.sqrt(p * (1 - p) / n) / (2 * h), reliable)


def perimeter_row(E, K, omega, est):
    return {
        "set": E.label(),
        "kernel": K.label(),
        "omegaCenter": ";".join(f"{v:.17g}" for v in omega.center),
        "omegaRadius": omega.radius,
        "value": est.value,
        "statError": est.stat_error,
        "omegaOmega": est.decomposition[0],
        "outsideInside": est.decomposition[1],
        "insideOutside": est.decomposition[2],
    }
