"""Density profiles, sparse centres and executable checks of the density chain.

Every check gates on its hypotheses and answers ``NOT_APPLICABLE`` when
they cannot be certified, rather than passing vacuously. Thresholds come
from a :class:`~nonlocal_geom.constants.ConstantLedger`; the only numbers
fixed here are statistical (how many standard errors count as agreement).
"""
from __future__ import annotations

import enum
import math
from dataclasses import dataclass, field

import numpy as np

from . import _accel
from .constants import build_ledger
from .curvature import (CurvatureError, curvature_lower_bound_truncated,
                        curvature_via_touching_ball, shell_integral)
from .kernels import fractional_kernel
from .perimeter import Omega, ball_perimeter_exact, classical_perimeter_minkowski, perimeter_k
from .quad import rng_for, sample_shell, volume_fraction, volume_in_ball
from .sets import (Membership, ball_intersection_volume, ball_volume, find_exterior_ball,
                   uniform_in_ball, unit_ball_volume, unit_sphere_area)

SIGMA_K = 3.0
SLOPE_SLACK = 0.1
BISECTION_RTOL = 1e-10
RADII_PER_OCTAVE = 4


class Verdict(str, enum.Enum):
    PASS = "PASS"
    FAIL = "FAIL"
    NOT_APPLICABLE = "NOT_APPLICABLE"
    INCONCLUSIVE = "INCONCLUSIVE"


def combine(verdicts, quota=0.0):
    """Fold verdicts: any FAIL fails; all NOT_APPLICABLE stays so; too many
    inconclusive (fraction above ``quota``) is INCONCLUSIVE."""
    verdicts = list(verdicts)
    if not verdicts:
        return Verdict.NOT_APPLICABLE
    if Verdict.FAIL in verdicts:
        return Verdict.FAIL
    if all(v == Verdict.NOT_APPLICABLE for v in verdicts):
        return Verdict.NOT_APPLICABLE
    bad = sum(v in (Verdict.INCONCLUSIVE, Verdict.NOT_APPLICABLE) for v in verdicts)
    return Verdict.INCONCLUSIVE if bad > quota * len(verdicts) else Verdict.PASS


class RearrangementError(ValueError):
    pass


# ---------------------------------------------------------------- profiles

@dataclass
class DensityReport:
    center: tuple
    radii: list
    fractions: list
    boundary_fractions: list
    target: float | None = None
    verdicts: list = field(default_factory=list)

    @property
    def verdict(self):
        return combine(self.verdicts) if self.verdicts else Verdict.NOT_APPLICABLE

    def margin(self):
        """Smallest ``fraction - target`` over the sweep."""
        if self.target is None:
            return None
        return min(v for v, _ in self.fractions) - self.target

    def rows(self):
        out = []
        for i, r in enumerate(self.radii):
            (v, e), (b, be) = self.fractions[i], self.boundary_fractions[i]
            out.append({"r": r, "fraction": v, "fractionError": e, "boundaryFraction": b,
                        "boundaryError": be, "target": self.target,
                        "verdict": self.verdicts[i].value if self.verdicts else ""})
        return out


def density_profile(E, center, radii, cfg, target=None, key=()):
    """Volume fractions ``|E & B_r(center)| / |B_r|`` over increasing radii."""
    radii = [float(r) for r in radii]
    if any(b <= a for a, b in zip(radii, radii[1:])) or not radii or radii[0] <= 0:
        raise ValueError("radii must be positive and strictly increasing")
    center = np.asarray(center, dtype=float)
    fr, bf, verdicts = [], [], []
    for i, r in enumerate(radii):
        exact = E.exact_volume_in_ball(center, r)
        vf = volume_fraction(E, center, r, cfg, key=(*key, i))
        if exact is not None:
            fr.append((float(exact) / ball_volume(E.dim, r), 0.0))
        else:
            fr.append((vf.value, vf.error))
        bf.append((vf.boundary, vf.boundary_error))
        if target is not None:
            ok = fr[-1][0] >= target - SIGMA_K * fr[-1][1]
            verdicts.append(Verdict.PASS if ok else Verdict.FAIL)
    return DensityReport(tuple(center.tolist()), radii, fr, bf, target, verdicts)


# ---------------------------------------------------------- sparse centres

@dataclass
class SparseSetReport:
    alpha: float
    R: float
    grid_step: float
    measure_dalpha: float
    half_ball_measure: float
    grid_error: float
    n_points: int
    n_qualified: int
    method: str
    alpha_tested: float

    @property
    def ball_measure(self):
        return 2 * self.half_ball_measure

    def meets_half(self):
        return self.measure_dalpha >= self.half_ball_measure - self.grid_error


def _grid_in_ball(d, radius, h):
    n = int(math.ceil(radius / h))
    ax = (np.arange(-n, n) + 0.5) * h
    mesh = np.stack(np.meshgrid(*([ax] * d), indexing="ij"), axis=-1).reshape(-1, d)
    return mesh[np.linalg.norm(mesh, axis=1) < radius]


def _radius_ladder(R, floor, per_octave):
    out, j = [], 0
    while True:
        r = 0.5 * R * 2.0 ** (-j / per_octave)
        out.append(r)
        if r <= floor:
            return np.array(out)
        j += 1


def _raster_volumes(E, pts, radii, h, reach, impl=None):
    """Over-approximate ``|E & B_r(x)|`` by counting grid cells that may meet E."""
    d = E.dim
    n = int(math.ceil(reach / h)) + 1
    ax = (np.arange(-n, n) + 0.5) * h
    cells = np.stack(np.meshgrid(*([ax] * d), indexing="ij"), axis=-1).reshape(-1, d)
    mask = (E.sign_field(cells) < 0.5 * h * math.sqrt(d)).reshape((2 * n,) * d)
    q = np.rint(pts / h - 0.5).astype(np.int64) + n
    span = np.arange(-n, n + 1)
    grid = np.stack(np.meshgrid(*([span] * d), indexing="ij"), axis=-1).reshape(-1, d)
    dist = np.linalg.norm(grid, axis=1) * h
    out = np.empty((len(radii), len(pts)))
    for j, r in enumerate(radii):
        offs = grid[dist < r + 0.5 * h * math.sqrt(d)]
        hits, _ = _accel.disk_counts(mask.astype(np.uint8), q, offs, impl=impl)
        out[j] = hits * h ** d
    return out


def sparse_point_measure(E, R, alpha, grid_step, radii_per_octave=RADII_PER_OCTAVE,
                         method="auto", impl=None):
    """Grid measure of the centres in ``B_{R/4}`` around which E is sparse.

    A centre qualifies when ``|E & B_r(x)| <= alpha |B_r|`` for every
    ``r <= R/2``. Radii ``R/2 * 2^(-j/m)`` down to ``grid_step/8`` are
    tested against ``alpha * 2^(-d/m)``, which covers the radii in
    between. Centres in the closure of E never qualify. The sign field
    only needs to be a lower bound for the distance to E outside E.
    """
    d = E.dim
    if not grid_step <= R / 64:
        raise ValueError("grid_step must be at most R/64")
    if not 0 < alpha < 1:
        raise ValueError("alpha must lie in (0, 1)")
    h = float(grid_step)
    pts = _grid_in_ball(d, R / 4, h)
    floor = h / 8
    radii = _radius_ladder(R, floor, radii_per_octave)
    alpha_t = alpha * 2.0 ** (-d / radii_per_octave)
    dist = E.sign_field(pts)
    ok = E.classify(pts) > 0
    if method == "auto":
        method = "exact" if E.exact_volumes(pts[:1], R) is not None else "raster"
    if method == "exact":
        for r in radii:
            idx = np.flatnonzero(ok & (dist < r))
            if len(idx):
                vols = E.exact_volumes(pts[idx], r)
                ok[idx] &= vols <= alpha_t * ball_volume(d, r)
    elif method == "raster":
        idx = np.flatnonzero(ok)
        vols = _raster_volumes(E, pts[idx], radii, h, 0.75 * R + 2 * h, impl)
        caps = alpha_t * np.array([ball_volume(d, r) for r in radii])
        ok[idx] = np.all(vols <= caps[:, None], axis=0)
    else:
        raise ValueError(f"unknown method {method!r}")
    count = int(ok.sum())
    half = 0.5 * ball_volume(d, R / 4)
    grid_err = unit_sphere_area(d) * (R / 4) ** (d - 1) * d * h
    return SparseSetReport(float(alpha), float(R), h, count * h ** d, half, grid_err,
                           len(pts), count, method, alpha_t)


# ---------------------------------------------------------- rearrangement

@dataclass(frozen=True)
class RearrangementResult:
    lhs: float
    rhs: float
    rho: float
    sigma: float

    @property
    def passes(self):
        if math.isinf(self.lhs):
            return True
        return self.lhs >= self.rhs - SIGMA_K * self.sigma

    @property
    def equal(self):
        if math.isinf(self.lhs) or math.isinf(self.rhs):
            return self.lhs == self.rhs
        return abs(self.lhs - self.rhs) <= SIGMA_K * self.sigma


def _match_radius(d, omega, x, target):
    t = float(np.linalg.norm(x - omega.c))
    lo, hi = 0.0, t + omega.radius
    full = ball_intersection_volume(d, omega.radius, hi, t)
    if not 0 <= target <= full * (1 + 1e-12):
        raise RearrangementError(
            f"volume target {target} outside [0, |Omega| = {full}] for x at distance {t}")
    while hi - lo > BISECTION_RTOL * (t + omega.radius):
        mid = 0.5 * (lo + hi)
        if ball_intersection_volume(d, omega.radius, mid, t) < target:
            lo = mid
        else:
            hi = mid
    return 0.5 * (lo + hi)


def rearrangement_check(omega, E, x, s, cfg, key=()):
    """Compare ``int_{Omega \\ E}`` with ``int_{Omega \\ B_rho(x)}`` of ``|x-y|^(-d-s)``.

    ``rho`` matches ``|Omega & B_rho(x)| = |Omega & E|``. Both integrals use
    the same samples, which keeps the error of their difference small.
    """
    if not isinstance(omega, Omega):
        omega = Omega.ball(*omega)
    d = E.dim
    x = np.asarray(x, dtype=float)
    if np.linalg.norm(x - omega.c) > omega.radius * (1 + 1e-12):
        raise ValueError("x must lie in the closure of Omega")
    vol, vol_err = volume_in_ball(E, omega.c, omega.radius, cfg, key=(*key, 21))
    if vol <= 0:
        # rho = 0: both sides are the full (divergent) integral over Omega
        return RearrangementResult(math.inf, math.inf, 0.0, 0.0)
    rho = _match_radius(d, omega, x, vol)
    if E.classify(x[None, :])[0] >= 0:
        # x outside the interior of E: Omega \ E has positive density at x
        return RearrangementResult(math.inf, _rhs_only(omega, x, rho, s, cfg, key), rho, 0.0)
    a = min(abs(float(E.sign_field(x[None, :])[0])), rho)
    b = float(np.linalg.norm(x - omega.c)) + omega.radius
    lhs = rhs = var = 0.0
    inner, j = a, 0
    while inner < b:
        outer = min(2 * inner, b)
        rng = rng_for(cfg.seed, *key, 22, j)
        r, dirs, w = sample_shell(rng, d, inner, outer, cfg.samples_per_shell, s=s)
        y = x + dirs * r[:, None]
        kw = w * r ** (-d - s)
        in_om = np.linalg.norm(y - omega.c, axis=1) < omega.radius
        fl = np.where(in_om & (E.classify(y) >= 0), kw, 0.0)
        fr = np.where(in_om & (r >= rho), kw, 0.0)
        lhs += fl.mean()
        rhs += fr.mean()
        var += (fl - fr).var() / len(r)
        inner, j = outer, j + 1
    # below min(dist, rho) both integrands vanish
    sigma = math.sqrt(var + (rho ** (-d - s) * vol_err) ** 2)
    return RearrangementResult(float(lhs), float(rhs), float(rho), sigma)


def _rhs_only(omega, x, rho, s, cfg, key):
    d = len(x)
    b = float(np.linalg.norm(x - omega.c)) + omega.radius
    total, inner, j = 0.0, rho, 0
    while inner < b:
        outer = min(2 * inner, b)
        rng = rng_for(cfg.seed, *key, 23, j)
        r, dirs, w = sample_shell(rng, d, inner, outer, cfg.samples_per_shell, s=s)
        y = x + dirs * r[:, None]
        total += np.where(np.linalg.norm(y - omega.c, axis=1) < omega.radius,
                          w * r ** (-d - s), 0.0).mean()
        inner, j = outer, j + 1
    return float(total)


# ------------------------------------------------------- local thresholds

@dataclass
class CheckResult:
    verdict: Verdict
    value: float
    threshold: float
    error: float
    density: float
    reason: str = ""


def _check_ledger(K, ledger):
    if ledger.d != K.dim or abs(ledger.s - K.s) > 1e-12:
        raise ValueError("ledger (d, s) does not match the kernel")
    if K.lam < ledger.lam * (1 - 1e-12) or K.Lam > ledger.Lam * (1 + 1e-12):
        raise ValueError("kernel envelope is wider than the ledger's (lambda, Lambda)")


def sparse_curvature_threshold(E, K, ball, M, ledger, cfg, key=()):
    """Curvature at a touching point when E is sparse around the touching ball."""
    _check_ledger(K, ledger)
    r = float(ball.radius)
    vf = volume_fraction(E, ball.center, 2 * r, cfg, key=(*key, 31))
    threshold = (M + 1) * r ** (-K.s)
    if vf.upper() > ledger.beta:
        return CheckResult(Verdict.NOT_APPLICABLE, math.nan, threshold, math.nan, vf.value,
                           f"density {vf.value:.3g} not certified below beta")
    try:
        est = curvature_via_touching_ball(E, K, ball, cfg, key=(*key, 32))
    except CurvatureError as exc:
        return CheckResult(Verdict.INCONCLUSIVE, math.nan, threshold, math.nan, vf.value, str(exc))
    if est.diverged:
        v = Verdict.PASS if est.direction > 0 else Verdict.FAIL
        return CheckResult(v, est.direction * math.inf, threshold, math.inf, vf.value, est.label())
    if not est.converged:
        return CheckResult(Verdict.INCONCLUSIVE, est.value, threshold, est.error_bound, vf.value,
                           est.label())
    ok = est.value >= threshold - est.error_bound
    return CheckResult(Verdict.PASS if ok else Verdict.FAIL, float(est.value), threshold,
                       float(est.error_bound), vf.value, est.label())


def shell_lower_bound_check(E, K, x, r, ledger, cfg, key=()):
    """Annulus integral of ``chi~ K`` over ``r/2 < |y-x| < r`` against the ledger."""
    _check_ledger(K, ledger)
    vf = volume_fraction(E, x, r, cfg, key=(*key, 41))
    threshold = ledger.Cshell * r ** (-K.s)
    if vf.upper() > ledger.gamma:
        return CheckResult(Verdict.NOT_APPLICABLE, math.nan, threshold, math.nan, vf.value,
                           f"density {vf.value:.3g} not certified below gamma")
    sh = shell_integral(E, K, x, r / 2, r, cfg, key=(*key, 42))
    ok = sh.value >= threshold - SIGMA_K * sh.stat_error
    return CheckResult(Verdict.PASS if ok else Verdict.FAIL, sh.value, threshold,
                       sh.stat_error, vf.value)


@dataclass
class BlowupReport:
    verdict: Verdict
    radii: list
    values: list
    errors: list
    envelope: list
    slope: float
    first_failing_scale: float | None = None

    def exponent_close(self, s, slack=SLOPE_SLACK):
        return abs(self.slope + s) <= slack * s


def blowup_scan(E, K, x, r0, ledger, cfg, r_min=None, key=()):
    """Truncated curvature integrals at ``r0 2^-j`` down to the feature scale.

    Passes when the log-log slope is at most ``-(1 - 0.1) s`` and every value
    clears the ledger envelope up to three standard errors.
    """
    _check_ledger(K, ledger)
    x = np.asarray(x, dtype=float)
    if r_min is None:
        fs = E.feature_scale
        r_min = fs if math.isfinite(fs) and fs > 0 else r0 * 2.0 ** -8
    scales, r = [], float(r0)
    while r >= r_min * (1 - 1e-12):
        scales.append(r)
        r /= 2
    for j, r in enumerate(scales):
        if volume_fraction(E, x, r, cfg, key=(*key, 51, j)).upper() > ledger.gamma:
            return BlowupReport(Verdict.NOT_APPLICABLE, [], [], [], [], math.nan, r)
    radii = scales[1:]
    if len(radii) < 2:
        return BlowupReport(Verdict.NOT_APPLICABLE, radii, [], [], [], math.nan, None)
    vals, errs, env = [], [], []
    for j, r in enumerate(radii):
        t = curvature_lower_bound_truncated(E, K, x, r, cfg, key=(*key, 52, j))
        vals.append(t.value)
        errs.append(t.stat_error)
        env.append(ledger.blowup_envelope(r, r0))
    v = np.array(vals)
    if np.any(v <= 0):
        slope = math.nan
    else:
        slope = float(np.polyfit(np.log(radii), np.log(v), 1)[0])
    above = all(val >= e - SIGMA_K * err for val, e, err in zip(vals, env, errs))
    ok = above and math.isfinite(slope) and slope <= -(1 - SLOPE_SLACK) * K.s
    return BlowupReport(Verdict.PASS if ok else Verdict.FAIL, list(radii), vals, errs, env, slope)


# --------------------------------------------------------- viscosity scan

@dataclass
class ScanRecord:
    x: tuple
    status: str
    value: float
    error: float
    radius: float


@dataclass
class ScanReport:
    bound: float
    records: list

    def _with(self, status):
        return [rec for rec in self.records if rec.status == status]

    @property
    def violations(self):
        return self._with("violation")

    @property
    def unconstrained(self):
        return self._with("unconstrained")

    @property
    def inconclusive(self):
        return self._with("inconclusive")

    @property
    def max_value(self):
        vals = [rec.value for rec in self.records if rec.status in ("ok", "violation")]
        return max(vals) if vals else math.nan

    @property
    def constrained(self):
        return len(self.records) - len(self.unconstrained)

    def is_subsolution(self):
        return not self.violations and not self.inconclusive and self.constrained > 0


def viscosity_subsolution_scan(E, K, omega, bound, n_points, cfg, max_radius=None, key=()):
    """Curvature at sampled boundary points that admit an exterior touching ball."""
    if not isinstance(omega, Omega):
        omega = Omega.ball(*omega)
    rng = rng_for(cfg.seed, *key, 61)
    pts = E.sample_boundary(rng, n_points, omega.c, omega.radius)
    if max_radius is None:
        fs = E.feature_scale
        max_radius = min(omega.radius, 0.5 * fs if math.isfinite(fs) else omega.radius)
    records = []
    for i, x in enumerate(pts):
        ball = find_exterior_ball(E, x, max_radius, seed=cfg.seed + i)
        if ball is None:
            records.append(ScanRecord(tuple(x.tolist()), "unconstrained", math.nan, math.nan, 0.0))
            continue
        try:
            est = curvature_via_touching_ball(E, K, ball, cfg, key=(*key, 62, i), check=False)
        except CurvatureError:
            records.append(ScanRecord(tuple(x.tolist()), "inconclusive", math.nan, math.nan,
                                      ball.radius))
            continue
        if est.diverged:
            status = "violation" if est.direction > 0 else "ok"
            value, err = est.direction * math.inf, math.inf
        elif est.converged:
            value, err = est.value, est.error_bound
            status = "violation" if value > bound + err else "ok"
        else:
            status, value, err = "inconclusive", est.value, est.error_bound
        records.append(ScanRecord(tuple(x.tolist()), status, float(value), float(err), ball.radius))
    return ScanReport(float(bound), records)


# ------------------------------------------------- surface density chain

@dataclass(frozen=True)
class IdentityCheck:
    lhs: float
    rhs: float
    sigma: float

    @property
    def passes(self):
        return abs(self.lhs - self.rhs) <= SIGMA_K * self.sigma


def mean_oscillation_identity(E, center, r, cfg, key=(), n=None):
    """``int_{B_r} |chi_E - avg|`` against ``2 |E & B_r| |B_r \\ E| / |B_r|``.

    The average comes from one sample stream and the oscillation from an
    independent one; the error combines both.
    """
    n = int(n or cfg.volume_samples)
    vol = ball_volume(E.dim, r)
    p1 = volume_fraction(E, center, r, cfg, key=(*key, 71), n=n)
    p = p1.value
    rng = rng_for(cfg.seed, *key, 72)
    y = uniform_in_ball(rng, n, E.dim, np.asarray(center, float), r)
    chi = (E.classify(y) < 0).astype(float)
    dev = np.abs(chi - p)
    lhs = vol * dev.mean()
    rhs = 2 * vol * p * (1 - p)
    sigma = math.hypot(vol * dev.std() / math.sqrt(n), vol * abs(1 - 2 * p) * p1.error)
    return IdentityCheck(float(lhs), float(rhs), float(sigma))


@dataclass
class SurfaceDensityRow:
    order: float
    radius: float
    value: float
    error: float
    reference: float
    delta: float
    verdict: Verdict


def fractional_sb_check(E, radii, orders, delta, cfg, center=None, key=()):
    """``Per_a(E; B_r) >= delta Per_a(B_r)`` for each order ``a`` and radius.

    Order 1 uses the Minkowski content against ``d |B_1| r^(d-1)``; orders
    in (0, 1) use the fractional perimeter against the exact ball value.
    """
    d = E.dim
    center = E.reference_point() if center is None else np.asarray(center, float)
    rows = []
    for i, a in enumerate(orders):
        for j, r in enumerate(radii):
            om = Omega.ball(center, r)
            if a == 1:
                h = min(E.feature_scale, r) * 2.0 ** -6
                est = classical_perimeter_minkowski(E, om, h, cfg, key=(*key, 81, i, j))
                value, err = est.value, est.stat_error
                ref = d * unit_ball_volume(d) * r ** (d - 1)
            else:
                K = fractional_kernel(d, a)
                est = perimeter_k(E, om, K, cfg, key=(*key, 82, i, j))
                value, err = est.value, est.stat_error
                ref = ball_perimeter_exact(d, a, r)
            ok = value + SIGMA_K * err >= delta * ref
            rows.append(SurfaceDensityRow(float(a), float(r), float(value), float(err), ref,
                                          float(delta), Verdict.PASS if ok else Verdict.FAIL))
    return rows


# -------------------------------------------------- statement-level checks

@dataclass
class StatementReport:
    verdict: Verdict
    scan: ScanReport | None
    profile: DensityReport | None
    delta: float
    notes: list = field(default_factory=list)


def density_statement_check(E, K, R, M, cfg, radii=None, n_points=16, lam=None, Lam=None,
                            key=()):
    """Subsolution scan in ``B_{R/2}`` followed by a density sweep at the ledger delta.

    ``radii`` defaults to ``[R]``. The boundary share of the sweep is
    reported but not judged.
    """
    ledger = build_ledger(K.dim, K.s, K.lam if lam is None else lam,
                          K.Lam if Lam is None else Lam, M)
    center = E.reference_point()
    notes = []
    if E.membership(center) != Membership.BOUNDARY:
        return StatementReport(Verdict.NOT_APPLICABLE, None, None, ledger.delta_density,
                               ["reference point is not on the boundary"])
    scan = viscosity_subsolution_scan(E, K, Omega.ball(center, R / 2), M * R ** (-K.s),
                                      n_points, cfg, key=(*key, 91))
    if not scan.is_subsolution():
        notes.append(f"scan: {len(scan.violations)} violations, "
                      f"{len(scan.inconclusive)} inconclusive, max {scan.max_value:.4g}")
        return StatementReport(Verdict.NOT_APPLICABLE, scan, None, ledger.delta_density, notes)
    radii = [R] if radii is None else list(radii)
    prof = density_profile(E, center, radii, cfg, target=ledger.delta_density, key=(*key, 92))
    notes.append(f"margin {prof.margin():.4g} over delta {ledger.delta_density:.4g}")
    worst = max(b for b, _ in prof.boundary_fractions)
    notes.append(f"max boundary fraction {worst:.3g}")
    return StatementReport(prof.verdict, scan, prof, ledger.delta_density, notes)


@dataclass
class FatBoundaryReport:
    verdict: Verdict
    scan: ScanReport
    blowup_pass_fraction: float
    blowups: list
    notes: list = field(default_factory=list)


def fat_boundary_check(E, K, R, M, cfg, n_points=16, r0=None, key=()):
    """Blow-up at sampled boundary points of a sparse set below the ledger delta.

    The statement needs an empty viscosity scan. A finite union of grains
    always has touchable boundary points with large curvature, so the scan
    is never empty and the verdict is NOT_APPLICABLE; the blow-up pass
    fraction is still reported as the finite-scale diagnostic.
    """
    ledger = build_ledger(K.dim, K.s, K.lam, K.Lam, M)
    center = np.zeros(E.dim)
    vol, err = volume_in_ball(E, center, R, cfg, key=(*key, 101))
    notes = [f"|E & B_R| / |B_R| = {vol / ball_volume(E.dim, R):.3g}, "
             f"delta = {ledger.delta_sparse:.3g}"]
    scan = viscosity_subsolution_scan(E, K, Omega.ball(center, R / 2), M * R ** (-K.s),
                                      n_points, cfg, key=(*key, 102))
    rng = rng_for(cfg.seed, *key, 103)
    pts = E.sample_boundary(rng, n_points, center, R / 2)
    r0 = R / 4 if r0 is None else r0
    reports = [blowup_scan(E, K, x, r0, ledger, cfg, key=(*key, 104, i)) for i, x in enumerate(pts)]
    frac = float(np.mean([b.verdict == Verdict.PASS for b in reports])) if reports else 0.0
    sparse = vol + SIGMA_K * err <= ledger.delta_sparse * ball_volume(E.dim, R)
    applicable = sparse and not scan.violations and not scan.inconclusive
    if not applicable:
        notes.append("hypotheses not met at finite scale: blow-up fraction is diagnostic")
        verdict = Verdict.NOT_APPLICABLE
    else:
        verdict = Verdict.PASS if frac >= 1 - SLOPE_SLACK else Verdict.FAIL
    return FatBoundaryReport(verdict, scan, frac, reports, notes)
