"""Named verification suites with default experiment designs.

Each suite takes a parameter mapping and a :class:`QuadConfig` and returns a
:class:`SuiteReport`. Independent trials are fanned out to a process pool;
results are gathered in trial order, so reports do not depend on scheduling.
"""
from __future__ import annotations

import math
import os
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from . import density as dn
from .constants import build_ledger
from .curvature import (CurvatureError, ball_curvature_exact, curvature_pv,
                        curvature_via_touching_ball)
from .density import Verdict, combine
from .kernels import anisotropic_kernel, fractional_kernel
from .perimeter import Omega
from .quad import QuadConfig, rng_for
from .sets import (Ball, BallComplement, ConeSector, HalfSpace, PeriodicSlab, Slab, SparseDust,
                   UnionOfBalls, UnionOfBoxes, ball_volume, find_exterior_ball, uniform_in_ball)

ACCEPT_FRACTION = 0.9


@dataclass
class SuiteReport:
    name: str
    verdict: Verdict
    lines: list = field(default_factory=list)
    rows: list = field(default_factory=list)
    stats: dict = field(default_factory=dict)


def worker_count(requested=None):
    if requested:
        return max(1, int(requested))
    env = os.environ.get("NONLOCAL_GEOM_WORKERS")
    return max(1, int(env)) if env else 1


def pmap(fn, items, workers=1):
    items = list(items)
    if workers <= 1 or len(items) < 2:
        return [fn(it) for it in items]
    with ProcessPoolExecutor(max_workers=workers) as ex:
        return list(ex.map(fn, items))


def _kernel(params, d=None, s=None):
    K = params.get("kernel")
    if K is not None:
        return K
    return fractional_kernel(d or params.get("d", 2), s or params.get("s", 0.5))


def _ledger_for(K, M=0.0):
    return build_ledger(K.dim, K.s, K.lam, K.Lam, M)


def _fraction_verdict(verdicts, needed=ACCEPT_FRACTION):
    """PASS when at least ``needed`` pass and nothing fails."""
    if any(v == Verdict.FAIL for v in verdicts):
        return Verdict.FAIL
    if not verdicts:
        return Verdict.NOT_APPLICABLE
    frac = sum(v == Verdict.PASS for v in verdicts) / len(verdicts)
    return Verdict.PASS if frac >= needed else Verdict.INCONCLUSIVE


# ------------------------------------------------------------ sparse points

def random_sparse_set(rng, d, R, budget):
    """Union of equal balls in ``B_R`` with total volume at most ``budget``."""
    k = int(rng.integers(1, 31))
    g = (rng.uniform(0.5, 1.0) * budget / (k * ball_volume(d, 1.0))) ** (1.0 / d)
    if rng.random() < 0.5:
        centers = uniform_in_ball(rng, k, d, np.zeros(d), R - g)
    else:
        hub = uniform_in_ball(rng, 1, d, np.zeros(d), R / 4)[0]
        spread = rng.uniform(2 * g, R / 8)
        centers = uniform_in_ball(rng, k, d, hub, spread)
    return UnionOfBalls(d, centers, g)


def _sparse_trial(args):
    i, d, R, grid, alpha, budget, seed = args
    E = random_sparse_set(rng_for(seed, 301, i), d, R, budget)
    rep = dn.sparse_point_measure(E, R, alpha, 2 * R / grid)
    return i, len(E.centers), rep


def suite_sparse_points(params, cfg, workers=1):
    d, R = int(params.get("d", 2)), float(params.get("R", 1.0))
    grid = int(params.get("grid", 256))
    trials = int(params.get("trials", 20))
    K = _kernel(params, d)
    L = _ledger_for(K, params.get("M", 0.0))
    budget = L.theta * L.alpha_density * ball_volume(d, R)
    out = pmap(_sparse_trial, [(i, d, R, grid, L.alpha_density, budget, cfg.seed)
                               for i in range(trials)], workers)
    rows, verdicts = [], []
    for i, n, rep in out:
        ok = rep.meets_half()
        verdicts.append(Verdict.PASS if ok else Verdict.FAIL)
        rows.append({"trial": i, "grains": n, "measure": rep.measure_dalpha,
                     "halfBall": rep.half_ball_measure, "gridError": rep.grid_error,
                     "ratio": rep.measure_dalpha / rep.half_ball_measure,
                     "verdict": verdicts[-1].value})
    worst = min(r["ratio"] for r in rows)
    return SuiteReport("sparse-points", combine(verdicts), [
        f"alpha = {L.alpha_density:.6g}, theta = {L.theta:.6g}, grid {grid}^{d}",
        f"{sum(v == Verdict.PASS for v in verdicts)}/{trials} trials reach half of |B_(R/4)|; "
        f"smallest ratio {worst:.4f}"], rows, {"worst_ratio": worst})


# ------------------------------------------------------------ rearrangement

def random_rearrangement_instance(rng, d=2):
    c = rng.uniform(-1, 1, d)
    R = rng.uniform(0.3, 1.5)
    k = int(rng.integers(1, 6))
    lo = rng.uniform(-1.5, 1.5, (k, d))
    E = UnionOfBoxes(d, lo, lo + rng.uniform(0.05, 1.0, (k, d)))
    x = None
    for _ in range(200):
        y = uniform_in_ball(rng, 1, d, c, R)[0]
        if E.classify(y[None, :])[0] < 0:
            x = y
            break
    if x is None:
        x = uniform_in_ball(rng, 1, d, c, R)[0]
    return Omega.ball(c, R), E, x


def _rearrangement_trial(args):
    i, s, cfg = args
    om, E, x = random_rearrangement_instance(rng_for(cfg.seed, 311, i))
    return i, dn.rearrangement_check(om, E, x, s, cfg, key=(i,))


def equality_instances(rng, n, d=2):
    """``E = B_rho(x) & Omega``: the rearranged set is E itself."""
    out = []
    for _ in range(n):
        om = Omega.ball(rng.uniform(-1, 1, d), rng.uniform(0.5, 1.5))
        x = uniform_in_ball(rng, 1, d, om.c, 0.5 * om.radius)[0]
        rho = rng.uniform(0.05, 0.45) * om.radius
        out.append((om, Ball(d, x, rho), x))
    return out


def suite_rearrangement(params, cfg, workers=1):
    s = float(params.get("s", 0.5))
    trials = int(params.get("trials", 200))
    out = pmap(_rearrangement_trial, [(i, s, cfg) for i in range(trials)], workers)
    rows, verdicts = [], []
    for i, res in out:
        verdicts.append(Verdict.PASS if res.passes else Verdict.FAIL)
        rows.append({"trial": i, "lhs": res.lhs, "rhs": res.rhs, "rho": res.rho,
                     "sigma": res.sigma, "verdict": verdicts[-1].value})
    eq = [dn.rearrangement_check(om, E, x, s, cfg, key=(999, j))
          for j, (om, E, x) in enumerate(equality_instances(rng_for(cfg.seed, 312), 5))]
    eq_ok = all(r.equal for r in eq)
    verdicts.append(Verdict.PASS if eq_ok else Verdict.FAIL)
    n_pass = sum(v == Verdict.PASS for v in verdicts[:-1])
    return SuiteReport("rearrangement", combine(verdicts), [
        f"{n_pass}/{trials} random instances satisfy lhs >= rhs - 3 sigma",
        f"equality cases: {'all within 3 sigma' if eq_ok else 'MISMATCH'}"], rows,
        {"passed": n_pass, "equality": eq_ok})


# -------------------------------------------------------- dust experiments

def _dust(params, K, target, scale):
    E = params.get("scene")
    if E is not None:
        return E
    return SparseDust(K.dim, target, scale, seed=int(params.get("dust_seed", 3)))


def _touching_trial(args):
    i, E, K, x, scale, M, L, cfg = args
    ball = find_exterior_ball(E, x, scale / 2, seed=cfg.seed + i)
    if ball is None:
        return i, None
    sub = cfg.with_(eps0=min(cfg.eps0, scale), k_max=max(cfg.k_max, 16))
    return i, dn.sparse_curvature_threshold(E, K, ball, M, L, sub, key=(i,))


def suite_touching_threshold(params, cfg, workers=1):
    K = _kernel(params)
    M = float(params.get("M", 0.0))
    L = _ledger_for(K, M)
    scale = float(params.get("scale", 2.0 ** -8))
    E = _dust(params, K, L.beta / 2, scale)
    n = int(params.get("points", 50))
    pts = E.sample_boundary(rng_for(cfg.seed, 321), n, np.zeros(K.dim), 1.0)
    out = pmap(_touching_trial, [(i, E, K, x, scale, M, L, cfg) for i, x in enumerate(pts)],
               workers)
    rows, verdicts = [], []
    for i, res in out:
        v = Verdict.INCONCLUSIVE if res is None else res.verdict
        verdicts.append(v)
        rows.append({"point": i, "verdict": v.value,
                     "value": math.nan if res is None else res.value,
                     "threshold": math.nan if res is None else res.threshold,
                     "errorBound": math.nan if res is None else res.error})
    frac = sum(v == Verdict.PASS for v in verdicts) / max(1, len(verdicts))
    return SuiteReport("touching-threshold", _fraction_verdict(verdicts), [
        f"dust target beta/2 = {L.beta / 2:.4g}, scale {scale:.4g}",
        f"pass fraction {frac:.3f} over {len(verdicts)} contact points; "
        f"{sum(v == Verdict.FAIL for v in verdicts)} failures"], rows, {"pass_fraction": frac})


def _dyadic(lo, hi):
    out, r = [], lo
    while r <= hi * (1 + 1e-12):
        out.append(r)
        r *= 2
    return out


def _shell_trial(args):
    i, E, K, x, radii, L, cfg = args
    return i, [dn.shell_lower_bound_check(E, K, x, r, L, cfg, key=(i, j))
               for j, r in enumerate(radii)]


def suite_shell_bound(params, cfg, workers=1):
    K = _kernel(params)
    L = _ledger_for(K, params.get("M", 0.0))
    scale = float(params.get("scale", 2.0 ** -8))
    E = _dust(params, K, L.gamma / 2, scale)
    n = int(params.get("points", 50))
    radii = _dyadic(scale, 0.25)
    pts = E.sample_boundary(rng_for(cfg.seed, 331), n, np.zeros(K.dim), 1.0)
    out = pmap(_shell_trial, [(i, E, K, x, radii, L, cfg) for i, x in enumerate(pts)], workers)
    rows, verdicts = [], []
    for i, checks in out:
        for r, c in zip(radii, checks):
            rows.append({"point": i, "r": r, "value": c.value, "threshold": c.threshold,
                         "error": c.error, "verdict": c.verdict.value})
        verdicts.append(combine([c.verdict for c in checks]))
    frac = sum(v == Verdict.PASS for v in verdicts) / max(1, len(verdicts))
    return SuiteReport("shell-bound", _fraction_verdict(verdicts), [
        f"dust target gamma/2 = {L.gamma / 2:.4g}, radii {radii[0]:.4g}..{radii[-1]:.4g}",
        f"pass fraction {frac:.3f} over {len(verdicts)} points"], rows, {"pass_fraction": frac})


def _blowup_trial(args):
    i, E, K, x, r0, L, cfg = args
    return i, dn.blowup_scan(E, K, x, r0, L, cfg, key=(i,))


def suite_blowup(params, cfg, workers=1):
    K = _kernel(params)
    L = _ledger_for(K, params.get("M", 0.0))
    scale = float(params.get("scale", 2.0 ** -8))
    E = _dust(params, K, L.gamma / 2, scale)
    n = int(params.get("points", 50))
    r0 = float(params.get("r0", 0.25))
    pts = E.sample_boundary(rng_for(cfg.seed, 341), n, np.zeros(K.dim), 1.0)
    out = pmap(_blowup_trial, [(i, E, K, x, r0, L, cfg) for i, x in enumerate(pts)], workers)
    rows, verdicts, close = [], [], []
    for i, rep in out:
        verdicts.append(rep.verdict)
        close.append(rep.exponent_close(K.s))
        rows.append({"point": i, "slope": rep.slope, "verdict": rep.verdict.value,
                     "exponentClose": close[-1]})
    slopes = np.array([r["slope"] for r in rows], dtype=float)
    frac = sum(v == Verdict.PASS for v in verdicts) / max(1, len(verdicts))
    v = _fraction_verdict(verdicts)
    if v == Verdict.PASS and np.mean(close) < ACCEPT_FRACTION:
        v = Verdict.FAIL
    return SuiteReport("blowup", v, [
        f"pass fraction {frac:.3f}; fitted exponents in [{np.nanmin(slopes):.4f}, "
        f"{np.nanmax(slopes):.4f}] against -s = {-K.s}"], rows,
        {"pass_fraction": frac, "close_fraction": float(np.mean(close)),
         "slopes": slopes.tolist()})


def suite_fat_boundary(params, cfg, workers=1):
    K = _kernel(params)
    L = _ledger_for(K, params.get("M", 0.0))
    scale = float(params.get("scale", 2.0 ** -6))
    E = _dust(params, K, L.delta_sparse / 2, scale)
    rep = dn.fat_boundary_check(E, K, float(params.get("R", 1.0)), float(params.get("M", 0.0)),
                                cfg, n_points=int(params.get("points", 16)))
    rows = [{"point": i, "slope": b.slope, "verdict": b.verdict.value}
            for i, b in enumerate(rep.blowups)]
    return SuiteReport("fat-boundary", rep.verdict, [
        *rep.notes, f"scan: {len(rep.scan.violations)} violations of "
        f"{len(rep.scan.records)} sampled points",
        f"blow-up pass fraction (diagnostic) {rep.blowup_pass_fraction:.3f}"], rows,
        {"pass_fraction": rep.blowup_pass_fraction})


# --------------------------------------------------------- statement level

def suite_density(params, cfg, workers=1):
    E = params.get("scene") or HalfSpace(int(params.get("d", 2)))
    K = _kernel(params, E.dim)
    R = float(params.get("R", 4.0))
    M = float(params.get("M", 0.0))
    decades = int(params.get("decades", 4))
    radii = [R * 10.0 ** (-k) for k in range(decades - 1, -1, -1)]
    rep = dn.density_statement_check(E, K, R, M, cfg, radii=radii,
                                     n_points=int(params.get("points", 16)))
    rows = rep.profile.rows() if rep.profile else []
    return SuiteReport("density", rep.verdict, [f"set {E.label()}", *rep.notes], rows,
                       {"delta": rep.delta,
                        "margin": rep.profile.margin() if rep.profile else None})


def suite_perimeter_density(params, cfg, workers=1):
    d = int(params.get("d", 2))
    K = _kernel(params, d)
    L = _ledger_for(K, params.get("M", 0.0))
    rng = rng_for(cfg.seed, 351)
    trials = int(params.get("trials", 50))
    ident = []
    for i in range(trials):
        k = int(rng.integers(1, 4))
        lo = rng.uniform(-1, 1, (k, d))
        E = UnionOfBoxes(d, lo, lo + rng.uniform(0.1, 1.5, (k, d)))
        ident.append(dn.mean_oscillation_identity(E, rng.uniform(-0.5, 0.5, d),
                                                  rng.uniform(0.2, 1.5), cfg, key=(i,)))
    id_ok = sum(c.passes for c in ident)
    rows, verdicts = [], [Verdict.PASS if id_ok == trials else Verdict.FAIL]
    radii = [0.1, 1.0, 10.0, 100.0]
    for E in (HalfSpace(d), PeriodicSlab(d, 0.1)):
        for row in dn.fractional_sb_check(E, radii, [0.5, 1.0], L.delta_density, cfg):
            verdicts.append(row.verdict)
            rows.append({"set": E.label(), "order": row.order, "r": row.radius,
                         "value": row.value, "error": row.error, "reference": row.reference,
                         "delta": row.delta, "verdict": row.verdict.value})
    return SuiteReport("perimeter-density", combine(verdicts), [
        f"identity within 3 sigma on {id_ok}/{trials} instances",
        f"surface density rows passing: {sum(v == Verdict.PASS for v in verdicts[1:])}/"
        f"{len(verdicts) - 1} with delta = {L.delta_density:.4g}"], rows,
        {"identity_passed": id_ok})


# ------------------------------------------------------ curvature identities

def suite_ball_envelope(params, cfg, workers=1):
    K = params.get("kernel") or anisotropic_kernel(2, 0.5, {0: 1.5, 2: 0.5})
    H = ball_curvature_exact(K.dim, K.s)
    rows, verdicts = [], []
    for r in (0.5, 1.0, 2.0):
        for j in range(8):
            t = 2 * math.pi * (j + 0.5) / 8
            x = r * (np.array([math.cos(t), math.sin(t)]) if K.dim == 2 else np.eye(K.dim)[0])
            est = curvature_pv(Ball(K.dim, np.zeros(K.dim), r), K, x, cfg, key=(int(r * 8), j))
            lo, hi = K.lam * H * r ** -K.s, K.Lam * H * r ** -K.s
            if not est.converged:
                v = Verdict.INCONCLUSIVE
            else:
                ok = lo - est.error_bound <= est.value <= hi + est.error_bound
                v = Verdict.PASS if ok else Verdict.FAIL
            verdicts.append(v)
            rows.append({"r": r, "angle": t, "value": est.value, "errorBound": est.error_bound,
                         "lower": lo, "upper": hi, "verdict": v.value})
    return SuiteReport("ball-envelope", combine(verdicts), [
        f"{sum(v == Verdict.PASS for v in verdicts)}/{len(verdicts)} values inside "
        f"[lambda, Lambda] * Hball * r^-s"], rows)


def random_contact_pair(rng):
    d = int(rng.integers(1, 3))
    s = float(rng.choice([0.25, 0.5, 0.75]))
    choices = [lambda: HalfSpace(d), lambda: Ball(d, np.zeros(d), rng.uniform(0.5, 2)),
               lambda: BallComplement(d, np.zeros(d), rng.uniform(0.5, 2)),
               lambda: Slab(d, rng.uniform(0.5, 2)),
               lambda: PeriodicSlab(d, rng.uniform(0.1, 0.5))]
    if d == 2:
        choices.append(lambda: ConeSector(2, half_angle=rng.uniform(0.3, 1.2)))
    E = choices[int(rng.integers(len(choices)))]()
    x = E.sample_boundary(rng, 1, E.reference_point(), 1.0)[0]
    return E, fractional_kernel(d, s), x


def _formula_trial(args):
    i, cfg = args
    E, K, x = random_contact_pair(rng_for(cfg.seed, 361, i))
    ell = E.feature_scale if math.isfinite(E.feature_scale) else 1.0
    ball = find_exterior_ball(E, x, min(1.0, ell / 2), seed=cfg.seed + i)
    if ball is None:
        return i, E.label(), None, None
    try:
        pv = curvature_pv(E, K, x, cfg, key=(i, 1))
        tb = curvature_via_touching_ball(E, K, ball, cfg, key=(i, 2))
    except CurvatureError:
        return i, E.label(), None, None
    return i, E.label(), pv, tb


def suite_touching_formula(params, cfg, workers=1):
    trials = int(params.get("trials", 20))
    out = pmap(_formula_trial, [(i, cfg) for i in range(trials)], workers)
    rows, verdicts = [], []
    for i, label, pv, tb in out:
        if pv is None or not (pv.converged and tb.converged):
            v = Verdict.INCONCLUSIVE
            rows.append({"trial": i, "set": label, "verdict": v.value})
        else:
            ok = abs(pv.value - tb.value) <= pv.error_bound + tb.error_bound
            v = Verdict.PASS if ok else Verdict.FAIL
            rows.append({"trial": i, "set": label, "pv": pv.value, "pvError": pv.error_bound,
                         "touching": tb.value, "touchingError": tb.error_bound,
                         "verdict": v.value})
        verdicts.append(v)
    return SuiteReport("touching-formula", combine(verdicts), [
        f"{sum(v == Verdict.PASS for v in verdicts)}/{trials} pairs agree within the "
        f"combined error bound"], rows)


SUITES = {
    "sparse-points": suite_sparse_points,
    "rearrangement": suite_rearrangement,
    "touching-threshold": suite_touching_threshold,
    "shell-bound": suite_shell_bound,
    "blowup": suite_blowup,
    "density": suite_density,
    "fat-boundary": suite_fat_boundary,
    "perimeter-density": suite_perimeter_density,
    "ball-envelope": suite_ball_envelope,
    "touching-formula": suite_touching_formula,
}


def run_suite(name, params=None, cfg=None, workers=1):
    if name not in SUITES:
        raise KeyError(f"unknown suite {name!r}; choose from {', '.join(sorted(SUITES))}")
    return SUITES[name](dict(params or {}), cfg or QuadConfig(), worker_count(workers))
