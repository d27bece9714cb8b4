"""``nonlocal-geom`` command line driver.

Exit codes: 0 all pass, 2 any failure, 3 inconclusive or not applicable,
64 usage or input errors.
"""
from __future__ import annotations

import argparse
import csv
import io
import json
import os
import subprocess
import sys
import time

import numpy as np

from . import __version__
from .constants import LedgerError, build_ledger, ledger_to_csv
from .curvature import CurvatureError, curvature_pv, estimate_row
from .density import Verdict, density_profile
from .kernels import KernelError, fractional_kernel, kernel_from_json
from .quad import QuadConfig, rng_for
from .sets import SetError, set_from_json
from .suites import SUITES, pmap, run_suite, worker_count

EXIT = {Verdict.PASS: 0, Verdict.FAIL: 2, Verdict.INCONCLUSIVE: 3, Verdict.NOT_APPLICABLE: 3}
EXIT_USAGE = 64


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        sys.stderr.write(f"{self.prog}: error: {message}\n")
        sys.exit(EXIT_USAGE)


def version_string():
    here = os.path.dirname(os.path.abspath(__file__))
    try:
        out = subprocess.run(["git", "describe", "--always", "--dirty", "--tags"], cwd=here,
                             capture_output=True, text=True, timeout=5)
        if out.returncode == 0 and out.stdout.strip():
            return f"{__version__}+g{out.stdout.strip()}"
    except (OSError, subprocess.SubprocessError):
        pass
    return __version__


def _read_json(path, what):
    try:
        with open(path) as fh:
            return json.load(fh)
    except FileNotFoundError:
        raise UsageError(f"{what} file not found: {path}") from None
    except json.JSONDecodeError as exc:
        raise UsageError(f"{what} file {path}: line {exc.lineno} column {exc.colno}: "
                         f"{exc.msg}") from None


def load_scene(path):
    obj = _read_json(path, "scene")
    try:
        return set_from_json(obj)
    except (KeyError, TypeError, SetError, ValueError) as exc:
        raise UsageError(f"scene file {path}: {exc}") from None


def load_kernel(path, d):
    obj = _read_json(path, "kernel")
    try:
        return kernel_from_json(obj, d)
    except (KeyError, TypeError, KernelError, ValueError) as exc:
        raise UsageError(f"kernel file {path}: {exc}") from None


def load_config(args):
    cfg = QuadConfig()
    if args.config:
        try:
            cfg = QuadConfig.from_json(_read_json(args.config, "config"))
        except (TypeError, ValueError) as exc:
            raise UsageError(f"config file {args.config}: {exc}") from None
    if args.seed is not None:
        cfg = cfg.with_(seed=args.seed)
    return cfg


def _header(args, cfg, started):
    run = {k: v for k, v in sorted(vars(args).items()) if k != "func"}
    return [f"# version: {version_string()}",
            f"# run: {json.dumps(run, sort_keys=True, default=str)}",
            f"# config: {cfg.to_json()}",
            f"# seed: {cfg.seed}",
            f"# wall_time_s: {time.perf_counter() - started:.3f}"]


def _fmt(v):
    if isinstance(v, (float, np.floating)):
        return repr(float(v))
    if isinstance(v, np.integer):
        return str(int(v))
    return "" if v is None else str(v)


def rows_to_csv(rows, header_lines=()):
    buf = io.StringIO()
    for line in header_lines:
        buf.write(line + "\n")
    if rows:
        cols = list(rows[0])
        for r in rows[1:]:
            cols += [c for c in r if c not in cols]
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(cols)
        for r in rows:
            w.writerow([_fmt(r.get(c)) for c in cols])
    return buf.getvalue()


def _emit(text, out):
    if out:
        with open(out, "w") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)


def _kernel_for(args, d):
    if getattr(args, "kernel", None):
        return load_kernel(args.kernel, d)
    return fractional_kernel(d, args.s)


# -------------------------------------------------------------- curvature

def parse_points(text, E, seed):
    if text in ("origin", "contact", "reference"):
        return [E.reference_point()]
    if text.isdigit():
        return list(E.sample_boundary(rng_for(seed, 401), int(text), E.reference_point(), 1.0))
    pts = []
    for chunk in text.split(";"):
        try:
            p = np.array([float(v) for v in chunk.split(",")])
        except ValueError:
            raise UsageError(f"cannot parse point {chunk!r}") from None
        if p.shape != (E.dim,):
            raise UsageError(f"point {chunk!r} does not have {E.dim} coordinates")
        pts.append(p)
    return pts


def _curvature_task(args):
    i, E, K, x, cfg = args
    try:
        return i, curvature_pv(E, K, x, cfg, key=(i,)), None
    except CurvatureError as exc:
        return i, None, str(exc)


def cmd_curvature(args):
    started = time.perf_counter()
    cfg = load_config(args)
    E = load_scene(args.scene)
    K = _kernel_for(args, E.dim)
    pts = parse_points(args.points, E, cfg.seed)
    out = pmap(_curvature_task, [(i, E, K, x, cfg) for i, x in enumerate(pts)],
               worker_count(args.workers))
    rows, verdicts = [], []
    for (i, est, err), x in zip(out, pts):
        if est is None:
            raise UsageError(f"point {i}: {err}")
        rows.append(estimate_row(E, K, x, est))
        verdicts.append(est.verdict)
    _emit(rows_to_csv(rows, _header(args, cfg, started)), args.out)
    if all(v == "Converged" for v in verdicts):
        return 0
    return 3


# ----------------------------------------------------------------- verify

def cmd_verify(args):
    started = time.perf_counter()
    cfg = load_config(args)
    params = {k: getattr(args, k) for k in ("R", "trials", "points", "M", "d", "s", "scale")
              if getattr(args, k) is not None}
    if args.scene:
        params["scene"] = load_scene(args.scene)
        params["d"] = params["scene"].dim
    if args.kernel:
        params["kernel"] = load_kernel(args.kernel, params.get("d", 2))
    rep = run_suite(args.suite, params, cfg, worker_count(args.workers))
    for line in rep.lines:
        print(line)
    print(f"verdict: {rep.verdict.value}")
    if args.out:
        header = _header(args, cfg, started)
        if args.out.endswith(".json"):
            doc = {"suite": rep.name, "verdict": rep.verdict.value, "lines": rep.lines,
                   "rows": rep.rows, "meta": header}
            _emit(json.dumps(doc, sort_keys=True, indent=1, default=float) + "\n", args.out)
        else:
            _emit(rows_to_csv(rep.rows, header + [f"# verdict: {rep.verdict.value}"]), args.out)
    return EXIT[rep.verdict]


# -------------------------------------------------------------- constants

def cmd_constants(args):
    try:
        ledger = build_ledger(args.d, args.s, args.lam, args.Lam, args.M)
    except LedgerError as exc:
        raise UsageError(str(exc)) from None
    _emit(ledger_to_csv(ledger), args.out)
    return 0


# ---------------------------------------------------------------- density

def parse_radii(text):
    """``a:b:n`` (n log-spaced radii from a to b) or a comma list."""
    try:
        if ":" in text:
            a, b, n = text.split(":")
            return list(np.geomspace(float(a), float(b), int(n)))
        return [float(v) for v in text.split(",")]
    except ValueError:
        raise UsageError(f"cannot parse radii {text!r}") from None


def cmd_density(args):
    started = time.perf_counter()
    cfg = load_config(args)
    E = load_scene(args.scene)
    center = E.reference_point() if args.center is None else \
        np.array([float(v) for v in args.center.split(",")])
    if center.shape != (E.dim,):
        raise UsageError("center has the wrong dimension")
    target = None
    if args.target == "ledger":
        K = _kernel_for(args, E.dim)
        target = build_ledger(E.dim, K.s, K.lam, K.Lam, args.M).delta_density
    elif args.target is not None:
        try:
            target = float(args.target)
        except ValueError:
            raise UsageError(f"--target must be a number or 'ledger', got {args.target!r}") from None
    try:
        rep = density_profile(E, center, parse_radii(args.radii), cfg, target=target)
    except ValueError as exc:
        raise UsageError(str(exc)) from None
    _emit(rows_to_csv(rep.rows(), _header(args, cfg, started)), args.out)
    if args.plot:
        _plot_profile(rep, args.plot)
    return EXIT[rep.verdict] if target is not None else 0


def _plot_profile(rep, path):
    try:
        import matplotlib
        matplotlib.use("Agg")
        import matplotlib.pyplot as plt
    except ImportError:
        raise UsageError("--plot needs matplotlib (install the 'plot' extra)") from None
    fig, ax = plt.subplots(figsize=(5, 3.5))
    v = np.array([f for f, _ in rep.fractions])
    e = np.array([err for _, err in rep.fractions])
    ax.errorbar(rep.radii, v, yerr=3 * e, marker="o", ms=3, lw=1)
    if rep.target is not None:
        ax.axhline(rep.target, color="k", ls="--", lw=0.8)
    ax.set_xscale("log")
    ax.set_xlabel("r")
    ax.set_ylabel("|E ∩ B_r| / |B_r|")
    fig.tight_layout()
    fig.savefig(path)
    plt.close(fig)


# ------------------------------------------------------------------ parser

def _common(p, scene_required=False):
    p.add_argument("--scene", required=scene_required, help="scene JSON file")
    p.add_argument("--kernel", help="kernel JSON file (default: fractional of order --s)")
    p.add_argument("--config", help="quadrature config JSON file")
    p.add_argument("--seed", type=int, help="override the config seed")
    p.add_argument("--workers", type=int, help="worker processes (env NONLOCAL_GEOM_WORKERS)")
    p.add_argument("--out", help="output file (default stdout)")
    p.add_argument("--s", type=float, default=0.5, help="kernel order when --kernel is absent")


def build_parser():
    ap = _Parser(prog="nonlocal-geom", description=__doc__.splitlines()[0])
    ap.add_argument("--version", action="version", version=version_string())
    sub = ap.add_subparsers(dest="command", required=True, parser_class=_Parser)

    p = sub.add_parser("curvature", help="principal-value curvature at boundary points")
    _common(p, scene_required=True)
    p.add_argument("--points", default="origin",
                   help="'origin'/'contact', a count, or 'x1,x2;y1,y2'")
    p.set_defaults(func=cmd_curvature)

    p = sub.add_parser("verify", help="run a verification suite")
    p.add_argument("suite", choices=sorted(SUITES))
    _common(p)
    p.set_defaults(s=None)
    for name, typ in (("R", float), ("trials", int), ("points", int), ("M", float),
                      ("d", int), ("scale", float)):
        p.add_argument(f"--{name}", type=typ)
    p.set_defaults(func=cmd_verify)

    p = sub.add_parser("constants", help="write the constant ledger as CSV")
    p.add_argument("--d", type=int, required=True)
    p.add_argument("--s", type=float, required=True)
    p.add_argument("--lambda", dest="lam", type=float, default=1.0)
    p.add_argument("--Lambda", dest="Lam", type=float, default=1.0)
    p.add_argument("--M", type=float, default=0.0)
    p.add_argument("--out")
    p.set_defaults(func=cmd_constants)

    p = sub.add_parser("density", help="volume-fraction profile around a point")
    _common(p, scene_required=True)
    p.add_argument("--center", help="comma-separated coordinates (default: reference point)")
    p.add_argument("--radii", default="0.01:10:7", help="'a:b:n' log-spaced or a comma list")
    p.add_argument("--target", help="a number, or 'ledger' for the ledger's density constant")
    p.add_argument("--M", type=float, default=0.0)
    p.add_argument("--plot", help="write a static PNG/PDF plot of the profile")
    p.set_defaults(func=cmd_density)
    return ap


def main(argv=None):
    try:
        args = build_parser().parse_args(argv)
    except SystemExit as exc:
        return exc.code
    try:
        return args.func(args)
    except UsageError as exc:
        print(f"nonlocal-geom: {exc}", file=sys.stderr)
        return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())
