"""Explicit constants of the density-estimate proof chain.

Everything is a closed-form function of ``(d, s, lam, Lam, M)``. The
ledger is plain data: it can be written to CSV and read back without
recomputation.

Naming: ``*_density`` entries belong to the volumetric density estimate
for subsolutions, ``*_sparse`` entries to the positive-measure blow-up
statement for sparse subsolutions.
"""
from __future__ import annotations

import csv
import io
import math
from dataclasses import asdict, dataclass, fields

from .curvature import ball_curvature_exact
from .sets import unit_ball_volume


class LedgerError(ValueError):
    pass


# name -> (formula, anchor)
FORMULAS = {
    "Hball": ("2^(1-s) pi^((d-1)/2) Gamma((1-s)/2) / (s Gamma((d-s)/2))",
              "fractional curvature of the unit ball at a boundary point"),
    "C1": ("Lambda * Hball", "upper bound for the curvature of the touching ball"),
    "C4": ("lambda d |B_1| / (2 s)", "half-ball lower bound for the rearranged integral"),
    "C2": ("C4", "coefficient of the complement integral bound"),
    "C3": ("2^(-s-s/d)", "radius ratio after volume matching"),
    "beta": ("(C2 C3 / (M + 1 + C1 + C2))^(d/s)", "density threshold forcing curvature >= (M+1) r^-s"),
    "CHL": ("3^d", "weak (1,1) constant of the centred maximal function (Vitali covering)"),
    "theta": ("1 / (2 4^d CHL)", "measure fraction for sparse centres"),
    "C1shell": ("lambda d |B_1| (2^s - 1) / s", "annulus integral of the lower envelope"),
    "C2shell": ("Lambda |B_1| 2^(d+s)", "annulus bound for the set's share"),
    "gamma": ("C1shell / (2 C2shell)", "density threshold of the shell estimate"),
    "Cshell": ("C1shell / 2", "shell lower bound coefficient"),
    "alpha_density": ("beta", "sparsity level for the density estimate"),
    "alpha_sparse": ("min(beta, gamma)", "sparsity level for the blow-up statement"),
    "delta_density": ("theta * alpha_density", "density constant for subsolutions"),
    "delta_sparse": ("theta * alpha_sparse", "density constant for the blow-up statement"),
}
INPUTS = ("d", "s", "lam", "Lam", "M")


@dataclass(frozen=True)
class ConstantLedger:
    d: int
    s: float
    lam: float
    Lam: float
    M: float
    Hball: float
    C1: float
    C4: float
    C2: float
    C3: float
    beta: float
    CHL: float
    theta: float
    C1shell: float
    C2shell: float
    gamma: float
    Cshell: float
    alpha_density: float
    alpha_sparse: float
    delta_density: float
    delta_sparse: float

    def rows(self):
        return [(name, getattr(self, name), *FORMULAS[name]) for name in FORMULAS]

    @property
    def tail_constant(self):
        """``2^s Lam d |B_1| / s``: bound on the far part in the blow-up chain."""
        return 2.0 ** self.s * self.Lam * self.d * unit_ball_volume(self.d) / self.s

    def blowup_envelope(self, r, r0):
        """Lower envelope ``-tail_constant / r0^s + 2^-s Cshell r^-s``."""
        return -self.tail_constant / r0 ** self.s + 2.0 ** (-self.s) * self.Cshell * r ** (-self.s)

    def inputs(self):
        return {k: getattr(self, k) for k in INPUTS}


def build_ledger(d, s, lam=1.0, Lam=1.0, M=0.0):
    d = int(d)
    if d < 1:
        raise LedgerError("d must be a positive integer")
    if not 0.0 < s < 1.0:
        raise LedgerError(f"s must lie in (0, 1), got {s}")
    if not 0.0 < lam <= Lam:
        raise LedgerError(f"need 0 < lambda <= Lambda, got {lam}, {Lam}")
    if not M >= 0.0:
        raise LedgerError("M must be non-negative")
    b1 = unit_ball_volume(d)
    Hball = ball_curvature_exact(d, s)
    C1 = Lam * Hball
    C4 = lam * d * b1 / (2 * s)
    C2 = C4
    C3 = 2.0 ** (-s - s / d)
    beta = (C2 * C3 / (M + 1 + C1 + C2)) ** (d / s)
    CHL = 3.0 ** d
    theta = 0.5 / (4.0 ** d * CHL)
    C1shell = lam * d * b1 * (2.0 ** s - 1) / s
    C2shell = Lam * b1 * 2.0 ** (d + s)
    gamma = C1shell / (2 * C2shell)
    Cshell = C1shell / 2
    alpha_density = beta
    alpha_sparse = min(beta, gamma)
    for name, a in (("alpha_density", alpha_density), ("alpha_sparse", alpha_sparse)):
        if not a < 1.0:
            raise LedgerError(f"{name} = {a} is not < 1")
    return ConstantLedger(d, float(s), float(lam), float(Lam), float(M), Hball, C1, C4, C2, C3,
                          beta, CHL, theta, C1shell, C2shell, gamma, Cshell, alpha_density,
                          alpha_sparse, theta * alpha_density, theta * alpha_sparse)


def ledger_to_csv(ledger):
    buf = io.StringIO()
    ins = " ".join(f"{k}={getattr(ledger, k)!r}" for k in INPUTS)
    buf.write(f"# inputs: {ins}\n")
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["name", "value", "formula", "anchor"])
    for name, value, formula, anchor in ledger.rows():
        w.writerow([name, repr(float(value)), formula, anchor])
    return buf.getvalue()


def ledger_from_csv(text):
    inputs = {}
    body = []
    for line in text.splitlines():
        if line.startswith("# inputs:"):
            for tok in line.split(":", 1)[1].split():
                k, v = tok.split("=")
                inputs[k] = int(v) if k == "d" else float(v)
        elif line and not line.startswith("#"):
            body.append(line)
    missing = set(INPUTS) - set(inputs)
    if missing:
        raise LedgerError(f"ledger CSV lacks inputs {sorted(missing)}")
    values = {row["name"]: float(row["value"]) for row in csv.DictReader(body)}
    names = [f.name for f in fields(ConstantLedger)]
    try:
        return ConstantLedger(**inputs, **{k: values[k] for k in names if k not in INPUTS})
    except KeyError as exc:
        raise LedgerError(f"ledger CSV lacks row {exc}") from exc


def ledger_report(ledger):
    """Fixed-width text table of every constant."""
    lines = [f"{'name':<14}{'value':>24}  formula"]
    for name, value, formula, _ in ledger.rows():
        lines.append(f"{name:<14}{value:>24.12g}  {formula}")
    return "\n".join(lines)


def ledger_dict(ledger):
    return asdict(ledger)
