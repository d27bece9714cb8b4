import math

import numpy as np
import pytest

from nonlocal_geom.kernels import fractional_kernel
from nonlocal_geom.perimeter import (Omega, ball_perimeter_exact, classical_perimeter_minkowski,
                                     perimeter_k, perimeter_row, perimeter_scaling_check)
from nonlocal_geom.quad import QuadConfig
from nonlocal_geom.sets import Ball, HalfSpace, PeriodicSlab

# nested adaptive quadrature of int_B int_{B^c} |x-y|^-2.5 in the plane
BALL_PER_D2 = 62.13063877890789


@pytest.fixture(scope="module")
def cfg():
    return QuadConfig(samples_per_shell=8192)


def test_ball_perimeter_closed_form():
    assert ball_perimeter_exact(2, 0.5) == pytest.approx(BALL_PER_D2, rel=1e-9)
    assert ball_perimeter_exact(1, 0.5, 0.5) == pytest.approx(8.0)
    assert ball_perimeter_exact(2, 0.5, 2.0) == pytest.approx(BALL_PER_D2 * 2 ** 1.5)


def test_interval_perimeter_mc(cfg):
    est = perimeter_k(Ball(1, [0.5], 0.5), None, fractional_kernel(1, 0.5), cfg)
    assert est.value == pytest.approx(8.0, abs=4 * est.stat_error + 0.02)


def test_disk_perimeter_mc(cfg):
    est = perimeter_k(Ball(2), None, fractional_kernel(2, 0.5), cfg)
    assert est.value == pytest.approx(BALL_PER_D2, abs=4 * est.stat_error + 0.01 * BALL_PER_D2)
    assert est.cross_terms_agree()


def test_localised_half_line(cfg):
    # pairs straddling 0 with one end in (-1, 1): 4 + 4(sqrt2 - 1)
    est = perimeter_k(HalfSpace(1), Omega.ball([0.0], 1.0), fractional_kernel(1, 0.5), cfg)
    assert est.value == pytest.approx(4 * math.sqrt(2), abs=4 * est.stat_error + 0.05)


def test_scaling(cfg):
    res = perimeter_scaling_check(Ball(2), 2.0, fractional_kernel(2, 0.5), cfg)
    assert res.expected == pytest.approx(2 ** 1.5)
    assert abs(res.ratio - res.expected) <= 4 * res.error + 0.03 * res.expected


def test_minkowski_examples(cfg):
    h = classical_perimeter_minkowski(HalfSpace(2), Omega.ball([0, 0], 1.0), 1e-3, cfg)
    assert h.value == pytest.approx(2.0, abs=4 * h.stat_error)
    b = classical_perimeter_minkowski(Ball(2), Omega.ball([0, 0], 2.0), 1e-3, cfg)
    assert b.value == pytest.approx(2 * math.pi, abs=4 * b.stat_error + 0.01)


def test_minkowski_periodic_slab(cfg):
    P = PeriodicSlab(2, 0.1)
    m = classical_perimeter_minkowski(P, Omega.ball([0, 0], 1.0), 0.1 / 32, cfg)
    # boundary lines every 0.1, so length per unit area is 10
    assert m.reliable
    assert m.value == pytest.approx(math.pi / 0.1, rel=0.05)


def test_unbounded_full_perimeter_rejected(cfg):
    with pytest.raises(ValueError):
        perimeter_k(HalfSpace(2), None, fractional_kernel(2, 0.5), cfg)


def test_perimeter_row(cfg):
    K = fractional_kernel(1, 0.5)
    om = Omega.ball([0.0], 1.0)
    est = perimeter_k(HalfSpace(1), om, K, cfg)
    row = perimeter_row(HalfSpace(1), K, om, est)
    assert row["omegaRadius"] == 1.0 and row["value"] == est.value
