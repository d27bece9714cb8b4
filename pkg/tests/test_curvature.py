import math

import numpy as np
import pytest
from scipy import integrate

from nonlocal_geom.curvature import (CurvatureError, ball_curvature_exact, curvature_pv,
                                     curvature_lower_bound_truncated, curvature_via_touching_ball,
                                     estimate_row)
from nonlocal_geom.kernels import anisotropic_kernel, fractional_kernel
from nonlocal_geom.quad import QuadConfig
from nonlocal_geom.sets import Ball, BallComplement, HalfSpace, TouchingBall, find_exterior_ball

# independent reduction: Hball = 2**-s / s * int_S |omega_1|**-s d omega
HBALL = {
    0.25: (6.727171322029716, 25.938671533041916, 56.35741867927598),
    0.5: (2.8284271247461903, 14.832597418409804, 35.54306350526693),
    0.75: (1.5856094866702948, 14.760027356332682, 39.850712918285446),
}


def _sphere_reduction(d, s):
    if d == 1:
        return 2.0 ** -s / s * 2.0
    if d == 2:
        v, _ = integrate.quad(lambda t: abs(math.cos(t)) ** -s, 0, math.pi / 2, limit=200)
        return 2.0 ** -s / s * 4 * v
    return 2.0 ** -s / s * 4 * math.pi / (1 - s)


@pytest.mark.parametrize("s", sorted(HBALL))
@pytest.mark.parametrize("d", [1, 2, 3])
def test_ball_curvature_closed_form(d, s):
    assert ball_curvature_exact(d, s) == pytest.approx(HBALL[s][d - 1], rel=1e-10)
    assert _sphere_reduction(d, s) == pytest.approx(HBALL[s][d - 1], rel=1e-8)


def test_closed_form_rejects_bad_order():
    with pytest.raises(ValueError):
        ball_curvature_exact(2, 1.0)


@pytest.fixture(scope="module")
def cfg():
    return QuadConfig(samples_per_shell=8192)


def test_halfspace_is_flat(cfg):
    est = curvature_pv(HalfSpace(2), fractional_kernel(2, 0.5), np.zeros(2), cfg)
    assert est.converged
    assert abs(est.value) <= est.error_bound <= 1e-2


def test_halfspace_flat_for_anisotropic_kernel(cfg):
    K = anisotropic_kernel(2, 0.5, {0: 1.5, 2: 0.5})
    est = curvature_pv(HalfSpace(2, [0.6, 0.8]), K, np.zeros(2), cfg)
    assert est.converged and abs(est.value) <= est.error_bound


@pytest.mark.parametrize("d", [1, 2])
def test_ball_matches_closed_form(cfg, d):
    est = curvature_pv(Ball(d), fractional_kernel(d, 0.5), Ball(d).reference_point(), cfg)
    assert est.converged
    assert abs(est.value - HBALL[0.5][d - 1]) <= max(est.error_bound, 1e-9)


def test_complement_flips_sign_and_radius_scales(cfg):
    K = fractional_kernel(2, 0.5)
    x = np.array([2.0, 0.0])
    est = curvature_pv(BallComplement(2, [0, 0], 2.0), K, x, cfg)
    expect = -HBALL[0.5][1] * 2.0 ** -0.5
    assert abs(est.value - expect) <= est.error_bound


def test_touching_ball_formula_agrees(cfg):
    K = fractional_kernel(2, 0.5)
    E = Ball(2)
    x = np.array([1.0, 0.0])
    ball = find_exterior_ball(E, x, 0.5)
    via = curvature_via_touching_ball(E, K, ball, cfg)
    pv = curvature_pv(E, K, x, cfg)
    assert abs(via.value - pv.value) <= via.error_bound + pv.error_bound


def test_touching_ball_must_touch(cfg):
    K = fractional_kernel(2, 0.5)
    bad = TouchingBall(np.array([1.5, 0.0]), 0.4, np.array([1.0, 0.0]))
    with pytest.raises(CurvatureError):
        curvature_via_touching_ball(Ball(2), K, bad, cfg)


def test_off_boundary_point_rejected(cfg):
    with pytest.raises(CurvatureError):
        curvature_pv(Ball(2), fractional_kernel(2, 0.5), np.zeros(2), cfg)


def test_truncated_integral_of_halfspace_vanishes(cfg):
    t = curvature_lower_bound_truncated(HalfSpace(2), fractional_kernel(2, 0.5), np.zeros(2),
                                        0.25, cfg)
    assert abs(t.value) <= 4 * t.stat_error + t.tail + 1e-12


def test_estimate_row_fields(cfg):
    K = fractional_kernel(1, 0.5)
    est = curvature_pv(Ball(1), K, np.array([-1.0]), cfg)
    row = estimate_row(Ball(1), K, np.array([-1.0]), est)
    assert set(row) >= {"set", "kernel", "x", "verdict", "value", "errorBound",
                        "nearFieldSum", "farField", "tail"}
