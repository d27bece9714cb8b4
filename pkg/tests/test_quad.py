import math

import numpy as np
import pytest

from nonlocal_geom.kernels import fractional_kernel
from nonlocal_geom.quad import (QuadConfig, QuadratureError, sample_shell, shell_integrate,
                                tail_bound, volume_fraction, volume_in_ball)
from nonlocal_geom.sets import Ball, HalfSpace, PeriodicSlab


def test_shell_of_constant():
    res = shell_integrate(lambda p: np.ones(len(p)), np.zeros(2), 1.0, 2.0, QuadConfig())
    assert res.value == pytest.approx(3 * math.pi, rel=1e-12)


def test_kernel_weighted_shell_is_exact_for_isotropic():
    K = fractional_kernel(2, 0.5)
    res = shell_integrate(K.evaluate, np.zeros(2), 1.0, math.inf, QuadConfig(), s=0.5)
    assert res.value == pytest.approx(K.annulus_integral(1.0), rel=1e-12)
    assert res.stat_error < 1e-9


def test_unbounded_uniform_shell_rejected():
    with pytest.raises(QuadratureError):
        sample_shell(np.random.default_rng(0), 2, 1.0, math.inf, 10)


def test_band_sampling_unbiased():
    """Band mixture reweighting reproduces the plain shell integral."""
    f = lambda p: (np.abs(p[:, 1]) < 0.05 * np.linalg.norm(p, axis=1)).astype(float)
    cfg = QuadConfig(samples_per_shell=200_000)
    plain = shell_integrate(f, np.zeros(3), 1.0, 2.0, cfg)
    band = shell_integrate(f, np.zeros(3), 1.0, 2.0, cfg, normal=np.array([0, 1.0, 0]), band=0.1)
    exact = 0.05 * 4 * math.pi * (8 - 1) / 3  # sphere band |t| < 0.05 has area 4 pi * 0.05
    assert plain.value == pytest.approx(exact, abs=4 * plain.stat_error)
    assert band.value == pytest.approx(exact, abs=4 * band.stat_error)
    assert band.stat_error < plain.stat_error


def test_tail_bound_examples():
    assert tail_bound(fractional_kernel(1, 0.5), 1.0) == pytest.approx(4.0)
    from nonlocal_geom.kernels import anisotropic_kernel
    K = anisotropic_kernel(2, 0.5, {0: 2.0})
    assert tail_bound(K, 4.0) == pytest.approx(4 * math.pi)


def test_volume_fraction_mc_vs_exact():
    cfg = QuadConfig(volume_samples=100_000)
    vf = volume_fraction(HalfSpace(2), np.array([0.3, 0.0]), 1.0, cfg)
    t = -0.3
    exact = (math.acos(-t) - (-t) * math.sqrt(1 - t * t)) / math.pi
    assert vf.lower() <= exact <= vf.upper()
    assert volume_in_ball(Ball(2), np.zeros(2), 2.0, cfg) == (pytest.approx(math.pi), 0.0)


def test_periodic_slab_fraction_on_plane():
    v, err = volume_in_ball(PeriodicSlab(2, 0.1), np.array([0.0, 0.0]), 1.0, QuadConfig())
    assert err == 0.0
    assert v / math.pi == pytest.approx(0.5, abs=1e-12)


def test_config_validation_and_json():
    cfg = QuadConfig(seed=3)
    assert QuadConfig.from_json(cfg.to_json()) == cfg
    with pytest.raises(ValueError):
        QuadConfig(eps0=100.0)
    assert cfg.eps_schedule[2] == pytest.approx(0.125)
