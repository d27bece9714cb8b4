import math

import numpy as np
import pytest
from scipy import integrate

from nonlocal_geom.kernels import (KernelError, anisotropic_kernel, fractional_kernel,
                                   kernel_from_json, perturbed_kernel)


def test_fractional_value():
    K = fractional_kernel(1, 0.5)
    assert K.evaluate(np.array([2.0])) == pytest.approx(2.0 ** -1.5)
    assert K.evaluate(np.array([-2.0])) == pytest.approx(2.0 ** -1.5)
    assert math.isinf(K.evaluate(np.array([0.0])))


def test_anisotropic_value_and_envelope():
    K = anisotropic_kernel(2, 0.5, {0: 1.5, 2: 0.5})
    assert K.evaluate(np.array([1.0, 0.0])) == pytest.approx(2.0)
    assert K.evaluate(np.array([0.0, 1.0])) == pytest.approx(1.0)
    assert (K.lam, K.Lam) == pytest.approx((1.0, 2.0))
    assert all(K.validate().values())


def test_odd_profile_rejected():
    with pytest.raises(KernelError):
        anisotropic_kernel(2, 0.5, {0: 1.0, 1: 0.3})
    with pytest.raises(KernelError):
        anisotropic_kernel(2, 0.5, {0: 0.2, 2: 0.5})
    with pytest.raises(KernelError):
        fractional_kernel(2, 1.2)


@pytest.mark.parametrize("d", [2, 3])
def test_sphere_mass_against_quadrature(d):
    K = perturbed_kernel(d, 0.4, 0.3)
    if d == 2:
        ref, _ = integrate.quad(lambda t: 1 + 0.3 * math.cos(2 * t), 0, 2 * math.pi)
    else:
        ref, _ = integrate.quad(lambda t: (1 + 0.3 * math.cos(2 * t)) * 2 * math.pi * math.sin(t),
                                0, math.pi)
    assert K.sphere_mass == pytest.approx(ref, rel=1e-10)


def test_annulus_integral():
    K = fractional_kernel(3, 0.5)
    assert K.annulus_integral(1.0) == pytest.approx(4 * math.pi / 0.5)
    assert K.annulus_integral(1.0, 4.0) == pytest.approx(4 * math.pi * (1 - 0.5) / 0.5)


def test_kernel_json():
    K = kernel_from_json({"kind": "anisotropic", "s": 0.5, "profile": {"0": 1.5, "2": 0.5}}, 2)
    assert K.label().startswith("anisotropic")
    assert kernel_from_json({"s": 0.3}, 1).label() == "fractional(s=0.3)"
    with pytest.raises(KernelError):
        kernel_from_json({"kind": "gaussian", "s": 0.5}, 2)
