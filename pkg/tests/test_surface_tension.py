import math

import numpy as np
import pytest

from glauberkit.errors import SubcriticalError
from glauberkit.surface_tension import (BETA_C, SurfaceTensionParams, alpha, dual_beta,
                                        sharp_triangle_defect, spontaneous_magnetization, stiffness,
                                        tau, tau_second, tau_second_fd, tau_vec)

THETAS = np.linspace(-math.pi / 4, math.pi / 4, 41)


def oracle_tau0(beta):
    return 2 * beta + math.log(math.tanh(beta))


@pytest.mark.parametrize("beta", [0.5, 0.6, 1.0, 2.0])
def test_tau_axis_oracle(beta):
    assert float(tau(beta, 0.0)) == pytest.approx(oracle_tau0(beta), abs=1e-12)


def test_tau_values():
    assert float(tau(1.0, 0.0)) == pytest.approx(1.72776, abs=2e-4)
    assert float(tau(0.5, 0.0)) == pytest.approx(0.22806, abs=1e-5)
    # alpha_0 = M sqrt(1 - (2/M)^2) / sqrt(1 + 2/M)
    M = SurfaceTensionParams(1.0).M
    assert float(alpha(1.0, 0.0)) == pytest.approx(M * math.sqrt(1 - (2 / M) ** 2) / math.sqrt(1 + 2 / M),
                                                   rel=1e-14)
    assert float(alpha(1.0, 0.0)) == pytest.approx(2.72486, abs=5e-5)
    assert SurfaceTensionParams(1.0).M == pytest.approx(math.cosh(2) ** 2 / math.sinh(2), rel=1e-15)


def test_subcritical():
    with pytest.raises(SubcriticalError):
        SurfaceTensionParams(0.4)


def test_tau_second_closed_form_vs_fd():
    for beta in (0.6, 1.0, 4.0):
        for th in THETAS[::5]:
            assert float(tau_second(beta, th)) == pytest.approx(tau_second_fd(beta, th), abs=1e-6)
    assert float(tau_second(1.0, 0.0)) == pytest.approx(float(alpha(1.0, 0.0) - tau(1.0, 0.0)), abs=1e-12)


def test_symmetries():
    for th in THETAS:
        assert float(tau(1.3, th)) == pytest.approx(float(tau(1.3, -th)), abs=1e-13)
        assert float(tau(1.3, th)) == pytest.approx(float(tau(1.3, math.pi / 2 - th)), abs=1e-12)
    assert tau_vec(1.0, (3, 4)) == pytest.approx(tau_vec(1.0, (-3, -4)))


def test_large_beta_bounds():
    e = math.exp(8.0)
    vals = np.array([float(tau_second(4.0, th)) for th in THETAS])
    assert np.all(np.abs(vals) <= e)
    assert float(tau_second(4.0, 0.0)) >= e / 8


def test_stiffness_bounds():
    for beta in (0.6, 1.0, 4.0):
        for th in THETAS:
            a = float(alpha(beta, th))
            assert float(stiffness(beta, th)) >= a / (1 + 2 * a) - 1e-12
    assert float(stiffness(4.0, math.pi / 4)) > 1 / 3


def test_convexity_of_homogeneous_extension(rng):
    for _ in range(200):
        x, y = rng.normal(size=2), rng.normal(size=2)
        assert tau_vec(1.0, x + y) <= tau_vec(1.0, x) + tau_vec(1.0, y) + 1e-12


def test_sharp_triangle():
    r = sharp_triangle_defect(2.0, (1, 0), (1, 1))
    assert not r.collinear and r.ratio >= 1 / 3
    assert sharp_triangle_defect(2.0, (1, 0), (2, 0)).collinear


def test_dual_beta():
    assert dual_beta(BETA_C) == pytest.approx(BETA_C, abs=1e-12)
    for b in (0.5, 1.0, 3.0):
        assert dual_beta(b) == pytest.approx(-0.5 * math.log(math.tanh(b)), rel=1e-12)
        assert dual_beta(dual_beta(b)) == pytest.approx(b, rel=1e-10)
    assert dual_beta(1.0) == pytest.approx(0.5 * math.asinh(1 / math.sinh(2.0)), rel=1e-12)
    assert dual_beta(0.5) == pytest.approx(0.385971, abs=5e-6)


def test_spontaneous_magnetization():
    assert spontaneous_magnetization(0.6) == pytest.approx(0.97361, abs=1e-5)
    assert spontaneous_magnetization(0.4) == 0.0
