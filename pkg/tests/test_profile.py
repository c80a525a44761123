import math

import numpy as np
import pytest

from dpnls.errors import DomainError
from dpnls.model import Nonlinearity, eval_W
from dpnls.profile import (
    build_profile,
    default_x_max,
    mass,
    norms_and_energy,
    scaling_second_derivative_at_zero,
    scaling_threshold,
    shoot,
)
from dpnls.stability import dmass

CUBIC = Nonlinearity(2, 3)


@pytest.fixture(scope="module")
def cubic_profile():
    return build_profile(CUBIC, 0.3)


def test_zero_frequency_peak():
    prof = build_profile(CUBIC, 0.0)
    assert prof.peak == pytest.approx(4.0 / 3.0, rel=1e-15)
    assert prof.phi[-1] < 1e-8 * prof.peak


@pytest.mark.parametrize("omega", [0.05, 0.3, 2.0])
def test_peak_and_flat_top(omega):
    prof = build_profile(CUBIC, omega)
    assert prof.phi[0] == prof.peak
    assert prof.derivative(np.array([0.0]))[0] == 0.0
    assert eval_W(CUBIC, prof.peak**2, omega) == pytest.approx(0.0, abs=1e-13)


def test_matches_shooting_oracle(cubic_profile):
    xs = np.array([0.5, 1.0, 2.0])
    phi_ref, dphi_ref = shoot(CUBIC, 0.3, xs)
    np.testing.assert_allclose(cubic_profile(xs), phi_ref, rtol=1e-6)
    np.testing.assert_allclose(cubic_profile.derivative(xs), dphi_ref, rtol=1e-6)


def test_strictly_decreasing_and_even(cubic_profile):
    assert np.all(np.diff(cubic_profile.phi) < 0)
    xs = np.linspace(0.1, 5.0, 7)
    np.testing.assert_array_equal(cubic_profile(-xs), cubic_profile(xs))


def test_auto_sizing_extends_formula_when_tail_is_too_heavy(cubic_profile):
    # exp(-sqrt(0.3) * 21.9) is not yet 1e-8 relative once the prefactor is included
    assert cubic_profile.x_max >= default_x_max(0.3)
    assert cubic_profile.phi[-1] < 1e-8 * cubic_profile.peak


def test_zero_frequency_has_algebraic_tail():
    prof = build_profile(Nonlinearity(2, 3), 0.0)
    assert prof.x_max > 60.0
    # phi ~ 6 / x^2 at large x for p = 2
    assert prof(np.array([1e3]))[0] * 1e6 == pytest.approx(6.0, rel=1e-2)


def test_first_integral_residual():
    omega = 0.3
    prof = build_profile(CUBIC, omega, n_samples=4097)
    x, phi = prof.x, prof.phi
    dx = x[1] - x[0]
    dphi = (-phi[4:] + 8 * phi[3:-1] - 8 * phi[1:-3] + phi[:-4]) / (12 * dx)
    w = eval_W(CUBIC, phi[2:-2] ** 2, omega)
    scale = eval_W(CUBIC, prof.h / 2, omega)
    assert np.max(np.abs(dphi**2 - w)) / scale < 1e-6


def test_ode_residual():
    omega = 0.3
    prof = build_profile(CUBIC, omega, n_samples=8193)
    phi, dx = prof.phi, prof.x[1] - prof.x[0]
    d2 = (phi[2:] - 2 * phi[1:-1] + phi[:-2]) / dx**2
    mid = phi[1:-1]
    assert np.max(np.abs(-d2 + omega * mid + mid**2 - mid**3)) < 1e-4


def test_explicit_x_max_respected():
    prof = build_profile(CUBIC, 0.3, n_samples=101, x_max=5.0)
    assert prof.x_max == 5.0
    assert prof.x.size == 101


@pytest.mark.parametrize("kwargs", [dict(omega=-0.1), dict(omega=0.3, n_samples=2)])
def test_bad_arguments(kwargs):
    with pytest.raises(DomainError):
        build_profile(CUBIC, **kwargs)


def test_zero_frequency_needs_subcritical():
    with pytest.raises(DomainError):
        build_profile(Nonlinearity(2, 5), 0.0)


class TestMass:
    def test_matches_sample_integration(self, cubic_profile):
        trap = np.trapezoid(cubic_profile.phi**2, cubic_profile.x)  # half line, doubled, halved
        assert mass(CUBIC, 0.3) == pytest.approx(trap, rel=1e-5)

    def test_central_difference_matches_dmass(self):
        d = 1e-4
        fd = (mass(CUBIC, 0.3 + d) - mass(CUBIC, 0.3 - d)) / (2 * d)
        assert fd == pytest.approx(dmass(CUBIC, 0.3), rel=1e-5)

    def test_continuous_towards_zero(self):
        omegas = np.geomspace(1e-6, 0.5, 12)
        values = np.array([mass(CUBIC, w) for w in omegas])
        assert np.all(np.isfinite(values))
        assert mass(CUBIC, 1e-9) == pytest.approx(mass(CUBIC, 0.0), rel=1e-3)

    @pytest.mark.parametrize("omega", [0.05, 0.2, 0.5, 1.0, 3.0])
    def test_consistency_triangle(self, omega):
        nl = Nonlinearity(2.2, 3.6)
        prof = build_profile(nl, omega, n_samples=8193)
        m = mass(nl, omega)
        trap = np.trapezoid(prof.phi**2, prof.x)
        d = 1e-4 * omega
        fd = (mass(nl, omega + d) - mass(nl, omega - d)) / (2 * d)
        assert m == pytest.approx(trap, rel=1e-4)
        assert fd == pytest.approx(dmass(nl, omega), rel=1e-4)


class TestNorms:
    def test_gradient_matches_shooting(self):
        omega, x_end = 0.3, 12.0
        xs = np.linspace(0.0, x_end, 4001)
        _, dphi = shoot(CUBIC, omega, xs)
        half = np.trapezoid(dphi**2, xs)
        # exponential tail beyond x_end: phi' ~ -sqrt(omega) phi
        phi_end = shoot(CUBIC, omega, [x_end])[0][0]
        half += math.sqrt(omega) * phi_end**2 / 2
        assert norms_and_energy(CUBIC, omega).grad_sq == pytest.approx(2 * half, rel=1e-5)

    def test_mass2_is_twice_mass(self):
        n = norms_and_energy(CUBIC, 0.3)
        assert n.mass2 == pytest.approx(2 * mass(CUBIC, 0.3), rel=1e-14)

    def test_positive_and_finite(self):
        n = norms_and_energy(Nonlinearity(2, 4), 0.1)
        for value in (n.grad_sq, n.lp_norm, n.lq_norm, n.mass2, n.energy):
            assert np.isfinite(value) and value > 0

    def test_energy_matches_samples(self, cubic_profile):
        x, phi = cubic_profile.x, cubic_profile.phi
        dphi = cubic_profile.derivative(x)
        e = 2 * np.trapezoid(0.5 * dphi**2 + phi**3 / 3 - phi**4 / 4, x)
        assert norms_and_energy(CUBIC, 0.3).energy == pytest.approx(e, rel=1e-5)

    def test_integrated_first_integral(self):
        # integrate (phi')^2 = omega phi^2 + 2 phi^3/3 - phi^4/2 over the line
        n = norms_and_energy(CUBIC, 0.3)
        rhs = 0.3 * n.mass2 + 2 * n.lp_norm / 3 - n.lq_norm / 2
        assert n.grad_sq == pytest.approx(rhs, rel=1e-8)

    @pytest.mark.parametrize("p, q, omega", [(2, 3, 0.3), (1.5, 4.5, 0.7), (3, 4, 0.2)])
    def test_nehari_identity(self, p, q, omega):
        # multiply the profile equation by phi and integrate
        n = norms_and_energy(Nonlinearity(p, q), omega)
        residual = n.grad_sq + omega * n.mass2 + n.lp_norm - n.lq_norm
        assert abs(residual) < 1e-8 * n.lq_norm


class TestScalingSecondDerivative:
    def test_negative_above_threshold(self):
        assert scaling_threshold(2.0) == pytest.approx(3.4)
        assert scaling_second_derivative_at_zero(Nonlinearity(2, 4)) < 0

    def test_zero_on_threshold(self):
        value = scaling_second_derivative_at_zero(Nonlinearity(2, 3.4))
        scale = norms_and_energy(Nonlinearity(2, 3.4), 0.0).grad_sq
        assert abs(value) < 1e-8 * scale

    def test_positive_below_threshold(self):
        assert scaling_second_derivative_at_zero(CUBIC) > 0

    def test_needs_subcritical(self):
        with pytest.raises(DomainError):
            scaling_second_derivative_at_zero(Nonlinearity(2, 5))

    @pytest.mark.parametrize("p, q", [(4.6, 4.9), (3.5, 4.95)])
    def test_large_p_zero_frequency_is_finite(self, p, q):
        # s^alpha underflows near s = 0 at omega = 0 unless factored out
        nl = Nonlinearity(p, q)
        norms = norms_and_energy(nl, 0.0)
        assert all(np.isfinite(v) for v in (norms.grad_sq, norms.lp_norm, norms.lq_norm))
        assert scaling_second_derivative_at_zero(nl) < 0
