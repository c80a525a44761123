import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from dpnls.errors import DomainError
from dpnls.model import (
    Nonlinearity,
    coefficients,
    critical_points,
    eval_K,
    eval_K1,
    eval_K2,
    eval_L,
    eval_Lprime,
    eval_W,
    eval_Wprime,
    h0,
    h_of_omega,
    one_minus_pow,
    ordering_flags,
    pow_gap,
)


@pytest.mark.parametrize("p, q, expected", [
    (2, 3, dict(alpha=0.5, beta=1.0, c1=-1.0, c2=0.5, d1=-2 / 3, d2=0.5, r1=-5 / 3, r2=-7 / 3)),
    (3, 4, dict(alpha=1.0, beta=1.5, c1=-0.5, c2=0.2, d1=-0.5, d2=0.4, r1=-1.0, r2=-1.5)),
])
def test_coefficients(p, q, expected):
    c = coefficients(Nonlinearity(p, q))
    for name, value in expected.items():
        assert getattr(c, name) == pytest.approx(value, rel=1e-14)


def test_c2_vanishes_at_quintic():
    assert Nonlinearity(2, 5).coeffs.c2 == 0.0


@pytest.mark.parametrize("p, q", [(1.0, 2.0), (2.0, 2.0), (3.0, 2.0), (float("nan"), 3.0)])
def test_invalid_pairs(p, q):
    with pytest.raises(DomainError):
        Nonlinearity(p, q)


def test_evaluators_reject_nonpositive_s():
    with pytest.raises(DomainError):
        eval_L(Nonlinearity(2, 3), 0.0)


def test_L_at_s0_for_cubic_pair():
    assert eval_L(Nonlinearity(2, 3), 4.0) == pytest.approx(2.0 / 3.0, rel=1e-15)


def test_evaluators_vectorised():
    nl = Nonlinearity(2, 3)
    s = np.array([0.5, 1.0, 2.0])
    for f in (eval_K, eval_L, eval_Lprime, eval_K1, eval_K2):
        out = f(nl, s)
        assert out.shape == s.shape
        assert out[1] == pytest.approx(float(f(nl, 1.0)))


def test_Lprime_matches_difference_quotient():
    nl = Nonlinearity(2.3, 3.7)
    s, d = 1.7, 1e-6
    fd = (eval_L(nl, s + d) - eval_L(nl, s - d)) / (2 * d)
    assert eval_Lprime(nl, s) == pytest.approx(fd, rel=1e-8)


@pytest.mark.parametrize("omega", [0.1, 0.3])
def test_W_vanishes_at_peak(omega):
    nl = Nonlinearity(2, 3)
    h = h_of_omega(nl, omega)
    assert abs(eval_W(nl, h, omega)) < 1e-13
    assert eval_Wprime(nl, h, omega) < 0


def test_zero_of_L_is_h0():
    for p, q in [(2, 3), (1.5, 4.5), (3, 6)]:
        nl = Nonlinearity(p, q)
        assert abs(eval_L(nl, h0(nl))) < 1e-14


def test_critical_points_cubic_pair():
    cp = critical_points(Nonlinearity(2, 3))
    assert cp.h0 == pytest.approx(16 / 9)
    assert cp.s0 == pytest.approx(4.0)
    assert cp.t0 == pytest.approx(1.0)
    assert cp.t1 == pytest.approx(25 / 9)
    assert cp.omega0 == pytest.approx(2 / 3)


def test_critical_points_need_subcritical_q():
    with pytest.raises(DomainError):
        critical_points(Nonlinearity(2, 5))


def test_K_vanishes_at_s0_and_K1_K2_at_s1_s2():
    nl = Nonlinearity(2.2, 3.9)
    cp = critical_points(nl)
    assert abs(eval_K(nl, cp.s0)) < 1e-13
    assert abs(eval_K1(nl, cp.s1)) < 1e-12
    assert abs(eval_K2(nl, cp.s2)) < 1e-12


class TestPeak:
    def test_zero_frequency(self):
        nl = Nonlinearity(2, 3)
        assert h_of_omega(nl, 0.0) == h0(nl)

    def test_inverse_of_L(self):
        assert h_of_omega(Nonlinearity(2, 3), 2 / 3) == pytest.approx(4.0, rel=1e-14)

    def test_supercritical_q_allowed(self):
        nl = Nonlinearity(2, 5)
        h = h_of_omega(nl, 0.2)
        assert eval_L(nl, h) == pytest.approx(0.2, rel=1e-13)

    def test_negative_frequency(self):
        with pytest.raises(DomainError):
            h_of_omega(Nonlinearity(2, 3), -0.1)

    @settings(max_examples=40, deadline=None)
    @given(st.floats(1.05, 4.0), st.floats(0.05, 3.0), st.floats(1e-4, 50.0), st.floats(1e-4, 50.0))
    def test_strictly_increasing(self, p, gap, w1, w2):
        nl = Nonlinearity(p, p + gap)
        lo, hi = sorted((w1, w2))
        if hi - lo < 1e-9 * hi:
            return
        assert h_of_omega(nl, lo) < h_of_omega(nl, hi)


class TestOrderingFlags:
    def test_cubic_pair(self):
        # p + q = 5 <= 6, q = 3 > 8 - 3p = 2, p < 7/3, p >= 9/5 (s0 = 4 <= t2 = 49/9)
        assert ordering_flags(Nonlinearity(2, 3)).as_tuple() == (False, True, False, True)

    def test_seven_thirds_boundary(self):
        assert ordering_flags(Nonlinearity(7 / 3, 3)).s0_le_t1

    def test_nine_fifths_boundary(self):
        assert ordering_flags(Nonlinearity(9 / 5, 4)).s0_le_t2

    def test_dual_computation_on_grid(self):
        for p in np.linspace(1.05, 4.9, 50):
            for q in np.linspace(1.1, 4.99, 50):
                if q > p:
                    ordering_flags(Nonlinearity(p, q))


@settings(max_examples=50)
@given(st.floats(1e-12, 1.0), st.floats(0.05, 3.0))
def test_one_minus_pow_matches_direct(ds, e):
    s = 1.0 - ds
    direct = 1.0 - s**e
    assert one_minus_pow(s, ds, e) == pytest.approx(direct, rel=1e-9, abs=1e-15)


def test_pow_gap_keeps_tiny_offsets():
    h, dr = 2.0, 1e-300
    assert pow_gap(h, h - dr, dr, 0.5) == pytest.approx(0.5 * h**-0.5 * dr, rel=1e-12)
